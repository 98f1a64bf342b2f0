// Round-trip tests against a live serve endpoint: the UI-facing acceptance
// path. Spawns `python3 -m riskprobe.cli serve` per scenario.

import assert from "node:assert/strict";
import { spawn, ChildProcess } from "node:child_process";
import { test } from "node:test";
import WebSocket from "ws";

import { HmiModel } from "../src/model.js";
import { StateMessage, buildCommand, heatmapCellCount } from "../src/protocol.js";

const PYTHON = process.env.RISKPROBE_PYTHON ?? "python3";

function freePort(): number {
    return 8760 + Math.floor(Math.random() * 900);
}

async function startServer(builtin: string): Promise<{ proc: ChildProcess; url: string }> {
    const port = freePort();
    const proc = spawn(PYTHON, ["-m", "riskprobe.cli", "serve", "--builtin", builtin,
        "--port", String(port)], { stdio: ["ignore", "pipe", "pipe"] });
    proc.stderr?.on("data", () => { /* planner logs are noise here */ });
    const url = `ws://127.0.0.1:${port}`;
    for (let attempt = 0; attempt < 50; attempt++) {
        await new Promise((r) => setTimeout(r, 100));
        const ok = await new Promise<boolean>((resolve) => {
            const probe = new WebSocket(url);
            probe.once("open", () => { probe.close(); resolve(true); });
            probe.once("error", () => resolve(false));
        });
        if (ok) {
            return { proc, url };
        }
    }
    proc.kill();
    throw new Error(`server for ${builtin} did not come up on ${url}`);
}

function connectModel(url: string): { ws: WebSocket; model: HmiModel; states: StateMessage[] } {
    const ws = new WebSocket(url);
    const model = new HmiModel();
    const states: StateMessage[] = [];
    ws.on("message", (data) => {
        const message = model.receiveRaw(String(data), Date.now());
        if (message?.type === "state") {
            states.push(message);
        }
    });
    return { ws, model, states };
}

function waitFor<T>(predicate: () => T | undefined, timeoutMs = 8000, stepMs = 50): Promise<T> {
    return new Promise((resolve, reject) => {
        const started = Date.now();
        const timer = setInterval(() => {
            const value = predicate();
            if (value !== undefined) {
                clearInterval(timer);
                resolve(value);
            } else if (Date.now() - started > timeoutMs) {
                clearInterval(timer);
                reject(new Error("timeout waiting for condition"));
            }
        }, stepMs);
    });
}

test("round trip: gap snapshot renders a left arrow on a live stream", async () => {
    const { proc, url } = await startServer("gap");
    try {
        const { ws, model, states } = connectModel(url);
        await waitFor(() => (model.hello ? true : undefined));
        assert.equal(model.hello!.scenario, "gap");
        assert.ok(model.hello!.map.lanes.length >= 2);
        const first = await waitFor(() => states[0]);
        assert.equal(first.direction, "left"); // the arrow the driver sees
        assert.equal(first.warning.speed, "accelerate");
        assert.equal(
            heatmapCellCount(first.risk_field),
            first.risk_field.options.length * model.hello!.n_t * first.risk_field.s_grid_s.length,
        );
        ws.close();
    } finally {
        proc.kill();
    }
});

test("round trip: no-gap snapshot heatmap has red cells above 1 %/s", async () => {
    const { proc, url } = await startServer("no_gap");
    try {
        const { ws, states } = connectModel(url);
        const first = await waitFor(() => states[0]);
        assert.equal(first.direction, "straight");
        assert.equal(first.warning.speed, "brake");
        const hot = first.risk_field.options.flatMap((option) =>
            option.profiles.flatMap((p) => p.rate_pct_per_s)).filter((r) => r > 1.0);
        assert.ok(hot.length >= 1, "expected at least one cell above the red threshold");
        ws.close();
    } finally {
        proc.kill();
    }
});

test("round trip: a lane-left command reaches the world within two cycles", async () => {
    const { proc, url } = await startServer("gap");
    try {
        const { ws, states } = connectModel(url);
        const first = await waitFor(() => states[0]);
        const egoOf = (s: StateMessage) => s.vehicles.find((v) => v.is_ego)!;
        assert.ok(Math.abs(egoOf(first).y_m) < 0.01);

        const before = states[states.length - 1];
        const vBefore = egoOf(before).v_ms;
        ws.send(JSON.stringify(buildCommand(2.0, "left")));
        const tSent = before.t_s;

        // acceleration integrates on the very next applied cycle
        const affected = await waitFor(() => states.find(
            (s) => s.t_s > tSent && egoOf(s).v_ms > vBefore + 0.15));
        assert.ok(affected.t_s - tSent <= 0.2 + 1e-9,
            `command took ${(affected.t_s - tSent).toFixed(1)} s (> 2 cycles)`);

        // and the lane request starts the lateral blend
        const lateral = await waitFor(() => states.find((s) => egoOf(s).y_m > 0.05));
        assert.ok(lateral.t_s - tSent < 3.0);
        ws.close();
    } finally {
        proc.kill();
    }
});
