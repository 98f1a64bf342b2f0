import assert from "node:assert/strict";
import { test } from "node:test";

import {
    buildCommand,
    heatmapCellCount,
    parseServerMessage,
    SchemaError,
} from "../src/protocol.js";
import { helloFixture, stateFixture } from "./fixtures.js";

test("parses a valid hello", () => {
    const message = parseServerMessage(JSON.stringify(helloFixture()));
    assert.equal(message.type, "hello");
    if (message.type === "hello") {
        assert.equal(message.cycle_rate_hz, 10);
        assert.equal(message.map.lanes.length, 2);
    }
});

test("parses a valid state", () => {
    const message = parseServerMessage(JSON.stringify(stateFixture()));
    assert.equal(message.type, "state");
    if (message.type === "state") {
        assert.equal(message.direction, "left");
        assert.equal(message.vehicles.filter((v) => v.is_ego).length, 1);
    }
});

test("rejects non-json, wrong version, unknown type", () => {
    assert.throws(() => parseServerMessage("garbage"), SchemaError);
    const wrongVersion = { ...stateFixture(), version: 99 };
    assert.throws(() => parseServerMessage(JSON.stringify(wrongVersion)), SchemaError);
    const unknown = { type: "telemetry", version: 1 };
    assert.throws(() => parseServerMessage(JSON.stringify(unknown)), SchemaError);
});

test("rejects a risk field with mismatched row lengths", () => {
    const state = stateFixture();
    state.risk_field.options[0].profiles[0].rate_pct_per_s = [0.1];
    assert.throws(() => parseServerMessage(JSON.stringify(state)), SchemaError);
});

test("heatmap cell count equals paths x profiles x steps as declared", () => {
    const state = stateFixture();
    const nOptions = state.risk_field.options.length;
    const nProfiles = state.risk_field.options[0].profiles.length;
    const nSteps = state.risk_field.s_grid_s.length;
    assert.equal(heatmapCellCount(state.risk_field), nOptions * nProfiles * nSteps);
});

test("command message carries the protocol version", () => {
    const command = buildCommand(-1.5, "left");
    assert.equal(command.version, 1);
    assert.equal(command.accel_ms2, -1.5);
    assert.equal(command.lane_request, "left");
    assert.equal(command.pause, false);
});
