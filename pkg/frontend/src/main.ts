// Browser wiring: connects to the serve endpoint, paints the four panels
// (top-down scene, risk-graph heatmap, velocity scale, direction arrows),
// and turns keyboard / button input into steering commands.

import { HmiClient } from "./client.js";
import { cssColor, DEFAULT_THRESHOLDS, rateToColor, Thresholds } from "./colors.js";
import { commandFrom, consumeOneShots, initialControls } from "./controls.js";
import { HmiModel } from "./model.js";
import { HelloMessage, StateMessage } from "./protocol.js";
import { arrowState, heatmapImage, sceneLayout, velocityScale } from "./render.js";

const $ = (id: string) => document.getElementById(id)!;
const canvas = (id: string) => $(id) as HTMLCanvasElement;

const model = new HmiModel();
const controls = initialControls();
let thresholds: Thresholds = DEFAULT_THRESHOLDS;

const params = new URLSearchParams(location.search);
const url = params.get("ws") ?? `ws://${location.hostname || "127.0.0.1"}:8700`;

const client = new HmiClient(
    url,
    (raw) => model.receiveRaw(raw, performance.now()),
    (connected) => model.setConnected(connected),
);

function sendCurrentCommand(): void {
    if (!model.hello) {
        return;
    }
    client.send(commandFrom(controls, model.hello.accel_bounds_ms2));
    Object.assign(controls, consumeOneShots(controls));
}

function bindControls(): void {
    const press = (id: string, down: () => void, up?: () => void) => {
        const el = $(id);
        el.addEventListener("mousedown", () => { down(); sendCurrentCommand(); });
        el.addEventListener("mouseup", () => { up?.(); sendCurrentCommand(); });
        el.addEventListener("mouseleave", () => { up?.(); });
    };
    press("btn-throttle", () => { controls.throttle = 1; controls.brake = 0; },
        () => { controls.throttle = 0; });
    press("btn-brake", () => { controls.brake = 1; controls.throttle = 0; },
        () => { controls.brake = 0; });
    $("btn-left").addEventListener("click", () => { controls.laneRequest = "left"; sendCurrentCommand(); });
    $("btn-right").addEventListener("click", () => { controls.laneRequest = "right"; sendCurrentCommand(); });
    $("btn-pause").addEventListener("click", () => { controls.pause = !controls.pause; sendCurrentCommand(); });
    $("btn-reset").addEventListener("click", () => { controls.reset = true; sendCurrentCommand(); });

    window.addEventListener("keydown", (ev) => {
        if (ev.repeat) return;
        if (ev.key === "ArrowUp") { controls.throttle = 1; controls.brake = 0; }
        else if (ev.key === "ArrowDown") { controls.brake = 1; controls.throttle = 0; }
        else if (ev.key === "ArrowLeft") { controls.laneRequest = "left"; }
        else if (ev.key === "ArrowRight") { controls.laneRequest = "right"; }
        else if (ev.key === " ") { controls.pause = !controls.pause; }
        else if (ev.key === "r") { controls.reset = true; }
        else return;
        sendCurrentCommand();
    });
    window.addEventListener("keyup", (ev) => {
        if (ev.key === "ArrowUp") controls.throttle = 0;
        else if (ev.key === "ArrowDown") controls.brake = 0;
        else return;
        sendCurrentCommand();
    });
}

function drawScene(hello: HelloMessage, state: StateMessage): void {
    const cv = canvas("scene");
    const ctx = cv.getContext("2d")!;
    ctx.fillStyle = "#101418";
    ctx.fillRect(0, 0, cv.width, cv.height);
    const layout = sceneLayout(hello, state, cv.width, cv.height);

    ctx.strokeStyle = "#3a4452";
    ctx.lineWidth = 28;
    ctx.lineCap = "round";
    for (const lane of layout.lanes) {
        ctx.beginPath();
        lane.screen.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
        ctx.stroke();
    }
    ctx.lineWidth = 1;
    ctx.setLineDash([8, 10]);
    ctx.strokeStyle = "#8b95a5";
    for (const lane of layout.lanes) {
        ctx.beginPath();
        lane.screen.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
        ctx.stroke();
    }
    ctx.setLineDash([]);

    const drawTrajectory = (pts: [number, number][], color: string) => {
        if (pts.length < 2) return;
        ctx.strokeStyle = color;
        ctx.lineWidth = 3;
        ctx.beginPath();
        pts.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
        ctx.stroke();
    };
    for (const pts of Object.values(layout.otherTrajectories)) {
        drawTrajectory(pts, "rgba(235,80,70,0.8)"); // predicted others: red
    }
    drawTrajectory(layout.egoTrajectory, "rgba(80,220,120,0.9)"); // planned ego: green

    for (const vehicle of layout.vehicles) {
        const [x, y] = vehicle.screen;
        ctx.save();
        ctx.translate(x, y);
        ctx.rotate(-vehicle.heading);
        ctx.fillStyle = vehicle.isEgo ? "#50dc78" : "#eb5046";
        ctx.fillRect(-9, -4.5, 18, 9);
        ctx.restore();
        ctx.fillStyle = "#c8d2e0";
        ctx.font = "11px system-ui";
        ctx.fillText(`${vehicle.id} ${vehicle.v.toFixed(1)} m/s`, x + 12, y - 8);
    }
}

function drawHeatmap(state: StateMessage): void {
    const cv = canvas("heatmap");
    const ctx = cv.getContext("2d")!;
    const image = heatmapImage(state.risk_field, thresholds);
    const cell = document.createElement("canvas");
    cell.width = image.width;
    cell.height = image.height;
    cell.getContext("2d")!.putImageData(
        new ImageData(image.pixels, image.width, image.height), 0, 0);
    ctx.imageSmoothingEnabled = false;
    ctx.fillStyle = "#101418";
    ctx.fillRect(0, 0, cv.width, cv.height);
    ctx.drawImage(cell, 0, 0, cv.width, cv.height);

    const rowHeight = cv.height / image.height;
    ctx.strokeStyle = "#50dc78";
    ctx.lineWidth = 2;
    ctx.strokeRect(0, image.chosenRow * rowHeight, cv.width, rowHeight);
    ctx.strokeStyle = "#e6edf5";
    ctx.lineWidth = 1;
    for (const rowBreak of image.optionBreaks.slice(1)) {
        const y = rowBreak * rowHeight;
        ctx.beginPath();
        ctx.moveTo(0, y);
        ctx.lineTo(cv.width, y);
        ctx.stroke();
    }
}

function drawVelocityScale(state: StateMessage): void {
    const cv = canvas("vscale");
    const ctx = cv.getContext("2d")!;
    ctx.fillStyle = "#101418";
    ctx.fillRect(0, 0, cv.width, cv.height);
    const layout = velocityScale(state.velocity_scale.v0_ms, state.velocity_scale.v_tar_ms);
    const x0 = 46;
    const barWidth = cv.width - x0 - 16;
    const y = cv.height / 2;
    ctx.fillStyle = "#2a3442";
    ctx.fillRect(x0, y - 9, barWidth, 18);
    for (const tick of layout.ticks) {
        const x = x0 + tick.frac * barWidth;
        ctx.fillStyle = "#8b95a5";
        ctx.fillRect(x, y - 12, 1, 24);
        ctx.font = "10px system-ui";
        ctx.fillText(String(tick.v), x - 5, y + 26);
    }
    const vTarX = x0 + layout.vTarFrac * barWidth;
    ctx.fillStyle = "#50dc78";
    ctx.fillRect(vTarX - 2, y - 16, 4, 32);
    const v0X = x0 + layout.v0Frac * barWidth;
    ctx.fillStyle = "#e6edf5";
    ctx.beginPath();
    ctx.moveTo(v0X, y - 14);
    ctx.lineTo(v0X - 6, y - 24);
    ctx.lineTo(v0X + 6, y - 24);
    ctx.closePath();
    ctx.fill();
    ctx.font = "12px system-ui";
    ctx.fillStyle = "#e6edf5";
    ctx.fillText(`v0 ${layout.v0.toFixed(1)}`, 2, y - 2);
    ctx.fillStyle = "#50dc78";
    ctx.fillText(`vt ${layout.vTar.toFixed(1)}`, 2, y + 14);
}

function drawArrows(state: StateMessage): void {
    const arrows = arrowState(state);
    for (const dir of ["left", "straight", "right"] as const) {
        $(`arrow-${dir}`).classList.toggle("active", arrows.active === dir);
    }
    $("advice").textContent =
        `${arrows.advice.toUpperCase()}${arrows.magnitude > 0.5
            ? ` (${arrows.magnitude.toFixed(1)} m/s)` : ""}`;
    $("advice").className = `advice ${arrows.advice}`;
}

function frame(): void {
    const badge = model.badge(performance.now());
    $("badge-disconnected").style.display = badge.connected && !badge.stale ? "none" : "block";
    $("badge-error").style.display = badge.error ? "block" : "none";
    if (badge.error) {
        $("badge-error").textContent = `schema error: ${badge.error}`;
    }
    const state = model.takeLatest();
    if (state && model.hello) {
        thresholds = {
            blueBelow: model.hello.color_thresholds_pct_per_s.blue_below,
            redAtOrAbove: model.hello.color_thresholds_pct_per_s.red_at_or_above,
        };
        drawScene(model.hello, state);
        drawHeatmap(state);
        drawVelocityScale(state);
        drawArrows(state);
        $("clock").textContent = `t = ${state.t_s.toFixed(1)} s${state.paused ? " (paused)" : ""}`;
    }
    requestAnimationFrame(frame);
}

bindControls();
client.connect();
requestAnimationFrame(frame);
export { model, client };
