// Pure layout builders for the four panels. Everything here returns plain
// data (pixel buffers, line segments, label positions) so it is testable
// without a DOM; main.ts paints the results onto canvases.

import { rateToColor, Thresholds } from "./colors.js";
import { HelloMessage, RiskField, StateMessage } from "./protocol.js";

export interface HeatmapImage {
    width: number;   // time steps
    height: number;  // path options x profiles (stacked, option 0 on top)
    pixels: Uint8ClampedArray<ArrayBuffer>; // RGBA rows
    chosenRow: number;
    rowLabels: string[];
    optionBreaks: number[]; // row index where each option starts
}

// One heatmap cell per (profile, time step) exactly as the message declares.
export function heatmapImage(field: RiskField, thresholds: Thresholds): HeatmapImage {
    const width = field.s_grid_s.length;
    const rows: { key: string; rate: number[] }[] = [];
    const optionBreaks: number[] = [];
    field.options.forEach((option, i) => {
        optionBreaks.push(rows.length);
        for (const profile of option.profiles) {
            rows.push({
                key: `${option.direction} v=${profile.v_end_ms.toFixed(1)}`,
                rate: profile.rate_pct_per_s,
            });
        }
    });
    const height = rows.length;
    const pixels = new Uint8ClampedArray(width * height * 4);
    rows.forEach((row, y) => {
        for (let x = 0; x < width; x++) {
            const [r, g, b] = rateToColor(row.rate[x], thresholds);
            const o = (y * width + x) * 4;
            pixels[o] = r;
            pixels[o + 1] = g;
            pixels[o + 2] = b;
            pixels[o + 3] = 255;
        }
    });
    const [chosenOption, chosenH] = field.chosen;
    let chosenRow = 0;
    if (chosenOption < field.options.length) {
        chosenRow = optionBreaks[chosenOption] +
            field.options[chosenOption].profiles.findIndex((p) => p.h === chosenH);
    }
    return { width, height, pixels, chosenRow, rowLabels: rows.map((r) => r.key), optionBreaks };
}

export interface VelocityScaleLayout {
    vMax: number;
    ticks: { v: number; frac: number }[];
    v0Frac: number;
    vTarFrac: number;
    v0: number;
    vTar: number;
}

export function velocityScale(v0: number, vTar: number, vMax = 20): VelocityScaleLayout {
    const clampFrac = (v: number) => Math.min(1, Math.max(0, v / vMax));
    const ticks = [];
    for (let v = 0; v <= vMax; v += 5) {
        ticks.push({ v, frac: clampFrac(v) });
    }
    return { vMax, ticks, v0Frac: clampFrac(v0), vTarFrac: clampFrac(vTar), v0, vTar };
}

export interface SceneTransform {
    toScreen(x: number, y: number): [number, number];
    scale: number;
}

// World-to-screen transform following the ego (ego sits at 25% width).
export function sceneTransform(
    egoX: number, egoY: number, width: number, height: number, metersAcross = 120,
): SceneTransform {
    const scale = width / metersAcross;
    return {
        scale,
        toScreen(x: number, y: number): [number, number] {
            return [
                (x - egoX) * scale + width * 0.25,
                height / 2 - (y - egoY) * scale,
            ];
        },
    };
}

export interface ScenePaths {
    lanes: { id: string; screen: [number, number][] }[];
    egoTrajectory: [number, number][];
    otherTrajectories: Record<string, [number, number][]>;
    vehicles: { id: string; screen: [number, number]; heading: number; isEgo: boolean; v: number }[];
}

export function sceneLayout(
    hello: HelloMessage, state: StateMessage, width: number, height: number,
): ScenePaths {
    const ego = state.vehicles.find((v) => v.is_ego);
    const tf = sceneTransform(ego ? ego.x_m : 0, ego ? ego.y_m : 0, width, height);
    const mapPoint = (p: number[]): [number, number] => tf.toScreen(p[0], p[1]);
    return {
        lanes: hello.map.lanes.map((lane) => ({ id: lane.id, screen: lane.points.map(mapPoint) })),
        egoTrajectory: state.ego_trajectory.map(mapPoint),
        otherTrajectories: Object.fromEntries(
            Object.entries(state.other_trajectories).map(([id, pts]) => [id, pts.map(mapPoint)]),
        ),
        vehicles: state.vehicles.map((v) => ({
            id: v.id,
            screen: tf.toScreen(v.x_m, v.y_m),
            heading: v.heading_rad,
            isEgo: v.is_ego,
            v: v.v_ms,
        })),
    };
}

export interface ArrowState {
    active: "left" | "straight" | "right";
    advice: string;
    magnitude: number;
}

export function arrowState(state: StateMessage): ArrowState {
    return {
        active: state.direction,
        advice: state.warning.speed,
        magnitude: state.warning.magnitude_ms,
    };
}
