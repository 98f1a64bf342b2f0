// Message fixtures mirroring the serve endpoint's wire format.

import { HelloMessage, StateMessage } from "../src/protocol.js";

export function helloFixture(): HelloMessage {
    return {
        type: "hello",
        version: 1,
        scenario: "gap",
        map: {
            lanes: [
                { id: "merge", points: [[0, 0], [149, 0]] },
                { id: "through", points: [[-80, 3.5], [600, 3.5]] },
            ],
        },
        cycle_rate_hz: 10,
        n_t: 21,
        accel_bounds_ms2: { min: -4, max: 3 },
        color_thresholds_pct_per_s: { blue_below: 0.5, red_at_or_above: 1.0 },
    };
}

export function stateFixture(): StateMessage {
    const sGrid = Array.from({ length: 61 }, (_, i) => i * 0.1);
    const flatRow = sGrid.map(() => 0.05);
    const makeOption = (key: string, direction: string) => ({
        key,
        direction,
        profiles: Array.from({ length: 21 }, (_, h) => ({
            h,
            v_end_ms: h,
            rate_pct_per_s: [...flatRow],
        })),
    });
    return {
        type: "state",
        version: 1,
        t_s: 0.1,
        paused: false,
        vehicles: [
            { id: "ego", x_m: 40, y_m: 0, v_ms: 7.0, heading_rad: 0, is_ego: true },
            { id: "front", x_m: 75, y_m: 3.5, v_ms: 8.5, heading_rad: 0, is_ego: false },
        ],
        velocity_scale: { v0_ms: 7.0, v_tar_ms: 11.0 },
        direction: "left",
        warning: { speed: "accelerate", direction: "left", magnitude_ms: 4.0 },
        ego_trajectory: [[40, 0], [47, 0.4], [54, 1.9], [61, 3.3]],
        other_trajectories: { front: [[75, 3.5], [83.5, 3.5]] },
        risk_field: {
            t: 0.1,
            ds_s: 0.1,
            s_grid_s: sGrid,
            thresholds_pct_per_s: [0.5, 1.0],
            chosen: [1, 11],
            options: [makeOption("straight:merge", "straight"), makeOption("left:through", "left")],
        },
    };
}
