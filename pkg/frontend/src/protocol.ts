// Wire protocol shared with the serve endpoint. Every message is versioned;
// parseServerMessage throws SchemaError on anything that does not match, so
// the UI can show an error banner instead of rendering garbage.

export const PROTOCOL_VERSION = 1;

export interface LaneGeometry {
    id: string;
    points: number[][]; // [[x_m, y_m], ...]
}

export interface HelloMessage {
    type: "hello";
    version: number;
    scenario: string;
    map: { lanes: LaneGeometry[] };
    cycle_rate_hz: number;
    n_t: number;
    accel_bounds_ms2: { min: number; max: number };
    color_thresholds_pct_per_s: { blue_below: number; red_at_or_above: number };
}

export interface VehicleState {
    id: string;
    x_m: number;
    y_m: number;
    v_ms: number;
    heading_rad: number;
    is_ego: boolean;
}

export interface RiskProfileRow {
    h: number;
    v_end_ms: number;
    rate_pct_per_s: number[];
}

export interface RiskFieldOption {
    key: string;
    direction: string;
    profiles: RiskProfileRow[];
}

export interface RiskField {
    t: number;
    ds_s: number;
    s_grid_s: number[];
    thresholds_pct_per_s: number[];
    chosen: [number, number];
    options: RiskFieldOption[];
}

export type Direction = "left" | "straight" | "right";
export type SpeedAdvice = "accelerate" | "brake" | "keep";

export interface StateMessage {
    type: "state";
    version: number;
    t_s: number;
    paused: boolean;
    vehicles: VehicleState[];
    velocity_scale: { v0_ms: number; v_tar_ms: number };
    direction: Direction;
    warning: { speed: SpeedAdvice; direction: Direction; magnitude_ms: number };
    ego_trajectory: number[][];
    other_trajectories: Record<string, number[][]>;
    risk_field: RiskField;
}

export type ServerMessage = HelloMessage | StateMessage;

export interface CommandMessage {
    type: "command";
    version: number;
    accel_ms2: number;
    lane_request: "left" | "right" | null;
    pause: boolean;
    reset: boolean;
}

export class SchemaError extends Error {}

function expect(condition: boolean, what: string): void {
    if (!condition) {
        throw new SchemaError(what);
    }
}

function isNumber(x: unknown): x is number {
    return typeof x === "number" && Number.isFinite(x);
}

export function parseServerMessage(raw: string): ServerMessage {
    let doc: any;
    try {
        doc = JSON.parse(raw);
    } catch {
        throw new SchemaError("message is not JSON");
    }
    expect(doc && typeof doc === "object", "message is not an object");
    expect(doc.version === PROTOCOL_VERSION, `unsupported version ${doc.version}`);
    if (doc.type === "hello") {
        expect(Array.isArray(doc.map?.lanes), "hello.map.lanes missing");
        expect(isNumber(doc.cycle_rate_hz) && doc.cycle_rate_hz > 0, "hello.cycle_rate_hz invalid");
        expect(isNumber(doc.n_t), "hello.n_t invalid");
        expect(isNumber(doc.accel_bounds_ms2?.min) && isNumber(doc.accel_bounds_ms2?.max),
            "hello.accel_bounds_ms2 invalid");
        return doc as HelloMessage;
    }
    if (doc.type === "state") {
        expect(Array.isArray(doc.vehicles), "state.vehicles missing");
        expect(isNumber(doc.t_s), "state.t_s invalid");
        expect(isNumber(doc.velocity_scale?.v0_ms) && isNumber(doc.velocity_scale?.v_tar_ms),
            "state.velocity_scale invalid");
        expect(["left", "straight", "right"].includes(doc.direction), "state.direction invalid");
        const rf = doc.risk_field;
        expect(rf && Array.isArray(rf.options) && Array.isArray(rf.s_grid_s),
            "state.risk_field invalid");
        for (const option of rf.options) {
            expect(Array.isArray(option.profiles), "risk_field.option.profiles missing");
            for (const row of option.profiles) {
                expect(Array.isArray(row.rate_pct_per_s) &&
                    row.rate_pct_per_s.length === rf.s_grid_s.length,
                    "risk_field row length mismatch");
            }
        }
        return doc as StateMessage;
    }
    throw new SchemaError(`unknown message type ${doc.type}`);
}

// Heatmap cell count as declared by the message: paths x profiles x time steps.
// The UI renders exactly these cells; no client-side resampling.
export function heatmapCellCount(field: RiskField): number {
    const rows = field.options.reduce((n, option) => n + option.profiles.length, 0);
    return rows * field.s_grid_s.length;
}

export function buildCommand(
    accel: number,
    laneRequest: "left" | "right" | null,
    pause = false,
    reset = false,
): CommandMessage {
    return {
        type: "command",
        version: PROTOCOL_VERSION,
        accel_ms2: accel,
        lane_request: laneRequest,
        pause,
        reset,
    };
}
