// Driver controls: throttle/brake map to an acceleration command clamped to
// the bounds announced in the hello message; lane requests are one-shot;
// pause and reset are momentary.

import { CommandMessage, buildCommand } from "./protocol.js";

export interface ControlState {
    throttle: number; // 0..1
    brake: number;    // 0..1
    laneRequest: "left" | "right" | null;
    pause: boolean;
    reset: boolean;
}

export function initialControls(): ControlState {
    return { throttle: 0, brake: 0, laneRequest: null, pause: false, reset: false };
}

export function commandFrom(
    state: ControlState,
    bounds: { min: number; max: number },
): CommandMessage {
    const throttle = Math.min(1, Math.max(0, state.throttle));
    const brake = Math.min(1, Math.max(0, state.brake));
    let accel = throttle * bounds.max + brake * bounds.min;
    accel = Math.min(bounds.max, Math.max(bounds.min, accel));
    return buildCommand(accel, state.laneRequest, state.pause, state.reset);
}

// One-shot flags are consumed when a command goes out.
export function consumeOneShots(state: ControlState): ControlState {
    return { ...state, laneRequest: null, reset: false };
}
