// View-state model: a one-slot latest-value buffer between stream receipt
// and render, staleness tracking for the disconnected badge, and the
// schema-error banner. Pure logic, no DOM, so it runs under node:test.

import {
    HelloMessage,
    SchemaError,
    ServerMessage,
    StateMessage,
    parseServerMessage,
} from "./protocol.js";

export const STALE_AFTER_MS = 1000;

export interface BadgeState {
    connected: boolean;
    stale: boolean;
    error: string | null;
}

export class HmiModel {
    hello: HelloMessage | null = null;
    private latest: StateMessage | null = null;  // one-slot buffer, latest wins
    private lastReceivedMs = -Infinity;
    private lastRenderedDirection: string | null = null;
    connected = false;
    schemaError: string | null = null;
    directionChanges = 0;

    receiveRaw(raw: string, nowMs: number): ServerMessage | null {
        try {
            const message = parseServerMessage(raw);
            this.schemaError = null;
            this.receive(message, nowMs);
            return message;
        } catch (err) {
            if (err instanceof SchemaError) {
                this.schemaError = err.message;
                return null;
            }
            throw err;
        }
    }

    receive(message: ServerMessage, nowMs: number): void {
        this.lastReceivedMs = nowMs;
        if (message.type === "hello") {
            this.hello = message;
            this.latest = null;
            this.lastRenderedDirection = null;
            this.directionChanges = 0;
        } else {
            this.latest = message; // overwrite: render always sees the newest state
        }
    }

    // Take the newest unrendered state (clears the slot).
    takeLatest(): StateMessage | null {
        const state = this.latest;
        this.latest = null;
        if (state && state.direction !== this.lastRenderedDirection) {
            if (this.lastRenderedDirection !== null) {
                this.directionChanges += 1;
            }
            this.lastRenderedDirection = state.direction;
        }
        return state;
    }

    setConnected(connected: boolean): void {
        this.connected = connected;
        if (!connected) {
            this.latest = null;
        }
    }

    badge(nowMs: number): BadgeState {
        return {
            connected: this.connected,
            stale: nowMs - this.lastReceivedMs > STALE_AFTER_MS,
            error: this.schemaError,
        };
    }
}
