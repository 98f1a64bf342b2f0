// Websocket client with client-side command coalescing: at most one command
// per planner cycle goes on the wire, the newest one wins. While
// disconnected a single command stays queued (newer ones replace it).

import { CommandMessage } from "./protocol.js";

type SocketLike = {
    readyState: number;
    send(data: string): void;
    close(): void;
};

export const OPEN = 1;

export class CommandSender {
    private cyclePeriodMs: number;
    private lastSentMs = -Infinity;
    private pending: CommandMessage | null = null;
    private flushTimer: ReturnType<typeof setTimeout> | null = null;

    constructor(
        private readonly socket: () => SocketLike | null,
        cycleRateHz = 10,
        private readonly now: () => number = () => Date.now(),
    ) {
        this.cyclePeriodMs = 1000 / cycleRateHz;
    }

    setCycleRate(hz: number): void {
        this.cyclePeriodMs = 1000 / hz;
    }

    send(command: CommandMessage): void {
        this.pending = command; // latest wins
        this.flush();
    }

    flush(): void {
        const ws = this.socket();
        if (this.pending === null) {
            return;
        }
        if (ws === null || ws.readyState !== OPEN) {
            return; // stays queued (depth 1) until reconnect or replacement
        }
        const elapsed = this.now() - this.lastSentMs;
        if (elapsed >= this.cyclePeriodMs) {
            ws.send(JSON.stringify(this.pending));
            this.pending = null;
            this.lastSentMs = this.now();
        } else if (this.flushTimer === null) {
            this.flushTimer = setTimeout(() => {
                this.flushTimer = null;
                this.flush();
            }, this.cyclePeriodMs - elapsed);
        }
    }

    pendingCommand(): CommandMessage | null {
        return this.pending;
    }
}

export class HmiClient {
    private ws: WebSocket | null = null;
    readonly sender: CommandSender;

    constructor(
        private readonly url: string,
        private readonly onMessage: (raw: string) => void,
        private readonly onStatus: (connected: boolean) => void,
    ) {
        this.sender = new CommandSender(() => this.ws as SocketLike | null);
    }

    connect(): void {
        this.ws = new WebSocket(this.url);
        this.ws.onopen = () => {
            console.log(`[hmi] connected to ${this.url}`);
            this.onStatus(true);
            this.sender.flush();
        };
        this.ws.onclose = () => {
            console.warn("[hmi] disconnected; retrying in 1 s");
            this.onStatus(false);
            setTimeout(() => this.connect(), 1000);
        };
        this.ws.onmessage = (event) => this.onMessage(String(event.data));
        this.ws.onerror = (err) => console.error("[hmi] socket error", err);
    }

    send(command: CommandMessage): void {
        this.sender.send(command);
    }
}
