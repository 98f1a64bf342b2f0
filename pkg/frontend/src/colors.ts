// Risk-graph color map. Rates below the blue threshold stay in the blue
// band (darker = lower), rates at or above the red threshold saturate to
// red, and the stretch in between blends linearly from blue to red.

export interface Thresholds {
    blueBelow: number;   // %/s
    redAtOrAbove: number; // %/s
}

export const DEFAULT_THRESHOLDS: Thresholds = { blueBelow: 0.5, redAtOrAbove: 1.0 };

const BLUE_DARK: [number, number, number] = [8, 18, 52];
const BLUE_BRIGHT: [number, number, number] = [40, 90, 220];
const RED: [number, number, number] = [230, 40, 30];

function lerp(a: [number, number, number], b: [number, number, number], t: number): [number, number, number] {
    return [
        Math.round(a[0] + (b[0] - a[0]) * t),
        Math.round(a[1] + (b[1] - a[1]) * t),
        Math.round(a[2] + (b[2] - a[2]) * t),
    ];
}

export function rateToColor(ratePct: number, thresholds: Thresholds = DEFAULT_THRESHOLDS): [number, number, number] {
    if (!Number.isFinite(ratePct) || ratePct < 0) {
        ratePct = 0;
    }
    if (ratePct < thresholds.blueBelow) {
        return lerp(BLUE_DARK, BLUE_BRIGHT, ratePct / thresholds.blueBelow);
    }
    if (ratePct >= thresholds.redAtOrAbove) {
        return RED;
    }
    const span = thresholds.redAtOrAbove - thresholds.blueBelow;
    return lerp(BLUE_BRIGHT, RED, (ratePct - thresholds.blueBelow) / span);
}

export function cssColor(rgb: [number, number, number]): string {
    return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
}
