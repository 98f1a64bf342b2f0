import assert from "node:assert/strict";
import { test } from "node:test";

import { DEFAULT_THRESHOLDS, rateToColor } from "../src/colors.js";

test("rates below the blue threshold stay blue", () => {
    for (const rate of [0, 0.1, 0.3, 0.49]) {
        const [r, , b] = rateToColor(rate, DEFAULT_THRESHOLDS);
        assert.ok(b > r, `rate ${rate} should be blue-dominant`);
    }
});

test("rates at or above the red threshold saturate to red", () => {
    const red = rateToColor(1.0, DEFAULT_THRESHOLDS);
    assert.deepEqual(rateToColor(1.5, DEFAULT_THRESHOLDS), red);
    assert.deepEqual(rateToColor(15, DEFAULT_THRESHOLDS), red);
    const [r, g, b] = red;
    assert.ok(r > 200 && g < 90 && b < 90);
});

test("between the thresholds the blend is linear in rate", () => {
    const lo = rateToColor(0.5, DEFAULT_THRESHOLDS);
    const hi = rateToColor(1.0, DEFAULT_THRESHOLDS);
    const mid = rateToColor(0.75, DEFAULT_THRESHOLDS);
    for (let c = 0; c < 3; c++) {
        assert.ok(Math.abs(mid[c] - (lo[c] + hi[c]) / 2) <= 1, `channel ${c} not linear`);
    }
});

test("negative or non-finite rates are treated as zero", () => {
    assert.deepEqual(rateToColor(-1), rateToColor(0));
    assert.deepEqual(rateToColor(Number.NaN), rateToColor(0));
});
