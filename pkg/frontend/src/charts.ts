/** The three report renderers: curves, latent scatter, visit histogram. */

import { CountRow, LatentRow, RunLog } from './parse.js';
import { CurveGroup, groupCurves } from './stats.js';
import { makeFrame, progressColor, SERIES_COLORS } from './svg.js';

export function renderCurves(runs: RunLog[], width = 720, height = 420): string {
    const groups = groupCurves(runs);
    const allSteps = groups.flatMap((g) => g.points.map((p) => p.steps));
    const xMax = Math.max(...allSteps, 1);
    const frame = makeFrame(width, height, [0, xMax], [0, 1], {
        title: 'Evaluation success rate',
        xLabel: 'environment steps',
        yLabel: 'success rate',
    });
    groups.forEach((group, gi) => {
        const color = SERIES_COLORS[gi % SERIES_COLORS.length];
        drawBand(frame, group, color);
        frame.svg.text(
            frame.x.range[0] + 8,
            frame.y.range[1] + 14 + gi * 14,
            `${group.label}`,
            10,
            'start',
            color,
        );
    });
    return frame.svg.render();
}

function drawBand(frame: ReturnType<typeof makeFrame>, group: CurveGroup, color: string): void {
    const up = group.points.map(
        (p) => [frame.x(p.steps), frame.y(clamp01(p.hi))] as [number, number],
    );
    const down = group.points
        .slice()
        .reverse()
        .map((p) => [frame.x(p.steps), frame.y(clamp01(p.lo))] as [number, number]);
    if (group.points.length > 1) {
        frame.svg.polygon([...up, ...down], color, 0.2);
    }
    frame.svg.polyline(
        group.points.map((p) => [frame.x(p.steps), frame.y(p.mean)] as [number, number]),
        color,
    );
}

const clamp01 = (v: number) => Math.min(1, Math.max(0, v));

export function renderLatent(rows: LatentRow[], width = 520, height = 520): string {
    const zs = rows.map((r) => r.z);
    const xs = zs.map((z) => z[0]);
    const ys = zs.map((z) => z[1]);
    const pad = 0.05;
    const xr = spread(xs, pad);
    const yr = spread(ys, pad);
    const frame = makeFrame(width, height, xr, yr, {
        title: 'Latent trajectory (purple start, yellow end)',
        xLabel: 'z1',
        yLabel: 'z2',
    });
    const maxStep = Math.max(...rows.map((r) => r.step), 1);
    for (const row of rows) {
        frame.svg.circle(
            frame.x(row.z[0]),
            frame.y(row.z[1]),
            3,
            progressColor(row.step / maxStep),
        );
    }
    return frame.svg.render();
}

function spread(values: number[], pad: number): [number, number] {
    const lo = Math.min(...values);
    const hi = Math.max(...values);
    const extra = (hi - lo || 1) * pad;
    return [lo - extra, hi + extra];
}

export function renderVisits(rows: CountRow[], width = 720, height = 420): string {
    const sorted = rows.slice().sort((a, b) => a.bucket - b.bucket);
    const total = sorted.reduce((a, r) => a + r.count, 0);
    const maxCount = Math.max(...sorted.map((r) => r.count), 1);
    const frame = makeFrame(width, height, [0, sorted.length], [0, maxCount], {
        title: 'Latent bucket visit counts',
        xLabel: `visited buckets (${sorted.length}), total visits = ${total}`,
        yLabel: 'visits',
    });
    const slot = (frame.x.range[1] - frame.x.range[0]) / Math.max(sorted.length, 1);
    sorted.forEach((row, i) => {
        const x0 = frame.x(i) + slot * 0.1;
        const y0 = frame.y(row.count);
        frame.svg.rect(x0, y0, slot * 0.8, frame.y(0) - y0, '#2563eb', 0.85);
    });
    return frame.svg.render();
}
