import { describe, expect, it } from 'vitest';

import { EvalRecord, RunLog } from '../src/parse.js';
import { ci95, groupCurves, maxBandWidth, mean, sampleStd } from '../src/stats.js';

function fakeRun(dir: string, groupKey: string, rates: number[]): RunLog {
    const evals: EvalRecord[] = rates.map((r, i) => ({
        env_steps: (i + 1) * 1000,
        success_rate: r,
        successes: [],
    }));
    return { dir, groupKey, evals, episodes: [] };
}

describe('basic statistics', () => {
    it('mean and sample std match hand values', () => {
        expect(mean([1, 2, 3, 4])).toBe(2.5);
        expect(sampleStd([2, 4, 4, 4, 5, 5, 7, 9])).toBeCloseTo(2.138, 3);
    });

    it('std and ci are zero for a single observation', () => {
        expect(sampleStd([3])).toBe(0);
        expect(ci95([3])).toBe(0);
    });

    it('ci95 matches the analytic normal interval', () => {
        const xs = [0.2, 0.4, 0.6, 0.8, 1.0];
        const expected = (1.96 * sampleStd(xs)) / Math.sqrt(5);
        expect(ci95(xs)).toBeCloseTo(expected, 12);
    });
});

describe('curve grouping', () => {
    it('single run gives a zero-width band', () => {
        const groups = groupCurves([fakeRun('a', 'k', [0.1, 0.5, 0.9])]);
        expect(groups).toHaveLength(1);
        expect(maxBandWidth(groups[0])).toBe(0);
        expect(groups[0].points.map((p) => p.mean)).toEqual([0.1, 0.5, 0.9]);
    });

    it('identical runs give a zero-width band', () => {
        const runs = [1, 2, 3, 4, 5].map((s) => fakeRun(`run${s}`, 'same', [0.3, 0.3, 0.6]));
        const groups = groupCurves(runs);
        expect(groups).toHaveLength(1);
        expect(groups[0].runs).toBe(5);
        expect(maxBandWidth(groups[0])).toBe(0);
    });

    it('synthetic known spread matches the analytic interval', () => {
        const rates = [0.2, 0.4, 0.9];
        const runs = rates.map((r, i) => fakeRun(`s${i}`, 'same', [r]));
        const groups = groupCurves(runs);
        const p = groups[0].points[0];
        const half = ci95(rates);
        expect(p.mean).toBeCloseTo(mean(rates), 12);
        expect(p.hi - p.lo).toBeCloseTo(2 * half, 12);
    });

    it('different config keys split into separate groups', () => {
        const groups = groupCurves([
            fakeRun('a', 'k1', [0.1]),
            fakeRun('b', 'k2', [0.9]),
        ]);
        expect(groups).toHaveLength(2);
    });

    it('runs with different lengths are truncated to the shortest', () => {
        const groups = groupCurves([
            fakeRun('a', 'k', [0.1, 0.2, 0.3]),
            fakeRun('b', 'k', [0.2, 0.4]),
        ]);
        expect(groups[0].points).toHaveLength(2);
    });
});
