/** Aggregation of eval curves across seeds of one configuration. */

import { RunLog } from './parse.js';

export interface BandPoint {
    steps: number;
    mean: number;
    lo: number;
    hi: number;
}

export interface CurveGroup {
    label: string;
    runs: number;
    points: BandPoint[];
}

export function mean(xs: number[]): number {
    return xs.reduce((a, b) => a + b, 0) / xs.length;
}

/** Sample standard deviation (ddof = 1); 0 for fewer than two values. */
export function sampleStd(xs: number[]): number {
    if (xs.length < 2) return 0;
    const m = mean(xs);
    const ss = xs.reduce((a, b) => a + (b - m) * (b - m), 0);
    return Math.sqrt(ss / (xs.length - 1));
}

/** 95% normal-approximation confidence half-width of the mean. */
export function ci95(xs: number[]): number {
    if (xs.length < 2) return 0;
    return (1.96 * sampleStd(xs)) / Math.sqrt(xs.length);
}

/**
 * Group runs by config identity (minus seed) and aggregate eval curves
 * point-by-point: mean success with a 95% band. Runs in a group are
 * aligned by eval index and truncated to the shortest.
 */
export function groupCurves(runs: RunLog[]): CurveGroup[] {
    const byKey = new Map<string, RunLog[]>();
    for (const run of runs) {
        const list = byKey.get(run.groupKey) ?? [];
        list.push(run);
        byKey.set(run.groupKey, list);
    }
    const groups: CurveGroup[] = [];
    let index = 0;
    for (const members of byKey.values()) {
        index += 1;
        const n = Math.min(...members.map((r) => r.evals.length));
        const points: BandPoint[] = [];
        for (let i = 0; i < n; i++) {
            const rates = members.map((r) => r.evals[i].success_rate);
            const steps = mean(members.map((r) => r.evals[i].env_steps));
            const half = ci95(rates);
            const m = mean(rates);
            points.push({ steps, mean: m, lo: m - half, hi: m + half });
        }
        const label = members.length === 1
            ? members[0].dir
            : `config ${index} (${members.length} seeds)`;
        groups.push({ label, runs: members.length, points });
    }
    return groups;
}

export function maxBandWidth(group: CurveGroup): number {
    return Math.max(0, ...group.points.map((p) => p.hi - p.lo));
}
