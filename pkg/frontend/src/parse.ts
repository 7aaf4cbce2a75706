/**
 * Parsers for the run artifacts: JSONL logs and CSV dumps.
 *
 * Formats (produced by the training harness):
 *   evals.jsonl   one {env_steps, success_rate, successes[]} per line
 *   episodes.jsonl one record per training episode
 *   latent csv    header step,x,y,z_1..z_d then one row per state
 *   counts csv    header bucket,count then one row per visited bucket
 */

import { readFileSync } from 'fs';
import { join } from 'path';

export interface EvalRecord {
    env_steps: number;
    success_rate: number;
    successes: boolean[];
}

export interface EpisodeRecord {
    episode: number;
    env_steps: number;
    success: boolean;
    return: number;
    p: number;
    teacher_fraction: number;
    graph_builds: number;
    contrastive_loss: number | null;
    stability_loss: number | null;
}

export interface RunLog {
    dir: string;
    groupKey: string;
    evals: EvalRecord[];
    episodes: EpisodeRecord[];
}

export interface LatentRow {
    step: number;
    x: number;
    y: number;
    z: number[];
}

export class ParseError extends Error {}

function parseJsonl<T>(text: string, source: string): T[] {
    const out: T[] = [];
    const lines = text.split('\n');
    for (let i = 0; i < lines.length; i++) {
        const line = lines[i].trim();
        if (!line) continue;
        try {
            out.push(JSON.parse(line) as T);
        } catch (err) {
            throw new ParseError(`${source}:${i + 1}: bad JSON line (${err})`);
        }
    }
    return out;
}

/** Load one run directory; enforces monotone step ordering on the eval log. */
export function loadRun(dir: string): RunLog {
    const evalsText = readFileSync(join(dir, 'evals.jsonl'), 'utf-8');
    const evals = parseJsonl<EvalRecord>(evalsText, join(dir, 'evals.jsonl'));
    if (evals.length === 0) {
        throw new ParseError(`${dir}: evals.jsonl holds no eval records`);
    }
    for (let i = 1; i < evals.length; i++) {
        if (evals[i].env_steps < evals[i - 1].env_steps) {
            throw new ParseError(`${dir}: eval records are not step-ordered at index ${i}`);
        }
    }
    let episodes: EpisodeRecord[] = [];
    try {
        const episodesText = readFileSync(join(dir, 'episodes.jsonl'), 'utf-8');
        episodes = parseJsonl<EpisodeRecord>(episodesText, join(dir, 'episodes.jsonl'));
    } catch (err) {
        if (err instanceof ParseError) throw err;
        // episodes.jsonl is optional for curve plotting
    }
    let groupKey = dir;
    try {
        const config = readFileSync(join(dir, 'config.cfg'), 'utf-8');
        groupKey = config
            .split('\n')
            .filter((line) => !/^\s*seed\s*=/.test(line))
            .join('\n');
    } catch {
        // no config echo: every run is its own group
    }
    return { dir, groupKey, evals, episodes };
}

export function parseLatentCsv(text: string, source = 'latent csv'): LatentRow[] {
    const lines = text.split('\n').filter((l) => l.trim().length > 0);
    if (lines.length === 0) throw new ParseError(`${source}: empty file`);
    const header = lines[0].split(',');
    if (header[0] !== 'step' || header[1] !== 'x' || header[2] !== 'y') {
        throw new ParseError(`${source}: unexpected header ${lines[0]}`);
    }
    const d = header.length - 3;
    if (lines.length === 1) throw new ParseError(`${source}: no data rows`);
    const rows: LatentRow[] = [];
    for (let i = 1; i < lines.length; i++) {
        const parts = lines[i].split(',');
        if (parts.length !== header.length) {
            throw new ParseError(`${source}:${i + 1}: expected ${header.length} columns, got ${parts.length}`);
        }
        const nums = parts.map(Number);
        if (nums.some((v) => Number.isNaN(v))) {
            throw new ParseError(`${source}:${i + 1}: non-numeric value`);
        }
        rows.push({ step: nums[0], x: nums[1], y: nums[2], z: nums.slice(3) });
    }
    if (d !== 2) {
        throw new ParseError(`${source}: latent dimension ${d} unsupported (want 2)`);
    }
    return rows;
}

export interface CountRow {
    bucket: number;
    count: number;
}

export function parseCountsCsv(text: string, source = 'counts csv'): CountRow[] {
    const lines = text.split('\n').filter((l) => l.trim().length > 0);
    if (lines.length === 0) throw new ParseError(`${source}: empty file`);
    if (lines[0] !== 'bucket,count') {
        throw new ParseError(`${source}:1: expected header 'bucket,count'`);
    }
    const rows: CountRow[] = [];
    for (let i = 1; i < lines.length; i++) {
        const parts = lines[i].split(',');
        const bucket = Number(parts[0]);
        const count = Number(parts[1]);
        if (parts.length !== 2 || Number.isNaN(bucket) || Number.isNaN(count)) {
            throw new ParseError(`${source}:${i + 1}: malformed row '${lines[i]}'`);
        }
        rows.push({ bucket, count });
    }
    return rows;
}
