import { describe, expect, it } from 'vitest';
import { join } from 'path';

import { loadRun, parseCountsCsv, parseLatentCsv, ParseError } from '../src/parse.js';

const SAMPLE = join(__dirname, '..', 'sample-run');

describe('run loading', () => {
    it('loads the bundled sample run', () => {
        const run = loadRun(join(SAMPLE, 'seed1'));
        expect(run.evals.length).toBeGreaterThan(0);
        expect(run.episodes.length).toBeGreaterThan(0);
        expect(run.evals[0]).toHaveProperty('success_rate');
    });

    it('groups seeds of the same config together', () => {
        const a = loadRun(join(SAMPLE, 'seed1'));
        const b = loadRun(join(SAMPLE, 'seed2'));
        expect(a.groupKey).toBe(b.groupKey);
    });

    it('rejects a run directory without eval records', () => {
        expect(() => loadRun('/nonexistent-dir')).toThrow();
    });
});

describe('latent csv', () => {
    it('parses the bundled dump', () => {
        const rows = parseLatentCsv(
            require('fs').readFileSync(join(SAMPLE, 'latent.csv'), 'utf-8'),
        );
        expect(rows.length).toBeGreaterThan(10);
        expect(rows[0].z).toHaveLength(2);
    });

    it('rejects an empty file', () => {
        expect(() => parseLatentCsv('')).toThrow(ParseError);
    });

    it('rejects a header-only file', () => {
        expect(() => parseLatentCsv('step,x,y,z_1,z_2\n')).toThrow(/no data rows/);
    });

    it('rejects non-2d latents', () => {
        const text = 'step,x,y,z_1,z_2,z_3\n0,1,2,0.1,0.2,0.3\n';
        expect(() => parseLatentCsv(text)).toThrow(/dimension 3/);
    });

    it('reports the offending line number', () => {
        const text = 'step,x,y,z_1,z_2\n0,1,2,0.1,0.2\n1,oops,2,0.1,0.2\n';
        expect(() => parseLatentCsv(text, 'f.csv')).toThrow(/f.csv:3/);
    });
});

describe('counts csv', () => {
    it('parses the bundled dump and preserves totals', () => {
        const text = require('fs').readFileSync(join(SAMPLE, 'counts.csv'), 'utf-8');
        const rows = parseCountsCsv(text);
        const total = rows.reduce((a, r) => a + r.count, 0);
        expect(total).toBeGreaterThan(0);
    });

    it('rejects malformed rows with a line number', () => {
        expect(() => parseCountsCsv('bucket,count\n3,4\nbroken\n', 'c.csv')).toThrow(/c.csv:3/);
    });

    it('rejects a wrong header', () => {
        expect(() => parseCountsCsv('a,b\n1,2\n')).toThrow(/header/);
    });
});
