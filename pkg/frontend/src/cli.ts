/**
 * plots curves <runDir...> -o out.svg
 * plots latent <latent.csv> -o out.svg
 * plots visits <counts.csv> -o out.svg
 */

import { readFileSync, writeFileSync } from 'fs';

import { renderCurves, renderLatent, renderVisits } from './charts.js';
import { loadRun, parseCountsCsv, parseLatentCsv, ParseError } from './parse.js';

function usage(): never {
    process.stderr.write(
        'usage: plots curves <runDir...> -o <file.svg>\n' +
        '       plots latent <latent.csv> -o <file.svg>\n' +
        '       plots visits <counts.csv> -o <file.svg>\n',
    );
    process.exit(2);
}

export function main(argv: string[]): number {
    const args = argv.slice();
    const command = args.shift();
    if (!command || !['curves', 'latent', 'visits'].includes(command)) usage();
    const outIdx = args.findIndex((a) => a === '-o' || a === '--out');
    if (outIdx < 0 || outIdx + 1 >= args.length) usage();
    const outPath = args[outIdx + 1];
    const inputs = args.filter((_, i) => i !== outIdx && i !== outIdx + 1);
    if (inputs.length === 0) usage();
    try {
        let svg: string;
        if (command === 'curves') {
            svg = renderCurves(inputs.map(loadRun));
        } else if (command === 'latent') {
            if (inputs.length !== 1) usage();
            svg = renderLatent(parseLatentCsv(readFileSync(inputs[0], 'utf-8'), inputs[0]));
        } else {
            if (inputs.length !== 1) usage();
            svg = renderVisits(parseCountsCsv(readFileSync(inputs[0], 'utf-8'), inputs[0]));
        }
        writeFileSync(outPath, svg, 'utf-8');
        process.stdout.write(`wrote ${outPath}\n`);
        return 0;
    } catch (err) {
        if (err instanceof ParseError || (err as NodeJS.ErrnoException).code === 'ENOENT') {
            process.stderr.write(`error: ${(err as Error).message}\n`);
            return 1;
        }
        throw err;
    }
}

process.exit(main(process.argv.slice(2)));
