/** Tiny SVG scene builder: linear scales, axes, shapes, no DOM needed. */

export interface Scale {
    (value: number): number;
    domain: [number, number];
    range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
    const [d0, d1] = domain;
    const [r0, r1] = range;
    const span = d1 - d0 || 1;
    const scale = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
    scale.domain = domain;
    scale.range = range;
    return scale;
}

export function ticks(lo: number, hi: number, count = 5): number[] {
    if (lo === hi) return [lo];
    const rawStep = (hi - lo) / count;
    const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
    const candidates = [1, 2, 5, 10].map((m) => m * power);
    const step = candidates.find((s) => (hi - lo) / s <= count) ?? candidates[3];
    const start = Math.ceil(lo / step) * step;
    const out: number[] = [];
    for (let v = start; v <= hi + 1e-9; v += step) out.push(Number(v.toPrecision(12)));
    return out;
}

const esc = (s: string) =>
    s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;').replace(/"/g, '&quot;');

export class Svg {
    private parts: string[] = [];

    constructor(readonly width: number, readonly height: number) {}

    rect(x: number, y: number, w: number, h: number, fill: string, opacity = 1): void {
        this.parts.push(
            `<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(2)}" height="${h.toFixed(2)}" fill="${fill}" opacity="${opacity}"/>`,
        );
    }

    circle(cx: number, cy: number, r: number, fill: string): void {
        this.parts.push(`<circle cx="${cx.toFixed(2)}" cy="${cy.toFixed(2)}" r="${r}" fill="${fill}"/>`);
    }

    line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): void {
        this.parts.push(
            `<line x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" x2="${x2.toFixed(2)}" y2="${y2.toFixed(2)}" stroke="${stroke}" stroke-width="${width}"/>`,
        );
    }

    polyline(points: Array<[number, number]>, stroke: string, width = 2): void {
        const attr = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(' ');
        this.parts.push(`<polyline points="${attr}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`);
    }

    polygon(points: Array<[number, number]>, fill: string, opacity = 0.25): void {
        const attr = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(' ');
        this.parts.push(`<polygon points="${attr}" fill="${fill}" opacity="${opacity}"/>`);
    }

    text(x: number, y: number, content: string, size = 11, anchor = 'start', fill = '#333'): void {
        this.parts.push(
            `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" font-size="${size}" text-anchor="${anchor}" fill="${fill}" font-family="sans-serif">${esc(content)}</text>`,
        );
    }

    render(): string {
        return [
            `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
            `<rect width="${this.width}" height="${this.height}" fill="white"/>`,
            ...this.parts,
            '</svg>',
        ].join('\n');
    }
}

export interface Frame {
    svg: Svg;
    x: Scale;
    y: Scale;
}

/** Plot frame with axes, tick labels and titles. */
export function makeFrame(
    width: number,
    height: number,
    xDomain: [number, number],
    yDomain: [number, number],
    labels: { title?: string; xLabel?: string; yLabel?: string },
): Frame {
    const margin = { left: 55, right: 15, top: 28, bottom: 40 };
    const svg = new Svg(width, height);
    const x = linearScale(xDomain, [margin.left, width - margin.right]);
    const y = linearScale(yDomain, [height - margin.bottom, margin.top]);
    svg.line(x.range[0], y.range[0], x.range[1], y.range[0], '#444');
    svg.line(x.range[0], y.range[0], x.range[0], y.range[1], '#444');
    for (const t of ticks(xDomain[0], xDomain[1])) {
        const px = x(t);
        svg.line(px, y.range[0], px, y.range[0] + 4, '#444');
        svg.text(px, y.range[0] + 16, formatTick(t), 10, 'middle');
    }
    for (const t of ticks(yDomain[0], yDomain[1])) {
        const py = y(t);
        svg.line(x.range[0] - 4, py, x.range[0], py, '#444');
        svg.text(x.range[0] - 7, py + 3, formatTick(t), 10, 'end');
    }
    if (labels.title) svg.text(width / 2, 16, labels.title, 13, 'middle');
    if (labels.xLabel) svg.text((x.range[0] + x.range[1]) / 2, height - 8, labels.xLabel, 11, 'middle');
    if (labels.yLabel) svg.text(12, margin.top - 8, labels.yLabel, 11, 'start');
    return { svg, x, y };
}

function formatTick(v: number): string {
    if (Math.abs(v) >= 1_000_000) return `${v / 1_000_000}M`;
    if (Math.abs(v) >= 10_000) return `${v / 1000}k`;
    return `${v}`;
}

const VIRIDIS_STOPS: Array<[number, number, number]> = [
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
];

/** Purple-to-yellow gradient; t in [0, 1]. */
export function progressColor(t: number): string {
    const clamped = Math.min(1, Math.max(0, t));
    const pos = clamped * (VIRIDIS_STOPS.length - 1);
    const i = Math.min(Math.floor(pos), VIRIDIS_STOPS.length - 2);
    const frac = pos - i;
    const mix = (a: number, b: number) => Math.round(a + (b - a) * frac);
    const [r1, g1, b1] = VIRIDIS_STOPS[i];
    const [r2, g2, b2] = VIRIDIS_STOPS[i + 1];
    return `rgb(${mix(r1, r2)},${mix(g1, g2)},${mix(b1, b2)})`;
}

export const SERIES_COLORS = ['#2563eb', '#f97316', '#10b981', '#8b5cf6', '#ef4444', '#6b7280'];
