/** Minimal SVG scene builder: linear scales, polylines, framed axes. */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export class LinearScale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
  ) {}

  map(v: number): number {
    const t = (v - this.d0) / (this.d1 - this.d0 || 1);
    return this.r0 + t * (this.r1 - this.r0);
  }

  ticks(count = 6): number[] {
    const span = this.d1 - this.d0;
    if (span === 0) return [this.d0];
    const step = niceStep(span / count);
    const start = Math.ceil(this.d0 / step) * step;
    const out: number[] = [];
    for (let v = start; v <= this.d1 + 1e-9 * Math.abs(span); v += step) {
      out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
    }
    return out;
  }
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(Math.abs(raw))));
  const unit = raw / mag;
  if (unit < 1.5) return mag;
  if (unit < 3.5) return 2 * mag;
  if (unit < 7.5) return 5 * mag;
  return 10 * mag;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 1e4 || abs < 1e-3) return v.toExponential(1);
  return String(Number(v.toPrecision(6)));
}

export function extent(values: Iterable<number>): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (lo === hi) return [lo - 1, hi + 1];
  return [lo, hi];
}

export function padded([lo, hi]: [number, number], frac = 0.05): [number, number] {
  const pad = (hi - lo) * frac;
  return [lo - pad, hi + pad];
}

export interface PolylineStyle {
  stroke?: string;
  width?: number;
  dash?: string;
  opacity?: number;
}

export function polyline(points: Array<[number, number]>, style: PolylineStyle = {}): string {
  const pts = points.map(([px, py]) => `${round(px)},${round(py)}`).join(" ");
  const stroke = style.stroke ?? "#336";
  const width = style.width ?? 1;
  const dash = style.dash ? ` stroke-dasharray="${style.dash}"` : "";
  const opacity = style.opacity !== undefined ? ` stroke-opacity="${style.opacity}"` : "";
  return `<polyline fill="none" stroke="${stroke}" stroke-width="${width}"${dash}${opacity} points="${pts}"/>`;
}

function round(v: number): number {
  return Math.round(v * 100) / 100;
}

export interface AxesSpec {
  width: number;
  height: number;
  margin: Margin;
  xScale: LinearScale;
  yScale: LinearScale;
  xLabel: string;
  yLabel: string;
  title: string;
}

export function axes(spec: AxesSpec): string {
  const { margin, width, height, xScale, yScale } = spec;
  const plotRight = width - margin.right;
  const plotBottom = height - margin.bottom;
  const parts: string[] = [];
  parts.push(
    `<rect x="${margin.left}" y="${margin.top}" width="${plotRight - margin.left}" ` +
      `height="${plotBottom - margin.top}" fill="none" stroke="#222" stroke-width="1"/>`,
  );
  for (const t of xScale.ticks()) {
    const px = round(xScale.map(t));
    parts.push(`<line x1="${px}" y1="${plotBottom}" x2="${px}" y2="${plotBottom + 4}" stroke="#222"/>`);
    parts.push(
      `<text x="${px}" y="${plotBottom + 16}" font-size="10" text-anchor="middle" fill="#222">${fmt(t)}</text>`,
    );
  }
  for (const t of yScale.ticks()) {
    const py = round(yScale.map(t));
    parts.push(`<line x1="${margin.left - 4}" y1="${py}" x2="${margin.left}" y2="${py}" stroke="#222"/>`);
    parts.push(
      `<text x="${margin.left - 7}" y="${py + 3}" font-size="10" text-anchor="end" fill="#222">${fmt(t)}</text>`,
    );
  }
  const cx = (margin.left + plotRight) / 2;
  parts.push(`<text x="${cx}" y="${height - 6}" font-size="11" text-anchor="middle" fill="#222">${spec.xLabel}</text>`);
  parts.push(
    `<text x="14" y="${(margin.top + plotBottom) / 2}" font-size="11" text-anchor="middle" fill="#222" ` +
      `transform="rotate(-90 14 ${(margin.top + plotBottom) / 2})">${spec.yLabel}</text>`,
  );
  parts.push(`<text x="${cx}" y="${margin.top - 8}" font-size="12" text-anchor="middle" fill="#222">${spec.title}</text>`);
  return parts.join("\n");
}

export function svgDocument(width: number, height: number, body: string): string {
  return (
    `<?xml version="1.0" encoding="UTF-8"?>\n` +
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">\n<rect width="100%" height="100%" fill="white"/>\n` +
    body +
    "\n</svg>\n"
  );
}
