/** Minimal deterministic SVG scene building: fixed palette, fixed fonts,
 * fixed number formatting, no ids or timestamps. */

export const PALETTE = ["#1f5fa8", "#d1495b", "#3f8f4a", "#8f5ab8", "#c78a27", "#3aa0a8"];

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "nan";
  if (x === 0) return "0";
  const out = x.toPrecision(6);
  return out.includes(".") ? out.replace(/\.?0+($|e)/, "$1") : out;
}

export interface Scale {
  (x: number): number;
  domain: [number, number];
}

export function linScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((x: number) => r0 + ((x - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  return f;
}

/** Round ticks covering the domain: 1-2-5 progression, deterministic. */
export function ticks(domain: [number, number], target = 6): number[] {
  const [lo, hi] = domain;
  const span = Math.abs(hi - lo) || 1;
  const raw = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) { step = m * mag; break; }
  }
  const start = Math.ceil(Math.min(lo, hi) / step) * step;
  const out: number[] = [];
  for (let v = start; v <= Math.max(lo, hi) + 1e-12 * span; v += step) {
    out.push(Math.abs(v) < 1e-12 * span ? 0 : v);
  }
  return out;
}

export interface PanelBox {
  x: number; y: number; w: number; h: number;
}

export class SvgDoc {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`);
    this.parts.push(`<rect width="${width}" height="${height}" fill="#ffffff"/>`);
  }

  raw(s: string) {
    this.parts.push(s);
  }

  text(x: number, y: number, s: string, opts: { size?: number; anchor?: string; rotate?: number } = {}) {
    const size = opts.size ?? 11;
    const anchor = opts.anchor ?? "start";
    const rot = opts.rotate ? ` transform="rotate(${opts.rotate} ${fmt(x)} ${fmt(y)})"` : "";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" text-anchor="${anchor}"${rot}>` +
      `${escapeXml(s)}</text>`);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#000000", width = 1) {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
      `stroke="${stroke}" stroke-width="${width}"/>`);
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5, dash?: string) {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" ` +
      `stroke-width="${width}"${dashAttr}/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string) {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>`);
  }

  finish(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface AxisSpec {
  box: PanelBox;
  xDomain: [number, number];
  yDomain: [number, number];
  xLabel: string;
  yLabel: string;
  title?: string;
}

export function drawAxes(doc: SvgDoc, spec: AxisSpec): { sx: Scale; sy: Scale } {
  const { box } = spec;
  const sx = linScale(spec.xDomain, [box.x, box.x + box.w]);
  const sy = linScale(spec.yDomain, [box.y + box.h, box.y]);
  doc.line(box.x, box.y, box.x, box.y + box.h);
  doc.line(box.x, box.y + box.h, box.x + box.w, box.y + box.h);
  for (const t of ticks(spec.xDomain)) {
    const px = sx(t);
    doc.line(px, box.y + box.h, px, box.y + box.h + 4);
    doc.text(px, box.y + box.h + 16, fmt(t), { anchor: "middle", size: 10 });
  }
  for (const t of ticks(spec.yDomain)) {
    const py = sy(t);
    doc.line(box.x - 4, py, box.x, py);
    doc.text(box.x - 7, py + 3, fmt(t), { anchor: "end", size: 10 });
  }
  doc.text(box.x + box.w / 2, box.y + box.h + 32, spec.xLabel, { anchor: "middle" });
  doc.text(box.x - 44, box.y + box.h / 2, spec.yLabel,
           { anchor: "middle", rotate: -90 });
  if (spec.title) {
    doc.text(box.x + box.w / 2, box.y - 8, spec.title, { anchor: "middle", size: 12 });
  }
  return { sx, sy };
}

/** Small fixed-stop colour map (dark blue -> yellow), linear interpolation. */
const STOPS: Array<[number, [number, number, number]]> = [
  [0.0, [68, 1, 84]],
  [0.25, [59, 82, 139]],
  [0.5, [33, 145, 140]],
  [0.75, [94, 201, 98]],
  [1.0, [253, 231, 37]],
];

export function colormap(t: number): string {
  const x = Math.min(1, Math.max(0, t));
  for (let i = 1; i < STOPS.length; i++) {
    const [t1, c1] = STOPS[i];
    const [t0, c0] = STOPS[i - 1];
    if (x <= t1) {
      const u = (x - t0) / (t1 - t0);
      const rgb = c0.map((v, j) => Math.round(v + u * (c1[j] - v)));
      return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
    }
  }
  return "rgb(253,231,37)";
}

export function dataRange(values: number[], pad = 0.05): [number, number] {
  const finite = values.filter(Number.isFinite);
  if (finite.length === 0) return [0, 1];
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const span = hi - lo;
  return [lo - pad * span, hi + pad * span];
}
