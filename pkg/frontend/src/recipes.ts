/** Figure recipes: pure CSV -> SVG, no physics recomputed. */

import { readFileSync, writeFileSync } from "fs";

import { MapRow, SchemaError, SweepRow, groups, okRows,
         parseMapCsv, parseSweepCsv } from "./schema.js";
import { AxisSpec, PALETTE, PanelBox, SvgDoc, colormap, dataRange,
         drawAxes, fmt, linScale } from "./svg.js";

export const FIGURE_KINDS = [
  "iv-overlay", "loss-panel", "dephasing-panel",
  "nonreciprocal-overlay", "conductance-heatmap",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureRecipe {
  kind: FigureKind;
  inputs: string[];
  output: string;
  xRange?: [number, number];
  yRange?: [number, number];
}

export function validateRecipe(raw: Record<string, unknown>): FigureRecipe {
  const kind = raw.kind as FigureKind;
  if (!FIGURE_KINDS.includes(kind)) {
    throw new SchemaError(`unknown figure kind "${raw.kind}"`);
  }
  const inputs = raw.inputs as string[];
  if (!Array.isArray(inputs) || inputs.length === 0 ||
      inputs.some(p => typeof p !== "string")) {
    throw new SchemaError("recipe needs a non-empty list of input CSV paths");
  }
  if (typeof raw.output !== "string" || raw.output.length === 0) {
    throw new SchemaError("recipe needs an output image path");
  }
  const parseRange = (v: unknown, name: string): [number, number] | undefined => {
    if (v === undefined || v === null) return undefined;
    if (!Array.isArray(v) || v.length !== 2 || v.some(x => typeof x !== "number")) {
      throw new SchemaError(`recipe ${name} must be [lo, hi]`);
    }
    return [v[0], v[1]];
  };
  return {
    kind,
    inputs,
    output: raw.output,
    xRange: parseRange(raw.xRange, "xRange"),
    yRange: parseRange(raw.yRange, "yRange"),
  };
}

function loadSweeps(paths: string[]): Array<{ path: string; rows: SweepRow[] }> {
  return paths.map(path => ({
    path,
    rows: okRows(parseSweepCsv(readFileSync(path, "utf-8"), path)),
  })).map(({ path, rows }) => {
    if (rows.length === 0) throw new SchemaError(`${path}: no usable (status=ok) rows`);
    return { path, rows };
  });
}

function loadConcatenated(paths: string[]): SweepRow[] {
  return loadSweeps(paths).flatMap(({ rows }) => rows);
}

interface Curve {
  label: string;
  points: Array<[number, number]>;
  dash?: string;
}

function linePanel(doc: SvgDoc, box: PanelBox, curves: Curve[], xLabel: string,
                   yLabel: string, title: string,
                   xRange?: [number, number], yRange?: [number, number]) {
  const xs = curves.flatMap(c => c.points.map(p => p[0]));
  const ys = curves.flatMap(c => c.points.map(p => p[1]));
  const spec: AxisSpec = {
    box,
    xDomain: xRange ?? dataRange(xs, 0.02),
    yDomain: yRange ?? dataRange(ys),
    xLabel, yLabel, title,
  };
  const { sx, sy } = drawAxes(doc, spec);
  curves.forEach((curve, i) => {
    const pts = curve.points
      .filter(([x, y]) => Number.isFinite(x) && Number.isFinite(y))
      .map(([x, y]) => [sx(x), sy(y)] as [number, number]);
    doc.polyline(pts, PALETTE[i % PALETTE.length], 1.5, curve.dash);
    const lx = box.x + box.w - 8;
    const ly = box.y + 14 + 13 * i;
    doc.polyline([[lx - 26, ly - 4], [lx - 8, ly - 4]],
                 PALETTE[i % PALETTE.length], 1.5, curve.dash);
    doc.text(lx - 30, ly, curve.label, { anchor: "end", size: 10 });
  });
}

function sortedByV(rows: SweepRow[]): SweepRow[] {
  return [...rows].sort((a, b) => a.V - b.V);
}

function renderIvOverlay(recipe: FigureRecipe): string {
  const doc = new SvgDoc(560, 400);
  const curves: Curve[] = loadSweeps(recipe.inputs).map(({ rows }, i) => ({
    label: `g = ${fmt(rows[0].g_L)}`,
    points: sortedByV(rows).map(r => [r.V, r.I_s_R] as [number, number]),
    dash: rows[0].g_L === 0 ? "5,4" : undefined,
  }));
  linePanel(doc, { x: 70, y: 40, w: 440, h: 300 }, curves,
            "V (units of Delta)", "I_s_R (units of gamma)",
            "right-lead electron current", recipe.xRange, recipe.yRange);
  return doc.finish();
}

function renderLossPanel(recipe: FigureRecipe): string {
  const rows = loadConcatenated(recipe.inputs);
  const lossRates = groups(rows, "gamma_loss") as number[];
  const doc = new SvgDoc(920, 640);
  const panels: Array<{ field: keyof SweepRow; title: string; box: PanelBox }> = [
    { field: "I_s_L", title: "electrons entering (source)", box: { x: 75, y: 40, w: 330, h: 200 } },
    { field: "I_s_R", title: "electrons leaving (drain)", box: { x: 520, y: 40, w: 330, h: 200 } },
    { field: "I_p_L", title: "pairs entering (source)", box: { x: 75, y: 360, w: 330, h: 200 } },
    { field: "I_p_R", title: "pairs leaving (drain)", box: { x: 520, y: 360, w: 330, h: 200 } },
  ];
  for (const panel of panels) {
    const curves: Curve[] = lossRates.map((gl, i) => ({
      label: `loss = ${fmt(gl)}`,
      points: sortedByV(rows.filter(r => r.gamma_loss === gl))
        .map(r => [r.V, r[panel.field] as number] as [number, number]),
      dash: i === 0 ? undefined : `${2 + 2 * i},3`,
    }));
    linePanel(doc, panel.box, curves, "V (units of Delta)",
              "I (units of gamma)", panel.title, recipe.xRange, recipe.yRange);
  }
  return doc.finish();
}

function renderDephasingPanel(recipe: FigureRecipe): string {
  const rows = loadConcatenated(recipe.inputs);
  const dephRates = groups(rows, "gamma_deph") as number[];
  const doc = new SvgDoc(560, 400);
  const curves: Curve[] = dephRates.map((gd, i) => ({
    label: `deph = ${fmt(gd)}`,
    points: sortedByV(rows.filter(r => r.gamma_deph === gd))
      .map(r => [r.V, r.I_p_R] as [number, number]),
    dash: i === 0 ? undefined : `${2 + 2 * i},3`,
  }));
  linePanel(doc, { x: 70, y: 40, w: 440, h: 300 }, curves,
            "V (units of Delta)", "I_p_R (units of gamma)",
            "right-lead pair current under dephasing", recipe.xRange, recipe.yRange);
  return doc.finish();
}

function renderNonreciprocalOverlay(recipe: FigureRecipe): string {
  const rows = loadConcatenated(recipe.inputs);
  const fwd = sortedByV(rows.filter(r => r.V > 0));
  const bwd = sortedByV(rows.filter(r => r.V < 0));
  if (fwd.length === 0 || bwd.length === 0) {
    throw new SchemaError("nonreciprocal-overlay needs both bias signs in the input");
  }
  const doc = new SvgDoc(920, 400);
  // drain-side currents: right lead for +V, left lead for -V
  const electron: Curve[] = [
    { label: "+V", points: fwd.map(r => [r.V, Math.abs(r.I_s_R)] as [number, number]) },
    { label: "-V", points: bwd.map(r => [-r.V, Math.abs(r.I_s_L)] as [number, number]).reverse(), dash: "5,4" },
  ];
  const pair: Curve[] = [
    { label: "+V", points: fwd.map(r => [r.V, Math.abs(r.I_p_R)] as [number, number]) },
    { label: "-V", points: bwd.map(r => [-r.V, Math.abs(r.I_p_L)] as [number, number]).reverse(), dash: "5,4" },
  ];
  linePanel(doc, { x: 75, y: 40, w: 330, h: 280 }, electron,
            "|V| (units of Delta)", "|I_s| drain (units of gamma)",
            "electron current", recipe.xRange, recipe.yRange);
  linePanel(doc, { x: 520, y: 40, w: 330, h: 280 }, pair,
            "|V| (units of Delta)", "|I_p| drain (units of gamma)",
            "Cooper-pair current", recipe.xRange, recipe.yRange);
  return doc.finish();
}

function renderConductanceHeatmap(recipe: FigureRecipe): string {
  const datasets = recipe.inputs.map(path => {
    const rows = okRows(parseMapCsv(readFileSync(path, "utf-8"), path));
    if (rows.length === 0) throw new SchemaError(`${path}: no usable rows`);
    return { path, rows };
  });
  const doc = new SvgDoc(70 + 420 * datasets.length, 430);
  datasets.forEach(({ path, rows }, panel) => {
    const vs = [...new Set(rows.map(r => r.V))].sort((a, b) => a - b);
    const oms = [...new Set(rows.map(r => r.omega))].sort((a, b) => a - b);
    const box: PanelBox = { x: 70 + 420 * panel, y: 40, w: 340, h: 300 };
    const lookup = new Map<string, MapRow>();
    for (const r of rows) lookup.set(`${r.V}|${r.omega}`, r);
    const vals = rows.map(r => r.dIdV).filter(Number.isFinite);
    const lo = Math.min(...vals);
    const hi = Math.max(...vals);
    const span = hi - lo || 1;
    const sx = linScale(recipe.xRange ?? [vs[0], vs[vs.length - 1]], [box.x, box.x + box.w]);
    const sy = linScale(recipe.yRange ?? [oms[0], oms[oms.length - 1]],
                        [box.y + box.h, box.y]);
    const dv = vs.length > 1 ? sx(vs[1]) - sx(vs[0]) : box.w;
    const dom = oms.length > 1 ? sy(oms[0]) - sy(oms[1]) : box.h;
    for (const v of vs) {
      for (const om of oms) {
        const row = lookup.get(`${v}|${om}`);
        if (!row || !Number.isFinite(row.dIdV)) continue;
        doc.rect(sx(v) - dv / 2, sy(om) - dom / 2, dv, dom,
                 colormap((row.dIdV - lo) / span));
      }
    }
    const name = path.split("/").pop() ?? path;
    drawAxes(doc, {
      box,
      xDomain: sx.domain,
      yDomain: sy.domain,
      xLabel: "V (units of Delta)",
      yLabel: "omega (units of Delta)",
      title: `dI/dV  [${name}]`,
    });
    // colour bar
    const cb: PanelBox = { x: box.x + box.w + 14, y: box.y, w: 12, h: box.h };
    const steps = 32;
    for (let i = 0; i < steps; i++) {
      doc.rect(cb.x, cb.y + (cb.h * (steps - 1 - i)) / steps, cb.w, cb.h / steps + 0.5,
               colormap(i / (steps - 1)));
    }
    doc.text(cb.x + cb.w + 4, cb.y + 8, fmt(hi), { size: 9 });
    doc.text(cb.x + cb.w + 4, cb.y + cb.h, fmt(lo), { size: 9 });
  });
  return doc.finish();
}

export function render(recipe: FigureRecipe): string {
  let svg: string;
  switch (recipe.kind) {
    case "iv-overlay":
      svg = renderIvOverlay(recipe);
      break;
    case "loss-panel":
      svg = renderLossPanel(recipe);
      break;
    case "dephasing-panel":
      svg = renderDephasingPanel(recipe);
      break;
    case "nonreciprocal-overlay":
      svg = renderNonreciprocalOverlay(recipe);
      break;
    case "conductance-heatmap":
      svg = renderConductanceHeatmap(recipe);
      break;
    default:
      throw new SchemaError(`unknown figure kind "${recipe.kind}"`);
  }
  writeFileSync(recipe.output, svg, "utf-8");
  return svg;
}
