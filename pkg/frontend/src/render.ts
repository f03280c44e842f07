import { writeFileSync } from "node:fs";

import { Front, RunData, launchIndex, loadRun, nearestFront } from "./records.js";
import { LinearScale, axes, extent, padded, polyline, svgDocument } from "./svg.js";
import { waistLine } from "./waist.js";

export type FigureKind = "trajectories" | "intensity-overlay" | "waist-overlay";

export interface FigureSpec {
  kind: FigureKind;
  inputDir: string;
  outFile: string;
  /** Station for the final intensity profile; defaults to the last front. */
  zFinal?: number;
}

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { top: 28, right: 16, bottom: 40, left: 64 };
/** Trajectory fans plot at most this many rays, thinned by launch index. */
export const MAX_PLOTTED_RAYS = 64;

export function render(spec: FigureSpec): string {
  const run = loadRun(spec.inputDir);
  let svg: string;
  switch (spec.kind) {
    case "trajectories":
      svg = renderTrajectories(run);
      break;
    case "intensity-overlay":
      svg = renderIntensityOverlay(run, spec.zFinal);
      break;
    case "waist-overlay":
      svg = renderWaistOverlay(run);
      break;
    default:
      throw new Error(`unknown figure kind ${String(spec.kind)}`);
  }
  writeFileSync(spec.outFile, svg);
  return svg;
}

function frame(xDomain: [number, number], yDomain: [number, number]) {
  const xScale = new LinearScale(xDomain[0], xDomain[1], MARGIN.left, WIDTH - MARGIN.right);
  const yScale = new LinearScale(yDomain[0], yDomain[1], HEIGHT - MARGIN.bottom, MARGIN.top);
  return { xScale, yScale };
}

function rayPath(run: RunData, j: number): Array<[number, number]> {
  return run.fronts.map((front) => [front.z[j], front.x[j]]);
}

export function thinnedRayIndices(nRays: number, limit = MAX_PLOTTED_RAYS): number[] {
  if (nRays <= limit) return Array.from({ length: nRays }, (_, j) => j);
  const out: number[] = [];
  const step = (nRays - 1) / (limit - 1);
  for (let k = 0; k < limit; k++) out.push(Math.round(k * step));
  return [...new Set(out)];
}

function renderTrajectories(run: RunData): string {
  const zAll = run.fronts.flatMap((f) => [f.z[0], f.z[f.z.length - 1]]);
  const xAll: number[] = [];
  for (const f of run.fronts) {
    xAll.push(...extent(f.x));
  }
  const { xScale, yScale } = frame(padded(extent(zAll)), padded(extent(xAll)));
  const body: string[] = [];
  for (const j of thinnedRayIndices(run.nRays)) {
    const pts = rayPath(run, j).map(
      ([z, x]) => [xScale.map(z), yScale.map(x)] as [number, number],
    );
    body.push(polyline(pts, { stroke: "#1f4e8c", width: 0.8, opacity: 0.75 }));
  }
  body.push(axes({
    width: WIDTH, height: HEIGHT, margin: MARGIN, xScale, yScale,
    xLabel: "z (w0 units)", yLabel: "x (w0 units)",
    title: `ray trajectories — ${run.scenario}`,
  }));
  return svgDocument(WIDTH, HEIGHT, body.join("\n"));
}

function intensity(front: Front): Array<[number, number]> {
  return Array.from(front.x, (x, j) => [x, front.r[j] ** 2] as [number, number]);
}

function renderIntensityOverlay(run: RunData, zFinal?: number): string {
  const first = run.fronts[0];
  const lastIndex = zFinal === undefined ? run.fronts.length - 1 : nearestFront(run, zFinal);
  const last = run.fronts[lastIndex];
  const initial = intensity(first);
  const final = intensity(last);
  const xDomain = padded(extent([...first.x, ...last.x]));
  const yDomain = padded(extent([0, ...initial.map((p) => p[1]), ...final.map((p) => p[1])]), 0.08);
  const { xScale, yScale } = frame(xDomain, yDomain);
  const toPixels = (pts: Array<[number, number]>) =>
    pts.map(([x, v]) => [xScale.map(x), yScale.map(v)] as [number, number]);
  const body = [
    polyline(toPixels(initial), { stroke: "#1f4e8c", width: 1.5 }),
    polyline(toPixels(final), { stroke: "#b33", width: 1.5, dash: "6 4" }),
    axes({
      width: WIDTH, height: HEIGHT, margin: MARGIN, xScale, yScale,
      xLabel: "x (w0 units)", yLabel: "intensity (arbitrary units)",
      title: `initial (solid) and final (dashed) intensity — ${run.scenario}`,
    }),
  ];
  return svgDocument(WIDTH, HEIGHT, body.join("\n"));
}

function renderWaistOverlay(run: RunData): string {
  const jPlus = launchIndex(run, 1.0);
  const jMinus = launchIndex(run, -1.0);
  const pathPlus = rayPath(run, jPlus);
  const pathMinus = rayPath(run, jMinus);
  // analytic envelope re-evaluated locally at the run's own stations
  const envelope = pathPlus.map(([z]) => [z, waistLine(z, run.eps)] as [number, number]);
  const mirrored = envelope.map(([z, w]) => [z, -w] as [number, number]);

  const zDomain = padded(extent(pathPlus.map((p) => p[0])));
  const xDomain = padded(extent([
    ...pathPlus.map((p) => p[1]),
    ...pathMinus.map((p) => p[1]),
    ...envelope.map((p) => p[1]),
    ...mirrored.map((p) => p[1]),
  ]));
  const { xScale, yScale } = frame(zDomain, xDomain);
  const toPixels = (pts: Array<[number, number]>) =>
    pts.map(([z, x]) => [xScale.map(z), yScale.map(x)] as [number, number]);
  const body = [
    polyline(toPixels(envelope), { stroke: "#222", width: 2.2 }),
    polyline(toPixels(mirrored), { stroke: "#222", width: 2.2 }),
    polyline(toPixels(pathPlus), { stroke: "#b33", width: 1.2, dash: "5 4" }),
    polyline(toPixels(pathMinus), { stroke: "#b33", width: 1.2, dash: "5 4" }),
    axes({
      width: WIDTH, height: HEIGHT, margin: MARGIN, xScale, yScale,
      xLabel: "z (w0 units)", yLabel: "x (w0 units)",
      title: "waist envelope (solid) over the ±1-launched trajectories (dashed)",
    }),
  ];
  return svgDocument(WIDTH, HEIGHT, body.join("\n"));
}
