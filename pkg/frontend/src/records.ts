import { readFileSync } from "node:fs";
import { join } from "node:path";

/** One sampled front: parallel per-ray arrays. */
export interface Front {
  t: number;
  x: Float64Array;
  z: Float64Array;
  r: Float64Array;
}

export interface RunData {
  dir: string;
  configHash: string;
  scenario: string;
  eps: number;
  partial: boolean;
  nRays: number;
  fronts: Front[];
  launchX: Float64Array;
}

const TRAJECTORY_COLUMNS = 8; // t, ray_id, x, z, p_x, p_z, R, G

/** Load a complete run directory; rejects partial (aborted) runs. */
export function loadRun(dir: string): RunData {
  const meta = JSON.parse(readFileSync(join(dir, "run_metadata.json"), "utf8"));
  if (meta.partial) {
    throw new Error(`${dir}: run is flagged partial; refusing to render`);
  }
  const eps = Number(meta.scenario?.eps);
  if (!Number.isFinite(eps) || eps <= 0) {
    throw new Error(`${dir}: run metadata lacks a usable eps`);
  }

  const rows = parseCsv(readFileSync(join(dir, "trajectories.csv"), "utf8"));
  if (rows.length === 0) {
    throw new Error(`${dir}: trajectories.csv holds no data rows`);
  }
  let nRays = 0;
  for (const row of rows) nRays = Math.max(nRays, row[1] + 1);
  if (rows.length % nRays !== 0) {
    throw new Error(`${dir}: trajectories.csv is not a whole number of fronts`);
  }

  const fronts: Front[] = [];
  for (let start = 0; start < rows.length; start += nRays) {
    const x = new Float64Array(nRays);
    const z = new Float64Array(nRays);
    const r = new Float64Array(nRays);
    for (let j = 0; j < nRays; j++) {
      const row = rows[start + j];
      if (row[1] !== j) {
        throw new Error(`${dir}: ray ids out of order at data row ${start + j}`);
      }
      x[j] = row[2];
      z[j] = row[3];
      r[j] = row[6];
    }
    fronts.push({ t: rows[start][0], x, z, r });
  }

  return {
    dir,
    configHash: String(meta.config_hash ?? ""),
    scenario: String(meta.scenario?.scenario ?? "custom"),
    eps,
    partial: false,
    nRays,
    fronts,
    launchX: fronts[0].x,
  };
}

function parseCsv(text: string): number[][] {
  const rows: number[][] = [];
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (trimmed === "" || trimmed.startsWith("#")) continue;
    const parts = trimmed.split(",");
    if (parts.length !== TRAJECTORY_COLUMNS) {
      throw new Error(`trajectories.csv: expected ${TRAJECTORY_COLUMNS} columns, got ${parts.length}`);
    }
    rows.push(parts.map(Number));
  }
  return rows;
}

/** Index of the front whose mean z is nearest the requested station. */
export function nearestFront(run: RunData, zTarget: number): number {
  let best = 0;
  let bestDist = Infinity;
  run.fronts.forEach((front, i) => {
    let mean = 0;
    for (const v of front.z) mean += v;
    mean /= front.z.length;
    const dist = Math.abs(mean - zTarget);
    if (dist < bestDist) {
      bestDist = dist;
      best = i;
    }
  });
  return best;
}

/** Ray launched nearest x0; throws if none lies within half a spacing. */
export function launchIndex(run: RunData, x0: number): number {
  const spacing = run.launchX[1] - run.launchX[0];
  let best = 0;
  for (let j = 1; j < run.nRays; j++) {
    if (Math.abs(run.launchX[j] - x0) < Math.abs(run.launchX[best] - x0)) best = j;
  }
  if (Math.abs(run.launchX[best] - x0) > spacing / 2 + 1e-12) {
    throw new Error(`no ray launched at x = ${x0}; run is incompatible with this figure`);
  }
  return best;
}
