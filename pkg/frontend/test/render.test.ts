import { createHash } from "node:crypto";
import { existsSync, readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { MAX_PLOTTED_RAYS, render, thinnedRayIndices } from "../src/render.js";

const FIXTURES = join(import.meta.dirname ?? __dirname, ".fixtures");

function hashDir(dir: string): Map<string, string> {
  const out = new Map<string, string>();
  for (const name of readdirSync(dir)) {
    const digest = createHash("sha256").update(readFileSync(join(dir, name))).digest("hex");
    out.set(name, digest);
  }
  return out;
}

function countPolylines(svg: string): number {
  return (svg.match(/<polyline /g) ?? []).length;
}

describe("thinnedRayIndices", () => {
  it("keeps small bundles whole and caps large ones", () => {
    expect(thinnedRayIndices(10)).toHaveLength(10);
    const thinned = thinnedRayIndices(281);
    expect(thinned.length).toBeLessThanOrEqual(MAX_PLOTTED_RAYS);
    expect(thinned[0]).toBe(0);
    expect(thinned.at(-1)).toBe(280);
  });
});

describe("render", () => {
  it("draws at most 64 trajectory polylines and leaves inputs untouched", () => {
    const dir = join(FIXTURES, "two-slit");
    const before = hashDir(dir);
    const out = join(FIXTURES, "two-slit-trajectories.svg");
    const svg = render({ kind: "trajectories", inputDir: dir, outFile: out });
    expect(hashDir(dir)).toEqual(before);
    expect(existsSync(out)).toBe(true);
    expect(svg.startsWith("<?xml")).toBe(true);
    expect(svg).toContain("</svg>");
    expect(countPolylines(svg)).toBeLessThanOrEqual(MAX_PLOTTED_RAYS);
  });

  it("renders the uniform smoke run as parallel horizontal lines", () => {
    const svg = render({
      kind: "trajectories",
      inputDir: join(FIXTURES, "uniform"),
      outFile: join(FIXTURES, "uniform-trajectories.svg"),
    });
    // a straight trajectory maps to constant pixel y along its polyline
    const pointLists = [...svg.matchAll(/points="([^"]+)"/g)].map((m) => m[1]);
    expect(pointLists.length).toBeGreaterThan(10);
    for (const pts of pointLists.slice(0, -1)) {  // last polyline is the frame
      const ys = pts.split(" ").map((p) => Number(p.split(",")[1]));
      expect(Math.max(...ys) - Math.min(...ys)).toBeLessThanOrEqual(0.02);
    }
  });

  it("overlays initial and final intensity with distinct strokes", () => {
    const svg = render({
      kind: "intensity-overlay",
      inputDir: join(FIXTURES, "two-slit"),
      outFile: join(FIXTURES, "two-slit-intensity.svg"),
    });
    expect(countPolylines(svg)).toBe(2);
    expect(svg).toContain("stroke-dasharray");
  });

  it("draws the waist overlay with two analytic envelope branches", () => {
    const svg = render({
      kind: "waist-overlay",
      inputDir: join(FIXTURES, "gaussian"),
      outFile: join(FIXTURES, "gaussian-waist.svg"),
    });
    // two envelope branches plus the two +-1 trajectories
    expect(countPolylines(svg)).toBe(4);
    expect(svg).toContain("waist envelope");
  });

  it("rejects partial runs", () => {
    expect(() => render({
      kind: "trajectories",
      inputDir: join(FIXTURES, "partial"),
      outFile: join(FIXTURES, "never.svg"),
    })).toThrow(/partial/);
    expect(existsSync(join(FIXTURES, "never.svg"))).toBe(false);
  });

  it("rejects incompatible waist overlays", () => {
    expect(() => render({
      kind: "waist-overlay",
      inputDir: join(FIXTURES, "narrow"),
      outFile: join(FIXTURES, "never2.svg"),
    })).toThrow(/incompatible/);
  });
});

describe("cli", () => {
  it("renders through the command surface", () => {
    const out = join(FIXTURES, "cli-gaussian.svg");
    const status = main([
      "render", "--kind", "waist-overlay",
      "--in", join(FIXTURES, "gaussian"), "--out", out,
    ]);
    expect(status).toBe(0);
    expect(existsSync(out)).toBe(true);
  });

  it("reports usage errors", () => {
    expect(main([])).toBe(1);
    expect(main(["render", "--kind", "pie-chart", "--in", "x", "--out", "y"])).toBe(1);
  });

  it("reports data errors", () => {
    expect(main([
      "render", "--kind", "trajectories",
      "--in", join(FIXTURES, "partial"), "--out", join(FIXTURES, "never3.svg"),
    ])).toBe(2);
  });
});
