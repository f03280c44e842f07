#!/usr/bin/env node
/**
 * Batch figure renderer for wavetrace run directories.
 *
 * Usage:
 *   wavetrace-figures render --kind <trajectories|intensity-overlay|waist-overlay>
 *                            --in <run-dir> --out <file.svg> [--z-final <value>]
 */

import { pathToFileURL } from "node:url";

import { FigureKind, render } from "./render.js";

const KINDS: FigureKind[] = ["trajectories", "intensity-overlay", "waist-overlay"];

function usage(): string {
  return (
    "usage: wavetrace-figures render --kind <" + KINDS.join("|") + ">" +
    " --in <run-dir> --out <file.svg> [--z-final <value>]"
  );
}

export function main(argv: string[]): number {
  if (argv[0] !== "render") {
    console.error(usage());
    return 1;
  }
  const flags = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      console.error(usage());
      return 1;
    }
    flags.set(key.slice(2), value);
  }
  const kind = flags.get("kind") as FigureKind | undefined;
  const inputDir = flags.get("in");
  const outFile = flags.get("out");
  if (!kind || !KINDS.includes(kind) || !inputDir || !outFile) {
    console.error(usage());
    return 1;
  }
  const zFinalRaw = flags.get("z-final");
  const zFinal = zFinalRaw === undefined ? undefined : Number(zFinalRaw);
  if (zFinal !== undefined && !Number.isFinite(zFinal)) {
    console.error("--z-final must be a number");
    return 1;
  }
  try {
    render({ kind, inputDir, outFile, zFinal });
  } catch (err) {
    console.error(`render failed: ${err instanceof Error ? err.message : String(err)}`);
    return 2;
  }
  console.log(`wrote ${outFile}`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
