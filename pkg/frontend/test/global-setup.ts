/**
 * Generates fixture run directories by driving the simulator CLI, the same
 * surface production users feed to the renderer.
 */

import { execFileSync } from "node:child_process";
import { mkdirSync, rmSync, writeFileSync, readFileSync } from "node:fs";
import { join } from "node:path";

export const FIXTURES = join(import.meta.dirname ?? __dirname, ".fixtures");

const GAUSSIAN = `
scenario: gaussian
n_steps: 600
output_every: 30
`;

const TWO_SLIT = `
scenario: two-slit
n_rays: 141
n_steps: 600
output_every: 60
`;

const UNIFORM_SMOKE = `
scenario: custom
profile:
  - {center: 0.0, half_width: 1.0e6, weight: 1.0}
span: 3.0
n_rays: 85
n_steps: 120
output_every: 30
`;

const NARROW = `
scenario: custom
profile:
  - {center: 0.0, half_width: 1.0e6, weight: 1.0}
span: 0.5
n_rays: 85
n_steps: 40
output_every: 20
`;

function simulate(name: string, document: string) {
  const configPath = join(FIXTURES, `${name}.yaml`);
  writeFileSync(configPath, document);
  execFileSync("python3", ["-m", "wavetrace", "run", configPath,
    "--out", join(FIXTURES, name)], { stdio: "pipe" });
}

export default function setup() {
  rmSync(FIXTURES, { recursive: true, force: true });
  mkdirSync(FIXTURES, { recursive: true });
  simulate("gaussian", GAUSSIAN);
  simulate("two-slit", TWO_SLIT);
  simulate("uniform", UNIFORM_SMOKE);
  simulate("narrow", NARROW);

  // a doctored copy flagged partial, for the refusal path
  const partialDir = join(FIXTURES, "partial");
  mkdirSync(partialDir, { recursive: true });
  for (const file of ["trajectories.csv", "intensity.csv", "metrics.json"]) {
    writeFileSync(join(partialDir, file), readFileSync(join(FIXTURES, "uniform", file)));
  }
  const meta = JSON.parse(readFileSync(join(FIXTURES, "uniform", "run_metadata.json"), "utf8"));
  meta.partial = true;
  writeFileSync(join(partialDir, "run_metadata.json"), JSON.stringify(meta));
}
