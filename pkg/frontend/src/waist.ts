/**
 * Analytic Gaussian-beam envelope half-width at distance z, in beam
 * half-width units: sqrt(1 + (eps * z / pi)^2).
 *
 * Must agree with the simulator's own waist values to 1e-12 on shared
 * stations (covered by test/waist.test.ts against the `waist-samples`
 * metric of the primary CLI).
 */
export function waistLine(z: number, eps: number): number {
  const s = (eps * z) / Math.PI;
  return Math.sqrt(1 + s * s);
}
