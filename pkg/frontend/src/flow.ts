/**
 * Evaluation of a serialized divergence-free flow on a pixel grid.
 *
 * This is the one place the figure pipeline re-implements math instead of
 * reading it from a CSV, because heatmaps need the field on a dense grid.
 * The conventions mirror the sampler's serialization exactly (and are
 * cross-checked against a sampler-emitted fixture in the tests):
 *
 *  - components[0..1] are the constant mean flow (m_x, m_y);
 *  - each further pair (a, b) belongs to one representative wave vector k
 *    from the half lattice {k_y > 0} union {k_y = 0, k_x > 0} with
 *    |k| <= cutoff, ordered by (|k|, k_x, k_y);
 *  - the pair contributes u_k (a cos(2 pi k.x) + b sin(2 pi k.x)) with
 *    direction u_k = (-k_y, k_x)/|k|, so the field is divergence-free;
 *  - the scalar vorticity of that term is
 *    2 pi |k| (b cos(2 pi k.x) - a sin(2 pi k.x)).
 */

export interface WaveVector {
  kx: number;
  ky: number;
}

export function halfLattice(cutoff: number): WaveVector[] {
  const m = Math.floor(cutoff);
  const reps: WaveVector[] = [];
  for (let kx = -m; kx <= m; kx++) {
    for (let ky = -m; ky <= m; ky++) {
      if (!(ky > 0 || (ky === 0 && kx > 0))) continue;
      if (Math.hypot(kx, ky) > cutoff) continue;
      reps.push({ kx, ky });
    }
  }
  reps.sort((p, q) =>
    Math.hypot(p.kx, p.ky) - Math.hypot(q.kx, q.ky)
    || p.kx - q.kx
    || p.ky - q.ky);
  return reps;
}

export interface FlowGrids {
  /** grid[i][j] at x = (j + 0.5)/n, y = (i + 0.5)/n; row 0 is y near 0 */
  vorticity: number[][];
  speed: number[][];
}

export function evaluateFlowGrids(
  components: number[],
  cutoff: number,
  n: number,
): FlowGrids {
  const reps = halfLattice(cutoff);
  if (components.length !== 2 + 2 * reps.length) {
    throw new Error(
      `component vector has length ${components.length}, ` +
        `cutoff ${cutoff} requires ${2 + 2 * reps.length}`,
    );
  }
  const vorticity: number[][] = [];
  const speed: number[][] = [];
  for (let i = 0; i < n; i++) {
    const y = (i + 0.5) / n;
    const vortRow = new Array<number>(n);
    const speedRow = new Array<number>(n);
    for (let j = 0; j < n; j++) {
      const x = (j + 0.5) / n;
      let vx = components[0];
      let vy = components[1];
      let omega = 0;
      for (let r = 0; r < reps.length; r++) {
        const { kx, ky } = reps[r];
        const norm = Math.hypot(kx, ky);
        const a = components[2 + 2 * r];
        const b = components[3 + 2 * r];
        const phase = 2 * Math.PI * (kx * x + ky * y);
        const amp = a * Math.cos(phase) + b * Math.sin(phase);
        vx += (-ky / norm) * amp;
        vy += (kx / norm) * amp;
        omega += 2 * Math.PI * norm
          * (b * Math.cos(phase) - a * Math.sin(phase));
      }
      vortRow[j] = omega;
      speedRow[j] = Math.hypot(vx, vy);
    }
    vorticity.push(vortRow);
    speed.push(speedRow);
  }
  return { vorticity, speed };
}
