import { readdirSync, existsSync } from "node:fs";
import { join } from "node:path";
import { SchemaError, readTrace, type Trace } from "../schemas.js";

export interface RenderOptions {
  /** component indices to draw, in the serialized component ordering */
  components: number[];
}

export const DEFAULT_COMPONENTS = [2, 3, 4, 5, 6, 7, 8, 9];

/** every chain_NN trace.csv under a run directory, in chain order */
export function readChainTraces(inDir: string): Trace[] {
  const chains = readdirSync(inDir)
    .filter((name) => /^chain_\d+$/.test(name))
    .sort()
    .map((name) => join(inDir, name, "trace.csv"))
    .filter((path) => existsSync(path));
  if (chains.length === 0) {
    throw new SchemaError(`${inDir}: no chain_*/trace.csv found`);
  }
  return chains.map(readTrace);
}

/** least-squares slope of log(y) against log(x) over positive points */
export function logLogSlope(x: number[], y: number[]): number {
  const lx: number[] = [];
  const ly: number[] = [];
  for (let i = 0; i < x.length; i++) {
    if (x[i] > 0 && y[i] > 0) {
      lx.push(Math.log(x[i]));
      ly.push(Math.log(y[i]));
    }
  }
  const n = lx.length;
  if (n < 2) return NaN;
  const mx = lx.reduce((s, v) => s + v, 0) / n;
  const my = ly.reduce((s, v) => s + v, 0) / n;
  let num = 0;
  let den = 0;
  for (let i = 0; i < n; i++) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) ** 2;
  }
  return num / den;
}

/** thin a series to at most `limit` evenly spaced points (keeps endpoints) */
export function thin<T>(values: T[], limit: number): T[] {
  if (values.length <= limit) return values;
  const out: T[] = [];
  for (let i = 0; i < limit; i++) {
    out.push(values[Math.round((i * (values.length - 1)) / (limit - 1))]);
  }
  return out;
}
