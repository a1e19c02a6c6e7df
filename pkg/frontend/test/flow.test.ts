import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { evaluateFlowGrids, halfLattice } from "../src/flow.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

describe("half lattice", () => {
  it("orders representatives by norm, then lexicographically", () => {
    const reps = halfLattice(1);
    expect(reps).toEqual([
      { kx: 0, ky: 1 },
      { kx: 1, ky: 0 },
    ]);
    expect(halfLattice(2).map((k) => [k.kx, k.ky])).toEqual([
      [0, 1], [1, 0], [-1, 1], [1, 1], [0, 2], [2, 0],
    ]);
  });
});

describe("flow grid evaluation", () => {
  const fixture = JSON.parse(
    readFileSync(join(FIXTURES, "flow_grids.json"), "utf8"),
  ) as {
    cutoff: number;
    components: number[];
    n: number;
    vorticity: number[][];
    speed: number[][];
  };

  it("matches the sampler-emitted vorticity and speed grids", () => {
    const grids = evaluateFlowGrids(fixture.components, fixture.cutoff, fixture.n);
    for (let i = 0; i < fixture.n; i++) {
      for (let j = 0; j < fixture.n; j++) {
        expect(grids.vorticity[i][j]).toBeCloseTo(fixture.vorticity[i][j], 9);
        expect(grids.speed[i][j]).toBeCloseTo(fixture.speed[i][j], 9);
      }
    }
  });

  it("rejects a component vector of the wrong length", () => {
    expect(() => evaluateFlowGrids([0, 0, 1], 1, 4)).toThrow(/length/);
  });
});
