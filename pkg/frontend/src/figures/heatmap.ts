/**
 * Flow heatmaps: vorticity (signed, diverging ramp) and speed (sequential
 * ramp) of a serialized flow, evaluated on a 256 x 256 grid.
 */

import { join } from "node:path";
import { existsSync } from "node:fs";
import { evaluateFlowGrids } from "../flow.js";
import { readScenarioField } from "../schemas.js";
import { Svg, fmt } from "../svg.js";
import type { RenderOptions } from "./common.js";

export const HEATMAP_GRID = 256;

export function renderHeatmap(inDir: string, _opts: RenderOptions): string {
  const candidates = ["scenario.json", "s.json"];
  const found = candidates.map((n) => join(inDir, n)).find(existsSync);
  if (!found) {
    throw new Error(`${inDir}: no scenario.json with a serialized flow`);
  }
  const field = readScenarioField(found);
  const grids = evaluateFlowGrids(field.components, field.cutoff, HEATMAP_GRID);

  const panel = 300;
  const pad = 30;
  const svg = new Svg(2 * panel + 3 * pad, panel + 2 * pad + 20);
  svg.text(pad + panel / 2, pad - 8, "vorticity", { anchor: "middle", size: 13 });
  svg.text(2 * pad + panel + panel / 2, pad - 8, "speed", { anchor: "middle", size: 13 });

  const vortMax = Math.max(
    1e-12, ...grids.vorticity.map((row) => Math.max(...row.map(Math.abs))));
  drawGrid(svg, grids.vorticity, pad, pad, panel,
    (v) => diverging(v / vortMax));
  const speedMax = Math.max(1e-12, ...grids.speed.map((row) => Math.max(...row)));
  drawGrid(svg, grids.speed, 2 * pad + panel, pad, panel,
    (v) => sequential(v / speedMax));
  return svg.render();
}

function drawGrid(
  svg: Svg,
  grid: number[][],
  x0: number,
  y0: number,
  size: number,
  color: (v: number) => string,
): void {
  const n = grid.length;
  const cell = size / n;
  const rows: string[] = [];
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      // image rows run top-down; grid row 0 is y near 0 at the bottom
      const x = x0 + j * cell;
      const y = y0 + (n - 1 - i) * cell;
      rows.push(
        `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(cell + 0.05)}" ` +
          `height="${fmt(cell + 0.05)}" fill="${color(grid[i][j])}"/>`,
      );
    }
  }
  svg.raw(rows.join("\n"));
  svg.raw(
    `<rect x="${fmt(x0)}" y="${fmt(y0)}" width="${fmt(size)}" ` +
      `height="${fmt(size)}" fill="none" stroke="#222222"/>`,
  );
}

/** blue-white-red ramp for t in [-1, 1] */
function diverging(t: number): string {
  const u = Math.min(1, Math.max(-1, t));
  const r = u >= 0 ? 255 : Math.round(255 * (1 + u));
  const b = u <= 0 ? 255 : Math.round(255 * (1 - u));
  const g = Math.round(255 * (1 - Math.abs(u)));
  return rgb(r, g, b);
}

/** white-to-dark-teal ramp for t in [0, 1] */
function sequential(t: number): string {
  const u = Math.min(1, Math.max(0, t));
  return rgb(
    Math.round(255 - 224 * u),
    Math.round(255 - 144 * u),
    Math.round(255 - 116 * u),
  );
}

function rgb(r: number, g: number, b: number): string {
  return `#${[r, g, b].map((v) => v.toString(16).padStart(2, "0")).join("")}`;
}
