/**
 * Corner grid: 1D marginal histograms on the diagonal, 2D pair densities
 * below it.  Inputs are the diagnostics outputs hist1d_<c>.csv and
 * hist2d_<ci>_<cj>.csv; pair panels are drawn only for pairs the
 * diagnostics emitted.
 */

import { existsSync } from "node:fs";
import { join } from "node:path";
import { SchemaError, readHist1d, readHist2d, type Hist1D } from "../schemas.js";
import { STYLE, Svg, drawAxes, linear, plotArea, type Panel } from "../svg.js";
import type { RenderOptions } from "./common.js";

export function renderCorner(inDir: string, opts: RenderOptions): string {
  const comps = opts.components;
  const hists = new Map<number, Hist1D>();
  for (const c of comps) {
    const path = join(inDir, `hist1d_${c}.csv`);
    if (!existsSync(path)) {
      throw new SchemaError(`${path}: missing marginal histogram`);
    }
    hists.set(c, readHist1d(path));
  }

  const cell = 190;
  const m = comps.length;
  const svg = new Svg(m * cell, m * cell);

  for (let row = 0; row < m; row++) {
    for (let col = 0; col <= row; col++) {
      const panel: Panel = { x: col * cell, y: row * cell, width: cell, height: cell };
      if (row === col) {
        drawMarginal(svg, panel, comps[row], hists.get(comps[row])!);
      } else {
        const path = join(inDir, `hist2d_${comps[col]}_${comps[row]}.csv`);
        if (existsSync(path)) {
          drawPair(svg, panel, comps[col], comps[row], path);
        }
      }
    }
  }
  return svg.render();
}

function drawMarginal(svg: Svg, panel: Panel, c: number, hist: Hist1D): void {
  const area = plotArea(panel);
  const xScale = linear(
    [hist.edges[0], hist.edges[hist.edges.length - 1]],
    [area.x, area.x + area.width],
  );
  const yScale = linear([0, Math.max(...hist.density)], [area.y + area.height, area.y]);
  drawAxes(svg, area, xScale, yScale, { title: `v_${c}`, xTicks: 4, yTicks: 3 });
  hist.density.forEach((d, i) => {
    const x0 = xScale(hist.edges[i]);
    const x1 = xScale(hist.edges[i + 1]);
    svg.rect(x0, yScale(d), x1 - x0, yScale(0) - yScale(d),
      STYLE.histFill, STYLE.histStroke);
  });
}

function drawPair(svg: Svg, panel: Panel, cx: number, cy: number, path: string): void {
  const hist = readHist2d(path);
  const area = plotArea(panel);
  const xScale = linear(
    [hist.edgesX[0], hist.edgesX[hist.edgesX.length - 1]],
    [area.x, area.x + area.width],
  );
  const yScale = linear(
    [hist.edgesY[0], hist.edgesY[hist.edgesY.length - 1]],
    [area.y + area.height, area.y],
  );
  drawAxes(svg, area, xScale, yScale, {
    title: `v_${cx} vs v_${cy}`, xTicks: 4, yTicks: 3,
  });
  const peak = Math.max(...hist.density.map((row) => Math.max(...row)));
  if (peak <= 0) return;
  hist.density.forEach((rowDensity, i) => {
    rowDensity.forEach((d, j) => {
      if (d <= 0) return;
      const x0 = xScale(hist.edgesX[i]);
      const x1 = xScale(hist.edgesX[i + 1]);
      const y0 = yScale(hist.edgesY[j]);
      const y1 = yScale(hist.edgesY[j + 1]);
      svg.rect(x0, y1, x1 - x0, y0 - y1, shade(d / peak));
    });
  });
}

/** white-to-ink shade, fixed ramp */
function shade(t: number): string {
  const level = Math.round(255 - 215 * Math.min(1, Math.max(0, t)));
  const hex = level.toString(16).padStart(2, "0");
  return `#${hex}${hex}ff`;
}
