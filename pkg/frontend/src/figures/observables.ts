/**
 * Observable convergence: relative error of the running mean of a flow
 * observable against its reference value, on log-log axes.
 */

import { join } from "node:path";
import { readObservables } from "../schemas.js";
import { STYLE, Svg, drawAxes, logarithmic, plotArea, positiveExtent } from "../svg.js";
import type { RenderOptions } from "./common.js";

export function renderObservables(inDir: string, _opts: RenderOptions): string {
  const series = readObservables(join(inDir, "observables.csv"));

  const width = 560;
  const height = 400;
  const svg = new Svg(width, height);
  const area = plotArea({ x: 0, y: 0, width, height });

  const xScale = logarithmic(positiveExtent(series.step), [area.x, area.x + area.width]);
  const yScale = logarithmic(positiveExtent(series.relErr), [area.y + area.height, area.y]);
  drawAxes(svg, area, xScale, yScale, {
    title: `running-mean relative error: ${series.name}`,
    xLabel: "samples", yLabel: "relative error", xTicks: 4, yTicks: 4,
  });

  const xs: number[] = [];
  const ys: number[] = [];
  series.step.forEach((s, i) => {
    if (s > 0 && series.relErr[i] > 0) {
      xs.push(xScale(s));
      ys.push(yScale(series.relErr[i]));
    }
  });
  svg.polyline(xs, ys, STYLE.palette[0], 1.5);
  return svg.render();
}
