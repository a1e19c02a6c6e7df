/**
 * Total-variation evolution on log-log axes, one curve per component,
 * annotated with each curve's least-squares log-log slope.
 */

import { join } from "node:path";
import { readTvEvolution } from "../schemas.js";
import { STYLE, Svg, drawAxes, logarithmic, plotArea, positiveExtent } from "../svg.js";
import { logLogSlope, type RenderOptions } from "./common.js";

export function renderTvCurves(inDir: string, opts: RenderOptions): string {
  const tv = readTvEvolution(join(inDir, "tv_evolution.csv"));
  const selected = opts.components.filter((c) => tv.series.has(c));
  const comps = selected.length > 0 ? selected : [...tv.series.keys()].sort((a, b) => a - b);

  const width = 560;
  const height = 420;
  const svg = new Svg(width, height);
  const area = plotArea({ x: 0, y: 0, width: width - 150, height });

  const allTv = comps.flatMap((c) => tv.series.get(c)!);
  const xScale = logarithmic(positiveExtent(tv.step), [area.x, area.x + area.width]);
  const yScale = logarithmic(positiveExtent(allTv), [area.y + area.height, area.y]);
  drawAxes(svg, area, xScale, yScale, {
    title: "total variation vs pooled samples",
    xLabel: "samples", yLabel: "total variation", xTicks: 4, yTicks: 4,
  });

  comps.forEach((c, i) => {
    const values = tv.series.get(c)!;
    const color = STYLE.palette[i % STYLE.palette.length];
    const xs: number[] = [];
    const ys: number[] = [];
    tv.step.forEach((s, k) => {
      if (s > 0 && values[k] > 0) {
        xs.push(xScale(s));
        ys.push(yScale(values[k]));
      }
    });
    svg.polyline(xs, ys, color, 1.5);
    const slope = logLogSlope(tv.step, values);
    svg.text(area.x + area.width + 12, area.y + 14 + 16 * i,
      `v_${c}: slope ${slope.toFixed(2)}`, { size: 11 });
    svg.line(area.x + area.width + 2, area.y + 10 + 16 * i,
      area.x + area.width + 10, area.y + 10 + 16 * i, color, 2);
  });
  return svg.render();
}
