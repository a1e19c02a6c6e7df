/**
 * Misfit figure: per-chain trace of the data-misfit potential (left panel)
 * and its pooled autocorrelation (right panel, read from acf.csv).
 */

import { join } from "node:path";
import { readAcf } from "../schemas.js";
import { STYLE, Svg, drawAxes, extent, linear, plotArea } from "../svg.js";
import { readChainTraces, thin, type RenderOptions } from "./common.js";

export function renderMisfit(inDir: string, _opts: RenderOptions): string {
  const traces = readChainTraces(inDir);
  const acf = readAcf(join(inDir, "acf.csv"));

  const width = 760;
  const height = 300;
  const svg = new Svg(width, height);

  const left = plotArea({ x: 0, y: 0, width: width / 2, height });
  const allPhi = traces.flatMap((t) => t.phi);
  const xScale = linear(
    [0, Math.max(...traces.map((t) => t.step[t.step.length - 1]))],
    [left.x, left.x + left.width],
  );
  const yScale = linear(extent(allPhi), [left.y + left.height, left.y]);
  drawAxes(svg, left, xScale, yScale, {
    title: "misfit potential trace", xLabel: "step", yLabel: "potential",
  });
  traces.forEach((trace, i) => {
    const pts = thin(trace.step.map((s, k) => [s, trace.phi[k]] as const), 2000);
    svg.polyline(
      pts.map((p) => xScale(p[0])),
      pts.map((p) => yScale(p[1])),
      STYLE.palette[i % STYLE.palette.length],
    );
  });

  const right = plotArea({ x: width / 2, y: 0, width: width / 2, height });
  const xAcf = linear([0, acf.lag[acf.lag.length - 1]], [right.x, right.x + right.width]);
  const yAcf = linear(
    [Math.min(0, ...acf.value), 1],
    [right.y + right.height, right.y],
  );
  drawAxes(svg, right, xAcf, yAcf, {
    title: "potential autocorrelation", xLabel: "lag", yLabel: "acf",
  });
  svg.line(right.x, yAcf(0), right.x + right.width, yAcf(0), STYLE.grid);
  svg.polyline(
    acf.lag.map((l) => xAcf(l)),
    acf.value.map((v) => yAcf(v)),
    STYLE.palette[0],
    1.5,
  );
  return svg.render();
}
