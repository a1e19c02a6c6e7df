/**
 * Component-trace figure: one panel per selected flow component, every
 * chain overlaid, sample index on the x axis.
 */

import { SchemaError } from "../schemas.js";
import { STYLE, Svg, drawAxes, extent, linear, plotArea } from "../svg.js";
import { readChainTraces, thin, type RenderOptions } from "./common.js";

export function renderComponentTraces(inDir: string, opts: RenderOptions): string {
  const traces = readChainTraces(inDir);
  const dim = traces[0].components.length;
  for (const c of opts.components) {
    if (c < 0 || c >= dim) {
      throw new SchemaError(`component ${c} out of range; traces have ${dim}`);
    }
  }

  const columns = 2;
  const rows = Math.ceil(opts.components.length / columns);
  const panelW = 380;
  const panelH = 190;
  const svg = new Svg(columns * panelW, rows * panelH);

  opts.components.forEach((c, i) => {
    const area = plotArea({
      x: (i % columns) * panelW,
      y: Math.floor(i / columns) * panelH,
      width: panelW,
      height: panelH,
    });
    const series = traces.map((t) => t.components[c]);
    const xScale = linear(
      [0, Math.max(...traces.map((t) => t.step[t.step.length - 1]))],
      [area.x, area.x + area.width],
    );
    const yScale = linear(extent(series.flat()), [area.y + area.height, area.y]);
    drawAxes(svg, area, xScale, yScale, {
      title: `component v_${c}`, xLabel: "step",
    });
    svg.line(area.x, yScale(0), area.x + area.width, yScale(0), STYLE.grid);
    traces.forEach((trace, k) => {
      const pts = thin(
        trace.step.map((s, j) => [s, trace.components[c][j]] as const),
        2000,
      );
      svg.polyline(
        pts.map((p) => xScale(p[0])),
        pts.map((p) => yScale(p[1])),
        STYLE.palette[k % STYLE.palette.length],
      );
    });
  });
  return svg.render();
}
