import { renderComponentTraces } from "./componentTraces.js";
import { renderCorner } from "./corner.js";
import { renderHeatmap } from "./heatmap.js";
import { renderMisfit } from "./misfit.js";
import { renderObservables } from "./observables.js";
import { renderTvCurves } from "./tvCurves.js";
import type { RenderOptions } from "./common.js";

export type Renderer = (inDir: string, opts: RenderOptions) => string;

export const FIGURE_KINDS: Record<string, Renderer> = {
  misfit: renderMisfit,
  components: renderComponentTraces,
  corner: renderCorner,
  tv: renderTvCurves,
  observables: renderObservables,
  heatmap: renderHeatmap,
};

export { DEFAULT_COMPONENTS, logLogSlope } from "./common.js";
export type { RenderOptions } from "./common.js";
