/**
 * Minimal deterministic SVG assembly: fixed styles, fixed number
 * formatting, no timestamps — identical inputs yield byte-identical files.
 */

import { scaleLinear, scaleLog, type ScaleContinuousNumeric } from "d3-scale";

export const STYLE = {
  background: "#ffffff",
  axis: "#222222",
  grid: "#dddddd",
  text: "#222222",
  fontFamily: "Helvetica, Arial, sans-serif",
  fontSize: 11,
  titleSize: 13,
  /** fixed series palette */
  palette: ["#1f6f8b", "#c2571a", "#3d8361", "#7a4e9e", "#a8201a",
    "#6b6b6b", "#1a659e", "#99621e"],
  histFill: "#86b3c7",
  histStroke: "#1f6f8b",
} as const;

/** fixed-precision coordinate/value formatting keeps output byte-stable */
export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  const s = x.toPrecision(6);
  return s.includes("e") ? s : String(Number(s));
}

export type Scale = ScaleContinuousNumeric<number, number>;

export function linear(domain: [number, number], range: [number, number]): Scale {
  return scaleLinear().domain(domain).range(range);
}

export function logarithmic(domain: [number, number], range: [number, number]): Scale {
  return scaleLog().domain(domain).range(range);
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  return [lo, hi];
}

/** positive values only, for log-scaled axes */
export function positiveExtent(values: number[]): [number, number] {
  const pos = values.filter((v) => v > 0);
  if (pos.length === 0) return [1e-3, 1];
  const [lo, hi] = extent(pos);
  return lo === hi ? [lo / 2, hi * 2] : [lo, hi];
}

export class Svg {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="${STYLE.fontFamily}">`,
      `<rect width="${width}" height="${height}" fill="${STYLE.background}"/>`,
    );
  }

  raw(element: string): void {
    this.parts.push(element);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, stroke = "none"): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(Math.max(w, 0))}" ` +
        `height="${fmt(Math.max(h, 0))}" fill="${fill}" stroke="${stroke}"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  polyline(xs: number[], ys: number[], stroke: string, width = 1): void {
    const pts = xs.map((x, i) => `${fmt(x)},${fmt(ys[i])}`).join(" ");
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  text(x: number, y: number, content: string, opts: {
    size?: number; anchor?: "start" | "middle" | "end"; rotate?: number;
  } = {}): void {
    const size = opts.size ?? STYLE.fontSize;
    const anchor = opts.anchor ?? "start";
    const transform = opts.rotate
      ? ` transform="rotate(${opts.rotate} ${fmt(x)} ${fmt(y)})"`
      : "";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" fill="${STYLE.text}" ` +
        `text-anchor="${anchor}"${transform}>${escapeXml(content)}</text>`,
    );
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface Panel {
  x: number;
  y: number;
  width: number;
  height: number;
}

/** inner drawing area of a panel after fixed margins */
export function plotArea(panel: Panel): Panel {
  const margin = { left: 46, right: 10, top: 24, bottom: 34 };
  return {
    x: panel.x + margin.left,
    y: panel.y + margin.top,
    width: panel.width - margin.left - margin.right,
    height: panel.height - margin.top - margin.bottom,
  };
}

export function drawAxes(
  svg: Svg,
  area: Panel,
  xScale: Scale,
  yScale: Scale,
  opts: { title?: string; xLabel?: string; yLabel?: string; xTicks?: number; yTicks?: number } = {},
): void {
  const x0 = area.x;
  const y0 = area.y + area.height;
  svg.line(x0, area.y, x0, y0, STYLE.axis);
  svg.line(x0, y0, area.x + area.width, y0, STYLE.axis);
  for (const t of xScale.ticks(opts.xTicks ?? 5)) {
    const px = xScale(t);
    svg.line(px, y0, px, y0 + 4, STYLE.axis);
    svg.text(px, y0 + 16, tickLabel(t), { anchor: "middle" });
  }
  for (const t of yScale.ticks(opts.yTicks ?? 5)) {
    const py = yScale(t);
    svg.line(x0 - 4, py, x0, py, STYLE.axis);
    svg.text(x0 - 6, py + 4, tickLabel(t), { anchor: "end" });
  }
  if (opts.title) {
    svg.text(area.x + area.width / 2, area.y - 8, opts.title, {
      anchor: "middle", size: STYLE.titleSize,
    });
  }
  if (opts.xLabel) {
    svg.text(area.x + area.width / 2, y0 + 30, opts.xLabel, { anchor: "middle" });
  }
  if (opts.yLabel) {
    svg.text(area.x - 36, area.y + area.height / 2, opts.yLabel, {
      anchor: "middle", rotate: -90,
    });
  }
}

function tickLabel(t: number): string {
  const abs = Math.abs(t);
  if (abs !== 0 && (abs >= 1e4 || abs < 1e-3)) return t.toExponential(0);
  return fmt(t);
}
