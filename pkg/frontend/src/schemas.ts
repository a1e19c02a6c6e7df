/**
 * Typed readers for the CSV/JSON files the sampler CLI emits.  Every reader
 * validates the header and cell values and reports the offending column by
 * name, so schema drift fails loudly instead of producing a wrong figure.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";
import { z } from "zod";

export class SchemaError extends Error {}

function parseCsv(path: string): { header: string[]; rows: string[][] } {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`${path}: ${parsed.errors[0].message}`);
  }
  const data = parsed.data;
  if (data.length === 0) {
    throw new SchemaError(`${path}: file is empty`);
  }
  return { header: data[0], rows: data.slice(1) };
}

const finite = z.number().finite();

function toNumber(path: string, column: string, raw: string, row: number): number {
  const value = Number(raw);
  const checked = finite.safeParse(value);
  if (raw.trim() === "" || !checked.success) {
    throw new SchemaError(
      `${path}: column '${column}' row ${row} is not a finite number: '${raw}'`,
    );
  }
  return checked.data;
}

/**
 * Read a CSV whose header must start with `fixed` columns; any further
 * columns must match `restPattern` when given.  Returns one record per row
 * with every cell parsed as a finite number.
 */
export function readTable(
  path: string,
  fixed: string[],
  restPattern?: RegExp,
): { columns: string[]; rows: number[][] } {
  const { header, rows } = parseCsv(path);
  fixed.forEach((name, i) => {
    if (header[i] !== name) {
      throw new SchemaError(
        `${path}: expected column '${name}' at position ${i}, found '${header[i] ?? "<missing>"}'`,
      );
    }
  });
  for (const extra of header.slice(fixed.length)) {
    if (!restPattern) {
      throw new SchemaError(`${path}: unexpected column '${extra}'`);
    }
    if (!restPattern.test(extra)) {
      throw new SchemaError(
        `${path}: column '${extra}' does not match ${restPattern}`,
      );
    }
  }
  if (rows.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
  const numeric = rows.map((cells, r) => {
    if (cells.length !== header.length) {
      throw new SchemaError(
        `${path}: row ${r + 1} has ${cells.length} cells, header has ${header.length}`,
      );
    }
    return cells.map((cell, i) => toNumber(path, header[i], cell, r + 1));
  });
  return { columns: header, rows: numeric };
}

export interface Trace {
  step: number[];
  phi: number[];
  accept: number[];
  /** components[c] is the series of component c */
  components: number[][];
}

/** chain trace: step, phi, accept, c0, c1, ... */
export function readTrace(path: string): Trace {
  const { columns, rows } = readTable(path, ["step", "phi", "accept"], /^c\d+$/);
  const d = columns.length - 3;
  return {
    step: rows.map((r) => r[0]),
    phi: rows.map((r) => r[1]),
    accept: rows.map((r) => r[2]),
    components: Array.from({ length: d }, (_, c) => rows.map((r) => r[3 + c])),
  };
}

/** autocorrelation: lag, value */
export function readAcf(path: string): { lag: number[]; value: number[] } {
  const { rows } = readTable(path, ["lag", "value"]);
  return { lag: rows.map((r) => r[0]), value: rows.map((r) => r[1]) };
}

export interface Hist1D {
  edges: number[];
  density: number[];
}

/** marginal histogram: edge_lo, edge_hi, density */
export function readHist1d(path: string): Hist1D {
  const { rows } = readTable(path, ["edge_lo", "edge_hi", "density"]);
  const edges = rows.map((r) => r[0]);
  edges.push(rows[rows.length - 1][1]);
  return { edges, density: rows.map((r) => r[2]) };
}

export interface Hist2D {
  edgesX: number[];
  edgesY: number[];
  /** density[i][j] over x-bin i, y-bin j */
  density: number[][];
}

/** pair histogram: x_lo, x_hi, y_lo, y_hi, density (row-major over x, y) */
export function readHist2d(path: string): Hist2D {
  const { rows } = readTable(path, ["x_lo", "x_hi", "y_lo", "y_hi", "density"]);
  const edgesX = [...new Set(rows.map((r) => r[0]))].sort((a, b) => a - b);
  const edgesY = [...new Set(rows.map((r) => r[2]))].sort((a, b) => a - b);
  const nx = edgesX.length;
  const ny = edgesY.length;
  if (rows.length !== nx * ny) {
    throw new SchemaError(
      `${path}: ${rows.length} rows do not form a ${nx} x ${ny} bin grid`,
    );
  }
  edgesX.push(rows[rows.length - 1][1]);
  edgesY.push(rows[rows.length - 1][3]);
  const density = Array.from({ length: nx }, () => new Array<number>(ny).fill(0));
  rows.forEach((r, k) => {
    density[Math.floor(k / ny)][k % ny] = r[4];
  });
  return { edgesX, edgesY, density };
}

export interface TvEvolution {
  step: number[];
  /** per component label (e.g. 2 for column tv_c2) */
  series: Map<number, number[]>;
}

/** total-variation evolution: step, tv_c<i>, ... */
export function readTvEvolution(path: string): TvEvolution {
  const { columns, rows } = readTable(path, ["step"], /^tv_c\d+$/);
  const series = new Map<number, number[]>();
  columns.slice(1).forEach((name, i) => {
    series.set(Number(name.slice(4)), rows.map((r) => r[1 + i]));
  });
  if (series.size === 0) {
    throw new SchemaError(`${path}: no tv_c<i> columns`);
  }
  return { step: rows.map((r) => r[0]), series };
}

export interface ObservableSeries {
  step: number[];
  name: string;
  value: number[];
  cma: number[];
  relErr: number[];
}

/** observable series: step, name, value, cma, rel_err */
export function readObservables(path: string): ObservableSeries {
  const { header, rows } = parseCsv(path);
  const expected = ["step", "name", "value", "cma", "rel_err"];
  expected.forEach((name, i) => {
    if (header[i] !== name) {
      throw new SchemaError(
        `${path}: expected column '${name}' at position ${i}, found '${header[i] ?? "<missing>"}'`,
      );
    }
  });
  if (rows.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
  return {
    step: rows.map((r, i) => toNumber(path, "step", r[0], i + 1)),
    name: rows[0][1],
    value: rows.map((r, i) => toNumber(path, "value", r[2], i + 1)),
    cma: rows.map((r, i) => toNumber(path, "cma", r[3], i + 1)),
    relErr: rows.map((r, i) => toNumber(path, "rel_err", r[4], i + 1)),
  };
}

const flowFieldSchema = z.object({
  cutoff: finite.positive(),
  components: z.array(finite),
});

const scenarioSchema = z.object({
  name: z.string(),
  true_field: flowFieldSchema,
});

export interface FlowField {
  cutoff: number;
  components: number[];
}

/** scenario JSON: uses the serialized true-field component vector */
export function readScenarioField(path: string): FlowField {
  const raw: unknown = JSON.parse(readFileSync(path, "utf8"));
  const result = scenarioSchema.safeParse(raw);
  if (!result.success) {
    const issue = result.error.issues[0];
    throw new SchemaError(
      `${path}: ${issue.path.join(".") || "<root>"}: ${issue.message}`,
    );
  }
  return result.data.true_field;
}
