#!/usr/bin/env node
/**
 * render <figure-kind> --in <dir> --out <file> [--components 2..9]
 *
 * Reads sampler/diagnostics CSV and JSON outputs from --in and writes one
 * deterministic SVG figure.  The output file is written only after the
 * figure rendered completely, so a failed run never leaves a partial file.
 */

import { writeFileSync } from "node:fs";
import yargs from "yargs";
import { FIGURE_KINDS } from "./figures/index.js";
import { SchemaError } from "./schemas.js";

export function parseComponents(text: string): number[] {
  const range = text.match(/^(\d+)\.\.(\d+)$/);
  if (range) {
    const lo = Number(range[1]);
    const hi = Number(range[2]);
    if (hi < lo) throw new Error(`empty component range '${text}'`);
    return Array.from({ length: hi - lo + 1 }, (_, i) => lo + i);
  }
  if (/^\d+(,\d+)*$/.test(text)) {
    return text.split(",").map(Number);
  }
  throw new Error(`components must be 'lo..hi' or a comma list, got '${text}'`);
}

export function runRender(kind: string, inDir: string, outFile: string,
  components: number[]): void {
  const renderer = FIGURE_KINDS[kind];
  if (!renderer) {
    throw new Error(
      `unknown figure kind '${kind}'; expected one of ${Object.keys(FIGURE_KINDS).join(", ")}`,
    );
  }
  const svg = renderer(inDir, { components });
  writeFileSync(outFile, svg);
}

export function main(argv: string[]): number {
  const parser = yargs(argv)
    .command("render <kind>", "render one figure from CSV/JSON outputs",
      (y) => y
        .positional("kind", {
          type: "string",
          demandOption: true,
          choices: Object.keys(FIGURE_KINDS),
        })
        .option("in", { type: "string", demandOption: true, describe: "input directory" })
        .option("out", { type: "string", demandOption: true, describe: "output SVG file" })
        .option("components", {
          type: "string",
          default: "2..9",
          describe: "component selection, e.g. 2..9 or 2,4,6",
        }))
    .demandCommand(1)
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new Error(msg);
    });
  try {
    const args = parser.parseSync();
    runRender(String(args.kind), String(args.in), String(args.out),
      parseComponents(String(args.components ?? "2..9")));
    return 0;
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    console.error(`error: ${message}`);
    return err instanceof SchemaError ? 2 : 1;
  }
}
