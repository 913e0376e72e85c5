#!/usr/bin/env node
/**
 * Figure renderer for experiment result CSVs.
 *
 * Usage:
 *   polylrt-plot plot --csv results.csv --kind separability --out fig.png
 *   polylrt-plot plot --csv results.csv --kind condition --out fig.svg --svg
 *
 * Output is a PNG by default; `--svg` (or an .svg output path) writes the
 * vector figure instead.  Exit code 0 on success, 1 on any input error.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { Resvg } from "@resvg/resvg-js";
import { parseResultsCsv } from "./csv.js";
import { FigureKind, renderFigure } from "./figure.js";

interface CliArgs {
  csv: string;
  kind: FigureKind;
  out: string;
  svg: boolean;
  title?: string;
}

export function parseArgs(argv: string[]): CliArgs {
  if (argv.length === 0 || argv[0] !== "plot") {
    throw new Error("expected the 'plot' subcommand");
  }
  const args: Partial<CliArgs> = { svg: false };
  let i = 1;
  while (i < argv.length) {
    const flag = argv[i];
    switch (flag) {
      case "--csv":
        args.csv = argv[++i];
        break;
      case "--kind": {
        const kind = argv[++i];
        if (kind !== "separability" && kind !== "condition") {
          throw new Error(`--kind must be separability or condition, got '${kind}'`);
        }
        args.kind = kind;
        break;
      }
      case "--out":
        args.out = argv[++i];
        break;
      case "--title":
        args.title = argv[++i];
        break;
      case "--svg":
        args.svg = true;
        break;
      default:
        throw new Error(`unknown argument '${flag}'`);
    }
    i += 1;
  }
  for (const required of ["csv", "kind", "out"] as const) {
    if (args[required] === undefined) {
      throw new Error(`missing required option --${required}`);
    }
  }
  if (args.out!.toLowerCase().endsWith(".svg")) {
    args.svg = true;
  }
  return args as CliArgs;
}

export function runCli(argv: string[]): number {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`polylrt-plot: ${(err as Error).message}\n`);
    process.stderr.write("usage: polylrt-plot plot --csv <path> --kind separability|condition " +
                         "--out <path> [--svg] [--title <text>]\n");
    return 1;
  }
  try {
    const rows = parseResultsCsv(readFileSync(args.csv, "utf-8"));
    const svg = renderFigure(rows, args.kind, { title: args.title });
    if (args.svg) {
      writeFileSync(args.out, svg);
    } else {
      const png = new Resvg(svg, { fitTo: { mode: "zoom", value: 2 } }).render().asPng();
      writeFileSync(args.out, png);
    }
  } catch (err) {
    process.stderr.write(`polylrt-plot: ${(err as Error).message}\n`);
    return 1;
  }
  return 0;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("cli.ts") || entry.endsWith("polylrt-plot")) {
  process.exit(runCli(process.argv.slice(2)));
}
