#!/usr/bin/env node
/**
 * Figure generation from simulator CSV outputs.
 *
 *   chdisk-figures convergence --csv errors.csv --out fig.svg
 *                              [--columns a,b,...] [--slopes 1,2]
 *   chdisk-figures energy --csv energy.csv[,more.csv] --out fig.svg
 */

import { plotConvergence } from "./convergence.js";
import { plotEnergy } from "./energy.js";

interface Flags {
  csv?: string;
  out?: string;
  columns?: string;
  slopes?: string;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new Error(`expected --flag value pairs, got ${argv.slice(i).join(" ")}`);
    }
    const name = key.slice(2);
    if (!["csv", "out", "columns", "slopes"].includes(name)) {
      throw new Error(`unknown flag ${key}`);
    }
    flags[name as keyof Flags] = value;
  }
  if (!flags.csv || !flags.out) {
    throw new Error("--csv and --out are required");
  }
  return flags;
}

export function main(argv: string[]): number {
  const [mode, ...rest] = argv;
  try {
    if (mode === "convergence") {
      const flags = parseFlags(rest);
      const slopes = plotConvergence({
        csvPath: flags.csv!,
        outPath: flags.out!,
        columns: flags.columns?.split(","),
        slopes: flags.slopes?.split(",").map(Number),
      });
      for (const s of slopes) {
        console.log(`${s.column} tau=${s.tau}: fitted slope ${s.slope.toFixed(4)}`);
      }
      console.log(`wrote ${flags.out}`);
    } else if (mode === "energy") {
      const flags = parseFlags(rest);
      plotEnergy({ csvPaths: flags.csv!.split(","), outPath: flags.out! });
      console.log(`wrote ${flags.out}`);
    } else {
      console.error("usage: chdisk-figures <convergence|energy> --csv <path> --out <path>");
      return 2;
    }
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
