/** Time-vs-energy line plots for one or more traces. */

import { basename } from "node:path";
import { writeFileSync } from "node:fs";

import { renderSvg, type ChartOption } from "./chart.js";
import { readEnergyCsv } from "./csv.js";

export interface EnergyPlotSpec {
  csvPaths: string[];
  outPath: string;
  width?: number;
  height?: number;
}

export function buildEnergyChart(spec: EnergyPlotSpec): { svg: string; option: ChartOption } {
  if (spec.csvPaths.length === 0) {
    throw new Error("need at least one energy CSV");
  }
  const traces = spec.csvPaths.map((path) => ({ path, ...readEnergyCsv(path) }));
  const names = traces.map(({ path }, i) => {
    const stem = basename(path).replace(/\.csv$/, "");
    const dupes = traces.filter((t) => basename(t.path) === basename(path)).length;
    return dupes > 1 ? `${stem} #${i + 1}` : stem;
  });
  const option: ChartOption = {
    animation: false,
    backgroundColor: "#fff",
    legend: { bottom: 0 },
    grid: { left: "10%", right: "5%", top: "8%", bottom: "14%" },
    xAxis: { type: "value", name: "t" },
    yAxis: { type: "value", name: "energy", scale: true },
    series: traces.map((trace, i) => ({
      name: names[i],
      type: "line" as const,
      symbol: "none",
      data: trace.t.map((t, k) => [t, trace.energy[k]]),
    })),
  };
  const svg = renderSvg(option, spec.width ?? 900, spec.height ?? 540);
  return { svg, option };
}

export function plotEnergy(spec: EnergyPlotSpec): void {
  const { svg } = buildEnergyChart(spec);
  writeFileSync(spec.outPath, svg);
}
