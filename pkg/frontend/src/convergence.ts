/** Log-log spatial-convergence figures with reference-slope guides. */

import { writeFileSync } from "node:fs";

import { renderSvg, type ChartOption, type LineSeriesOption } from "./chart.js";
import { readErrorsCsv, type ErrorRow } from "./csv.js";
import { leastSquaresSlope } from "./slopes.js";

export interface PlotSpec {
  csvPath: string;
  outPath: string;
  /** Error columns to draw; defaults to every column in the CSV header. */
  columns?: string[];
  /** Reference slopes to draw, anchored at the coarsest data point. */
  slopes?: number[];
  width?: number;
  height?: number;
}

export interface FittedSlope {
  tau: number;
  column: string;
  slope: number;
}

interface Panel {
  title: string;
  match: (column: string) => boolean;
}

const PANELS: Panel[] = [
  { title: "L2 errors", match: (c) => c.includes("_L2_") },
  { title: "H1 errors", match: (c) => c.includes("_H1_") },
];

function seriesFor(
  rows: ErrorRow[],
  columns: string[],
  axisIndex: number,
): { series: LineSeriesOption[]; fitted: FittedSlope[] } {
  const taus = [...new Set(rows.map((r) => r.tau))].sort((a, b) => b - a);
  const series: LineSeriesOption[] = [];
  const fitted: FittedSlope[] = [];
  for (const column of columns) {
    for (const tau of taus) {
      const points = rows
        .filter((r) => r.tau === tau)
        .map((r) => ({ h: r.h, error: r.values[column] }))
        .sort((a, b) => b.h - a.h);
      let name = `${column} tau=${tau}`;
      if (points.length >= 2) {
        const slope = leastSquaresSlope(points);
        fitted.push({ tau, column, slope });
        name += ` (slope ${slope.toFixed(2)})`;
      }
      series.push({
        name,
        type: "line",
        xAxisIndex: axisIndex,
        yAxisIndex: axisIndex,
        symbolSize: 7,
        data: points.map((p) => [p.h, p.error]),
      });
    }
  }
  return { series, fitted };
}

function referenceGuides(
  rows: ErrorRow[],
  columns: string[],
  slopes: number[],
  axisIndex: number,
): LineSeriesOption[] {
  const hs = rows.map((r) => r.h);
  const hMax = Math.max(...hs);
  const hMin = Math.min(...hs);
  const anchor = Math.max(
    ...rows.filter((r) => r.h === hMax).flatMap((r) => columns.map((c) => r.values[c])),
  );
  return slopes.map((p) => ({
    name: `order ${p}`,
    type: "line" as const,
    xAxisIndex: axisIndex,
    yAxisIndex: axisIndex,
    symbol: "none",
    lineStyle: { type: "dashed" as const, color: "#888" },
    data:
      hMin < hMax
        ? [
            [hMax, anchor],
            [hMin, anchor * Math.pow(hMin / hMax, p)],
          ]
        : [[hMax, anchor]],
  }));
}

export function buildConvergenceChart(spec: PlotSpec): {
  svg: string;
  slopes: FittedSlope[];
  option: ChartOption;
} {
  const { header, rows } = readErrorsCsv(spec.csvPath);
  const available = header.slice(2);
  const columns = spec.columns ?? available;
  for (const column of columns) {
    if (!available.includes(column)) {
      throw new Error(`column ${column} not in ${spec.csvPath} (has: ${available.join(", ")})`);
    }
  }
  const refSlopes = spec.slopes ?? [1, 2];

  const allSeries: LineSeriesOption[] = [];
  const fitted: FittedSlope[] = [];
  const grids: NonNullable<unknown>[] = [];
  const xAxes: NonNullable<unknown>[] = [];
  const yAxes: NonNullable<unknown>[] = [];
  const titles: NonNullable<unknown>[] = [];
  const active = PANELS.map((panel) => ({
    panel,
    columns: columns.filter(panel.match),
  })).filter((p) => p.columns.length > 0);
  if (active.length === 0) {
    throw new Error(`no L2/H1 columns among: ${columns.join(", ")}`);
  }

  active.forEach(({ panel, columns: cols }, i) => {
    const left = 8 + (i * 92) / active.length;
    grids.push({ left: `${left}%`, width: `${82 / active.length}%`, bottom: "18%", top: "10%" });
    xAxes.push({ type: "log", gridIndex: i, name: "mesh width h" });
    yAxes.push({ type: "log", gridIndex: i, name: i === 0 ? "error" : "" });
    titles.push({ text: panel.title, left: `${left + 30 / active.length}%`, top: "1%" });
    const { series, fitted: f } = seriesFor(rows, cols, i);
    allSeries.push(...series, ...referenceGuides(rows, cols, refSlopes, i));
    fitted.push(...f);
  });

  const option: ChartOption = {
    animation: false,
    backgroundColor: "#fff",
    title: titles,
    legend: { bottom: 0, itemWidth: 18, textStyle: { fontSize: 10 } },
    grid: grids,
    xAxis: xAxes,
    yAxis: yAxes,
    series: allSeries,
  };

  const svg = renderSvg(option, spec.width ?? 1100, spec.height ?? 640);
  return { svg, slopes: fitted, option };
}

/** Render the figure to spec.outPath and return the fitted slopes. */
export function plotConvergence(spec: PlotSpec): FittedSlope[] {
  const { svg, slopes } = buildConvergenceChart(spec);
  writeFileSync(spec.outPath, svg);
  return slopes;
}
