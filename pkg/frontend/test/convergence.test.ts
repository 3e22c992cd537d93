import { mkdtempSync, writeFileSync, existsSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { buildConvergenceChart, plotConvergence } from "../src/convergence.js";
import { ERROR_COLUMNS, readEocCsv } from "../src/csv.js";

const SWEEP = join(__dirname, "fixtures", "sweep", "errors.csv");
const EOC = join(__dirname, "fixtures", "sweep", "eoc.csv");

function tmpFile(name: string): string {
  return join(mkdtempSync(join(tmpdir(), "figs-")), name);
}

function writeSynthetic(taus: number[], hs: number[], law: (h: number, tau: number) => number): string {
  const header = ["h", "tau", ...ERROR_COLUMNS].join(",");
  const rows = taus.flatMap((tau) =>
    hs.map((h) => [h, tau, ...ERROR_COLUMNS.map(() => law(h, tau))].join(",")),
  );
  const path = tmpFile("synthetic.csv");
  writeFileSync(path, [header, ...rows].join("\n") + "\n");
  return path;
}

describe("convergence figures from the real sweep", () => {
  it("fitted slopes agree with the simulator's eoc.csv within 0.05", () => {
    const out = tmpFile("sweep.svg");
    const slopes = plotConvergence({ csvPath: SWEEP, outPath: out });
    const eoc = readEocCsv(EOC);
    expect(slopes.length).toBe(eoc.length);
    for (const row of eoc) {
      const match = slopes.find(
        (s) => s.column === row.column && Math.abs(s.tau - row.tau) < 1e-12,
      );
      expect(match, `${row.column} tau=${row.tau}`).toBeDefined();
      expect(Math.abs(match!.slope - row.eoc)).toBeLessThan(0.05);
    }
    expect(existsSync(out)).toBe(true);
    expect(readFileSync(out, "utf8")).toContain("<svg");
  });

  it("splits the selected columns into log-log panels per norm family", () => {
    const { option } = buildConvergenceChart({
      csvPath: SWEEP,
      outPath: "/dev/null",
      columns: ["err_u_L2_bulk", "err_u_H1_bulk"],
    });
    const xAxes = option.xAxis as Array<{ type: string }>;
    expect(xAxes.length).toBe(2);
    expect(xAxes.every((a) => a.type === "log")).toBe(true);
  });
});

describe("convergence figures on synthetic data", () => {
  it("draws one marked line per tau", () => {
    const taus = [0.05, 0.025, 0.0125, 0.005, 0.0025, 0.00125];
    const csv = writeSynthetic(taus, [0.4, 0.2, 0.1], (h, tau) => h * h + tau / 100);
    const { svg, option } = buildConvergenceChart({
      csvPath: csv,
      outPath: "/dev/null",
      columns: ["err_u_L2_bulk"],
      slopes: [2],
    });
    const series = option.series as Array<{ name: string }>;
    const dataLines = series.filter((s) => !s.name.startsWith("order "));
    expect(dataLines.length).toBe(6);
    for (const line of dataLines) {
      expect(svg).toContain("slope");
      expect(line.name).toContain("err_u_L2_bulk");
    }
  });

  it("errors proportional to h^2 run parallel to the order-2 guide", () => {
    const csv = writeSynthetic([0.01], [0.4, 0.2, 0.1, 0.05], (h) => 0.3 * h * h);
    const { slopes, option } = buildConvergenceChart({
      csvPath: csv,
      outPath: "/dev/null",
      columns: ["err_w_L2_surf"],
      slopes: [1, 2],
    });
    expect(slopes).toHaveLength(1);
    expect(slopes[0].slope).toBeCloseTo(2.0, 10);
    const series = option.series as Array<{ name: string; data: number[][] }>;
    const guide = series.find((s) => s.name === "order 2");
    expect(guide).toBeDefined();
    const line = series.find((s) => s.name.startsWith("err_w_L2_surf"))!;
    // identical log-log slope between endpoints = parallel lines
    const slopeOf = (d: number[][]) =>
      Math.log(d[d.length - 1][1] / d[0][1]) / Math.log(d[d.length - 1][0] / d[0][0]);
    expect(slopeOf(line.data)).toBeCloseTo(slopeOf(guide!.data), 10);
  });

  it("rejects unknown columns and empty files", () => {
    const csv = writeSynthetic([0.1], [0.4, 0.2], (h) => h);
    expect(() =>
      buildConvergenceChart({ csvPath: csv, outPath: "/dev/null", columns: ["err_u_L3_bulk"] }),
    ).toThrow(/err_u_L3_bulk/);

    const empty = tmpFile("empty.csv");
    writeFileSync(empty, "");
    expect(() => buildConvergenceChart({ csvPath: empty, outPath: "/dev/null" })).toThrow(/empty/);

    const headerOnly = tmpFile("header.csv");
    writeFileSync(headerOnly, "h,tau," + ERROR_COLUMNS.join(",") + "\n");
    expect(() => buildConvergenceChart({ csvPath: headerOnly, outPath: "/dev/null" })).toThrow(
      /no data rows/,
    );
  });
});
