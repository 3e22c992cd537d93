/** CSV readers for the simulator's documented output files. */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export const ERROR_COLUMNS = [
  "err_u_L2_bulk",
  "err_u_L2_surf",
  "err_u_H1_bulk",
  "err_u_H1_surf",
  "err_w_L2_bulk",
  "err_w_L2_surf",
  "err_w_H1_bulk",
  "err_w_H1_surf",
] as const;

export type ErrorColumn = (typeof ERROR_COLUMNS)[number];

export interface ErrorRow {
  h: number;
  tau: number;
  values: Record<string, number>;
}

export interface EocRow {
  tau: number;
  column: string;
  eoc: number;
}

function parseNumericCsv(path: string): { header: string[]; records: number[][] } {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new Error(`${path}: ${parsed.errors[0].message}`);
  }
  const rows = parsed.data;
  if (rows.length === 0) {
    throw new Error(`${path}: empty CSV`);
  }
  const header = rows[0];
  const records = rows.slice(1).map((cells, i) => {
    if (cells.length !== header.length) {
      throw new Error(`${path}: row ${i + 2} has ${cells.length} cells, header has ${header.length}`);
    }
    return cells.map(Number);
  });
  if (records.length === 0) {
    throw new Error(`${path}: no data rows`);
  }
  return { header, records };
}

/** errors.csv: one row per (mesh, tau) run. */
export function readErrorsCsv(path: string): { header: string[]; rows: ErrorRow[] } {
  const { header, records } = parseNumericCsv(path);
  if (header[0] !== "h" || header[1] !== "tau") {
    throw new Error(`${path}: expected header starting with h,tau`);
  }
  const rows = records.map((cells) => {
    const values: Record<string, number> = {};
    header.slice(2).forEach((name, i) => {
      values[name] = cells[i + 2];
    });
    return { h: cells[0], tau: cells[1], values };
  });
  return { header, rows };
}

/** eoc.csv: least-squares orders per tau and error column. */
export function readEocCsv(path: string): EocRow[] {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  const rows = parsed.data;
  if (rows.length === 0 || rows[0].join(",") !== "tau,column,eoc") {
    throw new Error(`${path}: expected header tau,column,eoc`);
  }
  return rows.slice(1).map((cells) => ({
    tau: Number(cells[0]),
    column: cells[1],
    eoc: Number(cells[2]),
  }));
}

/** energy.csv: t,energy trace. */
export function readEnergyCsv(path: string): { t: number[]; energy: number[] } {
  const { header, records } = parseNumericCsv(path);
  if (header.join(",") !== "t,energy") {
    throw new Error(`${path}: expected header t,energy`);
  }
  return { t: records.map((r) => r[0]), energy: records.map((r) => r[1]) };
}
