/** Fixed CSV contracts of the core simulator. Parsing fails fast on any
 * header or cell that does not match. */

export const SWEEP_COLUMNS = [
  "V", "omega", "U", "g_L", "g_R", "gamma_L", "gamma_R",
  "gamma_loss", "gamma_deph", "I_qd", "I_s_L", "I_s_R",
  "I_p_L", "I_p_R", "I_incoh", "pop_even", "pop_odd",
  "residual", "solver", "status",
] as const;

export const MAP_COLUMNS = ["V", "omega", "I_s_R", "dIdV", "status"] as const;

export type SweepColumn = (typeof SWEEP_COLUMNS)[number];
export type MapColumn = (typeof MAP_COLUMNS)[number];

const SWEEP_NUMERIC = SWEEP_COLUMNS.filter(c => c !== "solver" && c !== "status");
const MAP_NUMERIC = MAP_COLUMNS.filter(c => c !== "status");

export interface SweepRow {
  V: number; omega: number; U: number; g_L: number; g_R: number;
  gamma_L: number; gamma_R: number; gamma_loss: number; gamma_deph: number;
  I_qd: number; I_s_L: number; I_s_R: number; I_p_L: number; I_p_R: number;
  I_incoh: number; pop_even: number; pop_odd: number; residual: number;
  solver: string; status: string;
}

export interface MapRow {
  V: number; omega: number; I_s_R: number; dIdV: number; status: string;
}

export class SchemaError extends Error {}

function splitDataLines(text: string, path: string): string[][] {
  const lines = text.split(/\r?\n/).filter(l => l.length > 0 && !l.startsWith("#"));
  if (lines.length === 0) {
    throw new SchemaError(`${path}: no header found`);
  }
  return lines.map(l => l.split(","));
}

function parseTable<T>(text: string, path: string, columns: readonly string[],
                       numeric: readonly string[]): T[] {
  const cells = splitDataLines(text, path);
  const header = cells[0];
  if (header.length !== columns.length ||
      header.some((h, i) => h.trim() !== columns[i])) {
    throw new SchemaError(
      `${path}: header mismatch; expected "${columns.join(",")}" got "${header.join(",")}"`);
  }
  const rows: T[] = [];
  for (let r = 1; r < cells.length; r++) {
    if (cells[r].length !== columns.length) {
      throw new SchemaError(`${path}:${r + 1}: expected ${columns.length} cells, got ${cells[r].length}`);
    }
    const row: Record<string, number | string> = {};
    for (let c = 0; c < columns.length; c++) {
      const name = columns[c];
      const raw = cells[r][c].trim();
      if (numeric.includes(name)) {
        const val = raw === "nan" ? NaN : Number(raw);
        if (raw !== "nan" && !Number.isFinite(val)) {
          throw new SchemaError(`${path}:${r + 1}: column ${name} is not numeric: "${raw}"`);
        }
        row[name] = val;
      } else {
        row[name] = raw;
      }
    }
    rows.push(row as T);
  }
  if (rows.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
  return rows;
}

export function parseSweepCsv(text: string, path: string): SweepRow[] {
  return parseTable<SweepRow>(text, path, SWEEP_COLUMNS, SWEEP_NUMERIC);
}

export function parseMapCsv(text: string, path: string): MapRow[] {
  return parseTable<MapRow>(text, path, MAP_COLUMNS, MAP_NUMERIC);
}

export function okRows<T extends { status: string }>(rows: T[]): T[] {
  return rows.filter(r => r.status === "ok");
}

/** Distinct values of a column, in first-appearance order. */
export function groups<T>(rows: T[], key: keyof T): Array<T[keyof T]> {
  const seen: Array<T[keyof T]> = [];
  for (const row of rows) {
    if (!seen.includes(row[key])) seen.push(row[key]);
  }
  return seen;
}
