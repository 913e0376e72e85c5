/**
 * Parsing of experiment result CSVs.
 *
 * The file carries `#`-prefixed comment lines (config echo, seed), a fixed
 * header `method,T,delta,cond_H0,cond_H1,status,wall_time_ms`, and one row
 * per (method, T) cell.  Floats may be `nan` or `inf`.
 */

export interface ResultRow {
  method: string;
  T: number;
  delta: number;
  cond_H0: number;
  cond_H1: number;
  status: string;
  wall_time_ms: number;
}

export const REQUIRED_COLUMNS = [
  "method",
  "T",
  "delta",
  "cond_H0",
  "cond_H1",
  "status",
  "wall_time_ms",
] as const;

function parseFloatLoose(token: string): number {
  const t = token.trim().toLowerCase();
  if (t === "nan") return NaN;
  if (t === "inf" || t === "infinity") return Infinity;
  if (t === "-inf" || t === "-infinity") return -Infinity;
  const value = Number(t);
  if (Number.isNaN(value) && t !== "nan") {
    throw new Error(`not a number: '${token}'`);
  }
  return value;
}

export function parseResultsCsv(text: string): ResultRow[] {
  const lines = text
    .split(/\r?\n/)
    .map((ln) => ln.trim())
    .filter((ln) => ln.length > 0 && !ln.startsWith("#"));
  if (lines.length === 0) {
    throw new Error("empty CSV: no header found");
  }
  const header = lines[0].split(",").map((c) => c.trim());
  for (const col of REQUIRED_COLUMNS) {
    if (!header.includes(col)) {
      throw new Error(`missing required column '${col}'`);
    }
  }
  const index = Object.fromEntries(header.map((c, i) => [c, i]));
  const rows: ResultRow[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== header.length) {
      throw new Error(`row has ${parts.length} fields, expected ${header.length}: '${line}'`);
    }
    rows.push({
      method: parts[index.method].trim(),
      T: Number.parseInt(parts[index.T], 10),
      delta: parseFloatLoose(parts[index.delta]),
      cond_H0: parseFloatLoose(parts[index.cond_H0]),
      cond_H1: parseFloatLoose(parts[index.cond_H1]),
      status: parts[index.status].trim(),
      wall_time_ms: parseFloatLoose(parts[index.wall_time_ms]),
    });
  }
  if (rows.length === 0) {
    throw new Error("CSV contains a header but no data rows");
  }
  return rows;
}

/** Group rows by method, each series sorted by T. */
export function groupByMethod(rows: ResultRow[]): Map<string, ResultRow[]> {
  const groups = new Map<string, ResultRow[]>();
  for (const row of rows) {
    const series = groups.get(row.method) ?? [];
    series.push(row);
    groups.set(row.method, series);
  }
  for (const series of groups.values()) {
    series.sort((a, b) => a.T - b.T);
  }
  return groups;
}
