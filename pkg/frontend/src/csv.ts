import fs from "node:fs";
import Papa from "papaparse";

export type Row = Record<string, string | number>;

export interface Table {
  path: string;
  columns: string[];
  rows: Row[];
}

/** Read a CSV with a header row, coercing numeric fields. */
export function readTable(path: string, required: string[]): Table {
  if (!fs.existsSync(path)) {
    throw new Error(`input file not found: ${path}`);
  }
  const text = fs.readFileSync(path, "utf8");
  const parsed = Papa.parse<Row>(text, {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new Error(`malformed CSV ${path}: ${first.message} (row ${first.row})`);
  }
  const columns = parsed.meta.fields ?? [];
  const missing = required.filter((c) => !columns.includes(c));
  if (missing.length > 0) {
    throw new Error(
      `missing column${missing.length > 1 ? "s" : ""} ` +
        `${missing.map((c) => `"${c}"`).join(", ")} in ${path}`,
    );
  }
  if (parsed.data.length === 0) {
    throw new Error(`no data rows in ${path}`);
  }
  return { path, columns, rows: parsed.data };
}

/** Distinct values of a column, in first-appearance order. */
export function distinct(table: Table, column: string): (string | number)[] {
  const seen: (string | number)[] = [];
  for (const row of table.rows) {
    const v = row[column];
    if (!seen.includes(v)) seen.push(v);
  }
  return seen;
}

/** Rows matching an exact predicate on one or more columns. */
export function where(table: Table, match: Row): Row[] {
  return table.rows.filter((row) =>
    Object.entries(match).every(([k, v]) => row[k] === v),
  );
}

export function numbers(rows: Row[], column: string): number[] {
  return rows.map((row) => Number(row[column]));
}
