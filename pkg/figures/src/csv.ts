/** Minimal CSV reader for the simulation output schemas.
 *
 * Two schemas are consumed: sweep records (scenario_id, receiver,
 * snr_in_db, ta_mse_db, ...) and adaptive convergence trajectories
 * (period, ta_mse, ber_so_far). Values are plain unquoted numbers or
 * empty cells; header order is fixed by the producer.
 */

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

export class SchemaError extends Error {}

export function parseCsv(text: string): Table {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("no data: CSV is empty");
  }
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== columns.length) {
      throw new SchemaError(`row ${i + 1} has ${cells.length} cells, header has ${columns.length}`);
    }
    const rec: Record<string, string> = {};
    columns.forEach((c, j) => (rec[c] = cells[j]));
    return rec;
  });
  return { columns, rows };
}

export function requireColumns(table: Table, needed: string[]): void {
  for (const c of needed) {
    if (!table.columns.includes(c)) {
      throw new SchemaError(`missing column '${c}' (have: ${table.columns.join(", ")})`);
    }
  }
}

export function num(row: Record<string, string>, col: string): number {
  const v = row[col];
  if (v === undefined || v === "") return NaN;
  const x = Number(v);
  if (Number.isNaN(x)) {
    throw new SchemaError(`column '${col}' holds non-numeric value '${v}'`);
  }
  return x;
}
