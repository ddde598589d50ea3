/**
 * Strict reader for the simulator's published CSV schema.
 *
 * Columns are fixed; delay sweeps carry one extra `length_km` column.
 * Anything else is a schema error reported by column name.
 */

export const BASE_COLUMNS = [
  "swept_name",
  "swept_value",
  "fidelity",
  "stderr",
  "herald_prob",
  "rate_hz",
  "branch_fid_min",
  "branch_fid_max",
  "double_click_prob",
] as const;

export interface ResultRow {
  sweptName: string;
  sweptValue: number | string;
  fidelity: number;
  stderr: number;
  heraldProb: number;
  rateHz: number;
  branchFidMin: number;
  branchFidMax: number;
  doubleClickProb: number;
  lengthKm: number | null;
}

export class SchemaError extends Error {}

function splitCsvLine(line: string): string[] {
  // the harness never quotes fields; keep the parser honest about that
  if (line.includes('"')) {
    throw new SchemaError("quoted CSV fields are not part of the schema");
  }
  return line.split(",");
}

function parseNumber(field: string, column: string, lineNo: number): number {
  const value = Number(field);
  if (field.trim() === "" || !Number.isFinite(value)) {
    throw new SchemaError(
      `column ${column} on line ${lineNo} is not a number: ${JSON.stringify(field)}`,
    );
  }
  return value;
}

export function parseRows(text: string): ResultRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV: no header line");
  }
  const header = splitCsvLine(lines[0]);
  const base = BASE_COLUMNS.join(",");
  const withLength = base + ",length_km";
  const hasLength = header.join(",") === withLength;
  if (!hasLength && header.join(",") !== base) {
    throw new SchemaError(
      `unexpected columns [${header.join(", ")}]; expected [${base}]` +
        ` optionally followed by length_km`,
    );
  }
  if (lines.length === 1) {
    throw new SchemaError("empty CSV: header but no data rows");
  }
  const rows: ResultRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const fields = splitCsvLine(lines[i]);
    if (fields.length !== header.length) {
      throw new SchemaError(
        `line ${i + 1} has ${fields.length} fields, expected ${header.length}`,
      );
    }
    const rawValue = fields[1];
    const numeric = Number(rawValue);
    rows.push({
      sweptName: fields[0],
      sweptValue:
        rawValue.trim() !== "" && Number.isFinite(numeric) ? numeric : rawValue,
      fidelity: parseNumber(fields[2], "fidelity", i + 1),
      stderr: parseNumber(fields[3], "stderr", i + 1),
      heraldProb: parseNumber(fields[4], "herald_prob", i + 1),
      rateHz: parseNumber(fields[5], "rate_hz", i + 1),
      branchFidMin: parseNumber(fields[6], "branch_fid_min", i + 1),
      branchFidMax: parseNumber(fields[7], "branch_fid_max", i + 1),
      doubleClickProb: parseNumber(fields[8], "double_click_prob", i + 1),
      lengthKm:
        hasLength && fields[9] !== ""
          ? parseNumber(fields[9], "length_km", i + 1)
          : null,
    });
  }
  return rows;
}

/** Density matrices as emitted by `bench6 --format json`. */
export interface BenchJson {
  average_fidelity: number;
  density_matrices: Record<string, { re: number[][]; im: number[][] }>;
}

export function parseBenchJson(text: string): BenchJson {
  let payload: unknown;
  try {
    payload = JSON.parse(text);
  } catch (err) {
    throw new SchemaError(`not valid JSON: ${(err as Error).message}`);
  }
  const obj = payload as Partial<BenchJson>;
  if (typeof obj.average_fidelity !== "number" || !obj.density_matrices) {
    throw new SchemaError(
      "missing average_fidelity or density_matrices (need bench6 JSON output)",
    );
  }
  return obj as BenchJson;
}
