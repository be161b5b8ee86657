import { promises as fs } from 'fs';
import Papa from 'papaparse';

export interface CorpusRow {
  id: string;
  code: string;
  label: string;
}

/** Read a labeled corpus CSV (columns id, code, label; RFC-4180 quoting). */
export async function readCorpus(path: string): Promise<CorpusRow[]> {
  const text = await fs.readFile(path, 'utf-8');
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new Error(`${path}: CSV parse error at row ${first.row}: ${first.message}`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const column of ['id', 'code', 'label']) {
    if (!fields.includes(column)) {
      throw new Error(`${path}: missing column '${column}'`);
    }
  }
  const seen = new Set<string>();
  return parsed.data.map((row) => {
    if (seen.has(row.id)) {
      throw new Error(`${path}: duplicate sample id '${row.id}'`);
    }
    seen.add(row.id);
    return { id: row.id, code: row.code, label: row.label };
  });
}
