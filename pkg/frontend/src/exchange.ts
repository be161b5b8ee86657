import { promises as fs } from 'fs';
import { dirname, join } from 'path';

export const EXCHANGE_FORMAT = 'cgn-embed';
export const EXCHANGE_VERSION = 1;

export interface SampleRecord {
  id: string;
  lineVectors: number[][];
}

/**
 * Write records in the exchange format: a JSON header line followed by one
 * JSON object per sample. The file lands atomically (temp file + rename) so
 * a crashed export never leaves a half-written embedding file behind.
 */
export async function writeExchange(
  outPath: string,
  dim: number,
  records: Iterable<SampleRecord>,
): Promise<void> {
  const tmpPath = join(dirname(outPath), `.${Date.now()}-${process.pid}.tmp`);
  const parts: string[] = [
    JSON.stringify({ format: EXCHANGE_FORMAT, version: EXCHANGE_VERSION, dim }),
  ];
  for (const record of records) {
    for (const vector of record.lineVectors) {
      if (vector.length !== dim) {
        throw new Error(
          `record ${record.id}: vector has length ${vector.length}, expected ${dim}`,
        );
      }
    }
    parts.push(JSON.stringify({ id: record.id, line_vectors: record.lineVectors }));
  }
  await fs.mkdir(dirname(outPath), { recursive: true });
  await fs.writeFile(tmpPath, parts.join('\n') + '\n', 'utf-8');
  await fs.rename(tmpPath, outPath);
}
