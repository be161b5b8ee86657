import { readCorpus } from './corpus.js';
import { LineEncoder, makeEncoder } from './encoders.js';
import { SampleRecord, writeExchange } from './exchange.js';
import { splitLines } from './split.js';

export interface ExportJob {
  inputPath: string;
  outPath: string;
  model: string;
  dim: number;
  batchSize: number;
}

export const DEFAULT_JOB = { model: 'hash-sim', dim: 768, batchSize: 16 };

/**
 * Embed every sample of a corpus, one vector per source line, and write the
 * exchange file. Blank (whitespace-only) lines map to the zero vector; the
 * consumer treats those as empty graph nodes.
 */
export async function exportEmbeddings(job: ExportJob): Promise<{ samples: number; lines: number }> {
  if (job.batchSize < 1) {
    throw new Error(`batch size must be >= 1, got ${job.batchSize}`);
  }
  const rows = await readCorpus(job.inputPath);
  const encoder = await makeEncoder(job.model, job.dim);

  const records: SampleRecord[] = [];
  let totalLines = 0;
  for (const row of rows) {
    const lines = splitLines(row.code);
    records.push({ id: row.id, lineVectors: await embedSample(encoder, lines, row.id, job.batchSize) });
    totalLines += lines.length;
  }
  await writeExchange(job.outPath, encoder.dim, records);
  return { samples: records.length, lines: totalLines };
}

async function embedSample(
  encoder: LineEncoder,
  lines: string[],
  sampleId: string,
  batchSize: number,
): Promise<number[][]> {
  const vectors: number[][] = lines.map(() => new Array<number>(encoder.dim).fill(0));
  const pending: number[] = [];
  for (let i = 0; i < lines.length; i++) {
    if (lines[i].trim() !== '') {
      pending.push(i);
    }
  }
  for (let start = 0; start < pending.length; start += batchSize) {
    const batch = pending.slice(start, start + batchSize);
    const encoded = await encoder.encodeBatch(batch.map((i) => lines[i]), sampleId);
    batch.forEach((lineIndex, j) => {
      vectors[lineIndex] = encoded[j];
    });
  }
  return vectors;
}
