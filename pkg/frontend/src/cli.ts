// Usage: node dist/cli.js export --input data.csv --out embeds.jsonl [--model <id>] [--batch 16] [--dim 768]
import { DEFAULT_JOB, exportEmbeddings } from './export.js';

function flagValue(args: string[], flag: string): string | undefined {
  const index = args.indexOf(flag);
  return index !== -1 ? args[index + 1] : undefined;
}

function usage(): never {
  console.error(
    'usage: cli.js export --input data.csv --out embeds.jsonl ' +
      `[--model <identifier>] [--batch N] [--dim D]\n` +
      `defaults: --model ${DEFAULT_JOB.model} --batch ${DEFAULT_JOB.batchSize} --dim ${DEFAULT_JOB.dim}`,
  );
  process.exit(2);
}

async function main(): Promise<void> {
  const args = process.argv.slice(2);
  if (args[0] !== 'export') {
    usage();
  }
  const inputPath = flagValue(args, '--input');
  const outPath = flagValue(args, '--out');
  if (!inputPath || !outPath) {
    usage();
  }
  const job = {
    inputPath,
    outPath,
    model: flagValue(args, '--model') ?? DEFAULT_JOB.model,
    batchSize: parseInt(flagValue(args, '--batch') ?? String(DEFAULT_JOB.batchSize), 10),
    dim: parseInt(flagValue(args, '--dim') ?? String(DEFAULT_JOB.dim), 10),
  };
  if (!Number.isFinite(job.batchSize) || !Number.isFinite(job.dim)) {
    usage();
  }
  const summary = await exportEmbeddings(job);
  console.log(
    `wrote ${summary.samples} records (${summary.lines} line vectors, dim ${job.dim}) to ${job.outPath}`,
  );
}

main().catch((err) => {
  console.error(`error: ${err instanceof Error ? err.message : err}`);
  process.exit(1);
});
