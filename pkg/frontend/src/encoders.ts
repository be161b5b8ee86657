export interface LineEncoder {
  readonly name: string;
  readonly dim: number;
  /** Embed a batch of non-blank lines into one vector each. */
  encodeBatch(lines: string[], sampleId: string): Promise<number[][]>;
}

const GRAM_START = '';
const GRAM_END = '';

function fnv1a(text: string, salt: number): number {
  let hash = (0x811c9dc5 ^ salt) >>> 0;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

/**
 * Deterministic offline encoder: signed character-3-gram hashing per token,
 * L2-normalized token vectors, mean-pooled per line. A network-free stand-in
 * with the same output shape as a real pretrained encoder.
 */
export class HashSimEncoder implements LineEncoder {
  readonly name = 'hash-sim';
  readonly dim: number;

  constructor(dim = 768) {
    this.dim = dim;
  }

  async encodeBatch(lines: string[]): Promise<number[][]> {
    return lines.map((line) => this.encodeLine(line));
  }

  private encodeLine(line: string): number[] {
    const tokens = line.match(/\w+|[^\s\w]/g) ?? [];
    const pooled = new Array<number>(this.dim).fill(0);
    if (tokens.length === 0) {
      return pooled;
    }
    for (const token of tokens) {
      const vector = this.tokenVector(token);
      for (let i = 0; i < this.dim; i++) {
        pooled[i] += vector[i];
      }
    }
    return pooled.map((value) => value / tokens.length);
  }

  private tokenVector(token: string): number[] {
    const vector = new Array<number>(this.dim).fill(0);
    const marked = GRAM_START + token + GRAM_END;
    for (let i = 0; i + 3 <= marked.length; i++) {
      const gram = marked.slice(i, i + 3);
      const index = fnv1a(gram, 0) % this.dim;
      const sign = fnv1a(gram, 0x9e3779b9) & 1 ? 1 : -1;
      vector[index] += sign;
    }
    const norm = Math.sqrt(vector.reduce((acc, value) => acc + value * value, 0));
    return norm > 0 ? vector.map((value) => value / norm) : vector;
  }
}

/**
 * Real pretrained encoder: each line goes through the model's own tokenizer
 * and the final hidden states are mean-pooled into one vector per line.
 * Lines longer than the model maximum are truncated with a warning.
 */
export class PretrainedEncoder implements LineEncoder {
  readonly name: string;
  readonly dim: number;
  private readonly extractor: any;
  private readonly maxTokens: number | undefined;

  private constructor(name: string, dim: number, extractor: any, maxTokens?: number) {
    this.name = name;
    this.dim = dim;
    this.extractor = extractor;
    this.maxTokens = maxTokens;
  }

  static async load(model: string, expectedDim: number): Promise<PretrainedEncoder> {
    let pipeline;
    try {
      ({ pipeline } = await import('@xenova/transformers'));
    } catch {
      throw new Error(
        "the '@xenova/transformers' package is not installed; " +
          "install it for pretrained models, or use --model hash-sim",
      );
    }
    const extractor = await pipeline('feature-extraction', model);
    const probe = await extractor('int x = 0;', { pooling: 'mean', normalize: false });
    const dim = probe.dims[probe.dims.length - 1];
    if (dim !== expectedDim) {
      throw new Error(`model '${model}' produces ${dim}-dim vectors, expected ${expectedDim}`);
    }
    const maxTokens = extractor.tokenizer?.model_max_length;
    return new PretrainedEncoder(model, dim, extractor, maxTokens);
  }

  async encodeBatch(lines: string[], sampleId: string): Promise<number[][]> {
    if (this.maxTokens !== undefined && Number.isFinite(this.maxTokens)) {
      for (const line of lines) {
        const encoded = this.extractor.tokenizer(line);
        if (encoded.input_ids.size > this.maxTokens) {
          console.warn(
            `warning: sample ${sampleId}: line exceeds ${this.maxTokens} tokens, truncating`,
          );
        }
      }
    }
    const output = await this.extractor(lines, { pooling: 'mean', normalize: false });
    const [batch, dim] = output.dims.length === 2 ? output.dims : [1, output.dims[0]];
    const data: number[] = Array.from(output.data as Iterable<number>);
    const vectors: number[][] = [];
    for (let i = 0; i < batch; i++) {
      vectors.push(data.slice(i * dim, (i + 1) * dim));
    }
    return vectors;
  }
}

export async function makeEncoder(model: string, dim: number): Promise<LineEncoder> {
  if (model === 'hash-sim') {
    return new HashSimEncoder(dim);
  }
  return PretrainedEncoder.load(model, dim);
}
