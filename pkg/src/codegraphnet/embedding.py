"""Per-token and per-line embedding vectors.

Two providers are available behind one interface: a deterministic signed
feature-hashing embedder over character 3-grams (no external data needed),
and a file provider that serves precomputed per-line vectors from the
``cgn-embed`` exchange format written by external extractors.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .corpus import Sample
from .errors import (
    DimensionError,
    DuplicateIdError,
    EmbeddingLookupError,
    EmptyInputError,
    ExchangeFormatError,
    ShapeError,
)
from .linegraph import split_lines, tokenize_snippet

EXCHANGE_FORMAT = "cgn-embed"
EXCHANGE_VERSION = 1

_GRAM_START = "\x02"
_GRAM_END = "\x03"


class HashEmbeddingProvider:
    """Deterministic token embeddings via signed character-3-gram hashing."""

    kind = "hash"

    def __init__(self, dim: int = 768, seed: int = 0):
        if dim < 8:
            raise DimensionError(f"hash embedding dimension must be >= 8, got {dim}")
        self.dim = dim
        self.seed = seed
        self._salt = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
        self._cache: dict[str, np.ndarray] = {}

    def token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            vec = _hash_token(token, self.dim, self._salt)
            vec.setflags(write=False)
            self._cache[token] = vec
        return vec


class FileEmbeddingProvider:
    """Precomputed per-line vectors, keyed by sample id."""

    kind = "file"

    def __init__(self, dim: int, records: dict[str, np.ndarray], source: str | None = None):
        self.dim = dim
        self.records = records
        self.source = source


def embed_tokens_hash(tokens: list[str], d: int, seed: int) -> np.ndarray:
    """Embed a token list into a T-by-d matrix of L2-normalized hash vectors.

    Each character 3-gram of the boundary-marked token adds +/-1 at a hashed
    index; the sign comes from one hash bit. Tokens producing no 3-grams map
    to the zero vector.
    """
    provider = HashEmbeddingProvider(dim=d, seed=seed)
    return np.array([provider.token_vector(tok) for tok in tokens]).reshape(len(tokens), d)


def pool_mean(vectors: np.ndarray) -> np.ndarray:
    """Arithmetic mean over the rows of a T-by-d matrix."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {vectors.shape}")
    if vectors.shape[0] == 0:
        raise EmptyInputError("cannot pool an empty matrix")
    return vectors.mean(axis=0)


def line_embeddings(sample: Sample, provider) -> np.ndarray:
    """The n-by-d feature matrix for a sample: one pooled vector per line.

    Hash provider: row i is the mean of line i's token vectors; blank lines
    (including lines interior to block comments) map to the zero vector.
    File provider: rows are looked up by sample id and must match the
    sample's line count.
    """
    lines = split_lines(sample.code)
    if provider.kind == "file":
        record = provider.records.get(sample.id)
        if record is None:
            raise EmbeddingLookupError(f"no embedding record for sample id {sample.id!r}")
        if record.shape[0] != len(lines):
            raise ShapeError(
                f"sample {sample.id!r} has {len(lines)} lines but its embedding "
                f"record carries {record.shape[0]} vectors"
            )
        return np.array(record, dtype=float)

    matrix = np.zeros((len(lines), provider.dim))
    for tokenized in tokenize_snippet(lines):
        if tokenized.tokens:
            rows = [provider.token_vector(tok) for tok in tokenized.tokens]
            matrix[tokenized.line_index] = pool_mean(np.array(rows))
    return matrix


def load_precomputed(path) -> FileEmbeddingProvider:
    """Load a ``cgn-embed`` exchange file, validating every record eagerly."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header_line = fh.readline()
        header = _parse_json_line(path, 1, header_line)
        if header.get("format") != EXCHANGE_FORMAT or header.get("version") != EXCHANGE_VERSION:
            raise ExchangeFormatError(
                f"{path}: line 1: expected header with format={EXCHANGE_FORMAT!r} "
                f"version={EXCHANGE_VERSION}, got {header!r}"
            )
        dim = header.get("dim")
        if not isinstance(dim, int) or dim < 1:
            raise DimensionError(f"{path}: line 1: invalid dim {dim!r}")

        records: dict[str, np.ndarray] = {}
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            obj = _parse_json_line(path, line_no, line)
            if not isinstance(obj.get("id"), str) or not isinstance(obj.get("line_vectors"), list):
                raise ExchangeFormatError(
                    f"{path}: line {line_no}: record needs string 'id' and list 'line_vectors'"
                )
            sid = obj["id"]
            if sid in records:
                raise DuplicateIdError(f"{path}: line {line_no}: duplicate record id {sid!r}")
            vectors = obj["line_vectors"]
            for row_idx, vector in enumerate(vectors):
                if not isinstance(vector, list) or len(vector) != dim:
                    raise DimensionError(
                        f"{path}: line {line_no}: record {sid!r} vector {row_idx} has "
                        f"length {len(vector) if isinstance(vector, list) else 'n/a'}, expected {dim}"
                    )
            records[sid] = np.array(vectors, dtype=float).reshape(len(vectors), dim)
    return FileEmbeddingProvider(dim=dim, records=records, source=str(path))


def write_exchange(path, dim: int, records: dict[str, np.ndarray]) -> None:
    """Write per-sample line vectors in the exchange format (round-trip floats)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": EXCHANGE_FORMAT, "version": EXCHANGE_VERSION, "dim": dim}))
        fh.write("\n")
        for sid, matrix in records.items():
            matrix = np.asarray(matrix, dtype=float)
            if matrix.ndim != 2 or matrix.shape[1] != dim:
                raise DimensionError(f"record {sid!r} has shape {matrix.shape}, expected (*, {dim})")
            fh.write(json.dumps({"id": sid, "line_vectors": matrix.tolist()}))
            fh.write("\n")


def _hash_token(token: str, dim: int, salt: bytes) -> np.ndarray:
    vec = np.zeros(dim)
    marked = _GRAM_START + token + _GRAM_END
    for i in range(len(marked) - 2):
        digest = hashlib.blake2b(marked[i : i + 3].encode("utf-8"), digest_size=8, key=salt).digest()
        h = int.from_bytes(digest, "little")
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        vec[h % dim] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def _parse_json_line(path: Path, line_no: int, line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ExchangeFormatError(f"{path}: line {line_no}: invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise ExchangeFormatError(f"{path}: line {line_no}: expected a JSON object")
    return obj
