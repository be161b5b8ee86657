import json

import numpy as np
import pytest

from codegraphnet.corpus import CweClass, Sample
from codegraphnet.embedding import (
    FileEmbeddingProvider,
    HashEmbeddingProvider,
    embed_tokens_hash,
    line_embeddings,
    load_precomputed,
    pool_mean,
    write_exchange,
)
from codegraphnet.errors import (
    DimensionError,
    DuplicateIdError,
    EmbeddingLookupError,
    EmptyInputError,
    ExchangeFormatError,
    ShapeError,
)
from codegraphnet.linegraph import split_lines


class TestHashEmbedding:
    def test_deterministic_bit_identical(self):
        tokens = ["memcpy", "(", "dst", ",", "src", ")", ";"]
        a = embed_tokens_hash(tokens, 64, seed=7)
        b = embed_tokens_hash(tokens, 64, seed=7)
        assert a.shape == (7, 64)
        assert np.array_equal(a, b)

    def test_single_char_token_is_unit_norm(self):
        vec = embed_tokens_hash(["a"], 32, seed=0)[0]
        assert abs(np.linalg.norm(vec) - 1.0) < 1e-9

    def test_distinct_tokens_not_collapsed(self):
        rows = embed_tokens_hash(["memcpy", "malloc"], 64, seed=0)
        cosine = float(rows[0] @ rows[1])
        assert cosine < 0.99

    def test_dimension_below_8_rejected(self):
        with pytest.raises(DimensionError):
            embed_tokens_hash(["x"], 4, seed=0)

    def test_seed_changes_vectors(self):
        a = embed_tokens_hash(["strcpy"], 64, seed=1)
        b = embed_tokens_hash(["strcpy"], 64, seed=2)
        assert not np.array_equal(a, b)

    def test_row_norms_zero_or_one(self):
        rng = np.random.default_rng(3)
        tokens = ["".join(chr(97 + int(rng.integers(26))) for _ in range(int(rng.integers(1, 12))))
                  for _ in range(200)]
        rows = embed_tokens_hash(tokens, 48, seed=5)
        for row in rows:
            norm = np.linalg.norm(row)
            assert norm == 0.0 or abs(norm - 1.0) < 1e-9


class TestPoolMean:
    def test_hand_example(self):
        assert pool_mean(np.array([[1.0, 2.0], [3.0, 4.0]])).tolist() == [2.0, 3.0]

    def test_single_row_identity(self):
        row = np.array([[0.5, -1.5, 2.0]])
        assert np.array_equal(pool_mean(row), row[0])

    def test_matches_naive_loop_oracle(self):
        rng = np.random.default_rng(11)
        mat = rng.normal(size=(100, 17))
        pooled = pool_mean(mat)
        naive = np.zeros(17)
        for row in mat:
            naive += row
        naive /= 100
        assert np.max(np.abs(pooled - naive)) < 1e-12

    def test_permutation_invariant(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            mat = rng.normal(size=(int(rng.integers(1, 20)), int(rng.integers(1, 10))))
            perm = rng.permutation(len(mat))
            assert np.allclose(pool_mean(mat), pool_mean(mat[perm]), atol=1e-12)

    def test_empty_pool_raises(self):
        with pytest.raises(EmptyInputError):
            pool_mean(np.zeros((0, 4)))


class TestLineEmbeddings:
    def test_blank_line_maps_to_zero(self):
        sample = Sample(id="s1", code="int x;\n\nint y;", label=CweClass.CWE_OTHER)
        provider = HashEmbeddingProvider(dim=64, seed=0)
        matrix = line_embeddings(sample, provider)
        assert matrix.shape == (3, 64)
        assert np.array_equal(matrix[1], np.zeros(64))
        assert np.linalg.norm(matrix[0]) > 0

    def test_hash_rows_are_pooled_token_vectors(self):
        sample = Sample(id="s1", code="a b", label=CweClass.CWE_OTHER)
        provider = HashEmbeddingProvider(dim=32, seed=9)
        matrix = line_embeddings(sample, provider)
        expected = pool_mean(embed_tokens_hash(["a", "b"], 32, seed=9))
        assert np.allclose(matrix[0], expected, atol=1e-12)

    def test_file_provider_passthrough(self, tmp_path):
        vectors = np.arange(16, dtype=float).reshape(2, 8)
        path = tmp_path / "embeds.jsonl"
        write_exchange(path, 8, {"s1": vectors})
        provider = load_precomputed(path)
        sample = Sample(id="s1", code="line one;\nline two;", label=CweClass.CWE_119)
        assert np.array_equal(line_embeddings(sample, provider), vectors)

    def test_missing_id_is_lookup_error(self, tmp_path):
        path = tmp_path / "embeds.jsonl"
        write_exchange(path, 8, {"s1": np.zeros((1, 8))})
        sample = Sample(id="s9", code="int x;", label=CweClass.CWE_119)
        with pytest.raises(EmbeddingLookupError, match="s9"):
            line_embeddings(sample, load_precomputed(path))

    def test_line_count_mismatch_is_shape_error(self, tmp_path):
        path = tmp_path / "embeds.jsonl"
        write_exchange(path, 8, {"s1": np.zeros((3, 8))})
        sample = Sample(id="s1", code="int x;", label=CweClass.CWE_119)
        with pytest.raises(ShapeError):
            line_embeddings(sample, load_precomputed(path))

    def test_row_count_equals_split_lines(self):
        provider = HashEmbeddingProvider(dim=16, seed=1)
        rng = np.random.default_rng(21)
        for trial in range(30):
            n = int(rng.integers(1, 9))
            code = "\n".join(f"tok{i};" if rng.random() > 0.2 else "" for i in range(n)) + "\nend;"
            sample = Sample(id=f"s{trial}", code=code, label=CweClass.CWE_OTHER)
            matrix = line_embeddings(sample, provider)
            assert matrix.shape[0] == len(split_lines(sample.code))


class TestExchangeFormat:
    def test_header_dim_readback(self, tmp_path):
        path = tmp_path / "e.jsonl"
        write_exchange(path, 768, {"s1": np.zeros((1, 768))})
        provider = load_precomputed(path)
        assert provider.dim == 768
        assert provider.kind == "file"

    def test_wrong_vector_length_is_dimension_error(self, tmp_path):
        path = tmp_path / "e.jsonl"
        lines = [
            json.dumps({"format": "cgn-embed", "version": 1, "dim": 8}),
            json.dumps({"id": "s1", "line_vectors": [[0.0] * 7]}),
        ]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DimensionError, match="line 2"):
            load_precomputed(path)

    def test_header_only_file_is_valid_and_empty(self, tmp_path):
        path = tmp_path / "e.jsonl"
        path.write_text(json.dumps({"format": "cgn-embed", "version": 1, "dim": 16}) + "\n")
        provider = load_precomputed(path)
        assert provider.records == {}

    def test_malformed_record_reports_line_number(self, tmp_path):
        path = tmp_path / "e.jsonl"
        path.write_text(
            json.dumps({"format": "cgn-embed", "version": 1, "dim": 8}) + "\n{not json\n"
        )
        with pytest.raises(ExchangeFormatError, match="line 2"):
            load_precomputed(path)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "e.jsonl"
        path.write_text(json.dumps({"format": "other", "version": 1, "dim": 8}) + "\n")
        with pytest.raises(ExchangeFormatError):
            load_precomputed(path)

    def test_duplicate_record_id_rejected(self, tmp_path):
        path = tmp_path / "e.jsonl"
        lines = [
            json.dumps({"format": "cgn-embed", "version": 1, "dim": 8}),
            json.dumps({"id": "s1", "line_vectors": [[0.0] * 8]}),
            json.dumps({"id": "s1", "line_vectors": [[1.0] * 8]}),
        ]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DuplicateIdError):
            load_precomputed(path)

    def test_floats_round_trip_exactly(self, tmp_path):
        rng = np.random.default_rng(2)
        vectors = rng.normal(size=(4, 8))
        path = tmp_path / "e.jsonl"
        write_exchange(path, 8, {"s1": vectors})
        assert np.array_equal(load_precomputed(path).records["s1"], vectors)
