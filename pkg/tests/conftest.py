from pathlib import Path

import numpy as np
import pytest

from codegraphnet.corpus import Corpus, CweClass, Sample

MINI_CORPUS = Path(__file__).resolve().parent.parent / "src" / "codegraphnet" / "data" / "mini_corpus.csv"


@pytest.fixture(scope="session")
def mini_corpus_path() -> Path:
    assert MINI_CORPUS.exists(), "bundled mini corpus missing"
    return MINI_CORPUS


def make_sample(i: int, code: str, cls: CweClass = CweClass.CWE_119) -> Sample:
    return Sample(id=f"s{i}", code=code, label=cls)


def random_corpus(rng: np.random.Generator, class_sizes: dict[CweClass, int]) -> Corpus:
    """A corpus of small random snippets with the given per-class counts."""
    words = ["alpha", "beta", "gamma", "delta", "memcpy", "strcpy", "x", "y", "ptr", "len"]
    samples = []
    i = 0
    for cls, count in class_sizes.items():
        for _ in range(count):
            n_lines = int(rng.integers(1, 6))
            lines = [
                " ".join(words[int(rng.integers(len(words)))] for _ in range(int(rng.integers(1, 5))))
                + ";"
                for _ in range(n_lines)
            ]
            samples.append(Sample(id=f"r{i}", code="\n".join(lines), label=cls))
            i += 1
    return Corpus(samples)
