"""Labeled code corpora: loading, balancing, augmentation and splitting.

A corpus is an ordered list of samples, each a code snippet labeled with one
of five CWE classes. All operations here are pure: they return new corpora
and depend only on their inputs and an explicit seed.
"""

from __future__ import annotations

import csv
import sys
from collections import Counter
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import (
    BalanceError,
    DuplicateIdError,
    LabelError,
    SchemaError,
    StratificationError,
    ValidationError,
)
from .linegraph import lex_spans, split_lines, C_KEYWORDS
from .util import rng as _rng

CSV_COLUMNS = ("id", "code", "label")

# Tokens never removed by augmentation: block/statement structure stays intact
# so the line graph keeps its shape.
STRUCTURAL_TOKENS = frozenset("{}();")


class CweClass(IntEnum):
    """The five vulnerability classes, with stable integer codes 0..4."""

    CWE_119 = 0
    CWE_120 = 1
    CWE_469 = 2
    CWE_476 = 3
    CWE_OTHER = 4

    @property
    def label(self) -> str:
        return CWE_LABELS[self.value]

    @classmethod
    def from_label(cls, text: str) -> "CweClass":
        """Resolve a label string, case-insensitively and ignoring surrounding whitespace."""
        key = text.strip().lower()
        try:
            return _LABEL_TO_CLASS[key]
        except KeyError:
            raise LabelError(f"unknown CWE label {text!r}") from None


CWE_LABELS = ("CWE-119", "CWE-120", "CWE-469", "CWE-476", "CWE-other")
_LABEL_TO_CLASS = {name.lower(): CweClass(code) for code, name in enumerate(CWE_LABELS)}


@dataclass(frozen=True)
class Sample:
    """One labeled code snippet."""

    id: str
    code: str
    label: CweClass

    def validate(self) -> None:
        if not self.code.rstrip():
            raise ValidationError(f"sample {self.id!r} has empty code")
        if not isinstance(self.label, CweClass):
            raise LabelError(f"sample {self.id!r} has invalid label {self.label!r}")


class Corpus:
    """An ordered collection of samples with unique ids.

    ``class_counts`` is always the exact histogram of the samples' labels;
    it is recomputed on construction rather than stored.
    """

    def __init__(self, samples: list[Sample]):
        seen: set[str] = set()
        for sample in samples:
            sample.validate()
            if sample.id in seen:
                raise DuplicateIdError(f"duplicate sample id {sample.id!r}")
            seen.add(sample.id)
        self.samples = list(samples)

    @property
    def class_counts(self) -> dict[CweClass, int]:
        counts = Counter(s.label for s in self.samples)
        return {cls: counts.get(cls, 0) for cls in CweClass}

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def by_class(self) -> dict[CweClass, list[int]]:
        """Indices of samples per class, in corpus order."""
        groups: dict[CweClass, list[int]] = {}
        for i, sample in enumerate(self.samples):
            groups.setdefault(sample.label, []).append(i)
        return groups

    def subset(self, indices) -> "Corpus":
        return Corpus([self.samples[i] for i in indices])


def load_corpus(path, format: str = "csv") -> Corpus:
    """Read a labeled corpus from a CSV file with columns ``id,code,label``.

    Quoted multi-line ``code`` fields are preserved byte-exactly. Row numbers
    in error messages count the header as row 1.
    """
    if format != "csv":
        raise SchemaError(f"unsupported corpus format {format!r}")
    path = Path(path)
    old_limit = csv.field_size_limit()
    csv.field_size_limit(sys.maxsize)
    try:
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path}: empty file, expected header {CSV_COLUMNS}") from None
            for column in CSV_COLUMNS:
                if column not in header:
                    raise SchemaError(f"{path}: missing column {column!r}")
            col = {name: header.index(name) for name in CSV_COLUMNS}
            samples = []
            seen: set[str] = set()
            for row_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) < len(header):
                    raise SchemaError(f"{path}: row {row_no} has {len(row)} fields, expected {len(header)}")
                sid = row[col["id"]]
                code = row[col["code"]]
                try:
                    label = CweClass.from_label(row[col["label"]])
                except LabelError as exc:
                    raise LabelError(f"{path}: row {row_no}: {exc}") from None
                if sid in seen:
                    raise DuplicateIdError(f"{path}: row {row_no}: duplicate id {sid!r}")
                seen.add(sid)
                samples.append(Sample(id=sid, code=code, label=label))
    finally:
        csv.field_size_limit(old_limit)
    return Corpus(samples)


def save_corpus(corpus: Corpus, path) -> None:
    """Write a corpus back out in the same CSV schema ``load_corpus`` reads."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for sample in corpus:
            writer.writerow([sample.id, sample.code, sample.label.label])


def augment(sample: Sample, dropout_rate: float, seed: int) -> Sample:
    """Return a copy of ``sample`` with random non-structural tokens removed.

    Each token that is neither brace/paren/semicolon punctuation nor a C
    keyword is dropped independently with probability ``dropout_rate``.
    Tokens are removed in place from the original text, so spacing and line
    structure survive and a rate of 0 reproduces the input exactly. The line
    count (as seen by ``split_lines``) never changes.
    """
    if not 0.0 <= dropout_rate < 1.0:
        raise ValidationError(f"dropout_rate must be in [0, 1), got {dropout_rate}")
    sample.validate()
    if dropout_rate == 0.0:
        return Sample(id=sample.id, code=sample.code, label=sample.label)

    rng = _rng(seed)
    raw_lines = sample.code.split("\n")
    original_n = len(split_lines(sample.code))

    new_lines = list(raw_lines)
    in_comment = False
    last_content_idx = -1
    for i, line in enumerate(raw_lines):
        spans, in_comment = lex_spans(line, in_comment=in_comment)
        if spans:
            last_content_idx = i
        kept = line
        # Delete right-to-left so earlier spans stay valid.
        for token, start, end in reversed(spans):
            if token in STRUCTURAL_TOKENS or token in C_KEYWORDS:
                continue
            if rng.random() < dropout_rate:
                kept = kept[:start] + kept[end:]
        new_lines[i] = kept

    code = "\n".join(new_lines)
    if len(split_lines(code)) != original_n and last_content_idx >= 0:
        # Dropping every token of the final content line would let trailing
        # blank lines collapse; restore that line instead.
        new_lines[last_content_idx] = raw_lines[last_content_idx]
        code = "\n".join(new_lines)
    return Sample(id=sample.id, code=code, label=sample.label)


def balance(corpus: Corpus, strategy: str, target: int | None = None, seed: int = 0) -> Corpus:
    """Equalize class counts by downsampling or by augmentation-based upsampling.

    The per-class target T is ``target`` when given, otherwise the minimum
    (downsample) or maximum (upsample_augment) count among classes present in
    the corpus. Classes absent from the corpus are left absent. Upsampled
    copies get fresh ids suffixed ``-augN``.
    """
    if len(corpus) == 0:
        raise ValidationError("cannot balance an empty corpus")
    if strategy not in ("downsample", "upsample_augment"):
        raise ValidationError(f"unknown balance strategy {strategy!r}")
    if target is not None and target < 1:
        raise ValidationError(f"balance target must be >= 1, got {target}")

    groups = corpus.by_class()
    counts = {cls: len(idx) for cls, idx in groups.items()}
    if target is not None:
        t = target
    elif strategy == "downsample":
        t = min(counts.values())
    else:
        t = max(counts.values())

    rng = _rng(seed)
    kept_indices: list[int] = []
    augmented: list[Sample] = []
    used_ids = {s.id for s in corpus}
    for cls in sorted(groups):
        indices = groups[cls]
        count = len(indices)
        if count > t:
            chosen = rng.choice(count, size=t, replace=False)
            kept_indices.extend(indices[i] for i in sorted(chosen))
        else:
            kept_indices.extend(indices)
            deficit = t - count
            if deficit > 0 and strategy == "downsample":
                raise BalanceError(
                    f"class {cls.label} has {count} samples, cannot downsample to {t}"
                )
            for k in range(deficit):
                source = corpus.samples[indices[int(rng.integers(count))]]
                new_id = f"{source.id}-aug{k}"
                suffix = k
                while new_id in used_ids:
                    suffix += deficit
                    new_id = f"{source.id}-aug{suffix}"
                used_ids.add(new_id)
                copy = augment(source, dropout_rate=0.05, seed=int(rng.integers(2**63)))
                augmented.append(Sample(id=new_id, code=copy.code, label=copy.label))

    kept_indices.sort()
    return Corpus([corpus.samples[i] for i in kept_indices] + augmented)


def split(corpus: Corpus, test_fraction: float, seed: int) -> tuple[Corpus, Corpus]:
    """Stratified train/test split.

    Per class the test size is round-half-up of ``count * test_fraction``;
    the largest class is then adjusted so the global test size equals
    round-half-up of ``total * test_fraction`` exactly.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError(f"test_fraction must be in (0, 1), got {test_fraction}")
    groups = corpus.by_class()
    for cls, indices in groups.items():
        if len(indices) < 2:
            raise StratificationError(f"class {cls.label} has {len(indices)} sample(s), need >= 2")

    test_sizes = {cls: _round_half_up(len(idx) * test_fraction) for cls, idx in groups.items()}
    global_target = _round_half_up(len(corpus) * test_fraction)
    diff = global_target - sum(test_sizes.values())
    if diff != 0:
        largest = max(groups, key=lambda cls: (len(groups[cls]), -cls.value))
        adjusted = test_sizes[largest] + diff
        test_sizes[largest] = min(max(adjusted, 0), len(groups[largest]))

    rng = _rng(seed)
    test_idx: set[int] = set()
    for cls in sorted(groups):
        indices = np.array(groups[cls])
        perm = rng.permutation(len(indices))
        test_idx.update(int(i) for i in indices[perm[: test_sizes[cls]]])

    train = corpus.subset([i for i in range(len(corpus)) if i not in test_idx])
    test = corpus.subset([i for i in range(len(corpus)) if i in test_idx])
    return train, test


def kfold_partition(corpus: Corpus, k: int, seed: int) -> list[set[int]]:
    """Stratified k-fold partition of sample indices.

    Folds are disjoint, cover the corpus, and within every class the fold
    sizes differ by at most one. Classes are dealt round-robin with a
    per-class starting offset so remainders spread across folds.
    """
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    groups = corpus.by_class()
    for cls, indices in groups.items():
        if len(indices) < k:
            raise StratificationError(
                f"class {cls.label} has {len(indices)} sample(s), need >= {k} for {k} folds"
            )

    rng = _rng(seed)
    folds: list[set[int]] = [set() for _ in range(k)]
    for offset, cls in enumerate(sorted(groups)):
        indices = np.array(groups[cls])
        perm = rng.permutation(len(indices))
        for j, i in enumerate(indices[perm]):
            folds[(j + offset) % k].add(int(i))
    return folds


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


