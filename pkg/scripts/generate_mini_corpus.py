#!/usr/bin/env python3
"""Regenerate the bundled 125-sample mini corpus (5 classes x 25 snippets).

Each class gets synthetic C snippets built around its characteristic calls
(memcpy/strcpy/pointer arithmetic/null dereference/benign code) with seeded
identifier variation, so classifiers trained offline can separate them.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from codegraphnet.corpus import Corpus, CweClass, Sample, save_corpus

OUT = Path(__file__).resolve().parent.parent / "src" / "codegraphnet" / "data" / "mini_corpus.csv"

NAMES = ["buf", "dst", "src", "data", "tmp", "msg", "out", "in_buf", "block", "chunk"]
FUNCS = ["copy_packet", "read_frame", "handle_msg", "parse_hdr", "fill_cache",
         "store_row", "load_conf", "sync_state", "emit_word", "pack_field"]


def snip_119(r: np.random.Generator) -> str:
    name = NAMES[r.integers(len(NAMES))]
    fn = FUNCS[r.integers(len(FUNCS))]
    size = int(r.integers(8, 128))
    extra = int(r.integers(1, 16))
    return "\n".join([
        f"void {fn}(char *{name}, int len) {{",
        f"    char local[{size}];",
        f"    memcpy(local, {name}, len + {extra});",
        f"    local[{size + extra}] = 0;",
        "    process(local);",
        "}",
    ])


def snip_120(r: np.random.Generator) -> str:
    name = NAMES[r.integers(len(NAMES))]
    fn = FUNCS[r.integers(len(FUNCS))]
    size = int(r.integers(8, 64))
    return "\n".join([
        f"void {fn}(const char *{name}) {{",
        f"    char stack[{size}];",
        f"    strcpy(stack, {name});",
        f"    strcat(stack, {name});",
        "    puts(stack);",
        "}",
    ])


def snip_469(r: np.random.Generator) -> str:
    name = NAMES[r.integers(len(NAMES))]
    fn = FUNCS[r.integers(len(FUNCS))]
    step = int(r.integers(2, 9))
    return "\n".join([
        f"int {fn}(int *{name}, int *end) {{",
        f"    int count = end - {name};",
        f"    int bytes = count * sizeof({name});",
        f"    int *mid = {name} + bytes / {step};",
        "    return *mid;",
        "}",
    ])


def snip_476(r: np.random.Generator) -> str:
    name = NAMES[r.integers(len(NAMES))]
    fn = FUNCS[r.integers(len(FUNCS))]
    field = ["next", "size", "value", "head"][r.integers(4)]
    return "\n".join([
        f"int {fn}(struct node *{name}) {{",
        f"    struct node *cur = {name};",
        "    cur = NULL;",
        f"    return cur->{field};",
        "}",
    ])


def snip_other(r: np.random.Generator) -> str:
    name = NAMES[r.integers(len(NAMES))]
    fn = FUNCS[r.integers(len(FUNCS))]
    n = int(r.integers(3, 40))
    return "\n".join([
        f"int {fn}(int {name}) {{",
        "    int total = 0;",
        f"    for (int i = 0; i < {n}; i++) {{",
        f"        total += i * {name};",
        "    }",
        "    return total;",
        "}",
    ])


BUILDERS = {
    CweClass.CWE_119: snip_119,
    CweClass.CWE_120: snip_120,
    CweClass.CWE_469: snip_469,
    CweClass.CWE_476: snip_476,
    CweClass.CWE_OTHER: snip_other,
}


def build_mini_corpus(per_class: int = 25, seed: int = 20240611) -> Corpus:
    r = np.random.default_rng(seed)
    samples = []
    for cls, builder in BUILDERS.items():
        for i in range(per_class):
            samples.append(Sample(id=f"mini-{cls.value}-{i:03d}", code=builder(r), label=cls))
    return Corpus(samples)


if __name__ == "__main__":
    corpus = build_mini_corpus()
    OUT.parent.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, OUT)
    counts = {cls.label: n for cls, n in corpus.class_counts.items()}
    print(f"wrote {len(corpus)} samples to {OUT}: {counts}")
