"""Line sequence graphs over code snippets.

A snippet of n lines becomes a directed chain graph: vertices 0..n-1, one
edge (i, i+1) between successive lines, and the corresponding 0/1 adjacency
matrix (the superdiagonal shift matrix). A small C-style lexer turns each
line into a token stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInputError

C_KEYWORDS = frozenset(
    """
    auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool _Complex _Imaginary
    """.split()
)

# Two-character operators, matched greedily before single-character punctuation.
MULTI_CHAR_OPERATORS = (
    "->", "==", "<=", ">=", "!=", "&&", "||", "<<", ">>", "++", "--", "+=", "-=",
)

_WHITESPACE = " \t\r\f\v"


@dataclass(frozen=True)
class TokenizedLine:
    line_index: int
    tokens: list[str]


@dataclass(frozen=True)
class LineGraph:
    """Chain graph over n code lines: V = {0..n-1}, E = {(i, i+1) | i < n-1}."""

    n: int

    @property
    def vertices(self) -> range:
        return range(self.n)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, i + 1) for i in range(self.n - 1)]


def split_lines(code: str) -> list[str]:
    """Split code into lines: CRLF normalized to LF, trailing empty lines dropped.

    Interior blank lines are retained; they stay graph nodes so reported line
    numbers match the original file.
    """
    if code == "":
        raise EmptyInputError("cannot split empty code")
    lines = code.replace("\r\n", "\n").split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    return lines


def lex_spans(line: str, in_comment: bool = False) -> tuple[list[tuple[str, int, int]], bool]:
    """Scan one line into (token, start, end) spans.

    ``in_comment`` carries block-comment state across lines: when True the
    scanner first looks for a closing ``*/``. Lexing is total; unterminated
    strings or comments are handled best-effort, never raised.
    """
    spans: list[tuple[str, int, int]] = []
    i = 0
    n = len(line)
    if in_comment:
        close = line.find("*/")
        if close < 0:
            return spans, True
        i = close + 2
    while i < n:
        ch = line[i]
        if ch in _WHITESPACE:
            i += 1
            continue
        if line.startswith("//", i):
            break
        if line.startswith("/*", i):
            close = line.find("*/", i + 2)
            if close < 0:
                return spans, True
            i = close + 2
            continue
        if ch in "\"'":
            end = _scan_quoted(line, i, ch)
            spans.append((line[i:end], i, end))
            i = end
            continue
        if ch.isdigit():
            end = _scan_number(line, i)
            spans.append((line[i:end], i, end))
            i = end
            continue
        if ch.isalpha() or ch == "_":
            end = i + 1
            while end < n and (line[end].isalnum() or line[end] == "_"):
                end += 1
            spans.append((line[i:end], i, end))
            i = end
            continue
        two = line[i : i + 2]
        if two in MULTI_CHAR_OPERATORS:
            spans.append((two, i, i + 2))
            i += 2
            continue
        spans.append((ch, i, i + 1))
        i += 1
    return spans, False


def tokenize_line(line: str, index: int = 0) -> TokenizedLine:
    """Lex a single line (assumed not to start inside a block comment)."""
    spans, _ = lex_spans(line)
    return TokenizedLine(line_index=index, tokens=[tok for tok, _, _ in spans])


def tokenize_snippet(lines: list[str]) -> list[TokenizedLine]:
    """Lex every line of a snippet, carrying block-comment state between lines.

    Lines interior to a multi-line ``/* ... */`` comment yield no tokens but
    remain entries (and therefore graph nodes).
    """
    result = []
    in_comment = False
    for index, line in enumerate(lines):
        spans, in_comment = lex_spans(line, in_comment=in_comment)
        result.append(TokenizedLine(line_index=index, tokens=[tok for tok, _, _ in spans]))
    return result


def build_line_graph(n: int) -> LineGraph:
    if n < 1:
        raise EmptyInputError(f"line graph needs at least one node, got n={n}")
    return LineGraph(n=n)


def adjacency(graph: LineGraph, self_loops: bool = False) -> np.ndarray:
    """The n-by-n 0/1 adjacency matrix of the chain graph.

    With ``self_loops`` the identity is added (an opt-in variant; the default
    is the plain shift matrix).
    """
    a = np.zeros((graph.n, graph.n))
    for i, j in graph.edges:
        a[i, j] = 1.0
    if self_loops:
        a += np.eye(graph.n)
    return a


def _scan_quoted(line: str, start: int, quote: str) -> int:
    i = start + 1
    n = len(line)
    while i < n:
        if line[i] == "\\" and i + 1 < n:
            i += 2
            continue
        if line[i] == quote:
            return i + 1
        i += 1
    # Unterminated: take the rest of the line, minus trailing whitespace so
    # token edges stay clean.
    while n > start + 1 and line[n - 1] in _WHITESPACE:
        n -= 1
    return n


def _scan_number(line: str, start: int) -> int:
    i = start + 1
    n = len(line)
    while i < n:
        ch = line[i]
        if ch.isalnum() or ch in "._":
            i += 1
        elif ch in "+-" and line[i - 1] in "eEpP" and not line[start:i].lower().startswith("0x"):
            i += 1
        else:
            break
    return i
