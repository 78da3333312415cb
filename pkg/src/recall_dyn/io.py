"""Pattern and weight file formats.

Pattern file: one pattern per line, space-separated one-based minicolumn
indices; blank lines and ``#`` comments are skipped.

Weight file: first line ``n m``, then mn lines of mn comma-separated values
written with 17 significant digits.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InputError
from .learning import Pattern
from .model import WeightMatrix


def parse_patterns(text: str, path=None) -> list[Pattern]:
    patterns = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            values = tuple(int(tok) for tok in tokens)
        except ValueError:
            bad = next(t for t in tokens if not t.lstrip("+-").isdigit())
            raise InputError(f"non-integer entry {bad!r} in pattern {raw.strip()!r}", lineno, path) from None
        if any(v < 1 for v in values):
            raise InputError(f"minicolumn indices are one-based, got {raw.strip()!r}", lineno, path)
        if width is not None and len(values) != width:
            raise InputError(f"pattern has {len(values)} entries, previous patterns have {width}",
                             lineno, path)
        width = len(values)
        patterns.append(Pattern(values))
    if not patterns:
        raise InputError("no patterns found", path=path)
    return patterns


def read_patterns(path) -> list[Pattern]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read pattern file: {exc.strerror}", path=path) from None
    return parse_patterns(text, path)


def format_patterns(patterns) -> str:
    return "".join(f"{p}\n" for p in patterns)


def format_weights(W: WeightMatrix) -> str:
    n, m = W.dims
    lines = [f"{n} {m}"]
    lines += [",".join("%.17g" % v for v in row) for row in W.entries]
    return "\n".join(lines) + "\n"


def write_weights(W: WeightMatrix, path) -> None:
    Path(path).write_text(format_weights(W))


def parse_weights(text: str, path=None) -> WeightMatrix:
    lines = [ln for ln in text.splitlines()]
    if not lines:
        raise InputError("empty weight file", path=path)
    head = lines[0].split()
    try:
        n, m = (int(t) for t in head)
    except ValueError:
        raise InputError(f"header must be 'n m', got {lines[0]!r}", 1, path) from None
    if n < 1 or m < 2:
        raise InputError(f"invalid dimensions n={n}, m={m}", 1, path)
    size = n * m
    rows = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            row = [float(tok) for tok in raw.split(",")]
        except ValueError:
            raise InputError(f"non-numeric entry in {raw.strip()[:40]!r}", lineno, path) from None
        if len(row) != size:
            raise InputError(f"row has {len(row)} entries, expected {size}", lineno, path)
        rows.append(row)
    if len(rows) != size:
        raise InputError(f"found {len(rows)} rows, expected {size}", path=path)
    return WeightMatrix(np.array(rows), n, m)


def read_weights(path) -> WeightMatrix:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read weight file: {exc.strerror}", path=path) from None
    return parse_weights(text, path)
