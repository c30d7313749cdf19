"""Plain-text matrix and vector formats, JSON helpers, atomic writes.

Matrix files: first line ``n p m`` (whitespace-separated integers), then n
rows of p decimal values.  Vector files: first line ``p m k``, second line
the k supported block indices (0-based, ascending; empty line when k = 0),
then the p coefficient values, one per line.  Floats are printed with 17
significant digits so that files round-trip exactly.

All writers go through a temp-file-plus-rename so a failed write never
leaves a partial file behind.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .errors import InputError
from .metrics import Dictionary
from .signals import BlockSparseSignal


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path: str) -> dict:
    with open(path) as handle:
        return json.load(handle)


def matrix_to_text(d: Dictionary) -> str:
    lines = [f"{d.n} {d.p} {d.block_size}"]
    for row in d.entries:
        lines.append(" ".join(fmt_float(x) for x in row))
    return "\n".join(lines) + "\n"


def write_matrix(path: str, d: Dictionary) -> None:
    atomic_write_text(path, matrix_to_text(d))


def read_matrix(path: str, block_size: int | None = None) -> Dictionary:
    """Parse a matrix file; ``block_size`` overrides the header's m."""
    with open(path) as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise InputError(f"{path}: empty matrix file")
    header = lines[0].split()
    if len(header) != 3:
        raise InputError(f"{path}:1: expected header 'n p m', got {lines[0]!r}")
    try:
        n, p, m = (int(tok) for tok in header)
    except ValueError:
        raise InputError(f"{path}:1: header fields must be integers") from None
    if block_size is not None:
        m = block_size
    rows = []
    for idx in range(1, n + 1):
        if idx >= len(lines):
            raise InputError(f"{path}:{idx + 1}: expected {n} matrix rows, found {idx - 1}")
        tokens = lines[idx].split()
        if len(tokens) != p:
            raise InputError(
                f"{path}:{idx + 1}: expected {p} values, found {len(tokens)}"
            )
        try:
            rows.append([float(tok) for tok in tokens])
        except ValueError:
            raise InputError(f"{path}:{idx + 1}: non-numeric matrix entry") from None
    return Dictionary.from_entries(np.asarray(rows), m)


def vector_to_text(s: BlockSparseSignal) -> str:
    lines = [f"{s.p} {s.block_size} {s.k}"]
    lines.append(" ".join(str(i) for i in s.support))
    lines.extend(fmt_float(x) for x in s.beta)
    return "\n".join(lines) + "\n"


def write_vector(path: str, s: BlockSparseSignal) -> None:
    atomic_write_text(path, vector_to_text(s))


def read_vector(path: str) -> BlockSparseSignal:
    with open(path) as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise InputError(f"{path}: empty vector file")
    header = lines[0].split()
    if len(header) != 3:
        raise InputError(f"{path}:1: expected header 'p m k', got {lines[0]!r}")
    try:
        p, m, k = (int(tok) for tok in header)
    except ValueError:
        raise InputError(f"{path}:1: header fields must be integers") from None
    if len(lines) < 2:
        raise InputError(f"{path}:2: missing support line")
    support_tokens = lines[1].split()
    if len(support_tokens) != k:
        raise InputError(
            f"{path}:2: expected {k} support indices, found {len(support_tokens)}"
        )
    try:
        support = tuple(int(tok) for tok in support_tokens)
    except ValueError:
        raise InputError(f"{path}:2: support indices must be integers") from None
    values = []
    for idx in range(2, len(lines)):
        for tok in lines[idx].split():
            try:
                values.append(float(tok))
            except ValueError:
                raise InputError(f"{path}:{idx + 1}: non-numeric value") from None
    if len(values) != p:
        raise InputError(f"{path}: expected {p} values, found {len(values)}")
    return BlockSparseSignal(np.asarray(values), m, support)


def observation_to_signal(y: np.ndarray) -> BlockSparseSignal:
    """Wrap a plain vector in the vector format (m = 1, empty support)."""
    y = np.asarray(y, dtype=float)
    support = tuple(int(i) for i in np.flatnonzero(y))
    return BlockSparseSignal(y, 1, support)
