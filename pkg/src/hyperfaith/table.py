"""
Binary K-way contingency tables.

Cells are ordered lexicographically with the last variable varying
fastest, so for K = 3 the cell (0, 0, 1) has index 1 and (1, 0, 0) has
index 4.  This order is part of every file format the package reads or
writes.

Internally a subset of variables is often encoded as a bit mask that uses
the same convention as the cell index: variable ``v`` (0-based) owns bit
``K - 1 - v``.  With that choice a cell index doubles as the mask of the
variables sitting at level 1, which makes the corner parameterization a
plain subset-sum transform.
"""

from __future__ import annotations

import csv
import io
import itertools
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAX_VARIABLES = 20
PROB_TOL = 1e-12


class TableFormatError(ValueError):
    """Raised when a table file cannot be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def default_labels(k: int) -> tuple[str, ...]:
    """A, B, C, ... for up to 26 variables, then V1, V2, ..."""
    if k <= 26:
        return tuple(string.ascii_uppercase[:k])
    return tuple(f"V{i + 1}" for i in range(k))


def check_k(k: int) -> int:
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise TypeError(f"number of variables must be an integer, got {k!r}")
    if k < 1 or k > MAX_VARIABLES:
        raise ValueError(
            f"number of variables must be between 1 and {MAX_VARIABLES}, got {k}"
        )
    return int(k)


def cell_of_index(idx: int, k: int) -> tuple[int, ...]:
    """Levels ``(i_1, ..., i_K)`` of the cell with lexicographic index ``idx``."""
    k = check_k(k)
    if idx < 0 or idx >= 1 << k:
        raise IndexError(f"cell index {idx} out of range for K={k}")
    return tuple((idx >> (k - 1 - v)) & 1 for v in range(k))


def index_of_cell(cell: Sequence[int]) -> int:
    check_k(len(cell))
    idx = 0
    for level in cell:
        if level not in (0, 1):
            raise ValueError(f"binary levels only, got {level!r} in {tuple(cell)}")
        idx = (idx << 1) | int(level)
    return idx


def cell_label(idx: int, k: int) -> str:
    return "".join(str(b) for b in cell_of_index(idx, k))


def marginal_set(vars: Iterable[int], k: int) -> tuple[int, ...]:
    """Validate and canonicalize a set of 0-based variable indices."""
    vs = [int(v) for v in vars]
    if len(set(vs)) != len(vs):
        raise ValueError(f"duplicate variables in marginal {vs}")
    for v in vs:
        if v < 0 or v >= k:
            raise ValueError(f"variable {v} out of range for K={k}")
    return tuple(sorted(vs))


def subset_mask(vars: Iterable[int], k: int) -> int:
    mask = 0
    for v in marginal_set(vars, k):
        mask |= 1 << (k - 1 - v)
    return mask


def mask_vars(mask: int, k: int) -> tuple[int, ...]:
    return tuple(v for v in range(k) if mask >> (k - 1 - v) & 1)


def parse_vars(spec: str | Iterable, labels: Sequence[str]) -> tuple[int, ...]:
    """Turn ``"AB"``, ``["A", "B"]`` or ``[0, 1]`` into sorted variable indices."""
    if isinstance(spec, str):
        if all(len(lab) == 1 for lab in labels):
            items: list = list(spec)
        else:
            items = [s for s in spec.replace(",", " ").split() if s]
    else:
        items = list(spec)
    out = []
    for it in items:
        if isinstance(it, (int, np.integer)) and not isinstance(it, bool):
            out.append(int(it))
        elif it in labels:
            out.append(labels.index(it))
        else:
            raise ValueError(f"unknown variable {it!r}; known: {list(labels)}")
    return marginal_set(out, len(labels))


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class JointDistribution:
    """Strictly positive distribution over the 2^K cells."""

    p: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        p = np.array(self.p, dtype=float).ravel()
        k = int(round(np.log2(p.size))) if p.size else 0
        if p.size < 2 or 1 << k != p.size:
            raise ValueError(f"length {p.size} is not 2^K for any K >= 1")
        check_k(k)
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            bad = int(np.flatnonzero(~(p > 0))[0])
            raise ValueError(f"non-positive cell {cell_label(bad, k)}")
        if abs(p.sum() - 1.0) > PROB_TOL * max(1.0, p.size / 1e3):
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        labels = tuple(self.labels) or default_labels(k)
        if len(labels) != k:
            raise ValueError(f"{len(labels)} labels for {k} variables")
        object.__setattr__(self, "p", _readonly(p))
        object.__setattr__(self, "labels", labels)

    @property
    def k(self) -> int:
        return self.p.size.bit_length() - 1

    @classmethod
    def from_weights(cls, w, labels: Sequence[str] = ()) -> "JointDistribution":
        """Normalize positive weights into a distribution."""
        w = np.asarray(w, dtype=float)
        return cls(w / w.sum(), tuple(labels))

    def as_array(self) -> np.ndarray:
        """View as a ``(2,) * K`` array indexed by levels."""
        return self.p.reshape((2,) * self.k)


@dataclass(frozen=True)
class CountTable:
    """Observed cell counts of a multinomial sample."""

    n: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        raw = np.asarray(self.n)
        if raw.dtype.kind == "f":
            if not np.all(np.isfinite(raw)) or np.any(raw != np.round(raw)):
                raise ValueError("counts must be integers")
        n = np.array(raw, dtype=np.int64).ravel()
        k = n.size.bit_length() - 1
        if n.size < 2 or 1 << k != n.size:
            raise ValueError(f"length {n.size} is not 2^K for any K >= 1")
        check_k(k)
        if np.any(n < 0):
            raise ValueError(f"negative count in cell {cell_label(int(np.argmin(n)), k)}")
        if n.sum() <= 0:
            raise ValueError("total count is zero")
        labels = tuple(self.labels) or default_labels(k)
        if len(labels) != k:
            raise ValueError(f"{len(labels)} labels for {k} variables")
        object.__setattr__(self, "n", _readonly(n))
        object.__setattr__(self, "labels", labels)

    @property
    def k(self) -> int:
        return self.n.size.bit_length() - 1

    @property
    def N(self) -> int:
        return int(self.n.sum())

    def empirical(self, smoothing: bool = False) -> JointDistribution:
        """Relative frequencies n_i / N.

        With ``smoothing`` every count is increased by 0.5 first.  Without
        it a zero cell is an error.
        """
        n = self.n.astype(float)
        if smoothing:
            n = n + 0.5
        elif np.any(self.n == 0):
            zero = int(np.flatnonzero(self.n == 0)[0])
            raise ValueError(f"zero cell {cell_label(zero, self.k)}")
        return JointDistribution(n / n.sum(), self.labels)


def from_counts(
    counts: Sequence[int],
    k: int,
    smoothing: bool = False,
    labels: Sequence[str] = (),
) -> tuple[CountTable, JointDistribution]:
    """Build a count table and its empirical distribution."""
    k = check_k(k)
    counts = np.asarray(counts)
    if counts.size != 1 << k:
        raise ValueError(f"expected {1 << k} counts for K={k}, got {counts.size}")
    table = CountTable(counts, tuple(labels))
    return table, table.empirical(smoothing)


def marginal(p, m: Iterable[int]) -> np.ndarray:
    """Marginal probabilities of the variables in ``m``.

    ``p`` may be a :class:`JointDistribution` or any array of 2^K cell
    values (counts work too).  The result lists the 2^|M| marginal cells
    in lexicographic order; for ``m`` empty it is the single total.
    """
    arr = p.p if isinstance(p, JointDistribution) else np.asarray(p, dtype=float)
    k = arr.size.bit_length() - 1
    keep = marginal_set(m, k)
    drop = tuple(v for v in range(k) if v not in keep)
    return arr.reshape((2,) * k).sum(axis=drop).reshape(-1)


# --------------------------------------------------------------------------
# CSV ingestion / emission


def _parse_number(text: str, line: int) -> float:
    try:
        x = float(text)
    except ValueError:
        raise TableFormatError(f"not a number: {text!r}", line) from None
    if not np.isfinite(x) or x < 0:
        raise TableFormatError(f"counts must be finite and non-negative, got {text!r}", line)
    return x


def parse_table(text: str) -> tuple[np.ndarray, tuple[str, ...]]:
    """Parse a table from CSV text.

    Two layouts are accepted:

    * a header naming K level columns plus a ``count`` column, then one row
      per cell in any order; cells that do not appear get count 0;
    * a bare list of 2^K counts in lexicographic cell order, separated by
      commas and/or newlines, optionally under a single ``count`` header.

    Returns the cell values (floats, so probability tables also load) and
    the variable labels.
    """
    rows = [
        (lineno, [c.strip() for c in row])
        for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1)
        if row and any(c.strip() for c in row) and not row[0].lstrip().startswith("#")
    ]
    if not rows:
        raise TableFormatError("empty table")
    first_line, header = rows[0]
    has_header = any(_is_label(c) for c in header)
    if has_header and len(header) > 1:
        return _parse_long(rows)
    body = rows[1:] if has_header else rows
    if has_header and [c.lower() for c in header] != ["count"]:
        raise TableFormatError(f"unexpected header {header}", first_line)
    values = [_parse_number(c, ln) for ln, row in body for c in row if c != ""]
    k = len(values).bit_length() - 1
    if len(values) < 2 or 1 << k != len(values):
        raise TableFormatError(f"{len(values)} counts is not 2^K for any K >= 1")
    check_k(k)
    return np.array(values), default_labels(k)


def _is_label(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return True
    return False


def _parse_long(rows) -> tuple[np.ndarray, tuple[str, ...]]:
    header_line, header = rows[0]
    lower = [c.lower() for c in header]
    if "count" not in lower:
        raise TableFormatError("header needs a 'count' column", header_line)
    ci = lower.index("count")
    labels = tuple(c for i, c in enumerate(header) if i != ci)
    if len(set(labels)) != len(labels) or any(not c for c in labels):
        raise TableFormatError(f"bad variable columns {list(labels)}", header_line)
    k = len(labels)
    try:
        check_k(k)
    except ValueError as exc:
        raise TableFormatError(str(exc), header_line) from None
    values = np.zeros(1 << k)
    seen: dict[int, int] = {}
    for lineno, row in rows[1:]:
        if len(row) != len(header):
            raise TableFormatError(f"expected {len(header)} fields, got {len(row)}", lineno)
        levels = [c for i, c in enumerate(row) if i != ci]
        if any(c not in ("0", "1") for c in levels):
            raise TableFormatError(f"levels must be 0 or 1, got {levels}", lineno)
        idx = index_of_cell([int(c) for c in levels])
        if idx in seen:
            raise TableFormatError(f"cell {''.join(levels)} repeats line {seen[idx]}", lineno)
        seen[idx] = lineno
        values[idx] = _parse_number(row[ci], lineno)
    return values, labels


def read_table(path: str | Path) -> tuple[np.ndarray, tuple[str, ...]]:
    return parse_table(Path(path).read_text())


def format_table(values, labels: Sequence[str] = (), column: str = "count") -> str:
    """Emit cell values in the long layout (one row per cell)."""
    values = np.asarray(values).ravel()
    k = values.size.bit_length() - 1
    labels = tuple(labels) or default_labels(k)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([*labels, column])
    integral = values.dtype.kind in "iu"
    for idx, cell in enumerate(itertools.product((0, 1), repeat=k)):
        v = values[idx]
        w.writerow([*cell, int(v) if integral else format_float(v)])
    return out.getvalue()


def format_float(x: float) -> str:
    return f"{float(x):.15g}"
