"""
Corner parameterization of binary log-linear models.

Every positive distribution on a binary K-way table can be written as

    log p_i = sum over S with i_v = 1 for all v in S of gamma_S,

one parameter per subset S of the variables, with level 0 as the baseline
of every variable.  The matrix of this linear map is the design matrix
returned by :func:`design_matrix`; its inverse is the Moebius transform
over the subset lattice, which is how :func:`interaction_vector` computes
the parameters.

Conditional odds ratios and the faithful hypergraph
---------------------------------------------------
Fix a target set S and a level assignment ``i`` to the remaining
variables R.  Applying the Moebius transform along the axes of S alone
gives the log conditional odds ratio of S at ``i``:

    log COR(S | R = i) = sum over T subset of {v in R : i_v = 1} of gamma_{S u T}.

Hence the log COR of S vanishes at *every* conditioning cell if and only
if gamma_{S'} = 0 for every superset S' of S.  One direction is immediate.
For the other, induct on the number of ones in ``i``: at i = 0 the sum is
gamma_S alone; at a cell with ones on T every term except gamma_{S u T}
has already been shown to vanish, so gamma_{S u T} does too.

The set of S whose conditional odds ratios all equal one is therefore
closed upward (an ascending class), and its complement is generated by
the maximal S with gamma_S != 0.  :func:`faithful_hypergraph` builds the
ascending class, takes the maximal elements of the complement, and
returns them as hyperedges.

Sign convention.  ``log_cond_odds_ratio`` and the ``gamma`` values put
the all-ones cell of the target in the numerator, so that at the all-zeros
conditioning cell the log COR of S equals gamma_S.  The classical ratio
shown for 2x2x2 sub-tables often puts the all-zeros cell in the
numerator instead; :func:`cond_odds_ratio` returns that form.  The two
agree when |S| is even and are reciprocal when |S| is odd.
"""

from __future__ import annotations

import csv
import io
import itertools
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .hypergraph import Hypergraph, maximal_sets, subset_key
from .table import (
    JointDistribution,
    check_k,
    default_labels,
    format_float,
    marginal_set,
    mask_vars,
    parse_vars,
    subset_mask,
)

DEFAULT_TOL = 1e-10
DESIGN_MAX_K = 13


def canonical_subsets(k: int) -> list[tuple[int, ...]]:
    """All subsets of range(k), ordered by size then lexicographically."""
    return [c for r in range(k + 1) for c in itertools.combinations(range(k), r)]


def canonical_masks(k: int) -> np.ndarray:
    return np.array([subset_mask(s, k) for s in canonical_subsets(k)], dtype=np.int64)


def design_matrix(k: int) -> np.ndarray:
    """Corner design matrix: rows are cells, columns subsets in canonical order.

    Entry (i, S) is 1 when every variable of S sits at level 1 in cell i.
    """
    k = check_k(k)
    if k > DESIGN_MAX_K:
        raise ValueError(
            f"dense design matrix limited to K <= {DESIGN_MAX_K}; "
            "use interaction_vector for larger tables"
        )
    cells = np.arange(1 << k, dtype=np.int64)[:, None]
    cols = canonical_masks(k)[None, :]
    return ((cells & cols) == cols).astype(np.int8)


def mobius(values: np.ndarray, k: int, axes: Iterable[int] | None = None) -> np.ndarray:
    """Subset-difference transform along the trailing 2^K axis.

    ``values`` has shape ``(..., 2**k)``.  With ``axes`` given, only those
    variables are transformed.
    """
    lead = values.shape[:-1]
    a = np.array(values, dtype=float).reshape(lead + (2,) * k)
    off = len(lead)
    for v in range(k) if axes is None else axes:
        ax = off + v
        hi = [slice(None)] * a.ndim
        lo = [slice(None)] * a.ndim
        hi[ax], lo[ax] = 1, 0
        a[tuple(hi)] -= a[tuple(lo)]
    return a.reshape(lead + (1 << k,))


def zeta(values: np.ndarray, k: int) -> np.ndarray:
    """Inverse of :func:`mobius`: sums over subsets."""
    lead = values.shape[:-1]
    a = np.array(values, dtype=float).reshape(lead + (2,) * k)
    off = len(lead)
    for v in range(k):
        ax = off + v
        hi = [slice(None)] * a.ndim
        lo = [slice(None)] * a.ndim
        hi[ax], lo[ax] = 1, 0
        a[tuple(hi)] += a[tuple(lo)]
    return a.reshape(lead + (1 << k,))


@dataclass(frozen=True)
class InteractionVector:
    """All 2^K corner interaction parameters.

    ``gamma`` is indexed by subset mask, i.e. position ``j`` holds the
    parameter of the variables at level 1 in cell ``j``.  Use indexing by
    labels (``iv["AB"]``) or :meth:`items` for canonical order.
    """

    gamma: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float).ravel()
        k = g.size.bit_length() - 1
        if 1 << k != g.size:
            raise ValueError(f"expected 2^K parameters, got {g.size}")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "labels", tuple(self.labels) or default_labels(k))

    @property
    def k(self) -> int:
        return len(self.labels)

    def __getitem__(self, subset) -> float:
        return float(self.gamma[subset_mask(parse_vars(subset, self.labels), self.k)])

    def __len__(self) -> int:
        return self.gamma.size

    def subset_label(self, subset: Iterable[int]) -> str:
        names = [self.labels[v] for v in sorted(subset)]
        return ("" if all(len(n) == 1 for n in self.labels) else ",").join(names)

    def items(self) -> list[tuple[frozenset[int], float]]:
        return [
            (frozenset(s), float(self.gamma[subset_mask(s, self.k)]))
            for s in canonical_subsets(self.k)
        ]

    def canonical(self) -> np.ndarray:
        """Parameters in design-matrix column order."""
        return self.gamma[canonical_masks(self.k)]

    def log_p(self) -> np.ndarray:
        return zeta(self.gamma, self.k)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["subset", "gamma"])
        for s, g in self.items():
            w.writerow([self.subset_label(s) if s else "", format_float(g)])
        return out.getvalue()


def _log_p(p) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(p, JointDistribution):
        return np.log(p.p), p.labels
    arr = np.asarray(p, dtype=float).ravel()
    if np.any(arr <= 0):
        raise ValueError("distribution must be strictly positive")
    k = arr.size.bit_length() - 1
    return np.log(arr), default_labels(k)


def interaction_vector(p) -> InteractionVector:
    """Corner parameters gamma = D^{-1} log p via the Moebius transform."""
    logp, labels = _log_p(p)
    return InteractionVector(mobius(logp, len(labels)), labels)


@dataclass(frozen=True)
class CondOddsRatioSpec:
    """A target set and a level assignment to the remaining variables.

    ``conditioning`` lists levels of the complement variables in
    increasing variable order.
    """

    target: tuple[int, ...]
    conditioning: tuple[int, ...]
    k: int

    def __post_init__(self):
        target = marginal_set(self.target, self.k)
        if not target:
            raise ValueError("target set must be nonempty")
        cond = tuple(int(c) for c in self.conditioning)
        if len(cond) != self.k - len(target):
            raise ValueError(
                f"conditioning cell needs {self.k - len(target)} levels, got {len(cond)}"
            )
        if any(c not in (0, 1) for c in cond):
            raise ValueError(f"conditioning levels must be 0 or 1, got {cond}")
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "conditioning", cond)

    @property
    def rest(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.k) if v not in self.target)

    @classmethod
    def make(
        cls, target, conditioning: Mapping | Sequence[int] | None, labels: Sequence[str]
    ) -> "CondOddsRatioSpec":
        """Build from labels; ``conditioning`` may map labels to levels."""
        k = len(labels)
        t = parse_vars(target, labels)
        rest = [v for v in range(k) if v not in t]
        if conditioning is None:
            cond: tuple[int, ...] = (0,) * len(rest)
        elif isinstance(conditioning, Mapping):
            by_var = {parse_vars([key], labels)[0]: lvl for key, lvl in conditioning.items()}
            if set(by_var) != set(rest):
                raise ValueError(
                    f"conditioning must assign exactly {[labels[v] for v in rest]}"
                )
            cond = tuple(by_var[v] for v in rest)
        else:
            cond = tuple(conditioning)
        return cls(t, cond, k)


def log_cond_odds_ratios(p, target) -> np.ndarray:
    """Log conditional odds ratios of ``target`` at every conditioning cell.

    Returned in lexicographic order of the complement's cells.
    """
    logp, labels = _log_p(p)
    k = len(labels)
    t = parse_vars(target, labels)
    if not t:
        raise ValueError("target set must be nonempty")
    a = mobius(logp, k, axes=t).reshape((2,) * k)
    idx = tuple(1 if v in t else slice(None) for v in range(k))
    return np.asarray(a[idx], dtype=float).reshape(-1)


def log_cond_odds_ratio(p, spec: CondOddsRatioSpec) -> float:
    """Alternating sum of log p over the target's sub-cube at one cell.

    Cells with an even number of zeros among the target coordinates carry
    a plus sign, so the all-ones cell is always in the numerator.
    """
    logp, labels = _log_p(p)
    if spec.k != len(labels):
        raise ValueError(f"spec is for K={spec.k}, distribution has K={len(labels)}")
    a = logp.reshape((2,) * spec.k)
    total = 0.0
    h = len(spec.target)
    for levels in itertools.product((0, 1), repeat=h):
        cell = [0] * spec.k
        for v, lv in zip(spec.target, levels):
            cell[v] = lv
        for v, lv in zip(spec.rest, spec.conditioning):
            cell[v] = lv
        sign = -1.0 if (h - sum(levels)) % 2 else 1.0
        total += sign * a[tuple(cell)]
    return float(total)


def cond_odds_ratio(p, spec: CondOddsRatioSpec) -> float:
    """Conditional odds ratio with the all-zeros target cell in the numerator."""
    sign = -1.0 if len(spec.target) % 2 else 1.0
    return float(np.exp(sign * log_cond_odds_ratio(p, spec)))


def average_log_cond_odds_ratio(p, target) -> float:
    """Mean of the log conditional odds ratios over all conditioning cells."""
    return float(np.mean(log_cond_odds_ratios(p, target)))


def vanishing_ascending_class(iv: InteractionVector, tol: float = DEFAULT_TOL) -> set[int]:
    """Masks S with |gamma_{S'}| <= tol for every superset S' of S.

    Equivalently the subsets whose conditional odds ratios equal one at
    every conditioning cell.
    """
    k = iv.k
    up = (np.abs(iv.gamma) <= tol).reshape((2,) * k)
    # superset-AND transform: a set vanishes upward if it and S u {v} do
    for v in range(k):
        lo = [slice(None)] * k
        hi = [slice(None)] * k
        lo[v], hi[v] = 0, 1
        up[tuple(lo)] &= up[tuple(hi)]
    return set(np.flatnonzero(up.reshape(-1)).tolist())


def faithful_hypergraph(p, tol: float = DEFAULT_TOL) -> Hypergraph:
    """Hypergraph whose hyperedges are the maximal non-vanishing interactions.

    The distribution is faithful to the result: every hyperedge carries a
    conditional odds ratio different from one, and every set outside the
    generated descending class has all its conditional odds ratios equal
    to one (within ``tol`` on the log scale).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    iv = interaction_vector(p)
    k = iv.k
    ascending = vanishing_ascending_class(iv, tol)
    complement = [
        mask_vars(m, k) for m in range(1 << k) if m not in ascending and m != 0
    ]
    edges = maximal_sets(complement)
    return Hypergraph(iv.labels, edges)


def conditional_independence_check(p, a, b, c=(), tol: float = 1e-10) -> bool:
    """Whether ``a`` is independent of ``b`` given ``c`` (within ``tol``).

    Every log odds ratio between a level of ``a`` and a level of ``b``,
    taken against the all-zeros reference levels inside each cell of
    ``c``, must be within ``tol`` of zero.
    """
    logp, labels = _log_p(p)
    k = len(labels)
    a, b, c = (parse_vars(x, labels) for x in (a, b, c))
    if not a or not b:
        raise ValueError("a and b must be nonempty")
    if set(a) & set(b) or set(a) & set(c) or set(b) & set(c):
        raise ValueError("a, b and c must be pairwise disjoint")
    keep = a + b + c
    drop = tuple(v for v in range(k) if v not in keep)
    q = np.exp(logp).reshape((2,) * k).sum(axis=drop)
    # axes of q follow sorted(keep); regroup them as (a, b, c)
    order = sorted(keep)
    q = np.transpose(q, [order.index(v) for v in keep])
    q = np.log(q.reshape(1 << len(a), 1 << len(b), 1 << len(c)))
    lor = q - q[:1, :, :] - q[:, :1, :] + q[:1, :1, :]
    return bool(np.all(np.abs(lor) <= tol))


def in_model(p, h: Hypergraph, tol: float = 1e-8) -> bool:
    """Whether every parameter outside the descending class of ``h`` vanishes."""
    iv = interaction_vector(p)
    allowed = np.zeros(iv.gamma.size, dtype=bool)
    allowed[0] = True
    for e in h.hyperedges:
        em = subset_mask(e, h.k)
        sub = em
        while True:
            allowed[sub] = True
            if sub == 0:
                break
            sub = (sub - 1) & em
    return bool(np.all(np.abs(iv.gamma[~allowed]) <= tol))


def hyperedge_gammas(p, h: Hypergraph) -> dict[frozenset[int], float]:
    """gamma of each hyperedge evaluated at the all-zeros conditioning cell."""
    iv = interaction_vector(p)
    if iv.k != h.k:
        raise ValueError(f"hypergraph has {h.k} vertices, distribution K={iv.k}")
    if not in_model(p, h):
        warnings.warn(
            "distribution is not in the model generated by the hypergraph; "
            "hyperedge parameters depend on the conditioning cell",
            stacklevel=2,
        )
    return {e: float(iv.gamma[subset_mask(e, h.k)]) for e in h.hyperedges}


__all__ = [
    "CondOddsRatioSpec",
    "InteractionVector",
    "average_log_cond_odds_ratio",
    "canonical_subsets",
    "cond_odds_ratio",
    "conditional_independence_check",
    "design_matrix",
    "faithful_hypergraph",
    "hyperedge_gammas",
    "in_model",
    "interaction_vector",
    "log_cond_odds_ratio",
    "log_cond_odds_ratios",
    "mobius",
    "subset_key",
    "vanishing_ascending_class",
    "zeta",
]
