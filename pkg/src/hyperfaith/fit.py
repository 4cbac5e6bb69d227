"""
Maximum likelihood fitting of hierarchical log-linear models.

Fits are computed by iterative proportional fitting (IPF): starting from
the uniform table, the current fit is rescaled in turn so that each
hyperedge marginal matches the target.  The limit is the distribution in
the model closest to the target in Kullback-Leibler divergence, which is
also the maximum likelihood estimate when the target is an empirical
distribution.

For decomposable generating classes the sweep follows a
running-intersection order, in which case a single sweep is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .hypergraph import Hypergraph, is_decomposable
from .table import CountTable, JointDistribution, format_float


@dataclass(frozen=True)
class FitConfig:
    tolerance: float = 1e-10
    max_iterations: int = 10_000

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class FitResult:
    fitted: JointDistribution
    iterations: int
    max_marginal_gap: float
    converged: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "fitted": [format_float(x) for x in self.fitted.p],
                "labels": list(self.fitted.labels),
                "iterations": self.iterations,
                "max_marginal_gap": self.max_marginal_gap,
                "converged": self.converged,
            }
        )


def sweep_order(h: Hypergraph) -> tuple[frozenset[int], ...]:
    dec = is_decomposable(h)
    return dec.ordering if dec.decomposable else h.hyperedges


def ipf_batch(
    targets: np.ndarray,
    h: Hypergraph,
    cfg: FitConfig = FitConfig(),
    initial: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """IPF for a batch of targets of shape ``(n, 2**k)``.

    Returns ``(fitted, iterations, gap)``: fitted tables, sweeps used per
    row, and the final L-infinity gap on the hyperedge marginals.  Rows
    stop being updated once their gap falls below the tolerance.
    """
    targets = np.asarray(targets, dtype=float)
    n, cells = targets.shape
    k = h.k
    if cells != 1 << k:
        raise ValueError(f"targets have {cells} cells, hypergraph needs {1 << k}")
    shape = (n,) + (2,) * k
    t = targets.reshape(shape)
    edges = sweep_order(h)
    drops = [tuple(1 + v for v in range(k) if v not in e) for e in edges]
    tm = [t.sum(axis=d, keepdims=True) for d in drops]

    if initial is None:
        q = np.full(shape, 1.0 / cells)
    else:
        q = np.array(initial, dtype=float).reshape(shape)
    iterations = np.zeros(n, dtype=np.int64)
    gap = np.full(n, np.inf)
    if not edges:
        return np.full((n, cells), 1.0 / cells), np.ones(n, dtype=np.int64), np.zeros(n)

    active = np.arange(n)
    for sweep in range(1, cfg.max_iterations + 1):
        qa = q[active]
        for d, m in zip(drops, tm):
            qa *= m[active] / qa.sum(axis=d, keepdims=True)
        g = np.zeros(active.size)
        for d, m in zip(drops, tm):
            diff = np.abs(qa.sum(axis=d, keepdims=True) - m[active])
            g = np.maximum(g, diff.reshape(active.size, -1).max(axis=1))
        q[active] = qa
        gap[active] = g
        iterations[active] = sweep
        active = active[g >= cfg.tolerance]
        if active.size == 0:
            break
    return q.reshape(n, cells), iterations, gap


def ipf_fit(
    target: JointDistribution,
    h: Hypergraph,
    cfg: FitConfig = FitConfig(),
    initial: JointDistribution | None = None,
) -> FitResult:
    """Fit the hierarchical model generated by ``h`` to ``target``.

    A result with ``converged=False`` is returned, not raised, when the
    gap is still above tolerance after ``cfg.max_iterations`` sweeps.
    """
    if h.k != target.k:
        raise ValueError(f"hypergraph has {h.k} vertices, table has K={target.k}")
    init = None if initial is None else initial.p[None, :]
    fitted, its, gap = ipf_batch(target.p[None, :], h, cfg, init)
    q = fitted[0]
    q = q / q.sum()
    return FitResult(
        fitted=JointDistribution(q, target.labels),
        iterations=int(its[0]),
        max_marginal_gap=float(gap[0]),
        converged=bool(gap[0] < cfg.tolerance),
    )


def kl_divergence(p, q) -> float:
    """KL(p || q) = sum p log(p / q); cells with p = 0 contribute nothing."""
    p = p.p if isinstance(p, JointDistribution) else np.asarray(p, dtype=float)
    q = q.p if isinstance(q, JointDistribution) else np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("p and q have different lengths")
    if np.any(q <= 0):
        raise ValueError("q has a zero cell")
    pos = p > 0
    return float(max(0.0, np.sum(p[pos] * np.log(p[pos] / q[pos]))))


def deviance(counts, q) -> float:
    """Likelihood-ratio statistic G^2 = 2 sum n_i log(n_i / (N q_i))."""
    n = counts.n if isinstance(counts, CountTable) else np.asarray(counts)
    n = n.astype(float)
    q = q.p if isinstance(q, JointDistribution) else np.asarray(q, dtype=float)
    if np.any(q <= 0):
        raise ValueError("q has a zero cell")
    N = n.sum()
    pos = n > 0
    return float(max(0.0, 2.0 * np.sum(n[pos] * np.log(n[pos] / (N * q[pos])))))
