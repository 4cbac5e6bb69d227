"""
Tests for single maximal interactions and hypergraph search.

A maximal interaction of order h (a hyperedge with h + 1 variables) has
parameter gamma = c' log p, where the contrast vector c holds 2^h entries
+1 and 2^h entries -1 on one sub-cube of the table.  Its estimate from a
multinomial sample of size N is asymptotically normal with variance
(1/N) c' diag(p)^{-1} c, which gives the Wald test used throughout.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .fit import FitConfig, ipf_fit
from .hypergraph import Hypergraph, maximal_sets, subset_key
from .loglin import CondOddsRatioSpec, in_model, interaction_vector
from .table import CountTable, JointDistribution, format_float, subset_mask


@dataclass(frozen=True)
class ContrastVector:
    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=np.int8).ravel()
        plus, minus = int(np.sum(c == 1)), int(np.sum(c == -1))
        if plus != minus or plus + minus != np.count_nonzero(c):
            raise ValueError("contrast needs equal numbers of +1 and -1 and nothing else")
        if plus & (plus - 1):
            raise ValueError("support size must be a power of two")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @property
    def order(self) -> int:
        """Interaction order h, from c'c = 2^(h+1)."""
        return int(np.count_nonzero(self.c)).bit_length() - 2

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.c)

    def norm_sq(self) -> int:
        return int(np.dot(self.c.astype(np.int64), self.c))


def contrast_vector(target, conditioning=None, k: int | None = None, labels=None) -> ContrastVector:
    """Contrast c with c' log p equal to the log conditional odds ratio.

    ``target`` is a label string or variable indices; ``conditioning``
    gives the levels of the other variables (default all zeros).
    """
    if isinstance(target, CondOddsRatioSpec):
        spec = target
    else:
        if labels is None:
            if k is None:
                raise ValueError("need k or labels")
            from .table import default_labels

            labels = default_labels(k)
        spec = CondOddsRatioSpec.make(target, conditioning, tuple(labels))
    k = spec.k
    c = np.zeros(1 << k, dtype=np.int8)
    h = len(spec.target)
    base = 0
    for v, lvl in zip(spec.rest, spec.conditioning):
        base |= lvl << (k - 1 - v)
    for sub in range(1 << h):
        idx = base
        ones = 0
        for j, v in enumerate(spec.target):
            if sub >> j & 1:
                idx |= 1 << (k - 1 - v)
                ones += 1
        c[idx] = -1 if (h - ones) % 2 else 1
    return ContrastVector(c)


def gamma_variance(counts: CountTable, c: ContrastVector) -> float:
    """Estimated variance of gamma-hat: sum of 1/n_i over the contrast support."""
    n = counts.n[c.support]
    if np.any(n == 0):
        raise ValueError("zero count on the support of the contrast")
    return float(np.sum(1.0 / n))


def _variance(q: np.ndarray, N: float, c: ContrastVector) -> float:
    return float(np.sum(1.0 / q[c.support]) / N)


def z_critical(alpha: float) -> float:
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    return float(stats.norm.ppf(1 - alpha / 2))


@dataclass(frozen=True)
class HyperedgeTestResult:
    gamma_hat: float
    std_error: float
    statistic: float
    z_crit: float
    reject: bool
    alpha: float
    p_value: float


def _wald(gamma_hat: float, var: float, alpha: float) -> HyperedgeTestResult:
    se = math.sqrt(var)
    stat = abs(gamma_hat) / se
    zc = z_critical(alpha)
    return HyperedgeTestResult(
        gamma_hat=gamma_hat,
        std_error=se,
        statistic=stat,
        z_crit=zc,
        reject=bool(stat > zc),
        alpha=alpha,
        p_value=float(2 * stats.norm.sf(stat)),
    )


def wald_test(
    counts: CountTable, target, alpha: float = 0.05, conditioning=None, smoothing: bool = False
) -> HyperedgeTestResult:
    """Wald test of gamma = 0 for one interaction, from raw counts."""
    c = contrast_vector(target, conditioning, labels=counts.labels)
    n = counts.n.astype(float) + (0.5 if smoothing else 0.0)
    if np.any(n[c.support] == 0):
        raise ValueError("zero count on the support of the contrast")
    gamma_hat = float(np.dot(c.c, np.log(np.where(c.c != 0, n, 1.0))))
    var = float(np.sum(1.0 / n[c.support]))
    return _wald(gamma_hat, var, alpha)


def lambda_star(N: int, alpha: float, epsilon: float = 0.25, orders=(1,)) -> float:
    """Threshold z_{1-alpha/2} N^{-(1/2 - epsilon)} min_t 2^{(h_t + 1)/2}."""
    if N < 1:
        raise ValueError("N must be at least 1")
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must be in (0, 1/2)")
    orders = list(orders)
    if not orders or min(orders) < 0:
        raise ValueError("orders must be a nonempty list of non-negative integers")
    return z_critical(alpha) / N ** (0.5 - epsilon) * 2 ** ((min(orders) + 1) / 2)


@dataclass(frozen=True)
class StrongFaithfulnessReport:
    lam: float
    gammas: dict
    min_abs_gamma: float
    satisfied: bool


def strong_faithfulness_check(
    p: JointDistribution, h: Hypergraph, lam: float, tol: float = 1e-8
) -> StrongFaithfulnessReport:
    """Whether every hyperedge parameter exceeds ``lam`` in absolute value.

    Parameters are read at the all-zeros conditioning cell.  If ``p`` is
    not in the model of ``h`` a warning is issued, since the values then
    depend on that choice.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if h.k != p.k:
        raise ValueError(f"hypergraph has {h.k} vertices, distribution K={p.k}")
    if not in_model(p, h, tol):
        warnings.warn(
            "distribution is not in the hierarchical model of the hypergraph; "
            "hyperedge parameters depend on the conditioning cell",
            stacklevel=2,
        )
    iv = interaction_vector(p)
    gammas = {h.label(e): float(iv.gamma[subset_mask(e, h.k)]) for e in h.hyperedges}
    m = min((abs(g) for g in gammas.values()), default=math.inf)
    return StrongFaithfulnessReport(lam=lam, gammas=gammas, min_abs_gamma=m, satisfied=m > lam)


# --------------------------------------------------------------------------
# backward selection


@dataclass(frozen=True)
class SearchStep:
    model: Hypergraph
    tested: frozenset
    gamma_hat: float
    std_error: float
    statistic: float
    p_value: float
    action: str  # "keep", "remove" or "defer"

    def to_dict(self) -> dict:
        return {
            "model": self.model.edge_labels(),
            "tested": [self.model.vertices[v] for v in sorted(self.tested)],
            "gamma_hat": self.gamma_hat,
            "std_error": self.std_error,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "action": self.action,
        }


@dataclass
class SearchTrace:
    steps: list[SearchStep] = field(default_factory=list)
    models: list[Hypergraph] = field(default_factory=list)
    final: Hypergraph | None = None
    completed: bool = True
    message: str = ""

    def to_jsonl(self) -> str:
        lines = [json.dumps(s.to_dict()) for s in self.steps]
        lines.append(
            json.dumps(
                {
                    "final": self.final.edge_labels() if self.final else None,
                    "completed": self.completed,
                    "message": self.message,
                }
            )
        )
        return "\n".join(lines) + "\n"


def remove_term(h: Hypergraph, term: frozenset) -> Hypergraph:
    """Replace ``term`` by its maximal proper subsets and re-normalize."""
    rest = [e for e in h.hyperedges if e != term]
    subs = [term - {v} for v in term if len(term) > 1]
    return Hypergraph(h.vertices, maximal_sets(rest + subs))


def backward_select(
    counts: CountTable,
    alpha: float = 0.05,
    cfg: FitConfig = FitConfig(),
    smoothing: bool = False,
) -> SearchTrace:
    """Backward elimination from the saturated model by one-hyperedge Wald tests.

    Every round tests each maximal interaction of the current model on the
    current fit.  Of the terms that are not rejected, the one with the
    largest p-value is replaced by its maximal proper subsets and the model
    is refitted.  Main effects are never tested, so the smallest reachable
    model is mutual independence.
    """
    z_critical(alpha)
    phat = counts.empirical(smoothing)
    N = float(counts.N + (0.5 * counts.n.size if smoothing else 0))
    model = Hypergraph.saturated(counts.k, counts.labels)
    trace = SearchTrace(models=[model])
    q = phat
    while True:
        candidates = [e for e in model.hyperedges if len(e) > 1]
        results = []
        for e in candidates:
            c = contrast_vector(e, None, labels=counts.labels)
            gamma_hat = float(np.dot(c.c, np.log(q.p)))
            results.append((e, _wald(gamma_hat, _variance(q.p, N, c), alpha)))
        keep_out = [(e, r) for e, r in results if not r.reject]
        drop = None
        if keep_out:
            # ties go to the larger, then canonically later, term
            drop = max(keep_out, key=lambda er: (er[1].p_value, subset_key(er[0])))[0]
        for e, r in results:
            action = "keep" if r.reject else ("remove" if e == drop else "defer")
            trace.steps.append(
                SearchStep(model, e, r.gamma_hat, r.std_error, r.statistic, r.p_value, action)
            )
        if drop is None:
            break
        model = remove_term(model, drop)
        trace.models.append(model)
        fit = ipf_fit(phat, model, cfg)
        if not fit.converged:
            trace.completed = False
            trace.message = (
                f"IPF did not converge for {model} after {fit.iterations} sweeps "
                f"(gap {fit.max_marginal_gap:.3g})"
            )
            break
        q = fit.fitted
    trace.final = model
    return trace


# --------------------------------------------------------------------------
# simulation helpers


def resample_gamma_hats(
    p: JointDistribution, target, N: int, replicates: int, seed: int, conditioning=None
) -> np.ndarray:
    """gamma-hat from ``replicates`` seeded multinomial samples of size N."""
    rng = np.random.default_rng(seed)
    c = contrast_vector(target, conditioning, labels=p.labels)
    y = rng.multinomial(N, p.p, size=replicates)[:, c.support]
    if np.any(y == 0):
        raise ValueError("a replicate has a zero count on the contrast support")
    return np.log(y.astype(float)) @ c.c[c.support].astype(float)


def rejection_rate(
    p: JointDistribution, target, N: int, alpha: float, replicates: int, seed: int
) -> float:
    """Share of seeded multinomial samples in which the Wald test rejects."""
    rng = np.random.default_rng(seed)
    c = contrast_vector(target, None, labels=p.labels)
    y = rng.multinomial(N, p.p, size=replicates)[:, c.support].astype(float)
    if np.any(y == 0):
        raise ValueError("a replicate has a zero count on the contrast support")
    g = np.log(y) @ c.c[c.support].astype(float)
    se = np.sqrt(np.sum(1.0 / y, axis=1))
    return float(np.mean(np.abs(g) / se > z_critical(alpha)))


def format_report(r: StrongFaithfulnessReport) -> str:
    return json.dumps(
        {
            "lambda": r.lam,
            "gammas": {k: format_float(v) for k, v in r.gammas.items()},
            "min_abs_gamma": r.min_abs_gamma,
            "satisfied": r.satisfied,
        }
    )
