"""
Proportions of parameter space violating strong faithfulness.

Monte Carlo estimates split the sample stream into fixed-size chunks.
Chunk ``i`` draws from its own generator seeded by ``(seed, i)``, and the
per-chunk results are concatenated in chunk order, so an estimate depends
only on the seed and the sample count, never on the number of worker
threads.

Most estimators come in two layers: a function returning the per-sample
statistic (for instance the smallest |gamma| of a sampled distribution)
and a thin wrapper that thresholds it at one lambda.  Curves over a lambda
grid reuse a single sample set, which also makes them exactly monotone.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import logit

from .fit import FitConfig, ipf_batch
from .hypergraph import Hypergraph, is_decomposable
from .loglin import mobius
from .table import format_float, subset_mask

CHUNK_SIZE = 1 << 16
DEFAULT_SAMPLES = 10**6


class Method(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    MONTE_CARLO = "monte_carlo"
    PRODUCT_FORMULA = "product_formula"
    LOWER_BOUND = "lower_bound"


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    std_error: float
    n_samples: int
    seed: int | None
    method: Method
    n_failed: int = 0

    def row(self, lam: float) -> list[str]:
        return [
            format_float(lam),
            format_float(self.value),
            format_float(self.std_error),
            str(self.n_samples),
            self.method.value,
        ]


CURVE_HEADER = ["lambda", "estimate", "std_error", "n_samples", "method"]


def curve_csv(lams: Sequence[float], estimates: Sequence[VolumeEstimate]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for lam, est in zip(lams, estimates):
        w.writerow(est.row(lam))
    return out.getvalue()


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam >= 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    return lam


# --------------------------------------------------------------------------
# closed forms


def nu1_closed(lam: float) -> float:
    """Share of (0,1)^2 where two logits differ by less than ``lam``.

    Equals (e^{2l} - 2 l e^l - 1) / (1 - e^l)^2, evaluated in the
    equivalent form (sinh l - l) / (2 sinh^2(l/2)) with a series near 0.
    """
    lam = _check_lambda(lam)
    if lam == 0:
        return 0.0
    if lam < 1e-4:
        return lam / 3 * (1 - lam * lam / 30)
    if lam < 0.5:
        # sinh(l) - l = sum_{n>=1} l^(2n+1) / (2n+1)!
        term = lam**3 / 6
        num = 0.0
        n = 1
        while abs(term) > 1e-18 * abs(num + term):
            num += term
            term *= lam * lam / ((2 * n + 2) * (2 * n + 3))
            n += 1
        return num / (2 * math.sinh(lam / 2) ** 2)
    e = math.exp(-lam)
    return (1 - 2 * lam * e - e * e) / (1 - e) ** 2


def nu0_closed(lam: float) -> float:
    """Share of (0,1) where |logit theta| < lam, i.e. tanh(lam / 2)."""
    return math.tanh(_check_lambda(lam) / 2)


def volume_lower_bound(orders: Iterable[int], lam: float) -> float:
    """max_t nu1(lam / 2^(h_t - 1)) ** 2^(h_t - 1)."""
    lam = _check_lambda(lam)
    orders = list(orders)
    if not orders or min(orders) < 1:
        raise ValueError("orders must be a nonempty list of integers >= 1")
    return max(nu1_closed(lam / 2 ** (h - 1)) ** (2 ** (h - 1)) for h in orders)


# --------------------------------------------------------------------------
# sampling


def sample_simplex(dim: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform draws from the probability simplex with ``dim`` cells."""
    if dim < 1:
        raise ValueError("dim must be at least 1")
    shape = (dim,) if size is None else (size, dim)
    e = rng.standard_exponential(shape)
    return e / e.sum(axis=-1, keepdims=True)


def sample_unit_cube(dim: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform draws from the open cube (0, 1)^dim (never exactly 0 or 1)."""
    if dim < 1:
        raise ValueError("dim must be at least 1")
    shape = (dim,) if size is None else (size, dim)
    # midpoints of a 2^-53 grid, so both endpoints are excluded
    return (rng.integers(0, 1 << 53, size=shape, dtype=np.int64) + 0.5) * 2.0**-53


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def default_threads() -> int:
    return os.cpu_count() or 1


def mc_statistic(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    n_samples: int,
    seed: int,
    threads: int | None = None,
    chunk_size: int = CHUNK_SIZE,
) -> np.ndarray:
    """Run ``sampler(rng, m)`` over seeded chunks and concatenate in order."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    sizes = [chunk_size] * (n_samples // chunk_size)
    if n_samples % chunk_size:
        sizes.append(n_samples % chunk_size)

    def run(i: int) -> np.ndarray:
        return sampler(chunk_rng(seed, i), sizes[i])

    threads = threads or default_threads()
    if threads == 1 or len(sizes) == 1:
        parts = [run(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    return np.concatenate(parts)


def proportion_below(
    stat: np.ndarray, lam: float, seed: int, n_failed: int = 0
) -> VolumeEstimate:
    """Share of finite entries of ``stat`` strictly below ``lam``.

    NaN entries mark failed samples; they are excluded and counted.
    """
    lam = _check_lambda(lam)
    ok = ~np.isnan(stat)
    n = int(ok.sum())
    if n == 0:
        raise ValueError("no usable samples")
    v = float(np.count_nonzero(stat[ok] < lam)) / n
    return VolumeEstimate(
        value=v,
        std_error=math.sqrt(v * (1 - v) / n),
        n_samples=n,
        seed=seed,
        method=Method.MONTE_CARLO,
        n_failed=n_failed + int((~ok).sum()),
    )


# --------------------------------------------------------------------------
# single hyperedge


def nu_h_statistic(h: int, n_samples: int, seed: int, threads: int | None = None) -> np.ndarray:
    """|sum of the first 2^(h-1) logits minus the sum of the rest|, theta uniform."""
    if h < 1:
        raise ValueError("h must be at least 1")
    half = 2 ** (h - 1)

    def sampler(rng, m):
        z = logit(sample_unit_cube(2 * half, rng, m))
        return np.abs(z[:, :half].sum(axis=1) - z[:, half:].sum(axis=1))

    return mc_statistic(sampler, n_samples, seed, threads)


def nu_h_monte_carlo(
    h: int,
    lam: float,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads: int | None = None,
) -> VolumeEstimate:
    """Monte Carlo share of the order-h conditional-probability cube violating lam."""
    _check_lambda(lam)
    return proportion_below(nu_h_statistic(h, n_samples, seed, threads), lam, seed)


def nu_h(h: int, lam: float, n_samples: int = DEFAULT_SAMPLES, seed: int = 0,
         threads: int | None = None) -> VolumeEstimate:
    """Closed form for h <= 1, Monte Carlo otherwise."""
    if h == 0:
        return VolumeEstimate(nu0_closed(lam), 0.0, 0, None, Method.CLOSED_FORM)
    if h == 1:
        return VolumeEstimate(nu1_closed(lam), 0.0, 0, None, Method.CLOSED_FORM)
    return nu_h_monte_carlo(h, lam, n_samples, seed, threads)


# --------------------------------------------------------------------------
# decomposable hypergraphs


def _orders_of(spec) -> list[int]:
    if isinstance(spec, Hypergraph):
        if not is_decomposable(spec).decomposable:
            raise ValueError(
                f"{spec} is not decomposable; the product formula needs variation "
                "independent hyperedge parameters, which decomposability guarantees"
            )
        return spec.orders()
    orders = [int(h) for h in spec]
    if not orders or min(orders) < 0:
        raise ValueError("orders must be a nonempty list of non-negative integers")
    return orders


def combine_independent(parts: dict[int, VolumeEstimate], orders: Sequence[int]) -> tuple[float, float]:
    """1 - prod_t (1 - nu_{h_t}) with a first-order delta-method error."""
    mult = {h: orders.count(h) for h in set(orders)}
    keep = {h: (1.0 - parts[h].value) ** m for h, m in mult.items()}
    total = math.prod(keep.values())
    var = 0.0
    for h, m in mult.items():
        others = math.prod(v for g, v in keep.items() if g != h)
        deriv = m * (1.0 - parts[h].value) ** (m - 1) * others
        var += (deriv * parts[h].std_error) ** 2
    return 1.0 - total, math.sqrt(var)


def unfaithful_proportion_decomposable(
    spec,
    lam: float,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads: int | None = None,
) -> VolumeEstimate:
    """Share of a decomposable model violating lam-strong faithfulness.

    ``spec`` is a decomposable :class:`Hypergraph` or a list of hyperedge
    orders.  Each distinct order is estimated once (closed form for orders
    0 and 1) and the results are combined as 1 - prod (1 - nu_{h_t}).
    """
    orders = _orders_of(spec)
    lam = _check_lambda(lam)
    parts = {
        h: nu_h(h, lam, n_samples, seed + 1000 * h, threads) for h in sorted(set(orders))
    }
    value, se = combine_independent(parts, orders)
    if all(h <= 1 for h in orders):
        return VolumeEstimate(value, 0.0, 0, None, Method.CLOSED_FORM)
    n = max(p.n_samples for p in parts.values())
    return VolumeEstimate(value, se, n, seed, Method.PRODUCT_FORMULA)


def chain_statistic(length: int, n_samples: int, seed: int, threads: int | None = None) -> np.ndarray:
    """Smallest |gamma| over the hyperedges of a first-order chain.

    Variables V_0 .. V_L form the chain [V_0 V_1][V_1 V_2]...; the joint
    table is built from uniformly drawn conditional probabilities
    P(V_1), P(V_0 | V_1) and P(V_t | V_{t-1}) for t >= 2, and the
    interactions are read off the log table.
    """
    if length < 1:
        raise ValueError("length must be at least 1")
    k = length + 1
    edges = [(t - 1, t) for t in range(1, k)]
    masks = [subset_mask(e, k) for e in edges]

    def sampler(rng, m):
        theta = sample_unit_cube(1 + 2 * length, rng, m)
        # P(level 0) columns: root, then (parent=0, parent=1) per child
        logp = np.zeros((m,) + (2,) * k)
        root = theta[:, 0]
        lp_root = np.stack([np.log(root), np.log1p(-root)], axis=1)
        logp += _expand(lp_root, [1], k)
        children = [(0, 1)] + [(t, t - 1) for t in range(2, k)]
        for j, (child, parent) in enumerate(children):
            t0, t1 = theta[:, 1 + 2 * j], theta[:, 2 + 2 * j]
            # table[child_level, parent_level]
            cond = np.stack(
                [np.stack([np.log(t0), np.log(t1)], axis=1),
                 np.stack([np.log1p(-t0), np.log1p(-t1)], axis=1)],
                axis=1,
            )
            logp += _expand(cond, [child, parent], k)
        gam = mobius(logp.reshape(m, -1), k)
        return np.min(np.abs(gam[:, masks]), axis=1)

    return mc_statistic(sampler, n_samples, seed, threads)


def _expand(arr: np.ndarray, axes: list[int], k: int) -> np.ndarray:
    """Broadcast ``arr`` of shape (m, 2, ..) over variables ``axes`` to (m, 2^k)."""
    order = sorted(axes)
    arr = np.moveaxis(arr, [1 + axes.index(v) for v in order], list(range(1, 1 + len(order))))
    shape = [arr.shape[0]] + [2 if v in axes else 1 for v in range(k)]
    return arr.reshape(shape)


def chain_unfaithful_monte_carlo(
    length: int,
    lam: float,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads: int | None = None,
) -> VolumeEstimate:
    _check_lambda(lam)
    return proportion_below(chain_statistic(length, n_samples, seed, threads), lam, seed)


# --------------------------------------------------------------------------
# 2 x 2 tables


class AssociationMeasure(str, enum.Enum):
    PHI1_LOG_ODDS = "phi1"
    PHI2_YULE = "phi2"
    PHI3_COND_PROB_DIFF = "phi3"

    @property
    def parameter_space(self) -> str:
        return "unit_cube" if self is AssociationMeasure.PHI3_COND_PROB_DIFF else "simplex"


def two_by_two_statistic(
    measure: AssociationMeasure | str, n_samples: int, seed: int, threads: int | None = None
) -> np.ndarray:
    measure = AssociationMeasure(measure)

    def sampler(rng, m):
        if measure is AssociationMeasure.PHI3_COND_PROB_DIFF:
            th = sample_unit_cube(3, rng, m)
            return np.abs(th[:, 1] - th[:, 2])
        p = sample_simplex(4, rng, m)
        ad, bc = p[:, 0] * p[:, 3], p[:, 1] * p[:, 2]
        if measure is AssociationMeasure.PHI1_LOG_ODDS:
            return np.abs(np.log(ad) - np.log(bc))
        return np.abs((ad - bc) / (ad + bc))

    return mc_statistic(sampler, n_samples, seed, threads)


def two_by_two_unfaithful_proportion(
    measure: AssociationMeasure | str,
    lam: float,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads: int | None = None,
) -> VolumeEstimate:
    """Share of 2x2 distributions whose association measure is below ``lam``."""
    _check_lambda(lam)
    return proportion_below(two_by_two_statistic(measure, n_samples, seed, threads), lam, seed)


# --------------------------------------------------------------------------
# projection onto a hypergraph


def _min_abs_hyperedge_gamma(logq: np.ndarray, h: Hypergraph) -> np.ndarray:
    gam = mobius(logq, h.k)
    masks = [subset_mask(e, h.k) for e in h.hyperedges]
    return np.min(np.abs(gam[:, masks]), axis=1)


def projected_statistic(
    h: Hypergraph,
    n_samples: int,
    seed: int,
    cfg: FitConfig = FitConfig(),
    threads: int | None = None,
) -> np.ndarray:
    """Smallest |gamma| of the KL projection of uniform simplex draws onto ``h``.

    Samples whose fit does not converge come back as NaN.
    """
    if not h.hyperedges:
        raise ValueError("hypergraph has no hyperedges")
    cells = 1 << h.k

    def sampler(rng, m):
        p = sample_simplex(cells, rng, m)
        q, _, gap = ipf_batch(p, h, cfg)
        stat = _min_abs_hyperedge_gamma(np.log(q), h)
        stat[~(gap < cfg.tolerance)] = np.nan
        return stat

    return mc_statistic(sampler, n_samples, seed, threads, chunk_size=1 << 14)


def projected_unfaithful_proportion(
    h: Hypergraph,
    lam: float,
    n_samples: int = 10**5,
    seed: int = 0,
    cfg: FitConfig = FitConfig(),
    threads: int | None = None,
) -> VolumeEstimate:
    """Share of uniform simplex draws whose projection onto ``h`` violates lam."""
    _check_lambda(lam)
    return proportion_below(projected_statistic(h, n_samples, seed, cfg, threads), lam, seed)


def direct_statistic(h: Hypergraph, n_samples: int, seed: int, threads: int | None = None) -> np.ndarray:
    """Smallest |gamma| over the hyperedges of ``h`` read off raw simplex draws."""
    cells = 1 << h.k

    def sampler(rng, m):
        return _min_abs_hyperedge_gamma(np.log(sample_simplex(cells, rng, m)), h)

    return mc_statistic(sampler, n_samples, seed, threads, chunk_size=1 << 14)


def curve(stat: np.ndarray, lams: Iterable[float], seed: int) -> list[VolumeEstimate]:
    """Threshold one sample set at every lambda of a grid."""
    return [proportion_below(stat, lam, seed) for lam in lams]
