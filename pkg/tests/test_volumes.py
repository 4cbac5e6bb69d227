import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy import integrate
from scipy.special import expit, logit

from hyperfaith.hypergraph import Hypergraph
from hyperfaith.volumes import (
    CURVE_HEADER,
    AssociationMeasure,
    Method,
    VolumeEstimate,
    chain_unfaithful_monte_carlo,
    curve,
    curve_csv,
    direct_statistic,
    mc_statistic,
    nu0_closed,
    nu1_closed,
    nu_h_monte_carlo,
    nu_h_statistic,
    projected_statistic,
    projected_unfaithful_proportion,
    sample_simplex,
    sample_unit_cube,
    two_by_two_unfaithful_proportion,
    unfaithful_proportion_decomposable,
    volume_lower_bound,
)
from tables import THREE_VAR_MODELS


def nu1_quadrature(lam):
    """P(|logit U - logit V| < lam) = E_U[expit(logit U + lam) - expit(logit U - lam)]."""
    val, _ = integrate.quad(lambda u: expit(logit(u) + lam) - expit(logit(u) - lam), 0, 1, epsabs=1e-13)
    return val


def nu1_printed(lam):
    e = math.exp(lam)
    return (math.exp(2 * lam) - 2 * lam * e - 1) / (1 - e) ** 2


def within(est, target, n_se=3.0, extra_se=0.0):
    se = math.hypot(est.std_error, extra_se)
    return abs(est.value - target) <= n_se * se


@pytest.mark.parametrize("lam", [1e-6, 1e-3, 0.05, 0.1, 0.49, 0.5, 0.51, 1.0, 3.0, 20.0])
def test_nu1_closed_against_quadrature(lam):
    assert_allclose(nu1_closed(lam), nu1_quadrature(lam), rtol=1e-9, atol=1e-14)


@pytest.mark.parametrize("lam", [0.05, 0.1, 0.5, 1.0, 3.0])
def test_nu1_closed_against_printed_formula(lam):
    assert_allclose(nu1_closed(lam), nu1_printed(lam), rtol=1e-7)


def test_nu1_small_lambda():
    assert nu1_closed(0.0) == 0.0
    assert abs(nu1_closed(0.1) - 0.0333218) < 1e-6
    for lam in (0.01, 0.05, 0.1):
        assert abs(nu1_closed(lam) - lam / 3) < lam**2
    with pytest.raises(ValueError):
        nu1_closed(-0.1)


@given(st.floats(0, 50), st.floats(0, 50))
def test_nu1_monotone_in_unit_interval(a, b):
    lo, hi = sorted((a, b))
    assert 0 <= nu1_closed(lo) <= nu1_closed(hi) <= 1


def test_nu0():
    for lam in (0.1, 1.0):
        expected = expit(lam) - expit(-lam)
        assert_allclose(nu0_closed(lam), expected, rtol=1e-12)


def test_lower_bound_examples():
    assert volume_lower_bound([1, 1, 1], 0.7) == nu1_closed(0.7)
    assert_allclose(volume_lower_bound([2], 0.2), nu1_closed(0.1) ** 2)
    assert abs(volume_lower_bound([2], 0.2) - 1.110e-3) < 1e-6
    assert volume_lower_bound([1, 2], 0.2) == nu1_closed(0.2)


def test_simplex_sampling(rng):
    assert_array_equal(sample_simplex(1, rng, 5), np.ones((5, 1)))
    x = sample_simplex(4, rng, 10**6)
    assert_allclose(x.sum(axis=1), 1.0, atol=1e-12)
    se = x.std(axis=0) / 1000
    assert np.all(np.abs(x.mean(axis=0) - 0.25) < 3 * se)


def test_cube_sampling_is_open(rng):
    u = sample_unit_cube(3, rng, 10**6)
    assert u.min() > 0 and u.max() < 1
    assert_allclose(u.mean(axis=0), 0.5, atol=3 * math.sqrt(1 / 12 / 10**6))


def test_monte_carlo_nu1(rng):
    for lam in (0.1, 0.5, 1.0):
        est = nu_h_monte_carlo(1, lam, 2 * 10**5, seed=1)
        assert est.method is Method.MONTE_CARLO
        assert est.std_error == pytest.approx(math.sqrt(est.value * (1 - est.value) / est.n_samples))
        assert within(est, nu1_closed(lam))
    assert nu_h_monte_carlo(3, 0.0, 1000, seed=1).value == 0.0


def test_nu2_below_nu1():
    for lam in (0.3, 0.5, 1.0):
        est = nu_h_monte_carlo(2, lam, 2 * 10**5, seed=4)
        assert est.value + 3 * est.std_error < nu1_closed(lam)


def test_nu_h_non_increasing_in_h():
    stats = {h: nu_h_statistic(h, 10**5, seed=10 + h) for h in (2, 3, 4)}
    for lam in (0.3, 0.6, 1.2):
        ests = [curve(stats[h], [lam], 0)[0] for h in (2, 3, 4)]
        for a, b in zip(ests, ests[1:]):
            assert b.value < a.value + 3 * math.hypot(a.std_error, b.std_error)


def test_determinism_and_thread_independence():
    a = nu_h_statistic(2, 150_000, seed=9, threads=1)
    b = nu_h_statistic(2, 150_000, seed=9, threads=4)
    assert_array_equal(a, b)
    c = nu_h_statistic(2, 150_000, seed=10, threads=4)
    assert not np.array_equal(a, c)


def test_mc_statistic_chunking():
    out = mc_statistic(lambda rng, m: rng.random(m), 1000, seed=3, chunk_size=300)
    assert out.shape == (1000,)
    again = mc_statistic(lambda rng, m: rng.random(m), 1000, seed=3, chunk_size=300, threads=3)
    assert_array_equal(out, again)


def test_decomposable_product_formula():
    chain = Hypergraph.from_labels(["AB", "BC", "CD"], "ABCD")
    est = unfaithful_proportion_decomposable(chain, 0.5)
    assert est.method is Method.CLOSED_FORM and est.std_error == 0
    assert_allclose(est.value, 1 - (1 - nu1_closed(0.5)) ** 3)
    star = Hypergraph.from_labels(["ABC", "ABD"], "ABCD")
    est = unfaithful_proportion_decomposable(star, 0.5, 2 * 10**5, seed=2)
    nu2 = nu_h_monte_carlo(2, 0.5, 2 * 10**5, seed=2 + 2000)
    assert_allclose(est.value, 1 - (1 - nu2.value) ** 2)
    assert_allclose(est.std_error, 2 * (1 - nu2.value) * nu2.std_error)
    single = unfaithful_proportion_decomposable([2], 0.5, 2 * 10**5, seed=2)
    assert_allclose(single.value, nu2.value)


def test_decomposable_rejects_cycle():
    with pytest.raises(ValueError, match="variation"):
        unfaithful_proportion_decomposable(Hypergraph.from_labels(["AB", "AC", "BC"], "ABC"), 0.5)


def test_chain_monte_carlo_matches_product():
    for lam in (0.25, 0.5):
        est = chain_unfaithful_monte_carlo(3, lam, 2 * 10**5, seed=6)
        assert within(est, 1 - (1 - nu1_closed(lam)) ** 3)


@pytest.mark.parametrize("orders", [[2, 2], [1, 1, 1], [2, 2, 2], [3, 3]])
def test_lower_bound_below_product(orders):
    for lam in (0.1, 0.5, 1.0, 2.0):
        est = unfaithful_proportion_decomposable(orders, lam, 10**5, seed=1)
        assert volume_lower_bound(orders, lam) <= est.value + 3 * est.std_error


def test_two_by_two_measures():
    assert AssociationMeasure("phi3").parameter_space == "unit_cube"
    assert AssociationMeasure("phi1").parameter_space == "simplex"
    est = two_by_two_unfaithful_proportion("phi3", 0.1, 2 * 10**5, seed=3)
    assert within(est, 0.19)
    for m in AssociationMeasure:
        assert two_by_two_unfaithful_proportion(m, 0.0, 1000, seed=0).value == 0.0
    phi2 = two_by_two_unfaithful_proportion("phi2", 0.3, 2 * 10**5, seed=3)
    phi1 = two_by_two_unfaithful_proportion("phi1", 2 * math.atanh(0.3), 2 * 10**5, seed=4)
    assert within(phi2, phi1.value, extra_se=phi1.std_error)


def test_curve_is_monotone_and_bounded():
    stat = nu_h_statistic(2, 20_000, seed=1)
    lams = np.linspace(0, 3, 31)
    vals = [e.value for e in curve(stat, lams, 1)]
    assert vals[0] == 0
    assert all(0 <= v <= 1 for v in vals)
    assert vals == sorted(vals)


def test_projection_saturated_equals_direct():
    h = Hypergraph.saturated(3)
    assert_allclose(projected_statistic(h, 5000, seed=8), direct_statistic(h, 5000, seed=8), rtol=1e-9)


def test_projected_invariants():
    models = [Hypergraph.from_labels(e, "ABC") for e in THREE_VAR_MODELS]
    stats = {str(h): projected_statistic(h, 20_000, seed=5) for h in models}
    for s in stats.values():
        assert not np.isnan(s).any()
    assert projected_unfaithful_proportion(models[0], 0.0, 1000, seed=1).value == 0.0
    lams = [0.1, 0.3, 0.6, 1.0]
    for s in stats.values():
        vals = [e.value for e in curve(s, lams, 5)]
        assert vals == sorted(vals)
    # more first-order hyperedges: larger proportion
    for lam in lams:
        two = curve(stats["[AC][BC]"], [lam], 5)[0]
        three = curve(stats["[AB][AC][BC]"], [lam], 5)[0]
        assert three.value + 3 * three.std_error >= two.value


def test_curve_csv_format():
    est = VolumeEstimate(0.123456789012345, 0.001, 1000, 7, Method.MONTE_CARLO)
    text = curve_csv([0.5], [est])
    header, row = text.strip().splitlines()
    assert header.split(",") == CURVE_HEADER
    fields = row.split(",")
    assert fields[-1] == "monte_carlo"
    assert len(fields[1].replace("0.", "", 1)) >= 10


def test_projected_ordering_reverses_at_large_lambda():
    # The fitted no-three-factor interactions are often larger than the
    # marginal log odds ratios that [AC][BC] uses, so at large lambda the
    # three-edge model has the smaller unfaithful share.
    two = projected_statistic(Hypergraph.from_labels(["AC", "BC"], "ABC"), 10**5, seed=50)
    three = projected_statistic(Hypergraph.from_labels(["AB", "AC", "BC"], "ABC"), 10**5, seed=50)
    a2, a3 = curve(two, [3.0], 50)[0], curve(three, [3.0], 50)[0]
    assert a3.value + 3 * math.hypot(a2.std_error, a3.std_error) < a2.value
    b2, b3 = curve(two, [1.0], 50)[0], curve(three, [1.0], 50)[0]
    assert b3.value > b2.value + 3 * math.hypot(b2.std_error, b3.std_error)
