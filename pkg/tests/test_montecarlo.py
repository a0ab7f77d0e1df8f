from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from molscatter.montecarlo import (
    CHUNK_SIZE,
    McConfig,
    chunk_rng,
    estimate,
    estimate_scan,
    poisson_variates,
)
from molscatter.scenarios import build_cascade
from molscatter.statistics import BeamProfile, Ensemble, Species, intensity


def ens(*species):
    return Ensemble(2, tuple(Species(f"s{k}", c, lam) for k, (c, lam) in enumerate(species)))


def within(est, expected, k=3):
    return abs(est.photon_rate_mean - float(expected)) <= k * est.photon_rate_stderr


@pytest.mark.parametrize("lam", [0.3, 2.5, 9.99, 10.0, 37.5])
def test_poisson_variates_distribution(lam):
    x = poisson_variates(chunk_rng(5, 0, 0), lam, 200_000)
    assert x.dtype == np.int64 and x.min() >= 0
    hi = int(stats.poisson.ppf(1 - 1e-4, lam))
    observed = np.bincount(np.minimum(x, hi), minlength=hi + 1)
    pmf = stats.poisson.pmf(np.arange(hi + 1), lam)
    pmf[-1] = stats.poisson.sf(hi - 1, lam)
    expected = pmf * x.size
    keep = expected > 5
    chi2 = np.sum((observed[keep] - expected[keep]) ** 2 / expected[keep])
    dof = keep.sum() - 1
    assert stats.chi2.sf(chi2, dof) > 1e-4


def test_poisson_variates_edges():
    assert not poisson_variates(chunk_rng(0, 0, 0), 0.0, 10).any()
    with pytest.raises(OverflowError):
        poisson_variates(chunk_rng(0, 0, 0), 2e12, 1)
    with pytest.raises(ValueError):
        poisson_variates(chunk_rng(0, 0, 0), -1.0, 1)


def test_bound_dimers_exact_zero():
    est = estimate(ens(((1, 1), 4)), [1, -1], McConfig(100_000, seed=3))
    assert est.photon_rate_mean == 0 and est.photon_rate_stderr == 0
    assert est.amplitude_mean == 0
    assert est.samples_used == 100_000


def test_free_molecules_two_n():
    est = estimate(ens(((1, 0), 4), ((0, 1), 4)), [1, -1], McConfig(1_000_000, seed=4))
    assert within(est, 8)


def test_tetramer_mid_stage():
    third = Fraction(1, 3)
    est = estimate(ens(((1, 1), 4), ((0, 1), 8)), [1, -third], McConfig(1_000_000, seed=5))
    assert within(est, Fraction(8, 3))


def test_float_weights_keep_bound_stage_silent():
    est = estimate(ens(((1, 3), 4.0)), [1.0, -4.0 / 12.0], McConfig(50_000, seed=1))
    assert est.photon_rate_mean == 0


def test_complex_weights():
    e = ens(((1, 2), 1.5), ((1, 0), 0.5))
    w = [1, 0.3 - 0.8j]
    est = estimate(e, w, McConfig(400_000, seed=9))
    rep = intensity(e, w)
    assert abs(est.photon_rate_mean - rep.photon_rate) <= 4 * est.photon_rate_stderr
    assert abs(est.amplitude_mean - rep.amplitude_mean) <= 4 * est.amplitude_stderr


def test_deterministic_and_partition_independent():
    e = ens(((1, 1), 3), ((0, 1), 2))
    samples = 3 * CHUNK_SIZE + 123
    a = estimate(e, [1, -0.6], McConfig(samples, seed=42))
    b = estimate(e, [1, -0.6], McConfig(samples, seed=42))
    c = estimate(e, [1, -0.6], McConfig(samples, seed=42, workers=3))
    assert a == b == c
    d = estimate(e, [1, -0.6], McConfig(samples, seed=43))
    assert d != a


def test_stderr_scales_inverse_sqrt():
    e = ens(((1, 0), 2), ((0, 1), 2))
    s1 = estimate(e, [1, -1], McConfig(100_000, seed=1)).photon_rate_stderr
    s2 = estimate(e, [1, -1], McConfig(1_600_000, seed=1)).photon_rate_stderr
    assert s1 / s2 == pytest.approx(4.0, rel=0.05)


def test_overflow_guard():
    with pytest.raises(OverflowError):
        estimate(ens(((1, 0), 5e12)), [1, -1], McConfig(10))


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(0)
    with pytest.raises(ValueError):
        McConfig(10, seed=-1)
    with pytest.raises(ValueError):
        McConfig(10, position_resolved=True)


def test_weight_length_checked():
    with pytest.raises(ValueError):
        estimate(ens(((1, 1), 1)), [1], McConfig(10))


def test_estimate_scan_examples():
    e = ens(((1, 0), 2), ((0, 1), 1))
    cfg = McConfig(10_000, seed=8)
    assert estimate_scan([e], [1, -2], cfg) == [estimate(e, [1, -2], cfg)]

    c = build_cascade("1-1", 4)
    got = estimate_scan(c.ensembles, c.weights(), McConfig(1_000_000, seed=2))
    assert got[0].photon_rate_mean == 0
    assert within(got[1], 8)

    c = build_cascade("1-2", 4)
    got = estimate_scan(c.ensembles, c.weights(), McConfig(1_000_000, seed=2))
    assert got[0].photon_rate_mean == 0
    assert within(got[1], 2) and within(got[2], 6)


def test_stages_use_distinct_streams():
    e = ens(((1, 0), 2), ((0, 1), 2))
    a, b = estimate_scan([e, e], [1, -1], McConfig(10_000, seed=1))
    assert a != b


def test_position_resolved_top_hat_matches_count_mode():
    e = ens(((1, 1), 2), ((0, 1), 2), ((1, 0), 1))
    w = [1, -0.75]
    count = estimate(e, w, McConfig(400_000, seed=6))
    prof = BeamProfile("tophat", 3.0, 3.0)
    pos = estimate(e, w, McConfig(400_000, seed=7, position_resolved=True, profile=prof))
    spread = 4 * np.hypot(count.photon_rate_stderr, pos.photon_rate_stderr)
    assert abs(count.photon_rate_mean - pos.photon_rate_mean) <= spread


def test_position_resolved_partial_top_hat():
    # a window of width W inside a longer tube still yields Poisson counts of mean lam
    e = ens(((1, 0), 3), ((0, 1), 3))
    prof = BeamProfile("tophat", 1.0, 4.0)
    est = estimate(e, [1, -1], McConfig(400_000, seed=12, position_resolved=True, profile=prof))
    assert abs(est.photon_rate_mean - 6) <= 4 * est.photon_rate_stderr


def test_position_resolved_gaussian_campbell():
    prof = BeamProfile("gaussian", 1.0, 3.0)
    lam = 4.0
    e = ens(((1, 0), lam), ((0, 1), lam))
    est = estimate(e, [1, -1], McConfig(1_000_000, seed=10, position_resolved=True, profile=prof))
    density = lam / prof.integral
    expected = 2 * density * prof.integral_sq
    assert abs(est.photon_rate_mean - expected) <= 4 * est.photon_rate_stderr
    assert expected < 2 * lam


@settings(max_examples=15, deadline=None, derandomize=True)
@given(
    st.lists(
        st.tuples(st.lists(st.integers(0, 3), min_size=2, max_size=2).filter(any), st.floats(0.1, 15)),
        min_size=1, max_size=3,
    ),
    st.floats(-2, 2),
    st.integers(0, 2**32),
)
def test_oracle_agreement_property(species, g, seed):
    e = ens(*species)
    est = estimate(e, [1, g], McConfig(40_000, seed=seed))
    rep = intensity(e, [1, g])
    # 5 standard errors: this property runs over many random seeds
    assert abs(est.photon_rate_mean - rep.photon_rate) <= 5 * est.photon_rate_stderr + 1e-9
