import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from molscatter.statistics import (
    BeamProfile,
    Ensemble,
    ProfileShape,
    Species,
    effective_number_moments,
    intensity,
    minimum_weights,
    number_covariance,
    tube_means,
)

from oracles import enumerate_moments, gaussian, profile_integrals

N = Fraction(7)


def ens(*species, tubes=2):
    return Ensemble(tubes, tuple(Species(f"s{k}", c, lam) for k, (c, lam) in enumerate(species)))


# --- domain types -----------------------------------------------------------

def test_species_validation():
    with pytest.raises(ValueError):
        Species("empty", (0, 0), 1)
    with pytest.raises(ValueError):
        Species("neg", (1, -1), 1)
    with pytest.raises(ValueError):
        Species("lam", (1, 1), -0.5)
    with pytest.raises(ValueError):
        Species("lam", (1, 1), math.inf)


def test_ensemble_validation():
    with pytest.raises(ValueError):
        Ensemble(2, (Species("x", (1, 1, 1), 1),))
    with pytest.raises(ValueError):
        Ensemble(0)


# --- tube_means / number_covariance ------------------------------------------

def test_tube_means_examples():
    assert tube_means(Ensemble(3)) == [0, 0, 0]
    assert tube_means(ens(((1, 1), N))) == [N, N]
    assert tube_means(ens(((1, 2), N))) == [N, 2 * N]


def test_covariance_examples():
    assert number_covariance(ens(((1, 0), N)), 0, 0) == N
    assert number_covariance(ens(((1, 1), N)), 0, 1) == N
    assert number_covariance(ens(((1, 0), N), ((0, 1), N)), 0, 1) == 0


def test_dimer_covariance_against_sampling():
    rng = np.random.default_rng(11)
    m = rng.poisson(4.0, 400_000)  # pairs enter together: N_A = N_B = m
    sample_cov = np.cov(m, m)[0, 1]
    assert sample_cov == pytest.approx(float(number_covariance(ens(((1, 1), 4.0)), 0, 1)), rel=0.01)


def test_covariance_index_checked():
    with pytest.raises(IndexError):
        number_covariance(ens(((1, 1), 1)), 0, 2)


# --- intensity ---------------------------------------------------------------

def test_intensity_paper_plateaus():
    assert intensity(ens(((1, 1), N)), [1, -1]).photon_rate == 0
    assert intensity(ens(((1, 0), N), ((0, 1), N)), [1, -1]).photon_rate == 2 * N
    half = Fraction(1, 2)
    assert intensity(ens(((1, 1), N), ((0, 1), N)), [1, -half]).photon_rate == N / 2
    third = Fraction(1, 3)
    assert intensity(ens(((1, 2), N), ((0, 1), N)), [1, -third]).photon_rate == 2 * N / 9
    assert intensity(ens(((1, 1), N), ((0, 1), 2 * N)), [1, -third]).photon_rate == 6 * N / 9
    assert intensity(ens(((1, 0), N), ((0, 1), 3 * N)), [1, -third]).photon_rate == 12 * N / 9


def test_intensity_two_two_cascade():
    assert intensity(ens(((2, 2), N)), [1, -1]).photon_rate == 0
    assert intensity(ens(((1, 1), 2 * N)), [1, -1]).photon_rate == 0
    assert intensity(ens(((1, 0), 2 * N), ((0, 1), 2 * N)), [1, -1]).photon_rate == 4 * N


def test_intensity_matches_second_moment_formula():
    # <(N_A - a N_B)^2> = <N_A^2> + a^2 <N_B^2> - 2a <N_A N_B> from means and covariances
    e = ens(((1, 2), 1.5), ((1, 0), 0.7), ((0, 1), 2.2))
    a = 0.4
    mu = tube_means(e)
    second = lambda i, j: number_covariance(e, i, j) + mu[i] * mu[j]  # noqa: E731
    expected = second(0, 0) + a * a * second(1, 1) - 2 * a * second(0, 1)
    assert intensity(e, [1, -a]).photon_rate == pytest.approx(expected, rel=1e-14)


def test_intensity_empty_ensemble():
    rep = intensity(Ensemble(2), [1, -1])
    assert rep.photon_rate == 0 and rep.amplitude_mean == 0


def test_intensity_length_mismatch():
    with pytest.raises(ValueError):
        intensity(ens(((1, 1), 1)), [1, -1, 0])


def test_report_invariants_complex_weights():
    e = ens(((1, 2), 1.0), ((1, 0), 0.5))
    rep = intensity(e, [1, 0.3 - 0.8j])
    assert rep.photon_rate == pytest.approx(rep.coherent_part + rep.fluctuation_part)
    assert rep.photon_rate >= abs(rep.amplitude_mean) ** 2
    assert rep.coherent_part == pytest.approx(abs(rep.amplitude_mean) ** 2)


# --- minimum weights ---------------------------------------------------------

def test_minimum_weights_examples():
    assert minimum_weights(ens(((1, 1), N))) == [1, -1]
    assert minimum_weights(ens(((1, 2), N))) == [1, -Fraction(1, 2)]
    assert minimum_weights(ens(((1, 3), N))) == [1, -Fraction(1, 3)]
    assert minimum_weights(ens(((1, 3), 4))) == [1, -Fraction(1, 3)]


def test_minimum_weights_errors():
    with pytest.raises(ZeroDivisionError):
        minimum_weights(ens(((1, 0), 1)))
    with pytest.raises(ValueError):
        minimum_weights(ens(((1, 0, 1), 1), tubes=3))


# --- properties --------------------------------------------------------------

compositions = st.lists(st.integers(0, 3), min_size=2, max_size=2).filter(any)
lams = st.floats(0, 20, allow_nan=False)
two_tube_species = st.lists(st.tuples(compositions, lams), min_size=1, max_size=5)


@given(two_tube_species)
def test_minimum_weights_cancel_amplitude(species):
    e = ens(*species)
    if tube_means(e)[1] == 0:
        return
    rep = intensity(e, minimum_weights(e))
    assert abs(rep.amplitude_mean) <= 1e-12 * max(1.0, float(sum(tube_means(e))))
    assert rep.coherent_part <= 1e-12 * max(1.0, float(sum(tube_means(e))) ** 2)


@given(compositions, lams)
def test_single_bound_species_silent(comp, lam):
    # weights orthogonal to the composition cancel every fluctuation
    g = [comp[1], -comp[0]]
    assert intensity(ens((comp, lam)), g).photon_rate == 0


@given(two_tube_species, two_tube_species, st.complex_numbers(max_magnitude=3))
def test_fluctuation_additivity(a, b, g):
    w = [1, g]
    lhs = intensity(ens(*a) + ens(*b), w).fluctuation_part
    rhs = intensity(ens(*a), w).fluctuation_part + intensity(ens(*b), w).fluctuation_part
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@given(two_tube_species, st.floats(0.01, 100), st.floats(-2, 2))
def test_linear_in_scale(species, t, g):
    e = ens(*species)
    base, scaled = intensity(e, [1, g]), intensity(e.scaled(t), [1, g])
    assert scaled.fluctuation_part == pytest.approx(t * base.fluctuation_part, rel=1e-12, abs=1e-12)
    assert scaled.amplitude_mean == pytest.approx(t * base.amplitude_mean, rel=1e-12, abs=1e-12)


@given(st.lists(lams, min_size=1, max_size=4))
def test_poisson_identity_for_free_molecules(ls):
    species = [((1, 0), lam) for lam in ls] + [((0, 1), lam) for lam in ls]
    e = ens(*species)
    assert number_covariance(e, 0, 0) == pytest.approx(tube_means(e)[0])
    assert number_covariance(e, 1, 1) == pytest.approx(tube_means(e)[1])


small_ensembles = st.integers(1, 3).flatmap(
    lambda t: st.tuples(
        st.just(t),
        st.lists(
            st.tuples(st.lists(st.integers(0, 3), min_size=t, max_size=t).filter(any), st.floats(0, 3)),
            min_size=1, max_size=3,
        ),
        st.lists(st.complex_numbers(max_magnitude=2), min_size=t, max_size=t),
    )
)


@settings(max_examples=60, deadline=None)
@given(small_ensembles)
def test_brute_force_enumeration(case):
    tubes, species, weights = case
    e = Ensemble(tubes, tuple(Species(f"s{k}", tuple(c), lam) for k, (c, lam) in enumerate(species)))
    amp, rate, _ = enumerate_moments([c for c, _ in species], [lam for _, lam in species], weights)
    rep = intensity(e, weights)
    assert abs(complex(rep.amplitude_mean) - amp) < 1e-9
    assert abs(rep.photon_rate - rate) < 1e-9


# --- beam profile ------------------------------------------------------------

def test_top_hat_moments():
    assert effective_number_moments(2, BeamProfile(ProfileShape.TOP_HAT, 5.0)) == (10, 10)
    assert effective_number_moments(0, BeamProfile("tophat", 5.0, 8.0)) == (0, 0)


def test_gaussian_moments_against_quadrature():
    # full-line ∫R = 1 needs W = 2/sqrt(pi); a long tube approximates the full line
    W, L = 2 / math.sqrt(math.pi), 20.0
    prof = BeamProfile(ProfileShape.GAUSSIAN, W, L)
    i1, i2 = profile_integrals(gaussian(W, L), L)
    mean, var = effective_number_moments(1.0, prof)
    assert mean == pytest.approx(i1, rel=1e-10)
    assert var == pytest.approx(i2, rel=1e-10)
    assert mean == pytest.approx(1.0, rel=1e-12)
    assert var == pytest.approx(1 / math.sqrt(2), rel=1e-12)
    assert var < mean


@pytest.mark.parametrize("W,L", [(1.0, 1.0), (1.0, 5.0), (2.0, 3.0), (0.3, 10.0)])
def test_gaussian_truncated_integrals(W, L):
    prof = BeamProfile("gaussian", W, L)
    i1, i2 = profile_integrals(gaussian(W, L), L)
    assert prof.integral == pytest.approx(i1, rel=1e-10)
    assert prof.integral_sq == pytest.approx(i2, rel=1e-10)
    assert 0 < prof.integral_sq <= prof.integral <= L


def test_profile_validation():
    with pytest.raises(ValueError):
        BeamProfile("tophat", 0.0)
    with pytest.raises(ValueError):
        BeamProfile("gaussian", 2.0, 1.0)
    with pytest.raises(ValueError):
        effective_number_moments(-1.0, BeamProfile("tophat", 1.0))


def test_profile_shape_values():
    prof = BeamProfile("tophat", 2.0, 4.0)
    assert list(prof([0.5, 1.5, 2.0, 3.5])) == [0.0, 1.0, 1.0, 0.0]
    g = BeamProfile("gaussian", 2.0, 4.0)
    assert g(2.0) == 1.0
    assert g(3.0) == pytest.approx(math.exp(-1))
