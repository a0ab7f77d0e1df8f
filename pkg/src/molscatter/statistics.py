"""Closed-form amplitude and photon-number moments for Poissonian complexes.

An ensemble is a list of independent species. Each species is one kind of
bound complex (or free molecule) whose count inside the beam is Poisson with
mean ``mean_count``; one complex puts ``composition[i]`` molecules into tube
``i``. With per-tube weights ``g`` the scattered amplitude is proportional to
``D = sum_i g_i N_i`` and the photon number to ``<|D|^2>``, which splits into

    |sum_i g_i mu_i|^2                      (coherent part)
    sum_s lambda_s |sum_i g_i c_{s,i}|^2    (fluctuation part)

Arithmetic is kept generic so ``fractions.Fraction`` inputs with real
weights produce exact results.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Complex, Real
from typing import Iterable, Sequence

import numpy as np
from scipy.special import erf

__all__ = [
    "Species",
    "Ensemble",
    "ProfileShape",
    "BeamProfile",
    "IntensityReport",
    "tube_means",
    "number_covariance",
    "intensity",
    "effective_number_moments",
    "minimum_weights",
]


def _abs2(z):
    if isinstance(z, complex):
        return z.real * z.real + z.imag * z.imag
    return z * z


@dataclass(frozen=True)
class Species:
    name: str
    composition: tuple[int, ...]
    mean_count: Real

    def __post_init__(self):
        comp = tuple(int(c) for c in self.composition)
        if any(c != orig for c, orig in zip(comp, self.composition)):
            raise ValueError(f"species {self.name!r}: composition must be integers")
        if any(c < 0 for c in comp):
            raise ValueError(f"species {self.name!r}: negative member count in {comp}")
        if not any(comp):
            raise ValueError(f"species {self.name!r}: composition is all zero")
        object.__setattr__(self, "composition", comp)
        lam = self.mean_count
        if not (lam >= 0 and math.isfinite(lam)):
            raise ValueError(f"species {self.name!r}: mean_count must be finite and >= 0, got {lam}")

    @property
    def size(self) -> int:
        return sum(self.composition)

    def scaled(self, factor) -> "Species":
        return Species(self.name, self.composition, self.mean_count * factor)


@dataclass(frozen=True)
class Ensemble:
    tube_count: int
    species: tuple[Species, ...] = ()

    def __post_init__(self):
        if int(self.tube_count) != self.tube_count or self.tube_count < 1:
            raise ValueError(f"tube_count must be a positive integer, got {self.tube_count}")
        object.__setattr__(self, "species", tuple(self.species))
        for s in self.species:
            if len(s.composition) != self.tube_count:
                raise ValueError(
                    f"species {s.name!r} has {len(s.composition)} tube entries, "
                    f"ensemble has {self.tube_count} tubes"
                )

    def __add__(self, other: "Ensemble") -> "Ensemble":
        if other.tube_count != self.tube_count:
            raise ValueError("cannot merge ensembles with different tube counts")
        return Ensemble(self.tube_count, self.species + other.species)

    def scaled(self, factor) -> "Ensemble":
        return Ensemble(self.tube_count, tuple(s.scaled(factor) for s in self.species))

    def composition_matrix(self) -> np.ndarray:
        """(n_species, tube_count) integer array of member counts."""
        if not self.species:
            return np.zeros((0, self.tube_count), dtype=np.int64)
        return np.array([s.composition for s in self.species], dtype=np.int64)

    def mean_counts(self) -> np.ndarray:
        return np.array([float(s.mean_count) for s in self.species], dtype=float)


@dataclass(frozen=True)
class IntensityReport:
    """Amplitude and photon number in units of the scattering prefactor C."""

    amplitude_mean: Complex
    coherent_part: Real
    fluctuation_part: Real

    @property
    def photon_rate(self):
        return self.coherent_part + self.fluctuation_part


def tube_means(ensemble: Ensemble) -> list:
    means = [0] * ensemble.tube_count
    for s in ensemble.species:
        for i, c in enumerate(s.composition):
            if c:
                means[i] = means[i] + c * s.mean_count
    return means


def number_covariance(ensemble: Ensemble, i: int, j: int):
    """Cov(N_i, N_j); a species correlates every pair of tubes it spans."""
    for idx in (i, j):
        if not 0 <= idx < ensemble.tube_count:
            raise IndexError(f"tube index {idx} out of range")
    cov = 0
    for s in ensemble.species:
        ci, cj = s.composition[i], s.composition[j]
        if ci and cj:
            cov = cov + ci * cj * s.mean_count
    return cov


def _check_weights(ensemble: Ensemble, weights: Sequence) -> list:
    weights = list(weights)
    if len(weights) != ensemble.tube_count:
        raise ValueError(
            f"got {len(weights)} weights for an ensemble with {ensemble.tube_count} tubes"
        )
    return weights


def _weighted(weights, values):
    total = 0
    for g, v in zip(weights, values):
        if v:
            total = total + g * v
    return total


def intensity(ensemble: Ensemble, weights: Sequence) -> IntensityReport:
    """Mean amplitude and ``<|sum_i g_i N_i|^2>`` for independent Poisson species."""
    weights = _check_weights(ensemble, weights)
    amplitude = _weighted(weights, tube_means(ensemble))
    fluctuation = 0
    for s in ensemble.species:
        fluctuation = fluctuation + s.mean_count * _abs2(_weighted(weights, s.composition))
    return IntensityReport(amplitude, _abs2(amplitude), fluctuation)


def minimum_weights(ensemble: Ensemble) -> list:
    """Weights ``(1, -alpha)`` with ``alpha = mu_A / mu_B`` that cancel the mean amplitude."""
    if ensemble.tube_count != 2:
        raise ValueError(f"minimum weights need exactly two tubes, got {ensemble.tube_count}")
    mu_a, mu_b = tube_means(ensemble)
    if mu_b == 0:
        raise ZeroDivisionError("tube B is empty; population ratio undefined")
    if isinstance(mu_a, int) and isinstance(mu_b, int):
        return [1, -Fraction(mu_a, mu_b)]
    return [1, -(mu_a / mu_b)]


def population_ratio(ensemble: Ensemble):
    return -minimum_weights(ensemble)[1]


class ProfileShape(enum.Enum):
    TOP_HAT = "tophat"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class BeamProfile:
    """Transverse probe profile ``R(x)`` with peak 1, centered on a tube of length L.

    ``TOP_HAT``: R = 1 for ``|x - L/2| < W/2``.
    ``GAUSSIAN``: R = exp(-(2 (x - L/2) / W)^2), so that over the full line
    ``∫R dx = W sqrt(pi) / 2``; on [0, L] the integral picks up ``erf(L / W)``.
    """

    shape: ProfileShape
    width: float
    tube_length: float | None = None

    def __post_init__(self):
        shape = self.shape
        if not isinstance(shape, ProfileShape):
            shape = ProfileShape(str(shape).lower().replace("_", "").replace("-", ""))
            object.__setattr__(self, "shape", shape)
        if not self.width > 0:
            raise ValueError(f"beam width must be positive, got {self.width}")
        if self.tube_length is None:
            object.__setattr__(self, "tube_length", float(self.width))
        if self.tube_length < self.width:
            raise ValueError(
                f"tube length {self.tube_length} shorter than beam width {self.width}"
            )

    def __call__(self, x):
        u = np.asarray(x, dtype=float) - 0.5 * self.tube_length
        inside = (u >= -0.5 * self.tube_length) & (u <= 0.5 * self.tube_length)
        if self.shape is ProfileShape.TOP_HAT:
            r = (np.abs(u) < 0.5 * self.width).astype(float)
        else:
            r = np.exp(-((2.0 * u / self.width) ** 2))
        return np.where(inside, r, 0.0)

    @property
    def integral(self) -> float:
        """∫R dx over the tube."""
        if self.shape is ProfileShape.TOP_HAT:
            return float(self.width)
        return 0.5 * self.width * math.sqrt(math.pi) * float(erf(self.tube_length / self.width))

    @property
    def integral_sq(self) -> float:
        """∫R² dx over the tube."""
        if self.shape is ProfileShape.TOP_HAT:
            return float(self.width)
        return (
            0.5 * self.width * math.sqrt(math.pi / 2.0)
            * float(erf(math.sqrt(2.0) * self.tube_length / self.width))
        )


def effective_number_moments(density: float, profile: BeamProfile) -> tuple[float, float]:
    """Mean and variance of ``∫ n(x) R(x) dx`` for a Poisson point process of given density.

    Campbell's theorem gives ``rho ∫R`` and ``rho ∫R²``; for a top hat both
    reduce to the Poisson count ``rho W``.
    """
    if density < 0:
        raise ValueError(f"density must be non-negative, got {density}")
    return density * profile.integral, density * profile.integral_sq


def species_from_density(
    name: str, composition: Iterable[int], density: float, profile: BeamProfile
) -> Species:
    mean, _ = effective_number_moments(density, profile)
    return Species(name, tuple(composition), mean)
