"""Seeded Monte Carlo estimates of the scattered amplitude and photon number.

Each sample draws an independent Poisson count for every species (or, in
position-resolved mode, a Poisson point process of complexes along the tube
weighted by the beam profile) and forms ``D = sum_i g_i N_i``. The estimate is
the sample mean of ``D`` and ``|D|^2`` with standard errors taken from the
sample variances of those same quantities.

Reproducibility
---------------
Samples are split into fixed-size chunks of ``CHUNK_SIZE``. Chunk ``j`` of
stage ``k`` gets its own ``numpy.random.PCG64`` stream seeded with
``SeedSequence(seed, spawn_key=(k, j))``. Chunk statistics are merged in chunk
order with the pairwise (Chan et al.) update, so the result does not depend
on ``workers``.

Poisson variates use table inversion for ``lam < 10`` and numpy's PTRS
transformed-rejection sampler (Hörmann 1993) at and above.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .statistics import BeamProfile, Ensemble, _check_weights

__all__ = [
    "CHUNK_SIZE",
    "INVERSION_CUTOFF",
    "MAX_MEAN_COUNT",
    "McConfig",
    "McEstimate",
    "poisson_variates",
    "chunk_rng",
    "estimate",
    "estimate_scan",
]

CHUNK_SIZE = 1 << 16
INVERSION_CUTOFF = 10.0
MAX_MEAN_COUNT = 1e12


@dataclass(frozen=True)
class McConfig:
    samples: int
    seed: int = 0
    position_resolved: bool = False
    profile: BeamProfile | None = None
    workers: int = 1

    def __post_init__(self):
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValueError(f"samples must be a positive integer, got {self.samples}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.position_resolved and self.profile is None:
            raise ValueError("position-resolved sampling needs a beam profile")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class McEstimate:
    photon_rate_mean: float
    photon_rate_stderr: float
    amplitude_mean: complex
    amplitude_stderr: float
    samples_used: int


def chunk_rng(seed: int, stage: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stage), int(chunk)))
    return np.random.Generator(np.random.PCG64(ss))


def _inversion_table(lam: float) -> np.ndarray:
    # cumulative pmf up to the point where it rounds to 1
    pmf = math.exp(-lam)
    cdf = [pmf]
    k = 0
    while cdf[-1] < 1.0 and k < 200:
        k += 1
        pmf *= lam / k
        nxt = cdf[-1] + pmf
        if nxt == cdf[-1]:
            break
        cdf.append(nxt)
    cdf[-1] = 1.0
    return np.asarray(cdf)


def poisson_variates(rng: np.random.Generator, lam: float, size: int) -> np.ndarray:
    """Poisson(lam) draws: inversion below ``INVERSION_CUTOFF``, PTRS above."""
    if lam < 0 or not math.isfinite(lam):
        raise ValueError(f"Poisson mean must be finite and >= 0, got {lam}")
    if lam > MAX_MEAN_COUNT:
        raise OverflowError(f"Poisson mean {lam:g} exceeds the supported maximum {MAX_MEAN_COUNT:g}")
    if lam == 0:
        return np.zeros(size, dtype=np.int64)
    if lam < INVERSION_CUTOFF:
        u = rng.random(size)
        return np.searchsorted(_inversion_table(lam), u, side="right").astype(np.int64)
    return rng.poisson(lam, size).astype(np.int64)


def _species_weights(ensemble: Ensemble, weights: Sequence) -> np.ndarray:
    """Per-species amplitude ``sum_i g_i c_i``; exact cancellations stay exactly zero."""
    out = []
    for s in ensemble.species:
        terms = [g * c for g, c in zip(weights, s.composition) if c]
        if all(isinstance(g, (int, Fraction)) for g in weights):
            w = complex(sum(terms, Fraction(0)))
        else:
            w = complex(math.fsum(complex(t).real for t in terms),
                        math.fsum(complex(t).imag for t in terms))
            scale = sum(abs(complex(t)) for t in terms)
            if abs(w) <= 1e-12 * scale:
                w = 0j
        out.append(w)
    w = np.asarray(out, dtype=complex)
    if w.size and not np.any(w.imag):
        return w.real.copy()
    return w


def _weighted_counts(rng, lam: float, n: int, config: McConfig) -> np.ndarray:
    """Per-sample beam-weighted number of complexes of one species."""
    if not config.position_resolved:
        return poisson_variates(rng, lam, n).astype(float)
    profile = config.profile
    if lam == 0:
        return np.zeros(n)
    density = lam / profile.integral
    counts = poisson_variates(rng, density * profile.tube_length, n)
    total = int(counts.sum())
    positions = rng.random(total) * profile.tube_length
    owner = np.repeat(np.arange(n), counts)
    return np.bincount(owner, weights=profile(positions), minlength=n)


@dataclass
class _Moments:
    n: int = 0
    amp_mean: complex = 0j
    amp_m2: float = 0.0
    rate_mean: float = 0.0
    rate_m2: float = 0.0

    @classmethod
    def of(cls, d: np.ndarray) -> "_Moments":
        rate = (d * np.conj(d)).real if np.iscomplexobj(d) else d * d
        amp_mean = complex(d.mean())
        rate_mean = float(rate.mean())
        return cls(
            n=d.size,
            amp_mean=amp_mean,
            amp_m2=float(np.sum(np.abs(d - amp_mean) ** 2)),
            rate_mean=rate_mean,
            rate_m2=float(np.sum((rate - rate_mean) ** 2)),
        )

    def merge(self, other: "_Moments") -> "_Moments":
        if self.n == 0:
            return other
        n = self.n + other.n
        f = self.n * other.n / n
        da = other.amp_mean - self.amp_mean
        dr = other.rate_mean - self.rate_mean
        return _Moments(
            n=n,
            amp_mean=self.amp_mean + da * other.n / n,
            amp_m2=self.amp_m2 + other.amp_m2 + abs(da) ** 2 * f,
            rate_mean=self.rate_mean + dr * other.n / n,
            rate_m2=self.rate_m2 + other.rate_m2 + dr * dr * f,
        )

    def stderr(self, m2: float) -> float:
        if self.n < 2:
            return 0.0
        return math.sqrt(m2 / (self.n - 1) / self.n)


def _run_chunk(ensemble, species_w, lams, config, stage, chunk, n) -> _Moments:
    rng = chunk_rng(config.seed, stage, chunk)
    d = np.zeros(n, dtype=species_w.dtype if species_w.size else float)
    for w, lam in zip(species_w, lams):
        x = _weighted_counts(rng, lam, n, config)
        if w != 0:
            d += w * x
    return _Moments.of(d)


def _chunk_sizes(samples: int) -> list[int]:
    full, rest = divmod(samples, CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rest] if rest else [])


def estimate(ensemble: Ensemble, weights: Sequence, config: McConfig, *, stage: int = 0) -> McEstimate:
    """Monte Carlo estimate of ``<D>`` and ``<|D|^2>`` for ``D = sum_i g_i N_i``."""
    weights = _check_weights(ensemble, weights)
    lams = [float(s.mean_count) for s in ensemble.species]
    for s, lam in zip(ensemble.species, lams):
        if lam > MAX_MEAN_COUNT:
            raise OverflowError(f"species {s.name!r}: mean count {lam:g} too large to sample")
    species_w = _species_weights(ensemble, weights)
    sizes = _chunk_sizes(int(config.samples))
    jobs = [(ensemble, species_w, lams, config, stage, j, n) for j, n in enumerate(sizes)]
    if config.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(lambda a: _run_chunk(*a), jobs))
    else:
        parts = [_run_chunk(*a) for a in jobs]
    total = _Moments()
    for part in parts:
        total = total.merge(part)
    return McEstimate(
        photon_rate_mean=total.rate_mean,
        photon_rate_stderr=total.stderr(total.rate_m2),
        amplitude_mean=total.amp_mean,
        amplitude_stderr=total.stderr(total.amp_m2),
        samples_used=total.n,
    )


def estimate_scan(stages: Sequence[Ensemble], weights: Sequence, config: McConfig) -> list[McEstimate]:
    """One estimate per stage; stage ``k`` draws from sub-streams keyed by ``k``."""
    return [estimate(e, weights, config, stage=k) for k, e in enumerate(stages)]
