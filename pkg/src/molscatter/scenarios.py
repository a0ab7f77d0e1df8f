"""Dissociation cascades of two-tube complexes and bound-fraction scans.

Each cascade is an ordered list of ensembles with identical per-tube means;
stage 0 is the fully bound complex and the last stage is all free molecules.
Between consecutive stages the scan mixes the two species lists linearly in
the bound fraction ``p`` (1 at the earlier stage, 0 at the later one). The
horizontal axis is schematic: it stands in for whatever physical knob
(dipole orientation, interaction strength) drives the transitions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real

from .statistics import Ensemble, Species, intensity, minimum_weights, tube_means

__all__ = [
    "CascadeKind",
    "Cascade",
    "CascadeError",
    "ScanPoint",
    "build_cascade",
    "scan",
]


class CascadeError(ValueError):
    """Raised when stages of a cascade do not share per-tube means."""


class CascadeKind(enum.Enum):
    DIMER_11 = "1-1"
    TRIMER_12 = "1-2"
    TETRAMER_13 = "1-3"
    TETRAMER_22 = "2-2"

    @classmethod
    def parse(cls, value) -> "CascadeKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "dimer": cls.DIMER_11, "dimer11": cls.DIMER_11,
            "trimer": cls.TRIMER_12, "trimer12": cls.TRIMER_12,
            "tetramer13": cls.TETRAMER_13, "tetramer22": cls.TETRAMER_22,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown cascade {value!r}; choose one of {names}") from None


def _means_equal(a, b) -> bool:
    return all(
        x == y or math.isclose(float(x), float(y), rel_tol=1e-12, abs_tol=1e-12)
        for x, y in zip(a, b)
    )


@dataclass(frozen=True)
class Cascade:
    name: str
    stages: tuple[tuple[str, Ensemble], ...]
    molecule_scale: Real = 1
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple((str(l), e) for l, e in self.stages))
        if not self.stages:
            raise CascadeError("a cascade needs at least one stage")
        counts = {e.tube_count for _, e in self.stages}
        if len(counts) != 1:
            raise CascadeError(f"stages disagree on tube count: {sorted(counts)}")
        ref = tube_means(self.stages[0][1])
        for label, ens in self.stages[1:]:
            means = tube_means(ens)
            if not _means_equal(ref, means):
                raise CascadeError(
                    f"stage {label!r} changes the per-tube means from "
                    f"{[float(m) for m in ref]} to {[float(m) for m in means]}"
                )

    @property
    def tube_count(self) -> int:
        return self.stages[0][1].tube_count

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.stages]

    @property
    def ensembles(self) -> list[Ensemble]:
        return [e for _, e in self.stages]

    def weights(self) -> list:
        return minimum_weights(self.stages[0][1])

    def plateaus(self) -> list:
        w = self.weights()
        return [intensity(e, w).photon_rate for e in self.ensembles]

    def reversed(self) -> "Cascade":
        """Association order: free molecules first, bound complex last."""
        return Cascade(f"{self.name} (association)", self.stages[::-1], self.molecule_scale,
                       dict(self.metadata, direction="association"))


def _free(n_a, n_b) -> list[Species]:
    return [Species("free-A", (1, 0), n_a), Species("free-B", (0, 1), n_b)]


def build_cascade(kind, N: Real = 1) -> Cascade:
    """The dissociation cascade for a ``"n-m"`` complex with ``N`` complexes in the beam."""
    kind = CascadeKind.parse(kind)
    if not N > 0:
        raise ValueError(f"N must be positive, got {N}")

    def ens(*species):
        return Ensemble(2, tuple(species))

    dimer = lambda lam: Species("dimer 1-1", (1, 1), lam)  # noqa: E731
    if kind is CascadeKind.DIMER_11:
        stages = [
            ("dimers", ens(dimer(N))),
            ("free", ens(*_free(N, N))),
        ]
    elif kind is CascadeKind.TRIMER_12:
        stages = [
            ("trimers", ens(Species("trimer 1-2", (1, 2), N))),
            ("dimers + free", ens(dimer(N), Species("free-B", (0, 1), N))),
            ("free", ens(*_free(N, 2 * N))),
        ]
    elif kind is CascadeKind.TETRAMER_13:
        stages = [
            ("tetramers", ens(Species("tetramer 1-3", (1, 3), N))),
            ("trimers + free", ens(Species("trimer 1-2", (1, 2), N), Species("free-B", (0, 1), N))),
            ("dimers + free", ens(dimer(N), Species("free-B", (0, 1), 2 * N))),
            ("free", ens(*_free(N, 3 * N))),
        ]
    else:
        stages = [
            ("tetramers", ens(Species("tetramer 2-2", (2, 2), N))),
            ("dimers", ens(dimer(2 * N))),
            ("free", ens(*_free(2 * N, 2 * N))),
        ]
    return Cascade(kind.value, tuple(stages), N,
                   {"direction": "dissociation", "axis": "schematic (dipole angle / interaction strength)"})


@dataclass(frozen=True)
class ScanPoint:
    parameter: Real
    stage_index: int
    stage_label: str
    bound_fraction: Real
    ensemble: Ensemble
    photon_rate: Real
    amplitude_mean: complex


def scan(cascade: Cascade, points_per_stage: int = 2) -> list[ScanPoint]:
    """Photon rate along the cascade with weights frozen at the stage-0 minimum.

    Segment ``k`` runs from stage ``k`` (``p = 1``) to stage ``k + 1``
    (``p = 0``) in ``points_per_stage`` evenly spaced points; shared endpoints
    appear once. Points at integer parameters are the plateaus.
    """
    if int(points_per_stage) != points_per_stage or points_per_stage < 2:
        raise ValueError("points_per_stage must be an integer >= 2")
    weights = cascade.weights()
    stages = cascade.stages
    steps = points_per_stage - 1
    points = []

    def add(parameter, k, label, p, ens):
        rep = intensity(ens, weights)
        points.append(ScanPoint(parameter, k, label, p, ens, rep.photon_rate, rep.amplitude_mean))

    add(Fraction(0), 0, stages[0][0], Fraction(1), stages[0][1])
    for k in range(len(stages) - 1):
        (label_a, ens_a), (label_b, ens_b) = stages[k], stages[k + 1]
        for j in range(1, steps + 1):
            p = Fraction(steps - j, steps)
            if p == 0:
                add(Fraction(k + 1), k + 1, label_b, Fraction(1), ens_b)
            else:
                mixed = ens_a.scaled(p) + ens_b.scaled(1 - p)
                add(k + 1 - p, k, f"{label_a} -> {label_b}", p, mixed)
    return points
