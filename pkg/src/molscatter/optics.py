"""Probe/detection geometry for light scattered off parallel 1D tubes.

Lengths are expressed in units of the light wavelength unless a geometry is
built with an explicit ``wavelength``; in that case tube positions share the
wavelength's unit. Every condition used downstream depends only on the ratio
of tube spacing to wavelength.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

__all__ = [
    "ModeKind",
    "OpticalGeometry",
    "CouplingParams",
    "GeometryError",
    "mode_value",
    "phase_factor",
    "phase_factors",
    "minimum_spacings",
    "rabi_frequency",
    "cavity_prefactor",
]


class GeometryError(ValueError):
    """Raised when no probe geometry realizes the requested cancellation."""


class ModeKind(enum.Enum):
    TRAVELING = "traveling"
    STANDING = "standing"

    @classmethod
    def parse(cls, value: "ModeKind | str") -> "ModeKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown mode kind {value!r}; expected 'traveling' or 'standing'"
            ) from None


@dataclass(frozen=True)
class OpticalGeometry:
    """Wavelength, transverse tube coordinates and probe/detection modes.

    Tube ``i`` sits at ``y = tube_positions[i]`` in the detection plane; the
    detector looks along ``z`` at angle 0 and the probe propagates along ``y``.
    """

    tube_positions: tuple[float, ...]
    wavelength: float = 1.0
    probe_kind: ModeKind = ModeKind.STANDING
    detection_kind: ModeKind = ModeKind.TRAVELING

    def __post_init__(self):
        object.__setattr__(self, "tube_positions", tuple(float(y) for y in self.tube_positions))
        object.__setattr__(self, "probe_kind", ModeKind.parse(self.probe_kind))
        object.__setattr__(self, "detection_kind", ModeKind.parse(self.detection_kind))
        if not (math.isfinite(self.wavelength) and self.wavelength > 0):
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if len(self.tube_positions) < 1:
            raise ValueError("geometry needs at least one tube")
        if len(set(self.tube_positions)) != len(self.tube_positions):
            raise ValueError("tube positions must be pairwise distinct")

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def tube_count(self) -> int:
        return len(self.tube_positions)

    @classmethod
    def two_tubes(cls, spacing: float, **kwargs) -> "OpticalGeometry":
        """Tube A at the origin (a standing-wave antinode), tube B at ``spacing``."""
        return cls(tube_positions=(0.0, float(spacing)), **kwargs)


@dataclass(frozen=True)
class CouplingParams:
    dipole_moment: float
    probe_field: float
    hbar: float = 1.0
    coupling: float = 1.0
    detuning: float = 1.0
    cavity_decay: float = 1.0


def mode_value(geometry: OpticalGeometry, kind: ModeKind | str, coordinate: float) -> complex:
    """exp(iky) for a traveling wave, cos(ky) for a standing wave."""
    kind = ModeKind.parse(kind)
    phase = geometry.wavenumber * coordinate
    if kind is ModeKind.TRAVELING:
        return cmath.exp(1j * phase)
    return complex(math.cos(phase), 0.0)


def phase_factor(geometry: OpticalGeometry, tube_index: int, detection_angle: float = 0.0) -> complex:
    """Per-tube scattering factor ``u_p(y_i) * conj(u_s(y_i))``.

    ``detection_angle`` is measured in the detection plane from ``z`` toward
    ``y``. The detected mode is normalized to 1 at ``z = 0``, so at angle 0 the
    result is the probe mode value at the tube.
    """
    if not 0 <= tube_index < geometry.tube_count:
        raise IndexError(f"tube index {tube_index} out of range for {geometry.tube_count} tubes")
    y = geometry.tube_positions[tube_index]
    probe = mode_value(geometry, geometry.probe_kind, y)
    if detection_angle == 0.0:
        return probe
    # detected mode evaluated at (y, z=0) along direction (sin, cos)
    shift = math.sin(detection_angle) * y
    detected = mode_value(geometry, geometry.detection_kind, shift)
    return probe * detected.conjugate()


def phase_factors(geometry: OpticalGeometry, detection_angle: float = 0.0) -> list[complex]:
    return [phase_factor(geometry, i, detection_angle) for i in range(geometry.tube_count)]


def minimum_spacings(alpha: float, probe_kind: ModeKind | str = ModeKind.STANDING) -> list[float]:
    """Principal spacings ``x = Δ/λ`` in [0, 1) that put the detector at a diffraction minimum.

    Tube A is taken at a probe antinode, so the condition reads
    ``u_p(y_B) / u_p(y_A) = -alpha``. Integer periods may be added to every
    returned value.

    Raises
    ------
    GeometryError
        If a standing wave needs ``alpha > 1`` (swap the tube labels) or a
        traveling wave needs ``alpha != 1``.
    """
    probe_kind = ModeKind.parse(probe_kind)
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive, got {alpha}")
    if probe_kind is ModeKind.TRAVELING:
        if not math.isclose(alpha, 1.0, rel_tol=0.0, abs_tol=1e-12):
            raise GeometryError(
                f"a traveling probe only changes the phase; |ratio| = {alpha:g} != 1 is unreachable"
            )
        return [0.5]
    if alpha > 1.0 + 1e-12:
        raise GeometryError(
            f"cos(2*pi*x) = -{alpha:g} has no solution; relabel the tubes so that alpha = "
            f"{1.0 / alpha:g} <= 1"
        )
    x = math.acos(-min(alpha, 1.0)) / (2.0 * math.pi)
    if math.isclose(x, 0.5, rel_tol=0.0, abs_tol=1e-15):
        return [0.5]
    return sorted({x, 1.0 - x})


def rabi_frequency(params: CouplingParams) -> float:
    if params.hbar <= 0:
        raise ValueError("hbar must be positive")
    return params.dipole_moment * params.probe_field / params.hbar


def cavity_prefactor(params: CouplingParams) -> complex:
    """Cavity-enhanced scattering prefactor ``-i g Ω / (Δ κ)``; ``|C|²`` is the intensity unit."""
    if params.detuning == 0:
        raise ValueError("zero detuning: resonant scattering is outside the dispersive model")
    if params.cavity_decay <= 0:
        raise ValueError("cavity decay rate must be positive")
    return -1j * params.coupling * rabi_frequency(params) / (params.detuning * params.cavity_decay)
