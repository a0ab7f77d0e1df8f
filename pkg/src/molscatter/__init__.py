"""Light scattering from ensembles of polar-molecule complexes in parallel 1D tubes."""

from .montecarlo import McConfig, McEstimate, estimate, estimate_scan
from .optics import (
    CouplingParams,
    GeometryError,
    ModeKind,
    OpticalGeometry,
    cavity_prefactor,
    minimum_spacings,
    mode_value,
    phase_factor,
    phase_factors,
    rabi_frequency,
)
from .scenarios import Cascade, CascadeError, CascadeKind, ScanPoint, build_cascade, scan
from .statistics import (
    BeamProfile,
    Ensemble,
    IntensityReport,
    ProfileShape,
    Species,
    effective_number_moments,
    intensity,
    minimum_weights,
    number_covariance,
    tube_means,
)

__version__ = "0.1.0"
