"""Spectral Galerkin simulator and statistical checks for the stochastic
Gross-Pitaevskii equation with harmonic confinement."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    DegenerateWeightsError,
    DomainError,
    IntegrationBlowUp,
    ModeMismatchError,
)
from .hermite import (  # noqa: E402
    CutoffProfile,
    QuadratureGrid,
    SpectralField,
    analyze,
    apply_fractional_power,
    apply_smooth_cutoff,
    build_grid,
    cutoff_profile,
    eigenvalue_sq,
    lp_norm,
    synthesize,
)

__all__ = [
    "ConfigurationError",
    "DegenerateWeightsError",
    "DomainError",
    "IntegrationBlowUp",
    "ModeMismatchError",
    "CutoffProfile",
    "QuadratureGrid",
    "SpectralField",
    "analyze",
    "apply_fractional_power",
    "apply_smooth_cutoff",
    "build_grid",
    "cutoff_profile",
    "eigenvalue_sq",
    "lp_norm",
    "synthesize",
]
