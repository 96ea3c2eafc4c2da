"""Two-species Fokker-Planck mixture with internal energy: exchange algebra,
grid and particle solvers, a closed moment ODE and entropy diagnostics."""
from .model import (
    InvalidStateError,
    Mixture,
    MixtureParams,
    MomentState,
    ParameterRegimeError,
    SpeciesSpec,
    SpeciesState,
    ZRatioWarning,
    exchange_quantities,
    validate_params,
)

__version__ = "0.1.0"

__all__ = [
    "InvalidStateError",
    "Mixture",
    "MixtureParams",
    "MomentState",
    "ParameterRegimeError",
    "SpeciesSpec",
    "SpeciesState",
    "ZRatioWarning",
    "exchange_quantities",
    "validate_params",
]
