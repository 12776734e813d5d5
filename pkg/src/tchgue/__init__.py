"""Spectral statistics of the temperature-deformed chiral Gaussian unitary
ensemble: finite-N determinantal kernels, saddle-point phase analysis,
microscopic Bessel limits, and Monte Carlo validation."""

__version__ = "0.1.0"

from .errors import (
    ConditioningError,
    ConfigError,
    DomainError,
    GeometryError,
    IllConditionedSpectrumError,
    IntegrationFailureError,
    PhaseError,
    TchgueError,
    UnsupportedOrderError,
)
from .finitekernel import FiniteEnsembleParams, ScalingMap
from .logval import LogValue
from .microkernel import MicroParams
from .montecarlo import SamplerConfig, SpectrumHistogram
from .phase import Phase, PhaseInfo, TemperatureSpectrum, condensate, critical_value
from .specfun import EvalPolicy

__all__ = [
    "ConditioningError",
    "ConfigError",
    "DomainError",
    "EvalPolicy",
    "FiniteEnsembleParams",
    "GeometryError",
    "IllConditionedSpectrumError",
    "IntegrationFailureError",
    "LogValue",
    "MicroParams",
    "Phase",
    "PhaseError",
    "PhaseInfo",
    "SamplerConfig",
    "ScalingMap",
    "SpectrumHistogram",
    "TchgueError",
    "TemperatureSpectrum",
    "UnsupportedOrderError",
    "condensate",
    "critical_value",
    "__version__",
]
