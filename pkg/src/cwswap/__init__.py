"""Simulator for entanglement swapping between two CW-pumped photon-pair sources."""

__version__ = "0.1.0"

from .config import ScenarioConfig, boosted_config, reference_config  # noqa: E402
from .errors import (  # noqa: E402
    ConfigError,
    CwswapError,
    DomainError,
    FitError,
    MemoryBudgetError,
    ResolutionError,
    UnitError,
)

__all__ = [
    "ScenarioConfig",
    "boosted_config",
    "reference_config",
    "ConfigError",
    "CwswapError",
    "DomainError",
    "FitError",
    "MemoryBudgetError",
    "ResolutionError",
    "UnitError",
]
