"""Public package API."""

from importlib import metadata

from .core import (
    BlowupFamily,
    ConfigError,
    FixedPointConfig,
    HeatQuadrature,
    InitialData,
    LeslieParams,
    NematicFlowError,
    PoiseuilleSimulator,
)

__all__ = [
    "PoiseuilleSimulator",
    "BlowupFamily",
    "ConfigError",
    "FixedPointConfig",
    "HeatQuadrature",
    "InitialData",
    "LeslieParams",
    "NematicFlowError",
]

try:
    __version__ = metadata.version("nematicflow")
except (
    metadata.PackageNotFoundError
):  # pragma: no cover - fallback for editable installs
    __version__ = "0.0.0"
