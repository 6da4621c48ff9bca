from .errors import (
    ConfigError,
    ConvergenceError,
    DilationBoundError,
    GridMismatchError,
    InversionFoldError,
    NematicFlowError,
    QuadratureError,
    RegionError,
    SolverError,
)
from .simulator import PoiseuilleSimulator
from .types import (
    BlowupFamily,
    FixedPointConfig,
    GridField,
    HeatQuadrature,
    InitialData,
    LeslieParams,
    Scenario,
    SlabRecord,
)

__all__ = [
    "PoiseuilleSimulator",
    "BlowupFamily",
    "FixedPointConfig",
    "GridField",
    "HeatQuadrature",
    "InitialData",
    "LeslieParams",
    "Scenario",
    "SlabRecord",
    "ConfigError",
    "ConvergenceError",
    "DilationBoundError",
    "GridMismatchError",
    "InversionFoldError",
    "NematicFlowError",
    "QuadratureError",
    "RegionError",
    "SolverError",
]
