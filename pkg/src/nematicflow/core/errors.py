"""Exception hierarchy shared by the solver modules."""

from __future__ import annotations


class NematicFlowError(Exception):
    """Base class for every domain failure raised by :mod:`nematicflow`."""


class ConfigError(NematicFlowError):
    """Raised when a configuration key is missing or carries an invalid value."""

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


class GridMismatchError(NematicFlowError):
    """Raised when two fields that must share a grid do not."""


class QuadratureError(NematicFlowError):
    """Raised when the initial curve in characteristic coordinates is not monotone."""


class RegionError(NematicFlowError):
    """Raised when a path or triangle leaves the computed region."""


class SolverError(NematicFlowError):
    """Raised when the characteristic march produces an unusable state.

    Attributes:
        node: Lattice indices ``(i, j)`` of the first offending node, if known.
    """

    def __init__(self, message: str, *, node: tuple[int, int] | None = None) -> None:
        if node is not None:
            message = f"{message} at lattice node {node}"
        super().__init__(message)
        self.node = node


class DilationBoundError(SolverError):
    """Raised when ``p`` or ``q`` leaves the admissible band."""


class InversionFoldError(NematicFlowError):
    """Raised when ``x`` is not monotone along a level set ``t = const``."""


class ConvergenceError(NematicFlowError):
    """Raised when the flux fixed point does not converge after all slab halvings."""

    def __init__(self, message: str, *, diagnostics: dict[str, object] | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


__all__ = [
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
