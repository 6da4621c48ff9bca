"""Public data structures used by the Poiseuille flow solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, TypedDict

import numpy as np

__all__ = [
    "BlowupFamily",
    "FixedPointConfig",
    "GridField",
    "HeatQuadrature",
    "InitialData",
    "LeslieParams",
    "Scenario",
    "SlabRecord",
]

Scenario = Literal["smooth", "blowup", "sweep", "validate"]


class SlabRecord(TypedDict):
    """One accepted slab of the flux fixed point."""

    t_start: float
    t_end: float
    iterations: int
    halvings: int
    sup_change: float
    l2_change: float
    contraction: float


@dataclass(frozen=True)
class LeslieParams:
    """Material constants of the Ericksen-Leslie system.

    ``gamma1`` and ``gamma2`` default to ``alpha3 - alpha2`` and
    ``alpha6 - alpha5``. Explicit values are stored as given so that
    :func:`nematicflow.core.model.validate` can report an inconsistency.
    """

    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    alpha5: float
    alpha6: float
    K1: float
    K3: float
    gamma1: float | None = None
    gamma2: float | None = None
    rho: float = 1.0
    nu: float = 1.0
    pressure_gradient: float = 0.0

    def __post_init__(self) -> None:
        if self.gamma1 is None:
            object.__setattr__(self, "gamma1", self.alpha3 - self.alpha2)
        if self.gamma2 is None:
            object.__setattr__(self, "gamma2", self.alpha6 - self.alpha5)
        for name in ("K1", "K3", "rho", "nu"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")

    @property
    def alphas(self) -> tuple[float, float, float, float, float, float]:
        return (self.alpha1, self.alpha2, self.alpha3, self.alpha4, self.alpha5, self.alpha6)

    @classmethod
    def special(cls, *, K1: float = 1.0, K3: float = 4.0) -> "LeslieParams":
        """Return the reference parameter set with ``g = h = 1``.

        ``alpha1 = alpha5 = alpha6 = 0``, ``alpha2 = -1`` and ``alpha3 = alpha4 = 1``
        give ``gamma1 = 2``, ``gamma2 = 0`` and ``rho = nu = 1``.
        """

        return cls(
            alpha1=0.0,
            alpha2=-1.0,
            alpha3=1.0,
            alpha4=1.0,
            alpha5=0.0,
            alpha6=0.0,
            K1=K1,
            K3=K3,
        )


@dataclass(frozen=True)
class InitialData:
    """Initial state sampled on a uniform grid.

    Attributes:
        x: Strictly increasing, uniformly spaced sample points.
        u0: Velocity at ``t = 0``.
        theta0: Director angle at ``t = 0``.
        theta1: Angular velocity at ``t = 0``.
        theta_far: Constant far-field angle the data relaxes to.
        theta0_x: Exact derivative of ``theta0`` when known, else ``None``.
        u0_x: Exact derivative of ``u0`` when known, else ``None``.
        support: Interval outside which the data equals the far-field state.
    """

    x: np.ndarray
    u0: np.ndarray
    theta0: np.ndarray
    theta1: np.ndarray
    theta_far: float
    theta0_x: np.ndarray | None = None
    u0_x: np.ndarray | None = None
    support: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        n = self.x.shape[0]
        if self.x.ndim != 1 or n < 3:
            raise ValueError("x must be a one-dimensional grid with at least three points")
        steps = np.diff(self.x)
        if np.any(steps <= 0.0):
            raise ValueError("x must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("x must be uniformly spaced")
        for name in ("u0", "theta0", "theta1", "theta0_x", "u0_x"):
            values = getattr(self, name)
            if values is None:
                continue
            if values.shape != (n,):
                raise ValueError(f"{name} must have the same shape as x")
            if not np.all(np.isfinite(values)):
                raise ValueError(f"{name} must be finite")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def theta0_gradient(self) -> np.ndarray:
        if self.theta0_x is not None:
            return self.theta0_x
        return np.gradient(self.theta0, self.x)

    def u0_gradient(self) -> np.ndarray:
        if self.u0_x is not None:
            return self.u0_x
        return np.gradient(self.u0, self.x)


@dataclass(frozen=True)
class BlowupFamily:
    """Concentrated bump data ``theta0 = theta_star + eps * phi(x / eps)``.

    ``steepness`` is the bump height ``M`` in ``phi(a) = -M a (1 - a^2)^2``.
    ``None`` lets :func:`nematicflow.core.initial_data.build_blowup_data` pick a
    value above the cusp threshold.
    """

    epsilon: float
    theta_star: float = math.pi / 4
    steepness: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.steepness is not None and self.steepness <= 0.0:
            raise ValueError("steepness must be positive")


@dataclass(frozen=True)
class HeatQuadrature:
    """Discretisation knobs for heat-kernel convolutions."""

    truncation_sigmas: float = 8.0
    graded_nodes: int = 8
    resolved_cells: float = 2.0

    def __post_init__(self) -> None:
        if self.truncation_sigmas < 4.0:
            raise ValueError("truncation_sigmas must be at least 4")
        if self.graded_nodes < 1:
            raise ValueError("graded_nodes must be positive")
        if self.resolved_cells <= 0.0:
            raise ValueError("resolved_cells must be positive")


@dataclass(frozen=True)
class FixedPointConfig:
    """Controls for the slab-wise flux fixed point."""

    slab_length: float = 0.1
    max_iterations: int = 30
    tolerance: float = 1e-5
    relaxation: float = 0.5
    max_halvings: int = 4
    holder_exponent: float = 0.2
    probe_halved_slabs: bool = False

    def __post_init__(self) -> None:
        if self.slab_length <= 0.0:
            raise ValueError("slab_length must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        if not 0.0 < self.relaxation <= 1.0:
            raise ValueError("relaxation must lie in (0, 1]")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be non-negative")
        if not 0.0 < self.holder_exponent < 1.0:
            raise ValueError("holder_exponent must lie in (0, 1)")


@dataclass(frozen=True)
class GridField:
    """Samples of a space-time field on a tensor grid, ``values[n, i] = f(x[i], t[n])``."""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray
    name: str = field(default="field")

    def __post_init__(self) -> None:
        if self.values.shape != (self.t.shape[0], self.x.shape[0]):
            raise ValueError(
                f"{self.name} values must have shape (len(t), len(x)), got {self.values.shape}"
            )

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.shape[0] > 1 else 0.0
