"""Director fields on the ``(x, t)`` grid, as consumed by the heat-kernel solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import wave_speed
from .types import GridField, LeslieParams


@dataclass(frozen=True)
class DirectorFields:
    """Director angle and its derivatives sampled on ``(x, t)``.

    ``theta`` holds point values. Every derivative quantity is a cell average
    over ``[x_i - dx/2, x_i + dx/2]`` so that it stays bounded across a cusp;
    for smooth fields the averages coincide with point values to second order.

    Attributes:
        theta_t: Cell average of ``θ_t``.
        ctheta_x: Cell average of ``c(θ) θ_x``.
        theta_t_sq: Cell average of ``θ_t**2``.
        ctheta_x_sq: Cell average of ``(c θ_x)**2``.
        flux_source: Cell average of ``c**2 θ_x``.
        quadratic_source: Cell average of ``c' c θ_x**2``.
        blownup: Cells containing a node with ``1 + cos w`` or ``1 + cos z`` below tolerance.
    """

    x: np.ndarray
    t: np.ndarray
    theta: np.ndarray
    theta_t: np.ndarray
    ctheta_x: np.ndarray
    theta_t_sq: np.ndarray
    ctheta_x_sq: np.ndarray
    flux_source: np.ndarray
    quadratic_source: np.ndarray
    blownup: np.ndarray

    def __post_init__(self) -> None:
        shape = (self.t.shape[0], self.x.shape[0])
        for name in (
            "theta",
            "theta_t",
            "ctheta_x",
            "theta_t_sq",
            "ctheta_x_sq",
            "flux_source",
            "quadratic_source",
            "blownup",
        ):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} must have shape (len(t), len(x))")

    @classmethod
    def from_point_values(
        cls,
        *,
        x: np.ndarray,
        t: np.ndarray,
        theta: np.ndarray,
        theta_t: np.ndarray,
        theta_x: np.ndarray,
        params: LeslieParams,
    ) -> "DirectorFields":
        """Build fields from smooth point samples."""

        c, dc = wave_speed(params, theta)
        ctheta_x = c * theta_x
        return cls(
            x=x,
            t=t,
            theta=theta,
            theta_t=theta_t,
            ctheta_x=ctheta_x,
            theta_t_sq=theta_t**2,
            ctheta_x_sq=ctheta_x**2,
            flux_source=c * ctheta_x,
            quadratic_source=dc * c * theta_x**2,
            blownup=np.zeros(theta.shape, dtype=bool),
        )

    @property
    def wave_density(self) -> np.ndarray:
        """Cell average of ``θ_t**2 + c**2 θ_x**2``."""

        return self.theta_t_sq + self.ctheta_x_sq

    def theta_x(self, params: LeslieParams) -> np.ndarray:
        """Return ``θ_x`` recovered from ``c θ_x``; ``nan`` in blown-up cells."""

        c, _ = wave_speed(params, self.theta)
        return np.where(self.blownup, np.nan, self.ctheta_x / c)

    def grid_field(self, name: str) -> GridField:
        return GridField(x=self.x, t=self.t, values=getattr(self, name), name=name)

    def rows(self, stop: int) -> "DirectorFields":
        """Return the first ``stop`` time rows."""

        return DirectorFields(
            x=self.x,
            t=self.t[:stop],
            **{
                name: getattr(self, name)[:stop]
                for name in (
                    "theta",
                    "theta_t",
                    "ctheta_x",
                    "theta_t_sq",
                    "ctheta_x_sq",
                    "flux_source",
                    "quadratic_source",
                    "blownup",
                )
            },
        )


__all__ = ["DirectorFields"]
