"""Shared helper utilities for the Poiseuille flow solvers."""

from __future__ import annotations

import json
import math
from collections.abc import Mapping
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import RegularGridInterpolator

from .errors import GridMismatchError
from .types import GridField, InitialData

CSV_FLOAT_FORMAT = "%.17g"


# Grids ---------------------------------------------------------------------

def uniform_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """Return ``n`` equally spaced points covering ``[lo, hi]``."""

    if n < 3:
        raise ValueError("a grid needs at least three points")
    if not hi > lo:
        raise ValueError("grid upper bound must exceed the lower bound")
    return np.linspace(lo, hi, n)


def require_same_grid(a: np.ndarray, b: np.ndarray, *, what: str) -> None:
    if a.shape != b.shape or not np.allclose(a, b, rtol=0.0, atol=1e-12):
        raise GridMismatchError(f"{what} grids differ")


def cell_edges(x: np.ndarray) -> np.ndarray:
    """Return the edges of the cells centred on the uniform grid ``x``."""

    dx = x[1] - x[0]
    return np.concatenate([x - 0.5 * dx, [x[-1] + 0.5 * dx]])


def cell_average(x_src: np.ndarray, values: np.ndarray, x_dst: np.ndarray) -> np.ndarray:
    """Average ``values`` sampled at ``x_src`` over the cells centred on ``x_dst``.

    The running integral is interpolated at the cell edges, so mass is conserved
    for every cell lying inside ``[x_src[0], x_src[-1]]``.
    """

    running = cumulative_trapezoid(values, x_src, initial=0.0)
    edges = cell_edges(x_dst)
    return np.diff(np.interp(edges, x_src, running)) / np.diff(edges)


def resample_initial(data: InitialData, x: np.ndarray) -> InitialData:
    """Transfer ``data`` onto the uniform grid ``x``.

    Velocities are cell averaged, the angle is interpolated.
    """

    u0_x = data.u0_gradient()
    theta0_x = data.theta0_gradient()
    return InitialData(
        x=x,
        u0=np.interp(x, data.x, data.u0),
        theta0=np.interp(x, data.x, data.theta0, left=data.theta_far, right=data.theta_far),
        theta1=cell_average(data.x, data.theta1, x),
        theta_far=data.theta_far,
        theta0_x=cell_average(data.x, theta0_x, x),
        u0_x=cell_average(data.x, u0_x, x),
        support=data.support,
    )


# Angles --------------------------------------------------------------------

def wrap_angle(angle: np.ndarray | float) -> np.ndarray:
    """Map ``angle`` into ``[-pi, pi)``."""

    return np.mod(np.asarray(angle) + math.pi, 2.0 * math.pi) - math.pi


# Sampling ------------------------------------------------------------------

def grid_sampler(field: GridField, *, far_value: float = 0.0):
    """Return a vectorised bilinear sampler ``f(x, t)`` for ``field``.

    Times outside the grid are clamped to the first or last row; points outside
    the spatial range evaluate to ``far_value``.
    """

    interpolator = RegularGridInterpolator(
        (field.t, field.x),
        field.values,
        method="linear",
        bounds_error=False,
        fill_value=far_value,
    )
    t_lo, t_hi = float(field.t[0]), float(field.t[-1])

    def sample(x: np.ndarray, t: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        t = np.clip(np.asarray(t, dtype=float), t_lo, t_hi)
        points = np.stack(np.broadcast_arrays(t, x), axis=-1)
        return interpolator(points)

    return sample


# Norms ---------------------------------------------------------------------

def space_l2(values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Return the ``L2`` norm in ``x`` of every row of ``values``."""

    return np.sqrt(np.trapezoid(np.asarray(values) ** 2, x, axis=-1))


def space_time_l2(values: np.ndarray, x: np.ndarray, t: np.ndarray) -> float:
    if t.shape[0] < 2:
        return 0.0
    return float(np.sqrt(np.trapezoid(space_l2(values, x) ** 2, t)))


# Files ---------------------------------------------------------------------

def write_frame_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Write ``frame`` with enough digits for a lossless round trip."""

    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    return path


def read_frame_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def field_frame(field: GridField) -> pd.DataFrame:
    """Return ``field`` as a matrix: one row per ``x``, one column per ``t`` level.

    The first column holds the ``x`` values and the remaining headers are the
    ``t`` values, written with full precision.
    """

    frame = pd.DataFrame(field.values.T, columns=[CSV_FLOAT_FORMAT % value for value in field.t])
    frame.insert(0, "x", field.x)
    return frame


def write_field_csv(field: GridField, path: Path) -> Path:
    return write_frame_csv(field_frame(field), path)


def read_field_csv(path: Path, name: str) -> GridField:
    """Read a field matrix written by :func:`write_field_csv`."""

    frame = read_frame_csv(path).set_index("x")
    return GridField(
        x=frame.index.to_numpy(dtype=float),
        t=np.array([float(label) for label in frame.columns]),
        values=frame.to_numpy(dtype=float).T,
        name=name,
    )


def write_json(payload: Mapping[str, object], path: Path) -> Path:
    """Write ``payload`` with sorted keys so identical runs give identical bytes."""

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n")
    return path


def _json_default(value: object) -> object:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")


__all__ = [
    "CSV_FLOAT_FORMAT",
    "cell_average",
    "cell_edges",
    "field_frame",
    "grid_sampler",
    "read_field_csv",
    "read_frame_csv",
    "require_same_grid",
    "resample_initial",
    "space_l2",
    "space_time_l2",
    "uniform_grid",
    "wrap_angle",
    "write_field_csv",
    "write_frame_csv",
    "write_json",
]
