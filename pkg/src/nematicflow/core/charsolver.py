"""Quasilinear director equation in characteristic coordinates.

The wave equation for the director is rewritten in the variables
``w = 2 arctan R`` and ``z = 2 arctan S`` (``R, S = θ_t ± c θ_x``) together with
the dilations ``p`` and ``q``. The resulting semilinear system has bounded
right-hand sides even where ``θ_x`` blows up, so it is marched on a tensor
lattice in ``(X, Y)`` and mapped back to ``(x, t)`` afterwards.

Lattice conventions: ``X`` increases with the column index ``i`` and ``Y``
with the row index ``j``. The initial curve holds the nodes ``(k, N - k)``.
Constant ``j`` is a forward characteristic, constant ``i`` a backward one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline

from .errors import DilationBoundError, InversionFoldError, QuadratureError, SolverError
from .fields import DirectorFields
from .helpers import cell_edges, grid_sampler, write_frame_csv
from .initial_data import riemann_initial
from .model import reduced_coefficients, require_valid, wave_speed
from .types import GridField, InitialData, LeslieParams

logger = logging.getLogger(__name__)

#: ``1 + cos w`` or ``1 + cos z`` below this marks a singular node.
SINGULAR_TOLERANCE = 1e-3

#: Admissible band for ``p`` and ``q``.
DILATION_BAND = (1e-8, 1e8)


# Initial curve -------------------------------------------------------------

@dataclass(frozen=True)
class Gamma0:
    """Image of ``t = 0`` in ``(X, Y)`` with the boundary data ``p = q = 1``.

    ``X`` is increasing and ``Y`` decreasing along ``x``.
    """

    x: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    theta: np.ndarray
    w: np.ndarray
    z: np.ndarray
    theta_far: float

    @property
    def nodes(self) -> int:
        """Number of lattice intervals ``N``."""

        return self.x.shape[0] - 1

    @property
    def diameter(self) -> float:
        """Distance between the two end vertices of the curve."""

        return float(math.hypot(self.X[-1] - self.X[0], self.Y[0] - self.Y[-1]))


def build_gamma0(data: InitialData, params: LeslieParams, *, nodes: int = 1024) -> Gamma0:
    """Map the initial line into characteristic coordinates.

    ``X(x) = ∫_0^x (1 + R**2)`` and ``Y(x) = ∫_x^0 (1 + S**2)`` are integrated
    exactly on a cubic-spline interpolant. The ``nodes + 1`` samples are
    spaced evenly in ``X - Y``, so cells concentrate where ``R`` or ``S`` are
    large.

    Raises:
        ValueError: If ``nodes`` is below 4.
        QuadratureError: If ``X`` or ``Y`` fails to be strictly monotone.
    """

    if nodes < 4:
        raise ValueError("nodes must be at least 4")
    R, S = riemann_initial(data, params)
    anchor = float(np.clip(0.0, data.x[0], data.x[-1]))
    X_of = CubicSpline(data.x, 1.0 + R**2).antiderivative()
    Y_of = CubicSpline(data.x, 1.0 + S**2).antiderivative()
    X_fine = X_of(data.x) - X_of(anchor)
    Y_fine = Y_of(anchor) - Y_of(data.x)
    if np.any(np.diff(X_fine) <= 0.0):
        raise QuadratureError("X is not strictly increasing along the initial line")
    if np.any(np.diff(Y_fine) >= 0.0):
        raise QuadratureError("Y is not strictly decreasing along the initial line")

    arc = X_fine - Y_fine
    x = np.interp(np.linspace(arc[0], arc[-1], nodes + 1), arc, data.x)
    x[0], x[-1] = data.x[0], data.x[-1]
    R_k = CubicSpline(data.x, R)(x)
    S_k = CubicSpline(data.x, S)(x)
    gamma0 = Gamma0(
        x=x,
        X=X_of(x) - X_of(anchor),
        Y=Y_of(anchor) - Y_of(x),
        theta=CubicSpline(data.x, data.theta0)(x),
        w=2.0 * np.arctan(R_k),
        z=2.0 * np.arctan(S_k),
        theta_far=data.theta_far,
    )
    logger.debug(
        "initial curve: %d nodes, X in [%g, %g], Y in [%g, %g]",
        nodes + 1,
        gamma0.X[0],
        gamma0.X[-1],
        gamma0.Y[-1],
        gamma0.Y[0],
    )
    return gamma0


# Right-hand sides ----------------------------------------------------------

@dataclass(frozen=True)
class _Rates:
    theta_X: np.ndarray
    theta_Y: np.ndarray
    z_X: np.ndarray
    w_Y: np.ndarray
    p_Y: np.ndarray
    q_X: np.ndarray
    x_X: np.ndarray
    t_X: np.ndarray
    x_Y: np.ndarray
    t_Y: np.ndarray


def _coefficients(
    params: LeslieParams,
    theta: np.ndarray,
    damping: float | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    c, dc = wave_speed(params, theta)
    damp, couple = reduced_coefficients(params, theta)
    if damping is not None:
        damp = np.full_like(c, damping)
    return c, dc, damp, couple


def _rates(
    params: LeslieParams,
    theta: np.ndarray,
    w: np.ndarray,
    z: np.ndarray,
    p: np.ndarray,
    q: np.ndarray,
    J_X: np.ndarray,
    J_Y: np.ndarray,
    damping: float | None,
) -> _Rates:
    """Evaluate the semilinear system; ``J_X`` feeds the ``X`` equations, ``J_Y`` the ``Y`` ones."""

    c, dc, damp, couple = _coefficients(params, theta, damping)
    sin_w, sin_z = np.sin(w), np.sin(z)
    cw2, cz2 = np.cos(0.5 * w) ** 2, np.cos(0.5 * z) ** 2
    sw2, sz2 = 1.0 - cw2, 1.0 - cz2
    mix = sin_w * cz2 + sin_z * cw2
    bend = dc / (4.0 * c**2)
    return _Rates(
        theta_X=sin_w * p / (4.0 * c),
        theta_Y=sin_z * q / (4.0 * c),
        z_X=p * (bend * (cw2 - cz2) - damp / (4.0 * c) * mix - couple / c * J_X * cw2 * cz2),
        w_Y=q * (bend * (cz2 - cw2) - damp / (4.0 * c) * mix - couple / c * J_Y * cw2 * cz2),
        p_Y=p
        * q
        * (
            0.5 * bend * (sin_z - sin_w)
            - damp / (2.0 * c) * (0.25 * sin_w * sin_z + sw2 * cz2)
            - couple / (2.0 * c) * J_Y * sin_w * cz2
        ),
        q_X=p
        * q
        * (
            0.5 * bend * (sin_w - sin_z)
            - damp / (2.0 * c) * (0.25 * sin_w * sin_z + sz2 * cw2)
            - couple / (2.0 * c) * J_X * sin_z * cw2
        ),
        x_X=0.5 * cw2 * p,
        t_X=0.5 * cw2 * p / c,
        x_Y=-0.5 * cz2 * q,
        t_Y=0.5 * cz2 * q / c,
    )


def _dilation_coefficients(
    params: LeslieParams,
    theta: np.ndarray,
    w: np.ndarray,
    z: np.ndarray,
    J: np.ndarray,
    damping: float | None,
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(q_X / pq, p_Y / pq)``."""

    ones = np.ones_like(theta)
    rates = _rates(params, theta, w, z, ones, ones, J, J, damping)
    return rates.q_X, rates.p_Y


# Lattice state -------------------------------------------------------------

@dataclass(frozen=True)
class CharState:
    """Solution on the ``(X, Y)`` lattice.

    Node arrays have shape ``(N + 1, N + 1)`` indexed ``[i, j]``. Nodes below the
    initial curve (``i + j < N``) and nodes beyond the last completed band hold
    ``nan``. ``x`` and ``t`` are the means of the row-integrated and
    column-integrated positions; ``x_residual`` and ``t_residual`` store their
    differences.
    """

    gamma0: Gamma0
    params: LeslieParams
    X: np.ndarray
    Y: np.ndarray
    theta: np.ndarray
    w: np.ndarray
    z: np.ndarray
    p: np.ndarray
    q: np.ndarray
    x: np.ndarray
    t: np.ndarray
    J: np.ndarray
    x_residual: np.ndarray
    t_residual: np.ndarray
    bands: int
    damping: float | None = None
    singular_tolerance: float = SINGULAR_TOLERANCE

    @property
    def nodes(self) -> int:
        return self.gamma0.nodes

    @property
    def computed(self) -> np.ndarray:
        return np.isfinite(self.t)

    @property
    def R(self) -> np.ndarray:
        return np.tan(0.5 * self.w)

    @property
    def S(self) -> np.ndarray:
        return np.tan(0.5 * self.z)

    @property
    def one_plus_cos_w(self) -> np.ndarray:
        return 1.0 + np.cos(self.w)

    @property
    def one_plus_cos_z(self) -> np.ndarray:
        return 1.0 + np.cos(self.z)

    @property
    def singular(self) -> np.ndarray:
        """Computed nodes where ``1 + cos w`` or ``1 + cos z`` is below tolerance."""

        with np.errstate(invalid="ignore"):
            return self.computed & (
                (self.one_plus_cos_w < self.singular_tolerance)
                | (self.one_plus_cos_z < self.singular_tolerance)
            )

    @property
    def t_max(self) -> float:
        """Largest computed time."""

        return float(np.nanmax(self.t))

    def mixed_residuals(self) -> tuple[float, float]:
        """Return the largest ``|x_m - x_p|`` and ``|t_m - t_p|`` over computed nodes."""

        return float(np.nanmax(self.x_residual)), float(np.nanmax(self.t_residual))


def _initial_lattice(gamma0: Gamma0, flux_at) -> dict[str, np.ndarray]:
    N = gamma0.nodes
    shape = (N + 1, N + 1)
    arrays = {name: np.full(shape, np.nan) for name in ("theta", "w", "z", "p", "q", "x", "t", "J")}
    arrays["x_residual"] = np.full(shape, np.nan)
    arrays["t_residual"] = np.full(shape, np.nan)
    k = np.arange(N + 1)
    diag = (k, N - k)
    arrays["theta"][diag] = gamma0.theta
    arrays["w"][diag] = gamma0.w
    arrays["z"][diag] = gamma0.z
    arrays["p"][diag] = 1.0
    arrays["q"][diag] = 1.0
    arrays["x"][diag] = gamma0.x
    arrays["t"][diag] = 0.0
    arrays["J"][diag] = flux_at(gamma0.x, np.zeros_like(gamma0.x))
    arrays["x_residual"][diag] = 0.0
    arrays["t_residual"][diag] = 0.0
    return arrays


def integrate_semilinear(
    gamma0: Gamma0,
    flux: GridField | None,
    params: LeslieParams,
    *,
    t_stop: float | None = None,
    damping: float | None = None,
    dilation_band: tuple[float, float] = DILATION_BAND,
    singular_tolerance: float = SINGULAR_TOLERANCE,
) -> CharState:
    """March the semilinear system away from the initial curve.

    Anti-band ``d`` holds the nodes ``(i, N + d - i)``. Each node is reached by
    a Heun step along its row from ``(i - 1, j)`` for ``z``, ``q`` and the
    ``X``-integrated position, and along its column from ``(i, j - 1)`` for
    ``w``, ``p`` and the ``Y``-integrated position.

    Args:
        gamma0: Initial curve with boundary data.
        flux: Forcing ``J`` on an ``(x, t)`` grid, or ``None`` for ``J = 0``.
        params: Material constants.
        t_stop: Stop once every node of a band lies beyond this time.
        damping: Constant replacing the residual damping ``γ1 - h**2/g``.
        dilation_band: Open interval ``p`` and ``q`` must stay inside.
        singular_tolerance: Threshold on ``1 + cos`` for singular nodes.

    Returns:
        The lattice state.

    Raises:
        DilationBoundError: If ``p`` or ``q`` leaves ``dilation_band``.
        SolverError: If a non-finite value appears.
    """

    require_valid(params)
    N = gamma0.nodes
    X = gamma0.X.copy()
    Y = gamma0.Y[::-1].copy()
    if flux is None:
        def flux_at(x: np.ndarray, t: np.ndarray) -> np.ndarray:
            return np.zeros(np.broadcast(x, t).shape)
    else:
        flux_at = grid_sampler(flux, far_value=0.0)

    a = _initial_lattice(gamma0, flux_at)
    theta, w, z, p, q, x, t, J = (a[k] for k in ("theta", "w", "z", "p", "q", "x", "t", "J"))
    x_res, t_res = a["x_residual"], a["t_residual"]
    lo, hi = dilation_band

    completed = 0
    for d in range(1, N + 1):
        i = np.arange(d, N + 1)
        j = N + d - i
        hX = X[i] - X[i - 1]
        hY = Y[j] - Y[j - 1]
        A = (i - 1, j)
        B = (i, j - 1)

        rA = _rates(params, theta[A], w[A], z[A], p[A], q[A], J[A], J[A], damping)
        rB = _rates(params, theta[B], w[B], z[B], p[B], q[B], J[B], J[B], damping)

        z_s = z[A] + hX * rA.z_X
        q_s = q[A] + hX * rA.q_X
        w_s = w[B] + hY * rB.w_Y
        p_s = p[B] + hY * rB.p_Y
        theta_s = 0.5 * (theta[A] + hX * rA.theta_X + theta[B] + hY * rB.theta_Y)
        xm_s, tm_s = x[A] + hX * rA.x_X, t[A] + hX * rA.t_X
        xp_s, tp_s = x[B] + hY * rB.x_Y, t[B] + hY * rB.t_Y

        r_s = _rates(
            params,
            theta_s,
            w_s,
            z_s,
            p_s,
            q_s,
            flux_at(xp_s, tp_s),
            flux_at(xm_s, tm_s),
            damping,
        )
        z_new = z[A] + 0.5 * hX * (rA.z_X + r_s.z_X)
        q_new = q[A] + 0.5 * hX * (rA.q_X + r_s.q_X)
        w_new = w[B] + 0.5 * hY * (rB.w_Y + r_s.w_Y)
        p_new = p[B] + 0.5 * hY * (rB.p_Y + r_s.p_Y)
        theta_row = theta[A] + 0.5 * hX * (rA.theta_X + r_s.theta_X)
        theta_col = theta[B] + 0.5 * hY * (rB.theta_Y + r_s.theta_Y)
        x_m = x[A] + 0.5 * hX * (rA.x_X + r_s.x_X)
        t_m = t[A] + 0.5 * hX * (rA.t_X + r_s.t_X)
        x_p = x[B] + 0.5 * hY * (rB.x_Y + r_s.x_Y)
        t_p = t[B] + 0.5 * hY * (rB.t_Y + r_s.t_Y)

        node = (i, j)
        theta[node] = 0.5 * (theta_row + theta_col)
        w[node], z[node], p[node], q[node] = w_new, z_new, p_new, q_new
        x[node] = 0.5 * (x_m + x_p)
        t[node] = 0.5 * (t_m + t_p)
        x_res[node] = np.abs(x_m - x_p)
        t_res[node] = np.abs(t_m - t_p)
        J[node] = flux_at(x[node], t[node])

        values = np.stack([theta[node], w_new, z_new, p_new, q_new, x[node], t[node]])
        bad = ~np.all(np.isfinite(values), axis=0)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise SolverError("non-finite value in characteristic march", node=(int(i[k]), int(j[k])))
        outside = (np.minimum(p_new, q_new) <= lo) | (np.maximum(p_new, q_new) >= hi)
        if np.any(outside):
            k = int(np.argmax(outside))
            raise DilationBoundError(
                f"p={p_new[k]:.3g}, q={q_new[k]:.3g} left ({lo:g}, {hi:g})",
                node=(int(i[k]), int(j[k])),
            )

        completed = d
        if d % 256 == 0:
            logger.debug("band %d/%d: t in [%g, %g]", d, N, t[node].min(), t[node].max())
        if t_stop is not None and float(np.min(t[node])) > t_stop:
            break

    return CharState(
        gamma0=gamma0,
        params=params,
        X=X,
        Y=Y,
        theta=theta,
        w=w,
        z=z,
        p=p,
        q=q,
        x=x,
        t=t,
        J=J,
        x_residual=x_res,
        t_residual=t_res,
        bands=completed,
        damping=damping,
        singular_tolerance=singular_tolerance,
    )


def solve_characteristics(
    data: InitialData,
    flux: GridField | None,
    params: LeslieParams,
    *,
    nodes: int = 1024,
    max_refinements: int = 2,
    **options,
) -> CharState:
    """Build the initial curve and march, doubling the lattice when ``p`` or ``q`` escape.

    Keyword options are passed to :func:`integrate_semilinear`.
    """

    attempt = 0
    while True:
        gamma0 = build_gamma0(data, params, nodes=nodes)
        try:
            return integrate_semilinear(gamma0, flux, params, **options)
        except DilationBoundError as exc:
            if attempt == max_refinements:
                raise
            logger.warning("rejected lattice with %d nodes (%s); refining", nodes, exc)
            attempt += 1
            nodes *= 2


# Level sets ----------------------------------------------------------------

@dataclass(frozen=True)
class LevelCurve:
    """Points of ``t(X, Y) = tau`` ordered by increasing ``X``."""

    tau: float
    X: np.ndarray
    Y: np.ndarray
    x: np.ndarray
    theta: np.ndarray
    w: np.ndarray
    z: np.ndarray
    p: np.ndarray
    q: np.ndarray

    @property
    def size(self) -> int:
        return self.x.shape[0]


_CURVE_FIELDS = ("x", "theta", "w", "z", "p", "q")


def _crossings(state: CharState, tau: float, *, axis: int) -> dict[str, np.ndarray]:
    """Linear crossings of ``t = tau`` along columns (``axis=1``) or rows (``axis=0``)."""

    N = state.nodes
    i, j = np.indices(state.t.shape)
    valid = i + j >= N
    T = np.where(valid, state.t, -np.inf)
    T = np.where(valid & ~np.isfinite(state.t), np.inf, T)
    if axis == 0:
        T = T.T
    above = T > tau
    has = np.any(above, axis=1)
    first = np.argmax(above, axis=1)
    lines = np.nonzero(has & (first > 0))[0]
    upper = first[lines]
    lower = upper - 1
    t_lo, t_hi = T[lines, lower], T[lines, upper]
    keep = np.isfinite(t_lo) & np.isfinite(t_hi)
    lines, lower, upper, t_lo, t_hi = lines[keep], lower[keep], upper[keep], t_lo[keep], t_hi[keep]
    span = t_hi - t_lo
    frac = np.where(span > 0.0, (tau - t_lo) / np.where(span > 0.0, span, 1.0), 0.0)

    def pick(values: np.ndarray) -> np.ndarray:
        grid = values.T if axis == 0 else values
        return grid[lines, lower] + frac * (grid[lines, upper] - grid[lines, lower])

    if axis == 1:
        out = {"X": state.X[lines], "Y": state.Y[lower] + frac * (state.Y[upper] - state.Y[lower])}
    else:
        out = {"X": state.X[lower] + frac * (state.X[upper] - state.X[lower]), "Y": state.Y[lines]}
    for name in _CURVE_FIELDS:
        out[name] = pick(getattr(state, name))
    return out


def level_curve(state: CharState, tau: float, *, fold_tolerance: float = 1e-4) -> LevelCurve:
    """Extract the level set ``t = tau`` from column and row crossings.

    Raises:
        ValueError: If ``tau`` is negative.
        InversionFoldError: If ``x`` decreases along the curve by more than
            ``fold_tolerance`` times the width of the initial line.
    """

    if tau < 0.0:
        raise ValueError("tau must be non-negative")
    columns = _crossings(state, tau, axis=1)
    rows = _crossings(state, tau, axis=0)
    merged = {name: np.concatenate([columns[name], rows[name]]) for name in columns}
    order = np.lexsort((-merged["Y"], merged["X"]))
    merged = {name: values[order] for name, values in merged.items()}

    x = merged["x"]
    if x.shape[0] > 1:
        drop = np.maximum.accumulate(x) - x
        width = state.gamma0.x[-1] - state.gamma0.x[0]
        worst = float(np.max(drop))
        if worst > fold_tolerance * width:
            k = int(np.argmax(drop))
            raise InversionFoldError(
                f"x decreases by {worst:.3g} along the level t={tau:g} near x={x[k]:.6g}"
            )
        if worst > 0.0:
            logger.debug("level t=%g: clipped x reversal of %.3g", tau, worst)
        merged["x"] = np.maximum.accumulate(x)
    return LevelCurve(tau=float(tau), **merged)


@dataclass(frozen=True)
class _Segments:
    x_lo: np.ndarray
    x_hi: np.ndarray
    energy: np.ndarray
    singular: np.ndarray
    increments: dict[str, np.ndarray]


def _segments(curve: LevelCurve, params: LeslieParams, tol: float) -> _Segments:
    """Bounded per-segment integrals ``∫ f dx`` along a level curve."""

    mid = {
        name: 0.5 * (getattr(curve, name)[1:] + getattr(curve, name)[:-1])
        for name in ("theta", "w", "z", "p", "q")
    }
    dX = np.clip(np.diff(curve.X), 0.0, None)
    dY = np.clip(-np.diff(curve.Y), 0.0, None)
    along_X = mid["p"] * dX
    along_Y = mid["q"] * dY
    half_w, half_z = 0.5 * mid["w"], 0.5 * mid["z"]
    sign = np.sign(np.cos(half_w) * np.cos(half_z))
    R_dx = 0.5 * np.sin(mid["w"]) * along_X
    S_dx = 0.5 * np.sin(mid["z"]) * along_Y
    R2_dx = np.sin(half_w) ** 2 * along_X
    S2_dx = np.sin(half_z) ** 2 * along_Y
    RS_dx = sign * np.sin(half_w) * np.sin(half_z) * np.sqrt(along_X * along_Y)
    c, dc = wave_speed(params, mid["theta"])
    ctheta_x = 0.5 * (R_dx - S_dx)
    ctheta_x_sq = 0.25 * (R2_dx - 2.0 * RS_dx + S2_dx)
    increments = {
        "theta_t": 0.5 * (R_dx + S_dx),
        "ctheta_x": ctheta_x,
        "theta_t_sq": 0.25 * (R2_dx + 2.0 * RS_dx + S2_dx),
        "ctheta_x_sq": ctheta_x_sq,
        "flux_source": c * ctheta_x,
        "quadratic_source": dc / c * ctheta_x_sq,
    }
    singular = (1.0 + np.cos(mid["w"]) < tol) | (1.0 + np.cos(mid["z"]) < tol)
    return _Segments(
        x_lo=curve.x[:-1],
        x_hi=curve.x[1:],
        energy=0.5 * (R2_dx + S2_dx),
        singular=singular,
        increments=increments,
    )


def energy_on_level(state: CharState, tau: float) -> float:
    """Return ``∫ (1 - cos w)/4 p dX - (1 - cos z)/4 q dY`` along ``t = tau``.

    For smooth levels this equals ``∫ (θ_t**2 + c**2 θ_x**2) dx``.
    """

    curve = level_curve(state, tau)
    if curve.size < 2:
        return 0.0
    return float(np.sum(_segments(curve, state.params, state.singular_tolerance).energy))


def energy_concentration(state: CharState, tau: float) -> float:
    """Return the part of the level energy carried by singular segments."""

    curve = level_curve(state, tau)
    if curve.size < 2:
        return 0.0
    segments = _segments(curve, state.params, state.singular_tolerance)
    return float(np.sum(segments.energy[segments.singular]))


# Inversion -----------------------------------------------------------------

@dataclass(frozen=True)
class Inversion:
    """Director fields on ``(x, t)`` plus per-level diagnostics."""

    fields: DirectorFields
    energy: np.ndarray
    concentration: np.ndarray
    min_one_plus_cos_w: np.ndarray
    min_one_plus_cos_z: np.ndarray


def invert_to_xt(
    state: CharState,
    t_levels: np.ndarray,
    *,
    x_grid: np.ndarray,
    fold_tolerance: float = 1e-4,
) -> Inversion:
    """Sample the lattice solution on the tensor grid ``x_grid × t_levels``.

    ``θ`` is interpolated along each level curve. Every derivative quantity is
    the exact cell average of its bounded segment integral, which stays finite
    through a cusp; cells touching a singular node are flagged. Points outside
    the computed region take the far-field state.
    """

    t_levels = np.asarray(t_levels, dtype=float)
    nt, nx = t_levels.shape[0], x_grid.shape[0]
    edges = cell_edges(x_grid)
    widths = np.diff(edges)
    names = ("theta_t", "ctheta_x", "theta_t_sq", "ctheta_x_sq", "flux_source", "quadratic_source")
    averages = {name: np.zeros((nt, nx)) for name in names}
    theta = np.full((nt, nx), state.gamma0.theta_far)
    blownup = np.zeros((nt, nx), dtype=bool)
    energy = np.zeros(nt)
    concentration = np.zeros(nt)
    min_w = np.full(nt, 2.0)
    min_z = np.full(nt, 2.0)
    tol = state.singular_tolerance

    for n, tau in enumerate(t_levels):
        curve = level_curve(state, float(tau), fold_tolerance=fold_tolerance)
        if curve.size < 2:
            continue
        theta[n] = np.interp(
            x_grid, curve.x, curve.theta, left=state.gamma0.theta_far, right=state.gamma0.theta_far
        )
        segments = _segments(curve, state.params, tol)
        for name in names:
            running = np.concatenate([[0.0], np.cumsum(segments.increments[name])])
            averages[name][n] = np.diff(np.interp(edges, curve.x, running)) / widths
        energy[n] = float(np.sum(segments.energy))
        concentration[n] = float(np.sum(segments.energy[segments.singular]))
        min_w[n] = float(np.min(1.0 + np.cos(curve.w)))
        min_z[n] = float(np.min(1.0 + np.cos(curve.z)))
        if np.any(segments.singular):
            lo = np.searchsorted(edges, segments.x_lo[segments.singular], side="right") - 1
            hi = np.searchsorted(edges, segments.x_hi[segments.singular], side="right") - 1
            for a, b in zip(np.clip(lo, 0, nx - 1), np.clip(hi, 0, nx - 1), strict=True):
                blownup[n, a : b + 1] = True

    fields = DirectorFields(x=x_grid, t=t_levels, theta=theta, blownup=blownup, **averages)
    return Inversion(
        fields=fields,
        energy=energy,
        concentration=concentration,
        min_one_plus_cos_w=min_w,
        min_one_plus_cos_z=min_z,
    )


# Diagnostics ---------------------------------------------------------------

@dataclass(frozen=True)
class DilationReport:
    """Extrema of ``p`` and ``q`` against the certified bound ``exp(B (2D + J̄))``."""

    min_p: float
    max_p: float
    min_q: float
    max_q: float
    sup_coefficient: float
    diameter: float
    flux_norm: float
    certified_bound: float
    leg_integral: float
    violation_node: tuple[int, int] | None

    @property
    def within(self) -> bool:
        return self.violation_node is None


def check_pq_bounds(state: CharState, flux_norm: float) -> DilationReport:
    """Compare the dilation extrema with the bound from their transport equations.

    ``flux_norm`` is ``||J||`` in ``C^α ∩ L^∞ ∩ L^2``. The coefficient bound is the
    largest of ``|p_Y / pq|`` and ``|q_X / pq|`` over computed nodes.
    """

    if flux_norm < 0.0:
        raise ValueError("flux_norm must be non-negative")
    done = state.computed
    p, q = state.p[done], state.q[done]
    coeff_q, coeff_p = _dilation_coefficients(
        state.params, state.theta[done], state.w[done], state.z[done], state.J[done], state.damping
    )
    sup_coefficient = float(max(np.max(np.abs(coeff_p)), np.max(np.abs(coeff_q))))
    diameter = state.gamma0.diameter
    bound = math.exp(min(sup_coefficient * (2.0 * diameter + flux_norm), 700.0))

    largest = np.where(done, np.maximum(state.p, state.q), -np.inf)
    smallest = np.where(done, np.minimum(state.p, state.q), np.inf)
    violation = None
    if float(np.max(largest)) > bound:
        violation = tuple(int(v) for v in np.unravel_index(np.argmax(largest), largest.shape))
    elif float(np.min(smallest)) <= 0.0:
        violation = tuple(int(v) for v in np.unravel_index(np.argmin(smallest), smallest.shape))
    if violation is not None:
        logger.warning("dilation bound violated at lattice node %s", violation)

    apex = np.unravel_index(np.argmax(largest), largest.shape)
    return DilationReport(
        min_p=float(np.min(p)),
        max_p=float(np.max(p)),
        min_q=float(np.min(q)),
        max_q=float(np.max(q)),
        sup_coefficient=sup_coefficient,
        diameter=diameter,
        flux_norm=flux_norm,
        certified_bound=bound,
        leg_integral=_leg_integral(state, int(apex[0]), int(apex[1])),
        violation_node=violation,
    )


def _leg_integral(state: CharState, i: int, j: int) -> float:
    """``∫ p dX`` along row ``j`` plus ``∫ q dY`` along column ``i`` from the initial curve."""

    N = state.nodes
    row = slice(N - j, i + 1)
    column = slice(N - i, j + 1)
    along_row = np.trapezoid(state.p[row, j], state.X[row]) if i > N - j else 0.0
    along_column = np.trapezoid(state.q[i, column], state.Y[column]) if j > N - i else 0.0
    return float(along_row + along_column)


@dataclass(frozen=True)
class BalanceResidual:
    """Green-form residual of the local energy balance on lattice cells."""

    max_cell: float
    relative: float
    cells: int


def riemann_balance_residual(state: CharState) -> BalanceResidual:
    """Residual of ``((1 - cos z) q)_X + ((1 - cos w) p)_Y = source`` per cell.

    The divergence is integrated around each cell and the source, obtained
    from the transport equations by the chain rule, by the trapezoid rule on
    its corners. Without damping and forcing the source vanishes identically.
    """

    done = state.computed
    theta = np.where(done, state.theta, state.gamma0.theta_far)
    w, z, J = (np.where(done, values, 0.0) for values in (state.w, state.z, state.J))
    p, q = (np.where(done, values, 1.0) for values in (state.p, state.q))
    flux_X = (1.0 - np.cos(z)) * q
    flux_Y = (1.0 - np.cos(w)) * p
    rates = _rates(state.params, theta, w, z, p, q, J, J, state.damping)
    source = (
        np.sin(z) * q * rates.z_X
        + (1.0 - np.cos(z)) * rates.q_X
        + np.sin(w) * p * rates.w_Y
        + (1.0 - np.cos(w)) * rates.p_Y
    )
    hX = np.diff(state.X)[:, None]
    hY = np.diff(state.Y)[None, :]
    corners = done[1:, 1:] & done[:-1, 1:] & done[1:, :-1] & done[:-1, :-1]
    divergence = 0.5 * hY * (
        (flux_X[1:, 1:] + flux_X[1:, :-1]) - (flux_X[:-1, 1:] + flux_X[:-1, :-1])
    ) + 0.5 * hX * ((flux_Y[1:, 1:] + flux_Y[:-1, 1:]) - (flux_Y[1:, :-1] + flux_Y[:-1, :-1]))
    integral = 0.25 * hX * hY * (source[1:, 1:] + source[:-1, 1:] + source[1:, :-1] + source[:-1, :-1])
    scale = 0.5 * hY * (np.abs(flux_X[1:, 1:]) + np.abs(flux_X[:-1, :-1])) + 0.5 * hX * (
        np.abs(flux_Y[1:, 1:]) + np.abs(flux_Y[:-1, :-1])
    )
    residual = np.abs(divergence - integral)[corners]
    total = float(np.sum(scale[corners]))
    return BalanceResidual(
        max_cell=float(np.max(residual)) if residual.size else 0.0,
        relative=float(np.sum(residual)) / total if total > 0.0 else 0.0,
        cells=int(residual.size),
    )


# Export --------------------------------------------------------------------

def state_frame(state: CharState) -> pd.DataFrame:
    done = state.computed
    i, j = np.nonzero(done)
    return pd.DataFrame(
        {
            "X": state.X[i],
            "Y": state.Y[j],
            "x": state.x[done],
            "t": state.t[done],
            "theta": state.theta[done],
            "w": state.w[done],
            "z": state.z[done],
            "p": state.p[done],
            "q": state.q[done],
        }
    )


def export_state_csv(state: CharState, path: Path) -> Path:
    """Write computed lattice nodes with columns ``X, Y, x, t, theta, w, z, p, q``."""

    return write_frame_csv(state_frame(state), path)


def level_frame(fields: DirectorFields, row: int, params: LeslieParams) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "x": fields.x,
            "theta": fields.theta[row],
            "theta_t": fields.theta_t[row],
            "theta_x": fields.theta_x(params)[row],
            "blownup_flag": fields.blownup[row].astype(int),
        }
    )


def export_level_csv(fields: DirectorFields, row: int, params: LeslieParams, path: Path) -> Path:
    """Write one time level with columns ``x, theta, theta_t, theta_x, blownup_flag``."""

    return write_frame_csv(level_frame(fields, row, params), path)


__all__ = [
    "BalanceResidual",
    "CharState",
    "DILATION_BAND",
    "DilationReport",
    "Gamma0",
    "Inversion",
    "LevelCurve",
    "SINGULAR_TOLERANCE",
    "build_gamma0",
    "check_pq_bounds",
    "energy_concentration",
    "energy_on_level",
    "export_level_csv",
    "export_state_csv",
    "integrate_semilinear",
    "invert_to_xt",
    "level_curve",
    "level_frame",
    "riemann_balance_residual",
    "solve_characteristics",
    "state_frame",
]
