"""Tracking of the one-sided cusp: characteristics, Riccati monitor and a priori checks."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .charsolver import CharState, level_curve
from .coupled import SolutionBundle
from .errors import RegionError
from .helpers import write_frame_csv, write_json
from .initial_data import FamilyConstants, family_constants
from .model import wave_speed
from .types import BlowupFamily, LeslieParams

logger = logging.getLogger(__name__)

#: Largest ``|R|`` tolerated on the singular fiber of a one-sided cusp.
R_FIBER_BOUND = 10.0


def _char_state(source: SolutionBundle | CharState) -> CharState:
    if isinstance(source, CharState):
        return source
    if source.state is None:
        raise ValueError("bundle has no characteristic lattice; use fixed_point_solve")
    return source.state


def _tan_half(angle: np.ndarray) -> np.ndarray:
    return np.tan(0.5 * angle)


# Forward characteristic ----------------------------------------------------

@dataclass(frozen=True)
class CharacteristicTrace:
    """Values along ``dΓ/dt = c(θ(Γ, t))``.

    ``frame`` has columns ``t``, ``x``, ``S``, ``R``, ``theta`` and ``S_tilde``
    (``exp(t/2) S``), one row per lattice node of the fiber.
    """

    frame: pd.DataFrame
    row: int
    max_drift: float
    drift_bound: float | None
    drift_ok: bool
    sign_ok: bool

    @property
    def S_above_one(self) -> bool:
        return bool((self.frame["S"] > 1.0).all())


def trace_forward_characteristic(
    source: SolutionBundle | CharState,
    x_start: float,
    *,
    t_end: float | None = None,
    theta_star: float | None = None,
    drift_bound: float | None = None,
) -> CharacteristicTrace:
    """Follow the forward characteristic leaving ``(x_start, 0)``.

    Forward characteristics are the lattice rows of constant ``Y``; the path
    starts at the initial-curve node closest to ``x_start``.

    Args:
        source: A characteristic-solver bundle or its lattice state.
        x_start: Foot of the characteristic.
        t_end: Last time kept; the whole computed fiber when omitted.
        theta_star: Reference angle for the drift and sign checks; the value
            at the foot when omitted.
        drift_bound: Upper bound for ``|θ - θ*|`` along the path.

    Raises:
        RegionError: If ``x_start`` lies outside the initial curve or the path
            has no computed node beyond its foot.
    """

    state = _char_state(source)
    gamma0 = state.gamma0
    if not gamma0.x[0] <= x_start <= gamma0.x[-1]:
        raise RegionError(
            f"x_start={x_start:g} lies outside [{gamma0.x[0]:g}, {gamma0.x[-1]:g}]"
        )
    N = state.nodes
    k = int(np.argmin(np.abs(gamma0.x - x_start)))
    j = N - k
    columns = np.arange(k, N + 1)
    t = state.t[columns, j]
    keep = np.isfinite(t)
    if t_end is not None:
        keep &= t <= t_end + 1e-12
    keep = np.logical_and.accumulate(keep)
    columns = columns[keep]
    if columns.shape[0] < 2:
        raise RegionError(f"forward characteristic from x={x_start:g} leaves the computed region")

    theta = state.theta[columns, j]
    t = state.t[columns, j]
    S = _tan_half(state.z[columns, j])
    frame = pd.DataFrame(
        {
            "t": t,
            "x": state.x[columns, j],
            "S": S,
            "R": _tan_half(state.w[columns, j]),
            "theta": theta,
            "S_tilde": np.exp(0.5 * t) * S,
        }
    )

    reference = float(theta[0]) if theta_star is None else theta_star
    max_drift = float(np.max(np.abs(theta - reference)))
    drift_ok = drift_bound is None or max_drift <= drift_bound
    _, dc = wave_speed(state.params, theta)
    _, dc_star = wave_speed(state.params, reference)
    sign_ok = bool(np.all(dc > 0.5 * float(dc_star))) if float(dc_star) > 0.0 else True
    if not drift_ok:
        logger.warning("theta drifts by %.3g along the characteristic, above %.3g", max_drift, drift_bound)
    return CharacteristicTrace(
        frame=frame,
        row=j,
        max_drift=max_drift,
        drift_bound=drift_bound,
        drift_ok=drift_ok,
        sign_ok=sign_ok,
    )


# Riccati monitor -----------------------------------------------------------

@dataclass(frozen=True)
class RiccatiMonitor:
    """``1/S`` and ``1/S̃`` along a characteristic with their first vanishing times."""

    frame: pd.DataFrame
    t_detect_S: float | None
    t_detect_S_tilde: float | None


def singular_slope(tolerance: float) -> float:
    """``tan(z/2)`` at ``1 + cos z = tolerance``."""

    return math.sqrt((2.0 - tolerance) / tolerance)


def riccati_monitor(trace: CharacteristicTrace, *, tolerance: float = 1e-3) -> RiccatiMonitor:
    """Log ``1/S`` and ``1/S̃`` side by side and report when each falls below the detection level."""

    frame = pd.DataFrame(
        {
            "t": trace.frame["t"],
            "inv_S": 1.0 / trace.frame["S"],
            "inv_S_tilde": 1.0 / trace.frame["S_tilde"],
        }
    )
    level = 1.0 / singular_slope(tolerance)

    def first_time(column: str) -> float | None:
        values = frame[column].to_numpy()
        hits = np.nonzero((values >= 0.0) & (values < level))[0]
        return float(frame["t"].iloc[hits[0]]) if hits.size else None

    monitor = RiccatiMonitor(
        frame=frame, t_detect_S=first_time("inv_S"), t_detect_S_tilde=first_time("inv_S_tilde")
    )
    logger.debug(
        "riccati monitor: 1/S vanishes at %s, 1/S~ at %s", monitor.t_detect_S, monitor.t_detect_S_tilde
    )
    return monitor


# Triangle energy -----------------------------------------------------------

def triangle_constant(k0: float, k1: float, C_U: float) -> float:
    """``k2 = 12 k0 C_U² + 2 sqrt(2 k0) k1 C_U^(3/2)``."""

    return 12.0 * k0 * C_U**2 + 2.0 * math.sqrt(2.0 * k0) * k1 * C_U**1.5


@dataclass(frozen=True)
class TriangleEnergy:
    """Boundary energies of the domain of dependence of an apex.

    ``forward_leg`` is ``∫ R² dx`` along the forward characteristic through the
    apex and ``backward_leg`` is ``∫ S² dx`` along the backward one.
    """

    apex: tuple[float, float]
    node: tuple[int, int]
    forward_leg: float
    backward_leg: float
    k2: float
    epsilon: float
    width: float
    width_limit: float

    @property
    def total(self) -> float:
        return self.forward_leg + self.backward_leg

    @property
    def bound(self) -> float:
        return self.k2 * self.epsilon

    @property
    def within_bound(self) -> bool:
        return self.total <= self.bound

    @property
    def width_ok(self) -> bool:
        return self.width < self.width_limit


def _nearest_node(state: CharState, x0: float, t0: float) -> tuple[int, int]:
    gamma0 = state.gamma0
    if not gamma0.x[0] <= x0 <= gamma0.x[-1] or not 0.0 <= t0 <= state.t_max:
        raise RegionError(f"apex ({x0:g}, {t0:g}) lies outside the computed region")
    distance = np.where(state.computed, (state.x - x0) ** 2 + (state.t - t0) ** 2, np.inf)
    i, j = np.unravel_index(np.argmin(distance), distance.shape)
    spacing = 4.0 * float(np.max(np.diff(gamma0.x)))
    if math.sqrt(float(distance[i, j])) > spacing:
        raise RegionError(f"no computed lattice node near the apex ({x0:g}, {t0:g})")
    return int(i), int(j)


def characteristic_triangle_energy(
    source: SolutionBundle | CharState,
    apex: tuple[float, float],
    *,
    k0: float,
    k1: float,
    epsilon: float,
    C_U: float,
    t_horizon: float = 1.0,
) -> TriangleEnergy:
    """Integrate ``R²`` and ``S²`` over the two characteristic sides of the triangle below ``apex``.

    Along a row ``dx = ½ cos²(w/2) p dX``, so ``R² dx = ½ sin²(w/2) p dX``;
    along a column ``S² |dx| = ½ sin²(z/2) q dY``. Both stay bounded through a cusp.

    Raises:
        RegionError: If the apex is not inside the computed lattice.
    """

    state = _char_state(source)
    x0, t0 = apex
    i, j = _nearest_node(state, float(x0), float(t0))
    N = state.nodes
    row = slice(N - j, i + 1)
    column = slice(N - i, j + 1)

    def leg(values: np.ndarray, weight: np.ndarray, grid: np.ndarray) -> float:
        if values.shape[0] < 2:
            return 0.0
        return float(np.trapezoid(0.5 * np.sin(0.5 * values) ** 2 * weight, grid))

    forward = leg(state.w[row, j], state.p[row, j], state.X[row])
    backward = leg(state.z[i, column], state.q[i, column], state.Y[column])
    width = float(state.gamma0.x[i] - state.gamma0.x[N - j])
    return TriangleEnergy(
        apex=(float(state.x[i, j]), float(state.t[i, j])),
        node=(i, j),
        forward_leg=forward,
        backward_leg=backward,
        k2=triangle_constant(k0, k1, C_U),
        epsilon=epsilon,
        width=width,
        width_limit=2.0 * C_U * t_horizon,
    )


# Blow-up detection ---------------------------------------------------------

def predicted_blowup_time(k3: float, epsilon: float, C_U: float, dc_star: float) -> float:
    """``1/2 + 8 C_U k3 sqrt(eps) / c'(θ*)``."""

    return 0.5 + 8.0 * C_U * k3 * math.sqrt(epsilon) / dc_star


def fit_time_constant(t_star: float, epsilon: float, C_U: float, dc_star: float) -> float:
    """Smallest ``k3`` for which :func:`predicted_blowup_time` reaches ``t_star``."""

    return max(t_star - 0.5, 0.0) * dc_star / (8.0 * C_U * math.sqrt(epsilon))


@dataclass(frozen=True)
class FluxFit:
    """Fit of ``||J||_∞ = k1 sqrt(eps)``.

    ``k1`` is the smallest constant bounding every sample; ``k1_lsq`` is the
    least-squares slope and ``residual`` its relative RMS misfit.
    """

    k1: float
    k1_lsq: float
    residual: float
    slack: tuple[float, ...]


def fit_flux_constant(epsilons: np.ndarray, flux_sups: np.ndarray) -> FluxFit:
    """Fit ``k1`` from paired samples of ``eps`` and ``||J||_∞``."""

    eps = np.asarray(epsilons, dtype=float)
    sups = np.asarray(flux_sups, dtype=float)
    if eps.shape != sups.shape or eps.size == 0:
        raise ValueError("epsilons and flux_sups must be non-empty and of equal length")
    if np.any(eps <= 0.0):
        raise ValueError("epsilons must be positive")
    root = np.sqrt(eps)
    k1 = float(np.max(sups / root))
    k1_lsq = float(np.sum(sups * root) / np.sum(eps))
    scale = np.where(sups > 0.0, sups, 1.0)
    residual = float(np.sqrt(np.mean(((sups - k1_lsq * root) / scale) ** 2)))
    return FluxFit(k1=k1, k1_lsq=k1_lsq, residual=residual, slack=tuple(k1 * root - sups))


@dataclass(frozen=True)
class BlowupReport:
    """Outcome of :func:`detect_blowup`; JSON-ready through :meth:`to_dict`."""

    detected: bool
    epsilon: float
    t_star: float | None
    x_star: float | None
    node: tuple[int, int] | None
    S_peak: float
    max_R_fiber: float
    one_sided: bool
    t_pred: float | None
    k1: float
    k3: float | None
    J_sup: float
    theta_x_peak: float
    max_S_trace: float
    S_above_one: bool
    drift: float
    drift_ok: bool
    sign_ok: bool
    t_riccati_S: float | None
    t_riccati_S_tilde: float | None
    triangle: TriangleEnergy | None

    @property
    def before_one(self) -> bool:
        return self.detected and self.t_star is not None and self.t_star < 1.0

    @property
    def before_prediction(self) -> bool:
        if not self.detected or self.t_pred is None:
            return False
        return self.t_star <= self.t_pred + 1e-9

    def to_dict(self) -> dict[str, object]:
        payload = asdict(self)
        if self.triangle is not None:
            payload["triangle"].update(
                total=self.triangle.total,
                bound=self.triangle.bound,
                within_bound=self.triangle.within_bound,
                width_ok=self.triangle.width_ok,
            )
        payload["before_one"] = self.before_one
        payload["before_prediction"] = self.before_prediction
        return payload


def _gradient_peak(state: CharState, t_limit: float) -> float:
    """Largest ``|θ_x| = |R - S| / 2c`` over computed nodes up to ``t_limit``."""

    done = state.computed & (np.where(state.computed, state.t, np.inf) <= t_limit)
    c, _ = wave_speed(state.params, state.theta[done])
    gradient = np.abs(_tan_half(state.w[done]) - _tan_half(state.z[done])) / (2.0 * c)
    return float(np.max(gradient)) if gradient.size else 0.0


def _singular_nodes(state: CharState, tolerance: float, t_limit: float) -> np.ndarray:
    """Nodes below ``tolerance`` or where ``z`` crosses ``π`` along a forward characteristic."""

    done = state.computed
    z = np.where(done, state.z, 0.0)
    shifted = z - math.pi
    crossing = np.zeros_like(done)
    crossing[1:, :] = (
        done[1:, :]
        & done[:-1, :]
        & (shifted[1:, :] * shifted[:-1, :] <= 0.0)
        & (np.abs(shifted[1:, :]) < 0.5 * math.pi)
    )
    flagged = done & ((state.one_plus_cos_z < tolerance) | crossing)
    return flagged & (np.where(done, state.t, np.inf) <= t_limit)


def detection_tolerance(state: CharState, *, growth_factor: float = 10.0) -> float:
    """Singular tolerance tightened so the initial peak of ``S`` is not itself reported.

    Steep initial bumps start with ``|S|`` of order ``M``; detection then asks
    ``|S|`` to exceed ``growth_factor`` times its largest initial value.
    """

    S0 = float(np.max(np.abs(_tan_half(state.gamma0.z))))
    return min(state.singular_tolerance, 2.0 / (1.0 + (growth_factor * S0) ** 2))


def detect_blowup(
    bundle: SolutionBundle,
    params: LeslieParams,
    family: BlowupFamily,
    *,
    constants: FamilyConstants | None = None,
    k1: float | None = None,
    k3: float | None = None,
    t_limit: float = 1.0,
    growth_factor: float = 10.0,
) -> BlowupReport:
    """Locate the first singular node and check the cusp signature.

    A node is singular when ``1 + cos z`` falls below :func:`detection_tolerance`
    or ``z`` crosses ``π`` between neighbours of a forward characteristic. The
    blow-up point is the singular node of smallest ``t``, ties going to the
    smallest ``x``. ``k1`` defaults to ``||J||_∞ / sqrt(eps)`` of this run and
    ``k3`` to the value that makes the prediction exact; pass frozen values
    fitted on a coarser ``eps`` to make the prediction a test.
    """

    state = _char_state(bundle)
    constants = family_constants(params, family) if constants is None else constants
    eps = family.epsilon
    root = math.sqrt(eps)
    J_sup = float(np.max(np.abs(bundle.J)))
    k1_value = J_sup / root if k1 is None else k1

    tolerance = detection_tolerance(state, growth_factor=growth_factor)
    flagged = _singular_nodes(state, tolerance, t_limit)
    i_flag, j_flag = np.nonzero(flagged)

    k2 = triangle_constant(constants.k0, k1_value, constants.C_U)
    trace = trace_forward_characteristic(
        state,
        0.0,
        t_end=t_limit,
        theta_star=family.theta_star,
        drift_bound=math.sqrt(k2 * eps / constants.C_L),
    )
    detected = bool(i_flag.size)
    t_star = x_star = t_pred = k3_value = None
    node = None
    S_peak = max_R = theta_x_peak = 0.0
    triangle = None
    trace_window = trace.frame

    if detected:
        order = np.lexsort((state.x[i_flag, j_flag], state.t[i_flag, j_flag]))
        i, j = int(i_flag[order[0]]), int(j_flag[order[0]])
        node = (i, j)
        t_star, x_star = float(state.t[i, j]), float(state.x[i, j])
        N = state.nodes
        fiber = np.arange(N - j, N + 1)
        fiber = fiber[np.isfinite(state.t[fiber, j])]
        run = fiber[fiber >= i]
        below = flagged[run, j]
        length = run.shape[0] if np.all(below) else int(np.argmin(below))
        upto = fiber[fiber <= run[max(length, 1) - 1]]
        S_peak = float(np.max(np.abs(_tan_half(state.z[upto, j]))))
        max_R = float(np.max(np.abs(_tan_half(state.w[upto, j]))))
        theta_x_peak = _gradient_peak(state, t_star)
        k3_value = (
            fit_time_constant(t_star, eps, constants.C_U, constants.dc_star) if k3 is None else k3
        )
        t_pred = predicted_blowup_time(k3_value, eps, constants.C_U, constants.dc_star)
        triangle = characteristic_triangle_energy(
            state, (x_star, t_star), k0=constants.k0, k1=k1_value, epsilon=eps, C_U=constants.C_U
        )
        trace_window = trace.frame[trace.frame["t"] <= t_star]
        logger.info(
            "blow-up detected at t=%.6g, x=%.6g (S=%.3g, max|R| on fiber %.3g)",
            t_star,
            x_star,
            S_peak,
            max_R,
        )
    else:
        logger.info("no blow-up detected before t=%g for eps=%g", t_limit, eps)

    monitor = riccati_monitor(
        replace(trace, frame=trace_window), tolerance=tolerance
    )
    return BlowupReport(
        detected=detected,
        epsilon=eps,
        t_star=t_star,
        x_star=x_star,
        node=node,
        S_peak=S_peak,
        max_R_fiber=max_R,
        one_sided=detected and max_R < R_FIBER_BOUND,
        t_pred=t_pred,
        k1=k1_value,
        k3=k3_value,
        J_sup=J_sup,
        theta_x_peak=theta_x_peak,
        max_S_trace=float(trace_window["S"].max()) if len(trace_window) else 0.0,
        S_above_one=bool((trace_window["S"] > 1.0).all()) if len(trace_window) else False,
        drift=trace.max_drift,
        drift_ok=trace.drift_ok,
        sign_ok=trace.sign_ok,
        t_riccati_S=monitor.t_detect_S,
        t_riccati_S_tilde=monitor.t_detect_S_tilde,
        triangle=triangle,
    )


# Regularity ----------------------------------------------------------------

@dataclass(frozen=True)
class HolderProfile:
    """Empirical Hölder-1/2 and Lipschitz constants of ``θ(·, τ)``."""

    tau: float
    holder_half: float
    lipschitz: float
    points: int


def holder_half_profile(
    source: SolutionBundle | CharState, tau: float, *, max_offset: int = 256
) -> HolderProfile:
    """Measure ``θ(·, τ)`` on the level curve ``t = τ`` of the lattice.

    Pairs up to ``max_offset`` points apart enter the Hölder quotient; the
    Lipschitz constant uses neighbours only. Finite-difference bundles are
    measured on their stored row nearest ``τ``.
    """

    if isinstance(source, SolutionBundle) and source.state is None:
        n = source.row(tau)
        x, theta = source.x, source.theta[n]
    else:
        curve = level_curve(_char_state(source), tau)
        x, theta = curve.x, curve.theta
    if x.shape[0] < 2:
        raise RegionError(f"level t={tau:g} has fewer than two points")

    holder = 0.0
    lipschitz = 0.0
    for offset in range(1, min(max_offset, x.shape[0] - 1) + 1):
        dx = x[offset:] - x[:-offset]
        dtheta = np.abs(theta[offset:] - theta[:-offset])
        ok = dx > 1e-14
        if not np.any(ok):
            continue
        holder = max(holder, float(np.max(dtheta[ok] / np.sqrt(dx[ok]))))
        if offset == 1:
            lipschitz = float(np.max(dtheta[ok] / dx[ok]))
    return HolderProfile(tau=float(tau), holder_half=holder, lipschitz=lipschitz, points=int(x.shape[0]))


# Export --------------------------------------------------------------------

def export_blowup(
    report: BlowupReport, trace: CharacteristicTrace | None, directory: Path
) -> list[Path]:
    """Write ``blowup.json`` and, when given, the characteristic trace ``gamma.csv``."""

    paths = [write_json(report.to_dict(), directory / "blowup.json")]
    if trace is not None:
        paths.append(
            write_frame_csv(trace.frame[["t", "x", "S", "R", "theta"]], directory / "gamma.csv")
        )
    return paths


__all__ = [
    "R_FIBER_BOUND",
    "BlowupReport",
    "CharacteristicTrace",
    "FluxFit",
    "HolderProfile",
    "RiccatiMonitor",
    "TriangleEnergy",
    "characteristic_triangle_energy",
    "detect_blowup",
    "detection_tolerance",
    "export_blowup",
    "fit_flux_constant",
    "fit_time_constant",
    "holder_half_profile",
    "predicted_blowup_time",
    "riccati_monitor",
    "singular_slope",
    "trace_forward_characteristic",
    "triangle_constant",
]
