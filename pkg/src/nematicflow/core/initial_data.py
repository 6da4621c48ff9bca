"""Initial data: the concentrated bump family that forms a cusp, plus smooth families."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.integrate import quad

from .helpers import read_frame_csv, uniform_grid, write_frame_csv
from .model import require_valid, speed_bounds, wave_speed
from .types import BlowupFamily, InitialData, LeslieParams

logger = logging.getLogger(__name__)

#: Gauss-Legendre nodes for ``u0 = ∫ c(s) ds`` over the angle range of each node.
_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(12)

#: Factor by which the default bump height clears the cusp threshold.
STEEPNESS_MARGIN = 1.2


# Bump profile --------------------------------------------------------------

def bump_phi(steepness: float, a: np.ndarray | float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``phi(a) = -M a (1 - a**2)**2`` on ``[-1, 1]`` and its derivative.

    Both vanish outside ``(-1, 1)`` so the profile is ``C1``.
    """

    if steepness <= 0.0:
        raise ValueError("steepness must be positive")
    a = np.asarray(a, dtype=float)
    inside = np.abs(a) < 1.0
    one_minus = 1.0 - a**2
    phi = np.where(inside, -steepness * a * one_minus**2, 0.0)
    dphi = np.where(inside, -steepness * one_minus * (1.0 - 5.0 * a**2), 0.0)
    return phi, dphi


def bump_energy(steepness: float) -> float:
    """Return ``∫ phi'(a)**2 da`` over ``[-1, 1]``, the constant ``k0``."""

    value, _ = quad(lambda a: float(bump_phi(steepness, a)[1]) ** 2, -1.0, 1.0, epsabs=1e-13)
    return value


def bump_slope_bound(steepness: float) -> float:
    """Return ``C2 = max |phi'|``, attained at ``a = 0``."""

    return float(steepness)


@dataclass(frozen=True)
class FamilyConstants:
    """Constants derived from a :class:`BlowupFamily` and the material."""

    steepness: float
    threshold: float
    c_star: float
    dc_star: float
    C_L: float
    C_U: float
    k0: float
    C2: float
    s_initial: float


def cusp_threshold(params: LeslieParams, theta_star: float) -> float:
    """Return ``max(16 C_U / (c'(θ*) C_L), 2 / C_L)``, the bound ``-phi'(0)`` must clear."""

    C_L, C_U = speed_bounds(params)
    _, dc = wave_speed(params, theta_star)
    dc = float(dc)
    if dc <= 0.0:
        raise ValueError(f"c'(theta_star) must be positive, got {dc:.6g}")
    return max(16.0 * C_U / (dc * C_L), 2.0 / C_L)


def family_constants(params: LeslieParams, family: BlowupFamily) -> FamilyConstants:
    """Resolve the default steepness and evaluate every derived constant."""

    C_L, C_U = speed_bounds(params)
    threshold = cusp_threshold(params, family.theta_star)
    steepness = family.steepness
    if steepness is None:
        steepness = float(math.ceil(STEEPNESS_MARGIN * threshold))
    c_star, dc_star = (float(v) for v in wave_speed(params, family.theta_star))
    return FamilyConstants(
        steepness=steepness,
        threshold=threshold,
        c_star=c_star,
        dc_star=dc_star,
        C_L=C_L,
        C_U=C_U,
        k0=bump_energy(steepness),
        C2=bump_slope_bound(steepness),
        s_initial=(2.0 * c_star - family.epsilon) * steepness,
    )


def blowup_domain(params: LeslieParams, epsilon: float, T_max: float) -> tuple[float, float]:
    """Return the truncated interval ``±(eps + 2 + 2 C_U T_max)``."""

    _, C_U = speed_bounds(params)
    half = epsilon + 2.0 + 2.0 * C_U * T_max
    return -half, half


# Builders ------------------------------------------------------------------

def build_blowup_data(
    params: LeslieParams,
    family: BlowupFamily,
    *,
    T_max: float = 1.0,
    nodes_per_bump: int = 64,
) -> InitialData:
    """Build the cusp-forming data for ``family``.

    ``theta0 = θ* + eps phi(x/eps)``, ``theta1 = (eps - c(theta0)) theta0'`` and
    ``u0(x) = ∫_{-eps}^x c(theta0) theta0'`` on ``[-eps, eps]``, zero elsewhere.

    Args:
        params: Material constants.
        family: Bump scale, base angle and optional steepness.
        T_max: Final time used to size the truncated domain.
        nodes_per_bump: Minimum number of grid cells across ``[-eps, eps]``.

    Returns:
        The sampled initial data, with exact derivatives attached.

    Raises:
        ValueError: If ``eps >= C_L``, ``c'(θ*) <= 0`` or the steepness does not
            clear the cusp threshold.
    """

    require_valid(params)
    if nodes_per_bump < 64:
        raise ValueError("nodes_per_bump must be at least 64")
    C_L, _ = speed_bounds(params)
    eps = family.epsilon
    if eps >= C_L:
        raise ValueError(f"epsilon must be below C_L = {C_L:.6g}")
    constants = family_constants(params, family)
    M = constants.steepness
    if M <= constants.threshold:
        raise ValueError(
            f"steepness {M:.6g} does not clear the cusp threshold {constants.threshold:.6g}"
        )

    lo, hi = blowup_domain(params, eps, T_max)
    dx = 2.0 * eps / nodes_per_bump
    cells = int(math.ceil((hi - lo) / dx))
    x = lo + dx * np.arange(cells + 1)
    # Keep ±eps on grid nodes.
    x = x - x[np.argmin(np.abs(x))]

    phi, dphi = bump_phi(M, x / eps)
    theta0 = family.theta_star + eps * phi
    theta0_x = dphi
    c0, _ = wave_speed(params, theta0)
    theta1 = (eps - c0) * theta0_x
    u0 = _speed_antiderivative(params, family.theta_star, theta0)
    inside = np.abs(x) < eps
    u0 = np.where(inside, u0, 0.0)
    u0_x = np.where(inside, c0 * theta0_x, 0.0)

    ends = family.theta_star + eps * bump_phi(M, np.array([-1.0, 1.0]))[0]
    closure = float(np.diff(_speed_antiderivative(params, family.theta_star, ends))[0])
    if abs(closure) > 1e-14:
        raise ValueError("∫ c(theta0) theta0' over [-eps, eps] does not vanish")

    logger.info(
        "built blow-up data eps=%g M=%g threshold=%g S(0,0)=%g nodes=%d",
        eps,
        M,
        constants.threshold,
        constants.s_initial,
        x.shape[0],
    )
    return InitialData(
        x=x,
        u0=u0,
        theta0=theta0,
        theta1=theta1,
        theta_far=family.theta_star,
        theta0_x=theta0_x,
        u0_x=u0_x,
        support=(-eps, eps),
    )


def _speed_antiderivative(params: LeslieParams, base: float, theta: np.ndarray) -> np.ndarray:
    """Return ``∫_base^theta c(s) ds`` node by node."""

    half = 0.5 * (theta - base)
    s = base + half[:, None] * (1.0 + _GAUSS_NODES[None, :])
    c, _ = wave_speed(params, s)
    return half * (c @ _GAUSS_WEIGHTS)


def gaussian_data(
    params: LeslieParams,
    *,
    theta_star: float = math.pi / 4,
    amplitude: float = 0.1,
    width: float = 0.5,
    rate_amplitude: float = 0.0,
    velocity_amplitude: float = 0.0,
    half_width: float = 6.0,
    nx: int = 2401,
) -> InitialData:
    """Smooth data with Gaussian profiles centred at the origin.

    ``theta0 = θ* + A exp(-x²/w²)``, ``theta1 = B exp(-x²/w²)`` and
    ``u0 = U (x/w) exp(-x²/w²)``.
    """

    require_valid(params)
    if width <= 0.0:
        raise ValueError("width must be positive")
    x = uniform_grid(-half_width, half_width, nx)
    envelope = np.exp(-((x / width) ** 2))
    d_envelope = -2.0 * x / width**2 * envelope
    u0 = velocity_amplitude * (x / width) * envelope
    u0_x = velocity_amplitude * (envelope / width + (x / width) * d_envelope)
    return InitialData(
        x=x,
        u0=u0,
        theta0=theta_star + amplitude * envelope,
        theta1=rate_amplitude * envelope,
        theta_far=theta_star,
        theta0_x=amplitude * d_envelope,
        u0_x=u0_x,
    )


def constant_data(theta_star: float, *, half_width: float = 4.0, nx: int = 801) -> InitialData:
    """Rest state ``u0 = theta1 = 0``, ``theta0 = θ*``."""

    x = uniform_grid(-half_width, half_width, nx)
    zeros = np.zeros_like(x)
    return InitialData(
        x=x,
        u0=zeros,
        theta0=np.full_like(x, theta_star),
        theta1=zeros.copy(),
        theta_far=theta_star,
        theta0_x=zeros.copy(),
        u0_x=zeros.copy(),
        support=(0.0, 0.0),
    )


# Derived quantities --------------------------------------------------------

def riemann_initial(data: InitialData, params: LeslieParams) -> tuple[np.ndarray, np.ndarray]:
    """Return ``R = theta1 + c theta0'`` and ``S = theta1 - c theta0'`` at ``t = 0``."""

    c, _ = wave_speed(params, data.theta0)
    theta0_x = data.theta0_gradient()
    return data.theta1 + c * theta0_x, data.theta1 - c * theta0_x


def flux_initial_row(data: InitialData) -> np.ndarray:
    """Return ``J(x, 0) = u0' + theta1``."""

    return data.u0_gradient() + data.theta1


def wave_energy(data: InitialData, params: LeslieParams) -> float:
    """Return ``∫ (theta1**2 + c**2 theta0'**2) dx``."""

    c, _ = wave_speed(params, data.theta0)
    density = data.theta1**2 + (c * data.theta0_gradient()) ** 2
    return float(np.trapezoid(density, data.x))


def initial_energy(data: InitialData, params: LeslieParams) -> float:
    """Return ``½ ∫ (theta1**2 + c**2 theta0'**2 + u0**2) dx`` by the trapezoid rule."""

    return 0.5 * (wave_energy(data, params) + float(np.trapezoid(data.u0**2, data.x)))


# CSV -----------------------------------------------------------------------

_CSV_COLUMNS = ["x", "u0", "theta0", "theta1"]


def write_initial_csv(data: InitialData, path: Path) -> Path:
    frame = pd.DataFrame(
        {"x": data.x, "u0": data.u0, "theta0": data.theta0, "theta1": data.theta1}
    )
    return write_frame_csv(frame, path)


def read_initial_csv(path: Path, *, theta_far: float | None = None) -> InitialData:
    """Read data written by :func:`write_initial_csv`.

    The far-field angle defaults to the last ``theta0`` sample.
    """

    frame = read_frame_csv(path)
    missing = [column for column in _CSV_COLUMNS if column not in frame.columns]
    if missing:
        raise ValueError(f"initial data CSV is missing columns: {', '.join(missing)}")
    theta0 = frame["theta0"].to_numpy(dtype=float)
    return InitialData(
        x=frame["x"].to_numpy(dtype=float),
        u0=frame["u0"].to_numpy(dtype=float),
        theta0=theta0,
        theta1=frame["theta1"].to_numpy(dtype=float),
        theta_far=float(theta0[-1]) if theta_far is None else theta_far,
    )


__all__ = [
    "FamilyConstants",
    "STEEPNESS_MARGIN",
    "blowup_domain",
    "build_blowup_data",
    "bump_energy",
    "bump_phi",
    "bump_slope_bound",
    "constant_data",
    "cusp_threshold",
    "family_constants",
    "flux_initial_row",
    "gaussian_data",
    "initial_energy",
    "read_initial_csv",
    "riemann_initial",
    "wave_energy",
    "write_initial_csv",
]
