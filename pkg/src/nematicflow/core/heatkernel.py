"""One-dimensional heat kernel, Duhamel integrals, the flux map and norm estimators."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .fields import DirectorFields
from .helpers import require_same_grid, space_l2, space_time_l2
from .initial_data import flux_initial_row
from .model import require_special
from .types import GridField, HeatQuadrature, InitialData, LeslieParams

logger = logging.getLogger(__name__)


# Kernel --------------------------------------------------------------------

def kernel(x: np.ndarray | float, t: np.ndarray | float) -> np.ndarray:
    """Return ``H(x, t) = exp(-x**2 / 4t) / sqrt(4 pi t)``."""

    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    return np.exp(-(x**2) / (4.0 * t)) / np.sqrt(4.0 * math.pi * t)


def kernel_dx(x: np.ndarray | float, t: np.ndarray | float) -> np.ndarray:
    """Return ``H_x(x, t) = -x / (2t) H(x, t)``."""

    t = np.asarray(t, dtype=float)
    return -np.asarray(x, dtype=float) / (2.0 * t) * kernel(x, t)


def _kernel_cdf(a: np.ndarray, tau: float) -> np.ndarray:
    return 0.5 * (1.0 + erf(a / (2.0 * math.sqrt(tau))))


def _kernel_moment(a: np.ndarray, tau: float) -> np.ndarray:
    # ∫_{-inf}^a y H(y, tau) dy
    return -2.0 * tau * kernel(a, tau)


# Discrete convolution ------------------------------------------------------

def convolution_stencil(
    tau: float,
    dx: float,
    *,
    derivative: bool = False,
    quadrature: HeatQuadrature = HeatQuadrature(),
) -> np.ndarray:
    """Return weights ``w[m + K]`` with ``(H * f)(x_i) ≈ Σ_m w[m + K] f[i - m]``.

    A kernel wider than ``quadrature.resolved_cells`` cells is point sampled.
    Narrower kernels are integrated exactly against the piecewise-linear
    interpolant of ``f``; as ``tau → 0`` these weights tend to the identity
    (or to a centred difference for ``H_x``).
    """

    if tau <= 0.0:
        raise ValueError("tau must be positive")
    if dx <= 0.0:
        raise ValueError("dx must be positive")
    sigma = math.sqrt(2.0 * tau)
    reach = int(math.ceil(quadrature.truncation_sigmas * sigma / dx)) + 1
    m = np.arange(-reach, reach + 1, dtype=float)

    if sigma >= quadrature.resolved_cells * dx:
        if derivative:
            return dx * kernel_dx(m * dx, tau)
        return dx * kernel(m * dx, tau)

    if derivative:
        edges = np.arange(-reach - 1, reach + 2, dtype=float) * dx
        cell_mass = np.diff(_kernel_cdf(edges, tau))
        return np.diff(cell_mass) / dx

    nodes = np.arange(-reach - 1, reach + 2, dtype=float) * dx
    cdf = _kernel_cdf(nodes, tau)
    moment = _kernel_moment(nodes, tau)
    # index reach + 1 + m holds the value at m * dx
    here = slice(1, -1)
    ahead = slice(2, None)
    behind = slice(None, -2)
    rising = (1.0 + m) * (cdf[ahead] - cdf[here]) - (moment[ahead] - moment[here]) / dx
    falling = (1.0 - m) * (cdf[here] - cdf[behind]) + (moment[here] - moment[behind]) / dx
    return rising + falling


def apply_stencil(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Convolve one row with ``weights``; values beyond the grid count as zero."""

    reach = (weights.shape[0] - 1) // 2
    full = np.convolve(values, weights)
    return full[reach : reach + values.shape[0]]


def heat_propagate(
    values: np.ndarray,
    tau: float,
    dx: float,
    *,
    derivative: bool = False,
    quadrature: HeatQuadrature = HeatQuadrature(),
) -> np.ndarray:
    """Return ``H(., tau) * values`` (or ``H_x(., tau) * values``) on the same grid."""

    weights = convolution_stencil(tau, dx, derivative=derivative, quadrature=quadrature)
    return apply_stencil(np.asarray(values, dtype=float), weights)


class DuhamelIntegrator:
    """Marches heat-semigroup integrals row by row on a uniform ``(x, t)`` grid.

    ``Φ(t_{n+1}) = H(Δt) * Φ(t_n) + ∫_{t_n}^{t_{n+1}} K(t_{n+1} - s) * f(s) ds``
    with ``K`` either ``H`` or ``H_x``. The local integral is taken in the
    variable ``σ = sqrt(t_{n+1} - s)`` with a midpoint rule, and ``f`` is linear
    in time across the step.
    """

    def __init__(
        self,
        x: np.ndarray,
        t: np.ndarray,
        *,
        quadrature: HeatQuadrature = HeatQuadrature(),
    ) -> None:
        if t.shape[0] < 2:
            raise ValueError("t must contain at least two levels")
        steps = np.diff(t)
        if np.any(steps <= 0.0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("t must be uniformly increasing")
        self.x = x
        self.t = t
        self.dx = float(x[1] - x[0])
        self.dt = float(steps[0])
        self.quadrature = quadrature

        self._step = convolution_stencil(self.dt, self.dx, quadrature=quadrature)
        nodes = quadrature.graded_nodes
        h = math.sqrt(self.dt) / nodes
        sigma = (np.arange(nodes) + 0.5) * h
        self._weights = 2.0 * sigma * h
        self._fractions = 1.0 - sigma**2 / self.dt
        self._local = {
            derivative: [
                convolution_stencil(s**2, self.dx, derivative=derivative, quadrature=quadrature)
                for s in sigma
            ]
            for derivative in (False, True)
        }

    def propagate(self, row: np.ndarray) -> np.ndarray:
        return apply_stencil(row, self._step)

    def local(self, f_now: np.ndarray, f_next: np.ndarray, *, derivative: bool) -> np.ndarray:
        out = np.zeros_like(f_now, dtype=float)
        jump = f_next - f_now
        for weight, fraction, stencil in zip(
            self._weights, self._fractions, self._local[derivative], strict=True
        ):
            out += weight * apply_stencil(f_now + fraction * jump, stencil)
        return out

    def evolve(
        self,
        initial: np.ndarray,
        *,
        start: int = 0,
        stop: int | None = None,
        out: np.ndarray | None = None,
    ) -> np.ndarray:
        """Return rows ``H(t_n - t_start) * initial`` for ``start <= n < stop``, written into ``out`` when given."""

        return self.duhamel(None, derivative=False, initial=initial, start=start, stop=stop, out=out)

    def duhamel(
        self,
        source: np.ndarray | None,
        *,
        derivative: bool,
        initial: np.ndarray | None = None,
        start: int = 0,
        stop: int | None = None,
        out: np.ndarray | None = None,
    ) -> np.ndarray:
        """Return ``H(t) * initial + ∫_0^t K(t - s) * source(s) ds`` on every row.

        Args:
            source: Array of shape ``(len(t), len(x))`` or ``None``.
            derivative: Use ``H_x`` instead of ``H`` for the source term.
            initial: Row at ``t[start]``; zero when omitted.
            start: First row to march from.
            stop: One past the last row to produce.
            out: Optional output array reused across calls.
        """

        nt, nx = self.t.shape[0], self.x.shape[0]
        stop = nt if stop is None else stop
        if out is None:
            out = np.zeros((nt, nx))
        if initial is not None:
            out[start] = initial
        for n in range(start, stop - 1):
            row = self.propagate(out[n])
            if source is not None:
                row += self.local(source[n], source[n + 1], derivative=derivative)
            out[n + 1] = row
        return out


# Duhamel representations ---------------------------------------------------

@dataclass(frozen=True)
class FluxField(GridField):
    """Samples of the flux density ``J = u_x + θ_t``."""

    name: str = "J"

    @classmethod
    def from_values(cls, x: np.ndarray, t: np.ndarray, values: np.ndarray) -> "FluxField":
        return cls(x=x, t=t, values=values)

    def norms(self, alpha: float, *, seed: int = 0) -> "NormReport":
        return norm_report(self, alpha, seed=seed)


def duhamel_velocity(
    data: InitialData,
    theta_t: GridField,
    *,
    quadrature: HeatQuadrature = HeatQuadrature(),
) -> GridField:
    """Return ``u = H(t) * u0 + ∫_0^t H_x(t - s) * θ_t(s) ds``.

    Raises:
        GridMismatchError: If ``data`` and ``theta_t`` use different ``x`` grids.
    """

    require_same_grid(data.x, theta_t.x, what="initial data and theta_t")
    integrator = DuhamelIntegrator(theta_t.x, theta_t.t, quadrature=quadrature)
    u = integrator.duhamel(theta_t.values, derivative=True, initial=data.u0)
    return GridField(x=theta_t.x, t=theta_t.t, values=u, name="u")


def flux_map(
    data: InitialData,
    fields: DirectorFields,
    u: GridField,
    params: LeslieParams,
    *,
    quadrature: HeatQuadrature = HeatQuadrature(),
) -> FluxField:
    """Return ``M(J)`` built from the director fields of the current iterate.

    ``M(J) = H(t) * (u0' + θ1) - ∫ H * [γ1 θ_s + c' c θ_y**2] + ∫ H_y * [c**2 θ_y - u]``,
    the heat evolution of ``J = u_x + θ_t`` driven by ``θ_tt`` from the director equation.

    Raises:
        ValueError: If ``params`` is not a constant-coefficient parameter set.
        GridMismatchError: If the inputs do not share a grid.
    """

    require_special(params)
    require_same_grid(data.x, fields.x, what="initial data and director fields")
    require_same_grid(u.x, fields.x, what="velocity and director fields")
    require_same_grid(u.t, fields.t, what="velocity and director fields")
    integrator = DuhamelIntegrator(fields.x, fields.t, quadrature=quadrature)
    bulk = params.gamma1 * fields.theta_t + fields.quadratic_source
    flux = fields.flux_source - u.values
    values = integrator.duhamel(-bulk, derivative=False, initial=flux_initial_row(data))
    values += integrator.duhamel(flux, derivative=True)
    return FluxField(x=fields.x, t=fields.t, values=values)


# Norms ---------------------------------------------------------------------

@dataclass(frozen=True)
class NormReport:
    """Norms of a space-time field; Hölder constants are empirical."""

    sup: float
    l2: float
    holder_x: float
    holder_t: float
    holder: float
    alpha: float

    @property
    def combined(self) -> float:
        """``sup + l2 + holder``, the ``C^α ∩ L^∞ ∩ L^2`` norm."""

        return self.sup + self.l2 + self.holder


def _pair_ratios(
    values: np.ndarray,
    first: np.ndarray,
    second: np.ndarray,
    distance: np.ndarray,
    alpha: float,
) -> float:
    keep = distance > 0.0
    if not np.any(keep):
        return 0.0
    diff = np.abs(values[first[keep]] - values[second[keep]])
    return float(np.max(diff / distance[keep] ** alpha))


def _direction_holder(
    values: np.ndarray,
    spacing: float,
    alpha: float,
    rng: np.random.Generator,
    max_pairs: int,
) -> float:
    """Hölder constant along axis 1 of ``values`` (pairs within each row)."""

    rows, n = values.shape
    if n < 2:
        return 0.0
    if rows * n * (n - 1) // 2 <= max_pairs:
        i, k = np.triu_indices(n, k=1)
        diff = np.abs(values[:, i] - values[:, k])
        return float(np.max(diff / ((k - i) * spacing) ** alpha))
    row = rng.integers(0, rows, size=max_pairs)
    i = rng.integers(0, n, size=max_pairs)
    k = rng.integers(0, n, size=max_pairs)
    keep = i != k
    row, i, k = row[keep], i[keep], k[keep]
    diff = np.abs(values[row, i] - values[row, k])
    return float(np.max(diff / (np.abs(k - i) * spacing) ** alpha, initial=0.0))


def norm_report(
    field: GridField,
    alpha: float,
    *,
    seed: int = 0,
    max_pairs: int = 100_000,
) -> NormReport:
    """Return sup, discrete ``L2`` and Hölder constants of ``field``.

    Pairs are scanned exhaustively when there are at most ``max_pairs`` of
    them and sampled with ``numpy.random.default_rng(seed)`` otherwise.
    """

    if not 0.0 < alpha < 0.25:
        raise ValueError("alpha must lie in (0, 1/4)")
    values = field.values
    rng = np.random.default_rng(seed)
    holder_x = _direction_holder(values, field.dx, alpha, rng, max_pairs)
    holder_t = (
        _direction_holder(values.T, field.dt, alpha, rng, max_pairs) if field.t.shape[0] > 1 else 0.0
    )

    nt, nx = values.shape
    flat = values.ravel()
    total = nt * nx
    if total * (total - 1) // 2 <= max_pairs:
        first, second = np.triu_indices(total, k=1)
    else:
        first = rng.integers(0, total, size=max_pairs)
        second = rng.integers(0, total, size=max_pairs)
    n1, i1 = np.divmod(first, nx)
    n2, i2 = np.divmod(second, nx)
    distance = np.hypot((i1 - i2) * field.dx, (n1 - n2) * field.dt)
    holder = max(_pair_ratios(flat, first, second, distance, alpha), holder_x, holder_t)

    return NormReport(
        sup=float(np.max(np.abs(values))) if values.size else 0.0,
        l2=space_time_l2(values, field.x, field.t),
        holder_x=holder_x,
        holder_t=holder_t,
        holder=holder,
        alpha=alpha,
    )


# A posteriori bounds -------------------------------------------------------

def _running_max(values: np.ndarray) -> np.ndarray:
    return np.maximum.accumulate(np.asarray(values, dtype=float))


def velocity_bound_growth(t: np.ndarray, theta_t_l2: np.ndarray) -> np.ndarray:
    """Return ``t**(1/4) sup_{s<=t} ||θ_t(s)||_2``."""

    return np.asarray(t) ** 0.25 * _running_max(theta_t_l2)


def flux_bound_growth(
    t: np.ndarray,
    theta_t_l2: np.ndarray,
    theta_x_l2: np.ndarray,
    u_sup: np.ndarray,
) -> np.ndarray:
    """Return the growth term multiplying the constant in the flux bound."""

    quarter = np.asarray(t) ** 0.25
    gradients = _running_max(theta_t_l2) + _running_max(theta_x_l2)
    quadratic = _running_max(theta_x_l2) ** 2 + quarter * _running_max(u_sup)
    return quarter * (gradients + quadratic)


def fit_bound_constant(measured: np.ndarray, baseline: float, growth: np.ndarray) -> float:
    """Return the least ``C >= 0`` with ``measured <= baseline + C * growth``."""

    measured = np.asarray(measured, dtype=float)
    growth = np.asarray(growth, dtype=float)
    active = growth > 0.0
    if not np.any(active):
        return 0.0
    return max(0.0, float(np.max((measured[active] - baseline) / growth[active])))


def a_priori_velocity_bound(
    u0_sup: float,
    t: np.ndarray,
    theta_t_l2: np.ndarray,
    constant: float,
) -> np.ndarray:
    """Right-hand side ``||u0||_inf + C t**(1/4) ||θ_t||_{L^inf L^2}``."""

    return u0_sup + constant * velocity_bound_growth(t, theta_t_l2)


def a_priori_flux_bound(
    j0_sup: float,
    t: np.ndarray,
    theta_t_l2: np.ndarray,
    theta_x_l2: np.ndarray,
    u_sup: np.ndarray,
    constant: float,
) -> np.ndarray:
    """Right-hand side of the smooth-solution bound on ``||J||_inf``."""

    return j0_sup + constant * flux_bound_growth(t, theta_t_l2, theta_x_l2, u_sup)


def row_norms(field: GridField) -> tuple[np.ndarray, np.ndarray]:
    """Return per-row ``(sup, L2)`` norms."""

    return np.max(np.abs(field.values), axis=1), space_l2(field.values, field.x)


__all__ = [
    "DuhamelIntegrator",
    "FluxField",
    "NormReport",
    "a_priori_flux_bound",
    "a_priori_velocity_bound",
    "apply_stencil",
    "convolution_stencil",
    "duhamel_velocity",
    "fit_bound_constant",
    "flux_bound_growth",
    "flux_map",
    "heat_propagate",
    "kernel",
    "kernel_dx",
    "norm_report",
    "row_norms",
    "velocity_bound_growth",
]
