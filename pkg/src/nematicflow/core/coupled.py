"""Coupled velocity/director solvers and their energy and weak-form diagnostics."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.integrate import cumulative_trapezoid
from scipy.sparse.linalg import spsolve

from .charsolver import (
    SINGULAR_TOLERANCE,
    CharState,
    Inversion,
    build_gamma0,
    integrate_semilinear,
    invert_to_xt,
)
from .errors import ConvergenceError
from .fields import DirectorFields
from .heatkernel import DuhamelIntegrator, FluxField
from .helpers import (
    resample_initial,
    space_l2,
    space_time_l2,
    uniform_grid,
    write_field_csv,
    write_frame_csv,
    write_json,
)
from .initial_data import flux_initial_row
from .model import (
    g_coeff,
    h_coeff,
    pressure_shift,
    reduced_coefficients,
    require_special,
    require_valid,
    speed_bounds,
    wave_speed,
)
from .types import (
    FixedPointConfig,
    GridField,
    HeatQuadrature,
    InitialData,
    LeslieParams,
    SlabRecord,
)

logger = logging.getLogger(__name__)

SolverMethod = Literal["characteristic", "finite-difference"]


@dataclass(frozen=True)
class SolutionBundle:
    """Fields of one coupled run on the ``(x, t)`` grid.

    ``v`` is the running integral of ``u`` from the left end, so ``v_x = u`` and
    ``v_t = J``.
    """

    x: np.ndarray
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    J: np.ndarray
    fields: DirectorFields
    params: LeslieParams
    method: SolverMethod
    state: CharState | None = None
    inversion: Inversion | None = None
    slab_log: list[SlabRecord] = field(default_factory=list)
    history: list[dict[str, float]] = field(default_factory=list)
    truncated_at: float | None = None

    @property
    def theta(self) -> np.ndarray:
        return self.fields.theta

    @property
    def theta_t(self) -> np.ndarray:
        return self.fields.theta_t

    @property
    def theta_x(self) -> np.ndarray:
        return self.fields.theta_x(self.params)

    def grid_field(self, name: str) -> GridField:
        """Return ``u``, ``v``, ``J``, ``theta``, ``theta_t`` or ``theta_x`` as a grid field."""

        values = getattr(self, name)
        return GridField(x=self.x, t=self.t, values=values, name=name)

    def row(self, time: float) -> int:
        """Index of the stored level closest to ``time``."""

        return int(np.argmin(np.abs(self.t - time)))


def _antiderivative(u: np.ndarray, x: np.ndarray) -> np.ndarray:
    return cumulative_trapezoid(u, x, axis=1, initial=0.0)


# Fixed point ---------------------------------------------------------------

class _SlabIteration:
    """Shared state of a fixed-point run; slabs are solved in order."""

    def __init__(
        self,
        data: InitialData,
        params: LeslieParams,
        config: FixedPointConfig,
        *,
        x: np.ndarray,
        t: np.ndarray,
        lattice_nodes: int,
        quadrature: HeatQuadrature,
        singular_tolerance: float,
    ) -> None:
        self.params = params
        self.singular_tolerance = singular_tolerance
        self.config = config
        self.x = x
        self.t = t
        self.heat_data = resample_initial(data, x)
        self.gamma0 = build_gamma0(data, params, nodes=lattice_nodes)
        self.integrator = DuhamelIntegrator(x, t, quadrature=quadrature)

        j0 = flux_initial_row(self.heat_data)
        self.free_flux = self.integrator.evolve(j0)
        self.free_velocity = self.integrator.evolve(self.heat_data.u0)
        self.J = self.free_flux.copy()

        shape = (t.shape[0], x.shape[0])
        self.velocity_part = np.zeros(shape)
        self.bulk_part = np.zeros(shape)
        self.flux_part = np.zeros(shape)

        self.state: CharState | None = None
        self.inversion: Inversion | None = None
        self.history: list[dict[str, float]] = []

    def iterate(self, start: int, stop: int) -> tuple[bool, int, float, float, float]:
        """Iterate on rows ``start + 1 .. stop``; return ``(converged, k, sup, l2, ratio)``."""

        config = self.config
        rows = slice(start + 1, stop + 1)
        saved = self.J[start + 1 :].copy()
        velocity = self.velocity_part.copy()
        bulk = self.bulk_part.copy()
        flux = self.flux_part.copy()
        previous = math.inf
        ratio = math.nan
        sup = l2 = math.inf

        for k in range(1, config.max_iterations + 1):
            forcing = FluxField.from_values(self.x, self.t, self.J)
            state = integrate_semilinear(
                self.gamma0,
                forcing,
                self.params,
                t_stop=float(self.t[stop]),
                singular_tolerance=self.singular_tolerance,
            )
            inversion = invert_to_xt(state, self.t[: stop + 1], x_grid=self.x)
            fields = inversion.fields

            self.integrator.duhamel(
                fields.theta_t, derivative=True, start=start, stop=stop + 1, out=velocity
            )
            u = self.free_velocity[: stop + 1] + velocity[: stop + 1]
            self.integrator.duhamel(
                self.params.gamma1 * fields.theta_t + fields.quadratic_source,
                derivative=False,
                start=start,
                stop=stop + 1,
                out=bulk,
            )
            self.integrator.duhamel(
                fields.flux_source - u, derivative=True, start=start, stop=stop + 1, out=flux
            )
            mapped = self.free_flux[rows] - bulk[rows] + flux[rows]

            change = mapped - self.J[rows]
            sup = float(np.max(np.abs(change)))
            l2 = space_time_l2(change, self.x, self.t[rows]) if stop > start + 1 else sup
            if math.isfinite(previous) and previous > 0.0:
                ratio = sup / previous
            previous = sup
            self.J[rows] += config.relaxation * change
            self.history.append(
                {
                    "t_start": float(self.t[start]),
                    "t_end": float(self.t[stop]),
                    "iteration": float(k),
                    "sup_change": sup,
                    "l2_change": l2,
                }
            )
            logger.debug(
                "slab [%g, %g] iteration %d: sup %.3e l2 %.3e",
                self.t[start],
                self.t[stop],
                k,
                sup,
                l2,
            )
            if sup < config.tolerance and l2 < config.tolerance:
                self.velocity_part, self.bulk_part, self.flux_part = velocity, bulk, flux
                self.J[stop + 1 :] = self.J[stop]
                self.state, self.inversion = state, inversion
                return True, k, sup, l2, ratio

        self.J[start + 1 :] = saved
        return False, config.max_iterations, sup, l2, ratio


def fixed_point_solve(
    data: InitialData,
    params: LeslieParams,
    config: FixedPointConfig = FixedPointConfig(),
    T: float = 1.0,
    *,
    nx: int = 1025,
    nt: int = 101,
    lattice_nodes: int = 1024,
    quadrature: HeatQuadrature = HeatQuadrature(),
    singular_tolerance: float = SINGULAR_TOLERANCE,
) -> SolutionBundle:
    """Solve the coupled system by iterating ``J ↦ M(J)`` slab by slab.

    Each iterate marches the director equation in characteristic coordinates
    with the current flux, maps it to ``(x, t)`` and applies the heat-kernel
    flux map. Rows of earlier slabs are frozen.

    Args:
        data: Initial data.
        params: Constant-coefficient material constants.
        config: Slab length, relaxation and stopping rule.
        T: Final time.
        nx: Points of the uniform ``x`` grid spanning ``data.x``.
        nt: Time levels on ``[0, T]``.
        lattice_nodes: Intervals along the initial curve.
        quadrature: Heat-kernel discretisation.
        singular_tolerance: Threshold on ``1 + cos`` flagging blown-up nodes.

    Returns:
        The converged bundle with per-slab logs.

    Raises:
        ValueError: If the parameters are not constant-coefficient or ``T <= 0``.
        ConvergenceError: If a slab fails after every allowed halving.
    """

    require_valid(params)
    require_special(params)
    if T <= 0.0:
        raise ValueError("T must be positive")
    if nt < 2:
        raise ValueError("nt must be at least 2")
    x = uniform_grid(float(data.x[0]), float(data.x[-1]), nx)
    t = np.linspace(0.0, T, nt)
    run = _SlabIteration(
        data,
        params,
        config,
        x=x,
        t=t,
        lattice_nodes=lattice_nodes,
        quadrature=quadrature,
        singular_tolerance=singular_tolerance,
    )
    dt = float(t[1] - t[0])
    span = max(1, int(round(config.slab_length / dt)))
    slab_log: list[SlabRecord] = []

    start = 0
    while start < nt - 1:
        width = span
        for halving in range(config.max_halvings + 1):
            stop = min(start + width, nt - 1)
            converged, iterations, sup, l2, ratio = run.iterate(start, stop)
            if converged:
                break
            logger.warning(
                "slab [%g, %g] did not converge in %d iterations (sup %.3e); halving",
                t[start],
                t[stop],
                iterations,
                sup,
            )
            width = max(1, width // 2)
        else:
            raise ConvergenceError(
                f"fixed point failed on the slab starting at t={t[start]:g}",
                diagnostics={
                    "t_start": float(t[start]),
                    "halvings": config.max_halvings,
                    "sup_change": sup,
                    "l2_change": l2,
                    "history": run.history[-config.max_iterations :],
                },
            )
        if config.probe_halved_slabs and stop - start > 1:
            _probe_halved_slab(run, start, stop)
        slab_log.append(
            SlabRecord(
                t_start=float(t[start]),
                t_end=float(t[stop]),
                iterations=iterations,
                halvings=halving,
                sup_change=sup,
                l2_change=l2,
                contraction=ratio,
            )
        )
        logger.info(
            "accepted slab [%g, %g] after %d iterations (sup %.2e)", t[start], t[stop], iterations, sup
        )
        start = stop

    u = pressure_shift(params, run.free_velocity + run.velocity_part, t)
    return SolutionBundle(
        x=x,
        t=t,
        u=u,
        v=_antiderivative(u, x),
        J=run.J,
        fields=run.inversion.fields,
        params=params,
        method="characteristic",
        state=run.state,
        inversion=run.inversion,
        slab_log=slab_log,
        history=run.history,
    )


def _probe_halved_slab(run: _SlabIteration, start: int, stop: int) -> float:
    """Re-solve an accepted slab as two halves and log the largest flux change."""

    accepted = run.J.copy()
    saved = (
        run.velocity_part.copy(),
        run.bulk_part.copy(),
        run.flux_part.copy(),
        run.state,
        run.inversion,
        len(run.history),
    )
    middle = (start + stop) // 2
    run.J[start + 1 :] = run.J[start]
    ok = run.iterate(start, middle)[0] and run.iterate(middle, stop)[0]
    deviation = float(np.max(np.abs(run.J[start + 1 : stop + 1] - accepted[start + 1 : stop + 1])))
    level = logging.WARNING if ok and deviation > run.config.tolerance else logging.INFO
    logger.log(
        level,
        "slab [%g, %g] re-solved with half length: converged=%s, max flux change %.3e",
        run.t[start],
        run.t[stop],
        ok,
        deviation,
    )
    run.J[:] = accepted
    run.velocity_part, run.bulk_part, run.flux_part, run.state, run.inversion, size = saved
    del run.history[size:]
    return deviation


# Finite differences --------------------------------------------------------

def _director_operator(params: LeslieParams, theta: np.ndarray, dx: float) -> np.ndarray:
    """``c (c θ_x)_x`` on interior nodes, zero on the two boundary nodes."""

    c, _ = wave_speed(params, theta)
    c_face, _ = wave_speed(params, 0.5 * (theta[1:] + theta[:-1]))
    flux = c_face * np.diff(theta) / dx
    out = np.zeros_like(theta)
    out[1:-1] = c[1:-1] * np.diff(flux) / dx
    return out


def _central_difference(values: np.ndarray, dx: float) -> np.ndarray:
    out = np.zeros_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * dx)
    return out


def _diffusion_matrix(g_face: np.ndarray, dx: float, rho: float, dt: float) -> sparse.csc_matrix:
    """``rho/dt - (g u_x)_x`` with identity rows at the two ends."""

    n = g_face.shape[0] + 1
    main = np.full(n, rho / dt)
    main[1:-1] += (g_face[1:] + g_face[:-1]) / dx**2
    lower = np.zeros(n - 1)
    upper = np.zeros(n - 1)
    lower[:-1] = -g_face[:-1] / dx**2
    upper[1:] = -g_face[1:] / dx**2
    return sparse.diags([lower, main, upper], [-1, 0, 1], format="csc")


def fd_reference_solve(
    data: InitialData,
    params: LeslieParams,
    T: float,
    dx: float,
    dt: float,
    *,
    freeze_velocity: bool = False,
    gradient_cap: float = 1e2,
    store_every: int = 1,
) -> SolutionBundle:
    """Direct finite-difference discretisation of the coupled system.

    The director uses damped leapfrog,
    ``ν θ_tt + γ1 θ_t = c (c θ_x)_x - h u_x``, and the velocity a backward-Euler
    step of ``ρ u_t = (g u_x + h θ_t)_x`` with ``u`` held at its initial
    end values. The run stops at
    the first level where ``|θ_x|`` exceeds ``gradient_cap``.

    Args:
        data: Initial data, interpolated onto the finite-difference grid.
        params: Material constants (general admissible values allowed).
        T: Final time.
        dx: Grid spacing.
        dt: Time step.
        freeze_velocity: Keep ``u = u0`` and skip the velocity update.
        gradient_cap: Smoothness threshold on ``|θ_x|``.
        store_every: Store every ``store_every``-th time level.

    Raises:
        ValueError: If ``dt`` violates ``dt <= 0.9 dx / C_U``, ``T`` is not a
            multiple of ``dt * store_every`` or the initial data exceed
            ``gradient_cap``.
    """

    require_valid(params)
    _, C_U = speed_bounds(params)
    if dx <= 0.0 or dt <= 0.0:
        raise ValueError("dx and dt must be positive")
    if dt > 0.9 * dx / C_U:
        raise ValueError(f"dt must satisfy dt <= 0.9 dx / C_U = {0.9 * dx / C_U:.6g}")
    steps = int(round(T / dt))
    if steps < 1 or not math.isclose(steps * dt, T, rel_tol=1e-9):
        raise ValueError("T must be a positive multiple of dt")
    if store_every < 1 or steps % store_every:
        raise ValueError("store_every must divide the number of steps")

    cells = int(round((data.x[-1] - data.x[0]) / dx))
    x = data.x[0] + dx * np.arange(cells + 1)
    theta_now = np.interp(x, data.x, data.theta0)
    rate = np.interp(x, data.x, data.theta1)
    u = np.interp(x, data.x, data.u0)
    nu, gamma, rho = params.nu, params.gamma1, params.rho
    theta_left, theta_right = theta_now[0], theta_now[-1]

    def accelerate(theta: np.ndarray, velocity: np.ndarray) -> np.ndarray:
        return _director_operator(params, theta, dx) - h_coeff(params, theta) * _central_difference(
            velocity, dx
        )

    theta_next = theta_now + dt * rate + 0.5 * dt**2 * (accelerate(theta_now, u) - gamma * rate) / nu
    theta_next[0], theta_next[-1] = theta_left, theta_right

    stored_t: list[float] = []
    stored = {name: [] for name in ("theta", "theta_t", "theta_x", "u", "J")}
    truncated_at: float | None = None
    damp_minus = 1.0 - 0.5 * gamma * dt / nu
    damp_plus = 1.0 + 0.5 * gamma * dt / nu
    fixed_g = np.allclose(g_coeff(params, np.linspace(0.0, math.pi, 64)), g_coeff(params, 0.0))
    matrix = None

    for n in range(steps + 1):
        theta_t = (theta_next - theta_prev) / (2.0 * dt) if n else rate
        theta_x = np.gradient(theta_now, dx)
        if float(np.max(np.abs(theta_x))) > gradient_cap:
            if n == 0:
                raise ValueError(f"initial data already have |theta_x| > {gradient_cap:g}")
            truncated_at = n * dt
            logger.warning("finite-difference run truncated at t=%g: |theta_x| > %g", n * dt, gradient_cap)
            break
        if n % store_every == 0:
            stored_t.append(n * dt)
            stored["theta"].append(theta_now.copy())
            stored["theta_t"].append(theta_t)
            stored["theta_x"].append(theta_x)
            stored["u"].append(u.copy())
            stored["J"].append(
                g_coeff(params, theta_now) * np.gradient(u, dx) + h_coeff(params, theta_now) * theta_t
            )
        if n == steps:
            break

        half_rate = (theta_next - theta_now) / dt
        if not freeze_velocity:
            theta_half = 0.5 * (theta_now + theta_next)
            faces = 0.5 * (theta_half[1:] + theta_half[:-1])
            if matrix is None or not fixed_g:
                matrix = _diffusion_matrix(g_coeff(params, faces), dx, rho, dt)
            rhs = rho / dt * u + _central_difference(h_coeff(params, theta_half) * half_rate, dx)
            u = spsolve(matrix, rhs)

        theta_prev, theta_now = theta_now, theta_next
        theta_next = (
            2.0 * theta_now - damp_minus * theta_prev + dt**2 / nu * accelerate(theta_now, u)
        ) / damp_plus
        theta_next[0], theta_next[-1] = theta_left, theta_right

    t = np.asarray(stored_t)
    arrays = {name: np.asarray(values) for name, values in stored.items()}
    fields = DirectorFields.from_point_values(
        x=x,
        t=t,
        theta=arrays["theta"],
        theta_t=arrays["theta_t"],
        theta_x=arrays["theta_x"],
        params=params,
    )
    u_out = pressure_shift(params, arrays["u"], t)
    return SolutionBundle(
        x=x,
        t=t,
        u=u_out,
        v=_antiderivative(u_out, x),
        J=arrays["J"],
        fields=fields,
        params=params,
        method="finite-difference",
        truncated_at=truncated_at,
    )


# Energy --------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyReport:
    """Energy ledger ``E(t)``, cumulative dissipation ``D(t)`` and slack ``E(0) - E(t) - D(t)``."""

    frame: pd.DataFrame

    @property
    def initial(self) -> float:
        return float(self.frame["E"].iloc[0])

    @property
    def max_abs_slack(self) -> float:
        return float(self.frame["slack"].abs().max())

    @property
    def min_slack(self) -> float:
        return float(self.frame["slack"].min())

    def relative_slack(self) -> float:
        return self.max_abs_slack / self.initial if self.initial > 0.0 else self.max_abs_slack

    def inequality_holds(self, tolerance: float = 1e-3) -> bool:
        """``E(t) + D(t) <= E(0) (1 + tolerance)`` on every level."""

        total = self.frame["E"] + self.frame["dissipation"]
        return bool((total <= self.initial * (1.0 + tolerance) + 1e-15).all())


def energy_ledger(bundle: SolutionBundle, params: LeslieParams | None = None) -> EnergyReport:
    """Tabulate ``E = ½ ∫ (θ_t² + c² θ_x² + u²)`` and the dissipation of the run.

    The dissipation rate is ``∫ (b u_x² + γ1 (θ_t + h u_x / γ1)²)``, evaluated as
    ``∫ (J² / g + (γ1 - h²/g) θ_t²)`` so that it stays bounded across a cusp.
    """

    params = bundle.params if params is None else params
    f = bundle.fields
    energy = 0.5 * np.trapezoid(f.wave_density + bundle.u**2, bundle.x, axis=1)
    g = g_coeff(params, f.theta)
    damping, _ = reduced_coefficients(params, f.theta)
    rate = np.trapezoid(bundle.J**2 / g + damping * f.theta_t_sq, bundle.x, axis=1)
    dissipation = cumulative_trapezoid(rate, bundle.t, initial=0.0)
    slack = energy[0] - energy - dissipation

    if bundle.inversion is not None:
        min_w = bundle.inversion.min_one_plus_cos_w[: bundle.t.shape[0]]
        min_z = bundle.inversion.min_one_plus_cos_z[: bundle.t.shape[0]]
    else:
        R = f.theta_t + f.ctheta_x
        S = f.theta_t - f.ctheta_x
        min_w = np.min(2.0 / (1.0 + R**2), axis=1)
        min_z = np.min(2.0 / (1.0 + S**2), axis=1)

    increases = np.nonzero(np.diff(energy) > 1e-12 * max(energy[0], 1.0))[0]
    if increases.size:
        logger.warning(
            "energy increases on %d steps, first near t=%g", increases.size, bundle.t[increases[0] + 1]
        )
    frame = pd.DataFrame(
        {
            "t": bundle.t,
            "E": energy,
            "dissipation": dissipation,
            "slack": slack,
            "maxJ": np.max(np.abs(bundle.J), axis=1),
            "min_one_plus_cos_w": min_w,
            "min_one_plus_cos_z": min_z,
        }
    )
    return EnergyReport(frame=frame)


# Residuals -----------------------------------------------------------------

def heat_identity_residual(bundle: SolutionBundle) -> float:
    """Relative ``L2`` residual of ``v_t = v_xx + θ_t`` on interior nodes.

    Exact for ``g = h = rho = 1`` with no flux through the left end. The
    uniform pressure-driven part ``(a / ρ) t`` of ``u`` is removed first.
    """

    params = bundle.params
    dx = float(bundle.x[1] - bundle.x[0])
    drift = params.pressure_gradient / params.rho * (bundle.x - bundle.x[0])
    v_t = np.gradient(bundle.v, bundle.t, axis=0) - drift[None, :]
    v_xx = np.zeros_like(bundle.v)
    v_xx[:, 1:-1] = (bundle.v[:, 2:] - 2.0 * bundle.v[:, 1:-1] + bundle.v[:, :-2]) / dx**2
    inner = (slice(1, -1), slice(1, -1))
    residual = (v_t - v_xx - bundle.theta_t)[inner]
    scale = space_time_l2(bundle.theta_t[inner], bundle.x[1:-1], bundle.t[1:-1])
    value = space_time_l2(residual, bundle.x[1:-1], bundle.t[1:-1])
    return value / scale if scale > 0.0 else value


def _bump(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    inside = np.abs(s) < 1.0
    base = np.where(inside, 1.0 - s**2, 0.0)
    return base**4, np.where(inside, -8.0 * s * base**3, 0.0)


@dataclass(frozen=True)
class WeakFormReport:
    """Residuals of the weak director equation against fixed test functions."""

    residuals: np.ndarray
    scales: np.ndarray

    @property
    def relative(self) -> float:
        return float(np.max(np.abs(self.residuals) / np.where(self.scales > 0.0, self.scales, 1.0)))


def weak_form_residual(
    bundle: SolutionBundle, params: LeslieParams | None = None, *, count: int = 10
) -> WeakFormReport:
    """Test ``∬ θ_t φ_t - (c φ)_x c θ_x - (γ1 - h²/g) θ_t φ - (h/g) J φ = 0``.

    The ``count`` test functions are tensor products of ``(1 - s²)⁴`` bumps on
    two time windows inside ``(0, T)``.
    """

    if count < 2 or count % 2:
        raise ValueError("count must be an even number of at least 2")
    params = bundle.params if params is None else params
    f = bundle.fields
    x, t = bundle.x, bundle.t
    span, T = float(x[-1] - x[0]), float(t[-1])
    middle = 0.5 * float(x[0] + x[-1])
    centres_x = middle + span * np.linspace(-0.15, 0.15, count // 2)
    radius_x = 0.1 * span
    centres_t = (T / 3.0, 2.0 * T / 3.0)
    radius_t = T / 4.0
    damping, coupling = reduced_coefficients(params, f.theta)

    residuals, scales = [], []
    for tc in centres_t:
        bt, dbt = _bump((t - tc) / radius_t)
        for xc in centres_x:
            bx, dbx = _bump((x - xc) / radius_x)
            phi = bt[:, None] * bx[None, :]
            phi_t = (dbt / radius_t)[:, None] * bx[None, :]
            phi_x = bt[:, None] * (dbx / radius_x)[None, :]
            terms = (
                f.theta_t * phi_t,
                -phi * f.quadratic_source,
                -phi_x * f.flux_source,
                -damping * f.theta_t * phi,
                -coupling * bundle.J * phi,
            )
            residuals.append(np.trapezoid(np.trapezoid(sum(terms), x, axis=1), t))
            scales.append(sum(np.trapezoid(np.trapezoid(np.abs(term), x, axis=1), t) for term in terms))
    return WeakFormReport(residuals=np.asarray(residuals), scales=np.asarray(scales))


# Export --------------------------------------------------------------------

BUNDLE_FIELDS = ("u", "v", "theta", "theta_t", "theta_x", "J")


def bundle_summary(bundle: SolutionBundle, report: EnergyReport | None = None) -> dict[str, object]:
    report = energy_ledger(bundle) if report is None else report
    return {
        "method": bundle.method,
        "params": asdict(bundle.params),
        "T": float(bundle.t[-1]),
        "nx": int(bundle.x.shape[0]),
        "nt": int(bundle.t.shape[0]),
        "truncated_at": bundle.truncated_at,
        "slab_log": list(bundle.slab_log),
        "history": list(bundle.history),
        "energy": report.frame.to_dict(orient="list"),
        "max_abs_slack": report.max_abs_slack,
        "u_sup": float(np.max(np.abs(bundle.u))),
        "J_sup": float(np.max(np.abs(bundle.J))),
        "theta_t_l2": space_l2(bundle.theta_t, bundle.x).tolist(),
    }


def export_bundle(
    bundle: SolutionBundle,
    directory: Path,
    *,
    report: EnergyReport | None = None,
) -> list[Path]:
    """Write one CSV per field, the energy ledger and a JSON summary into ``directory``."""

    report = energy_ledger(bundle) if report is None else report
    paths = [write_field_csv(bundle.grid_field(name), directory / f"{name}.csv") for name in BUNDLE_FIELDS]
    paths.append(write_frame_csv(report.frame, directory / "ledger.csv"))
    paths.append(write_json(bundle_summary(bundle, report), directory / "summary.json"))
    logger.info("wrote %d bundle artifacts to %s", len(paths), directory)
    return paths


__all__ = [
    "BUNDLE_FIELDS",
    "EnergyReport",
    "SolutionBundle",
    "WeakFormReport",
    "bundle_summary",
    "energy_ledger",
    "export_bundle",
    "fd_reference_solve",
    "fixed_point_solve",
    "heat_identity_residual",
    "weak_form_residual",
]
