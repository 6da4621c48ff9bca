"""Material coefficients of the Poiseuille reduction and their admissibility checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .types import LeslieParams

ArrayLike = np.ndarray | float

#: Samples on ``[0, 2*pi]`` used for every dense extremum.
DENSE_SAMPLES = 4096


@dataclass(frozen=True)
class ValidityReport:
    """Outcome of :func:`validate`; ``violations`` names each failing relation."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _dense_theta(samples: int = DENSE_SAMPLES) -> np.ndarray:
    return np.linspace(0.0, 2.0 * math.pi, samples)


# Admissibility -------------------------------------------------------------

def validate(params: LeslieParams) -> ValidityReport:
    """Check compatibility, Parodi's relation and the empirical inequalities."""

    a1, a2, a3, a4, a5, a6 = params.alphas
    g1, g2 = params.gamma1, params.gamma2
    violations: list[str] = []

    if not math.isclose(g1, a3 - a2, rel_tol=1e-12, abs_tol=1e-12):
        violations.append(f"gamma1 = alpha3 - alpha2 ({g1} != {a3 - a2})")
    if not math.isclose(g2, a6 - a5, rel_tol=1e-12, abs_tol=1e-12):
        violations.append(f"gamma2 = alpha6 - alpha5 ({g2} != {a6 - a5})")
    if not math.isclose(a2 + a3, a6 - a5, rel_tol=1e-12, abs_tol=1e-12):
        violations.append(f"alpha2 + alpha3 = alpha6 - alpha5 ({a2 + a3} != {a6 - a5})")

    if not a4 > 0.0:
        violations.append(f"alpha4 > 0 ({a4})")
    combo = 2.0 * a1 + 3.0 * a4 + 2.0 * a5 + 2.0 * a6
    if not combo > 0.0:
        violations.append(f"2*alpha1 + 3*alpha4 + 2*alpha5 + 2*alpha6 > 0 ({combo})")
    if not g1 > 0.0:
        violations.append(f"gamma1 > 0 ({g1})")
    shear = 2.0 * a4 + a5 + a6
    if not shear > 0.0:
        violations.append(f"2*alpha4 + alpha5 + alpha6 > 0 ({shear})")
    if not g1 * shear > g2**2:
        violations.append(
            f"gamma1*(2*alpha4 + alpha5 + alpha6) > gamma2**2 ({g1 * shear} <= {g2**2})"
        )
    leslie_rhs = (a2 + a3 + g2) ** 2
    if not 4.0 * g1 * shear > leslie_rhs:
        violations.append(
            f"4*gamma1*(2*alpha4 + alpha5 + alpha6) > (alpha2 + alpha3 + gamma2)**2 "
            f"({4.0 * g1 * shear} <= {leslie_rhs})"
        )

    if not params.K1 > 0.0:
        violations.append(f"K1 > 0 ({params.K1})")
    if not params.K3 > 0.0:
        violations.append(f"K3 > 0 ({params.K3})")
    if not params.rho > 0.0:
        violations.append(f"rho > 0 ({params.rho})")
    if not params.nu > 0.0:
        violations.append(f"nu > 0 ({params.nu})")
    return ValidityReport(violations)


def require_valid(params: LeslieParams) -> None:
    """Raise ``ValueError`` listing every violated relation."""

    report = validate(params)
    if not report.ok:
        raise ValueError("invalid Leslie parameters: " + "; ".join(report.violations))


# Wave speed ----------------------------------------------------------------

def wave_speed(params: LeslieParams, theta: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Return ``c(theta)`` and ``c'(theta)`` for ``c**2 = K1 cos**2 + K3 sin**2``."""

    theta = np.asarray(theta, dtype=float)
    sin, cos = np.sin(theta), np.cos(theta)
    c = np.sqrt(params.K1 * cos**2 + params.K3 * sin**2)
    dc = (params.K3 - params.K1) * sin * cos / c
    return c, dc


def speed_bounds(params: LeslieParams) -> tuple[float, float]:
    """Return ``(C_L, C_U)``, the extreme values of ``c``."""

    return math.sqrt(min(params.K1, params.K3)), math.sqrt(max(params.K1, params.K3))


def speed_lipschitz(params: LeslieParams) -> float:
    """Return ``C1 = max |c'|`` from dense sampling."""

    _, dc = wave_speed(params, _dense_theta())
    return float(np.max(np.abs(dc)))


# Viscous coefficients ------------------------------------------------------

def g_coeff(params: LeslieParams, theta: ArrayLike) -> np.ndarray:
    a1, a2, a3, a4, a5, a6 = params.alphas
    theta = np.asarray(theta, dtype=float)
    sin2, cos2 = np.sin(theta) ** 2, np.cos(theta) ** 2
    return (
        a1 * sin2 * cos2
        + 0.5 * (a5 - a2) * sin2
        + 0.5 * (a3 + a6) * cos2
        + 0.5 * a4
    )


def h_coeff(params: LeslieParams, theta: ArrayLike) -> np.ndarray:
    """Return ``h = (gamma1 + gamma2 cos 2θ) / 2``.

    Under Parodi's relation this equals ``alpha3 cos**2 - alpha2 sin**2``; an
    explicit ``gamma2`` override takes precedence over the Leslie coefficients.
    """

    theta = np.asarray(theta, dtype=float)
    return 0.5 * (params.gamma1 + params.gamma2 * np.cos(2.0 * theta))


def b_coeff(params: LeslieParams, theta: ArrayLike) -> np.ndarray:
    """Return ``b = g - h**2 / gamma1``."""

    return g_coeff(params, theta) - h_coeff(params, theta) ** 2 / params.gamma1


def b_coeff_expanded(params: LeslieParams, theta: ArrayLike) -> np.ndarray:
    """Closed form of ``b`` in ``cos 2θ`` and ``sin 2θ``, valid under Parodi's relation."""

    a1, _, _, a4, a5, a6 = params.alphas
    g1, g2 = params.gamma1, params.gamma2
    theta = np.asarray(theta, dtype=float)
    cos2t, sin2t = np.cos(2.0 * theta) ** 2, np.sin(2.0 * theta) ** 2
    return (
        (g1 * (2.0 * a4 + a5 + a6) - g2**2) / (4.0 * g1) * cos2t
        + a4 / 8.0 * sin2t
        + (2.0 * a1 + 3.0 * a4 + 2.0 * a5 + 2.0 * a6) / 8.0 * sin2t
    )


def reduced_coefficients(params: LeslieParams, theta: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Return the damping ``gamma1 - h**2/g`` and the coupling ``h/g`` of the flux form.

    Both enter the wave equation written in terms of ``J = g u_x + h θ_t``.
    """

    g = g_coeff(params, theta)
    h = h_coeff(params, theta)
    return params.gamma1 - h**2 / g, h / g


def is_special(params: LeslieParams, *, atol: float = 1e-12) -> bool:
    """Return ``True`` when ``g = h = 1`` on a dense grid and ``rho = nu = 1``."""

    theta = _dense_theta()
    return bool(
        np.allclose(g_coeff(params, theta), 1.0, rtol=0.0, atol=atol)
        and np.allclose(h_coeff(params, theta), 1.0, rtol=0.0, atol=atol)
        and math.isclose(params.rho, 1.0)
        and math.isclose(params.nu, 1.0)
    )


def require_special(params: LeslieParams) -> None:
    """Raise ``ValueError`` unless ``g = h = 1`` and ``rho = nu = 1``."""

    if not is_special(params):
        raise ValueError(
            "heat-kernel coupling requires g = h = 1 and rho = nu = 1; "
            "use fd_reference_solve for general parameters"
        )


def coefficient_minima(params: LeslieParams) -> dict[str, float]:
    """Return dense-grid minima of ``b``, ``g`` and the residual damping."""

    theta = _dense_theta()
    damping, _ = reduced_coefficients(params, theta)
    return {
        "b": float(np.min(b_coeff(params, theta))),
        "g": float(np.min(g_coeff(params, theta))),
        "damping": float(np.min(damping)),
    }


def pressure_shift(params: LeslieParams, u: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Add the uniform response ``(a / rho) t`` of a constant pressure gradient."""

    if params.pressure_gradient == 0.0:
        return u
    return u + (params.pressure_gradient / params.rho) * np.asarray(t)[:, None]


__all__ = [
    "DENSE_SAMPLES",
    "ValidityReport",
    "b_coeff",
    "b_coeff_expanded",
    "coefficient_minima",
    "g_coeff",
    "h_coeff",
    "is_special",
    "pressure_shift",
    "reduced_coefficients",
    "require_special",
    "require_valid",
    "speed_bounds",
    "speed_lipschitz",
    "validate",
    "wave_speed",
]
