from __future__ import annotations

import math

import numpy as np
import pytest

from nematicflow.core.model import (
    b_coeff,
    b_coeff_expanded,
    coefficient_minima,
    g_coeff,
    h_coeff,
    is_special,
    pressure_shift,
    reduced_coefficients,
    require_special,
    require_valid,
    speed_bounds,
    speed_lipschitz,
    validate,
    wave_speed,
)
from nematicflow.core.types import LeslieParams


def _general_params() -> LeslieParams:
    # Satisfies Parodi's relation and every Leslie inequality.
    return LeslieParams(
        alpha1=-0.5,
        alpha2=-1.2,
        alpha3=-0.1,
        alpha4=1.0,
        alpha5=0.8,
        alpha6=-0.5,
        K1=1.0,
        K3=2.0,
    )


# Admissibility -------------------------------------------------------------

def test_special_params_are_valid_with_unit_coefficients() -> None:
    params = LeslieParams.special()

    assert validate(params).ok
    assert is_special(params)
    assert params.gamma1 == pytest.approx(2.0)
    assert params.gamma2 == pytest.approx(0.0)

    theta = np.linspace(0.0, 2.0 * math.pi, 33)
    np.testing.assert_allclose(g_coeff(params, theta), 1.0, atol=1e-14)
    np.testing.assert_allclose(h_coeff(params, theta), 1.0, atol=1e-14)


def test_gammas_default_to_alpha_differences() -> None:
    params = _general_params()

    assert params.gamma1 == pytest.approx(1.1)
    assert params.gamma2 == pytest.approx(-1.3)
    assert validate(params).ok
    assert not is_special(params)


def test_validate_names_each_violated_relation() -> None:
    params = LeslieParams(
        alpha1=0.0,
        alpha2=-1.0,
        alpha3=1.0,
        alpha4=-1.0,
        alpha5=0.0,
        alpha6=0.0,
        K1=1.0,
        K3=1.0,
        gamma1=3.0,
    )

    violations = validate(params).violations

    assert any(v.startswith("gamma1 = alpha3 - alpha2") for v in violations)
    assert any(v.startswith("alpha4 > 0") for v in violations)
    with pytest.raises(ValueError, match="invalid Leslie parameters"):
        require_valid(params)


def test_parodi_violation_is_reported() -> None:
    params = LeslieParams(
        alpha1=0.0,
        alpha2=-1.0,
        alpha3=1.5,
        alpha4=1.0,
        alpha5=0.0,
        alpha6=0.0,
        K1=1.0,
        K3=1.0,
    )

    violations = validate(params).violations

    assert any(v.startswith("alpha2 + alpha3 = alpha6 - alpha5") for v in violations)


def test_h_follows_gamma2_override() -> None:
    base = _general_params()
    theta = np.linspace(0.0, math.pi, 9)
    leslie_form = base.alpha3 * np.cos(theta) ** 2 - base.alpha2 * np.sin(theta) ** 2
    np.testing.assert_allclose(h_coeff(base, theta), leslie_form, atol=1e-14)

    params = LeslieParams(**{**base.__dict__, "gamma2": -0.4})

    np.testing.assert_allclose(h_coeff(params, theta), 0.5 * (1.1 - 0.4 * np.cos(2.0 * theta)))
    assert not np.allclose(h_coeff(params, theta), leslie_form)


def test_non_finite_elastic_constant_is_rejected() -> None:
    with pytest.raises(ValueError, match="K1 must be finite"):
        LeslieParams.special(K1=math.inf)


# Wave speed ----------------------------------------------------------------

def test_wave_speed_values_and_derivative() -> None:
    params = LeslieParams.special(K1=1.0, K3=4.0)

    c, dc = wave_speed(params, np.array([0.0, math.pi / 2, math.pi / 4]))

    np.testing.assert_allclose(c, [1.0, 2.0, math.sqrt(2.5)], rtol=1e-14)
    assert dc[0] == pytest.approx(0.0, abs=1e-14)
    assert dc[2] == pytest.approx(1.5 / math.sqrt(2.5), rel=1e-12)


def test_speed_bounds_and_lipschitz_constant() -> None:
    params = LeslieParams.special(K1=1.0, K3=4.0)

    assert speed_bounds(params) == pytest.approx((1.0, 2.0))

    theta = np.linspace(0.0, 2.0 * math.pi, 20001)
    _, dc = wave_speed(params, theta)
    assert speed_lipschitz(params) == pytest.approx(float(np.max(np.abs(dc))), rel=1e-3)


def test_equal_elastic_constants_give_unit_speed() -> None:
    params = LeslieParams.special(K1=1.0, K3=1.0)

    c, dc = wave_speed(params, np.linspace(-3.0, 3.0, 11))

    np.testing.assert_allclose(c, 1.0)
    np.testing.assert_allclose(dc, 0.0)
    assert speed_lipschitz(params) == 0.0


# Viscous coefficients ------------------------------------------------------

def test_b_closed_form_matches_definition() -> None:
    params = _general_params()
    theta = np.linspace(0.0, math.pi, 97)

    np.testing.assert_allclose(b_coeff(params, theta), b_coeff_expanded(params, theta), atol=1e-13)
    assert b_coeff(params, 0.0) == pytest.approx(0.2 - 0.01 / 1.1)
    assert b_coeff(params, math.pi / 4) == pytest.approx(0.45)


def test_coefficient_minima_are_positive_for_admissible_params() -> None:
    minima = coefficient_minima(_general_params())

    assert minima["b"] > 0.0
    assert minima["g"] > 0.0


def test_reduced_coefficients_in_special_case() -> None:
    damping, coupling = reduced_coefficients(LeslieParams.special(), np.array([0.1, 1.3]))

    np.testing.assert_allclose(damping, 1.0)
    np.testing.assert_allclose(coupling, 1.0)


def test_require_special_rejects_general_params() -> None:
    require_special(LeslieParams.special())

    with pytest.raises(ValueError, match="g = h = 1"):
        require_special(_general_params())


def test_pressure_shift_adds_uniform_acceleration() -> None:
    base = LeslieParams.special()
    params = LeslieParams(**{**base.__dict__, "pressure_gradient": 2.0, "rho": 4.0})
    u = np.zeros((3, 5))
    t = np.array([0.0, 0.5, 1.0])

    shifted = pressure_shift(params, u, t)

    np.testing.assert_allclose(shifted[:, 0], [0.0, 0.25, 0.5])
    assert pressure_shift(base, u, t) is u
