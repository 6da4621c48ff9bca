from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from nematicflow.core.initial_data import (
    blowup_domain,
    build_blowup_data,
    bump_energy,
    bump_phi,
    constant_data,
    cusp_threshold,
    family_constants,
    flux_initial_row,
    gaussian_data,
    initial_energy,
    read_initial_csv,
    riemann_initial,
    wave_energy,
    write_initial_csv,
)
from nematicflow.core.model import wave_speed
from nematicflow.core.types import BlowupFamily, LeslieParams


# Bump profile --------------------------------------------------------------

def test_bump_profile_vanishes_outside_unit_interval() -> None:
    a = np.array([-2.0, -1.0, 0.0, 0.5, 1.0, 3.0])

    phi, dphi = bump_phi(10.0, a)

    np.testing.assert_allclose(phi[[0, 1, 4, 5]], 0.0)
    np.testing.assert_allclose(dphi[[0, 1, 4, 5]], 0.0)
    assert dphi[2] == pytest.approx(-10.0)
    assert phi[3] == pytest.approx(-10.0 * 0.5 * 0.75**2)


def test_bump_energy_closed_form() -> None:
    for M in (1.0, 41.0):
        assert bump_energy(M) == pytest.approx(256.0 / 315.0 * M**2, rel=1e-10)


def test_bump_rejects_non_positive_steepness() -> None:
    with pytest.raises(ValueError, match="steepness"):
        bump_phi(0.0, 0.1)


# Family constants ----------------------------------------------------------

def test_cusp_threshold_and_default_steepness() -> None:
    params = LeslieParams.special(K1=1.0, K3=4.0)

    threshold = cusp_threshold(params, math.pi / 4)
    constants = family_constants(params, BlowupFamily(epsilon=0.01))

    assert threshold == pytest.approx(32.0 * math.sqrt(2.5) / 1.5, rel=1e-12)
    assert threshold == pytest.approx(33.73, abs=1e-2)
    assert constants.steepness == 41.0
    assert constants.C_L == 1.0
    assert constants.C_U == 2.0
    assert constants.s_initial == pytest.approx((2.0 * math.sqrt(2.5) - 0.01) * 41.0)


def test_cusp_threshold_requires_increasing_speed() -> None:
    with pytest.raises(ValueError, match="must be positive"):
        cusp_threshold(LeslieParams.special(K1=4.0, K3=1.0), math.pi / 4)


def test_blowup_family_validates_epsilon() -> None:
    with pytest.raises(ValueError, match="epsilon"):
        BlowupFamily(epsilon=1.5)


# Builders ------------------------------------------------------------------

def test_blowup_data_has_compact_flux_and_velocity() -> None:
    params = LeslieParams.special()
    eps = 0.5
    data = build_blowup_data(params, BlowupFamily(epsilon=eps))

    lo, hi = blowup_domain(params, eps, 1.0)
    assert data.x[0] == pytest.approx(lo)
    assert data.x[-1] >= hi - data.dx
    assert data.support == (-eps, eps)
    assert 0.0 in data.x

    _, dphi = bump_phi(41.0, data.x / eps)
    np.testing.assert_allclose(flux_initial_row(data), eps * dphi, atol=1e-12)

    outside = np.abs(data.x) >= eps
    np.testing.assert_allclose(data.u0[outside], 0.0)
    np.testing.assert_allclose(data.theta0[outside], math.pi / 4)

    R, S = riemann_initial(data, params)
    c_star, _ = wave_speed(params, math.pi / 4)
    centre = int(np.argmin(np.abs(data.x)))
    assert S[centre] == pytest.approx((2.0 * float(c_star) - eps) * 41.0, rel=1e-10)
    assert R[centre] == pytest.approx(-eps * 41.0, rel=1e-10)


def test_blowup_data_rejects_bad_inputs() -> None:
    params = LeslieParams.special()

    with pytest.raises(ValueError, match="nodes_per_bump"):
        build_blowup_data(params, BlowupFamily(epsilon=0.1), nodes_per_bump=32)
    with pytest.raises(ValueError, match="cusp threshold"):
        build_blowup_data(params, BlowupFamily(epsilon=0.1, steepness=10.0))
    with pytest.raises(ValueError, match="below C_L"):
        build_blowup_data(LeslieParams.special(K1=0.25, K3=1.0), BlowupFamily(epsilon=0.6))


def test_constant_data_has_zero_energy() -> None:
    data = constant_data(0.3, nx=101)

    assert initial_energy(data, LeslieParams.special()) == 0.0
    assert data.theta_far == 0.3


def test_gaussian_energy_matches_quadrature() -> None:
    params = LeslieParams.special(K1=1.0, K3=1.0)
    data = gaussian_data(params, amplitude=0.1, width=0.5, half_width=6.0, nx=4001)

    # ∫ (A * 2x/w² * exp(-x²/w²))² dx = A² sqrt(pi/2) / w
    expected = 0.01 * math.sqrt(math.pi / 2.0) / 0.5
    assert wave_energy(data, params) == pytest.approx(expected, rel=1e-6)


def test_initial_data_rejects_non_uniform_grid() -> None:
    data = constant_data(0.0, nx=11)
    x = data.x.copy()
    x[3] += 0.01

    with pytest.raises(ValueError, match="uniformly spaced"):
        type(data)(x=x, u0=data.u0, theta0=data.theta0, theta1=data.theta1, theta_far=0.0)


# CSV -----------------------------------------------------------------------

def test_initial_csv_round_trip(tmp_path: Path) -> None:
    params = LeslieParams.special()
    data = gaussian_data(params, rate_amplitude=0.2, velocity_amplitude=0.3, nx=201)

    path = write_initial_csv(data, tmp_path / "initial.csv")
    loaded = read_initial_csv(path, theta_far=data.theta_far)

    np.testing.assert_allclose(loaded.x, data.x, rtol=0.0, atol=0.0)
    np.testing.assert_allclose(loaded.theta1, data.theta1, rtol=0.0, atol=0.0)
    assert loaded.theta_far == data.theta_far


def test_initial_csv_requires_columns(tmp_path: Path) -> None:
    path = tmp_path / "bad.csv"
    path.write_text("x,u0\n0,0\n1,0\n2,0\n")

    with pytest.raises(ValueError, match="theta0, theta1"):
        read_initial_csv(path)
