from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from nematicflow.core.charsolver import (
    build_gamma0,
    check_pq_bounds,
    energy_on_level,
    export_state_csv,
    integrate_semilinear,
    invert_to_xt,
    level_curve,
    riemann_balance_residual,
    solve_characteristics,
)
from nematicflow.core.errors import DilationBoundError
from nematicflow.core.helpers import read_frame_csv, uniform_grid
from nematicflow.core.initial_data import constant_data, gaussian_data, wave_energy
from nematicflow.core.types import LeslieParams

UNIT_SPEED = LeslieParams.special(K1=1.0, K3=1.0)


def _rest_state(nodes: int = 64):
    data = constant_data(math.pi / 4, half_width=2.0, nx=201)
    return integrate_semilinear(build_gamma0(data, UNIT_SPEED, nodes=nodes), None, UNIT_SPEED)


# Initial curve -------------------------------------------------------------

def test_initial_curve_is_monotone_and_concentrates_nodes(params: LeslieParams) -> None:
    data = gaussian_data(params, amplitude=0.3, width=0.3, nx=1201)

    gamma0 = build_gamma0(data, params, nodes=256)

    assert gamma0.nodes == 256
    assert np.all(np.diff(gamma0.X) > 0.0)
    assert np.all(np.diff(gamma0.Y) < 0.0)
    assert gamma0.x[0] == data.x[0] and gamma0.x[-1] == data.x[-1]
    spacing = np.diff(gamma0.x)
    centre = int(np.argmin(np.abs(gamma0.x)))
    assert spacing[centre] < spacing[0]


def test_initial_curve_of_rest_state_is_the_diagonal() -> None:
    data = constant_data(0.2, half_width=2.0, nx=101)

    gamma0 = build_gamma0(data, UNIT_SPEED, nodes=40)

    np.testing.assert_allclose(gamma0.X, gamma0.x, atol=1e-12)
    np.testing.assert_allclose(gamma0.Y, -gamma0.x, atol=1e-12)
    np.testing.assert_allclose(gamma0.x, np.linspace(-2.0, 2.0, 41), atol=1e-12)
    np.testing.assert_allclose(gamma0.w, 0.0)


def test_initial_curve_needs_enough_nodes() -> None:
    with pytest.raises(ValueError, match="nodes"):
        build_gamma0(constant_data(0.0, nx=11), UNIT_SPEED, nodes=2)


# March ---------------------------------------------------------------------

def test_forward_characteristics_have_unit_speed_at_rest() -> None:
    state = _rest_state()
    N = state.nodes

    for k in (0, 10, 32):
        j = N - k
        row = slice(k, N + 1)
        np.testing.assert_allclose(
            state.x[row, j] - state.t[row, j], state.gamma0.x[k], atol=1e-12
        )
    done = state.computed
    np.testing.assert_allclose(state.theta[done], math.pi / 4)
    np.testing.assert_allclose(state.p[done], 1.0)
    assert state.bands == N


def test_level_curve_at_rest_spans_the_light_cone() -> None:
    state = _rest_state()

    curve = level_curve(state, 0.5)

    assert curve.x.min() == pytest.approx(-1.5, abs=1e-9)
    assert curve.x.max() == pytest.approx(1.5, abs=1e-9)
    np.testing.assert_allclose(curve.theta, math.pi / 4)
    assert energy_on_level(state, 0.5) == 0.0
    with pytest.raises(ValueError, match="non-negative"):
        level_curve(state, -0.1)


def test_initial_level_energy_matches_wave_energy(params: LeslieParams) -> None:
    data = gaussian_data(params, amplitude=0.1, width=0.5, nx=2401)
    state = integrate_semilinear(
        build_gamma0(data, params, nodes=512), None, params, t_stop=0.05
    )

    assert energy_on_level(state, 0.0) == pytest.approx(wave_energy(data, params), rel=2e-3)


def test_undamped_level_energy_is_conserved(params: LeslieParams) -> None:
    data = gaussian_data(params, amplitude=0.1, width=0.5, nx=2401)
    state = integrate_semilinear(build_gamma0(data, params, nodes=512), None, params, damping=0.0)

    initial = energy_on_level(state, 0.0)

    assert energy_on_level(state, 1.0) == pytest.approx(initial, rel=1e-2)


def test_damping_dissipates_level_energy(params: LeslieParams) -> None:
    data = gaussian_data(params, amplitude=0.1, width=0.5, nx=2401)
    state = integrate_semilinear(build_gamma0(data, params, nodes=256), None, params)

    assert energy_on_level(state, 1.0) < energy_on_level(state, 0.0)


def test_mixed_residuals_shrink_under_refinement(params: LeslieParams) -> None:
    data = gaussian_data(params, amplitude=0.2, width=0.5, nx=2401)

    coarse = integrate_semilinear(build_gamma0(data, params, nodes=128), None, params)
    fine = integrate_semilinear(build_gamma0(data, params, nodes=256), None, params)

    assert fine.mixed_residuals()[0] < coarse.mixed_residuals()[0]
    assert riemann_balance_residual(fine).relative < riemann_balance_residual(coarse).relative


def test_t_stop_truncates_the_march() -> None:
    data = constant_data(math.pi / 4, half_width=2.0, nx=201)
    gamma0 = build_gamma0(data, UNIT_SPEED, nodes=64)

    state = integrate_semilinear(gamma0, None, UNIT_SPEED, t_stop=0.5)

    assert state.bands < state.nodes
    assert state.t_max > 0.5


# Dilations -----------------------------------------------------------------

def test_narrow_dilation_band_is_rejected(params: LeslieParams) -> None:
    data = gaussian_data(params, amplitude=0.3, width=0.5, nx=1201)
    gamma0 = build_gamma0(data, params, nodes=64)

    with pytest.raises(DilationBoundError) as excinfo:
        integrate_semilinear(gamma0, None, params, dilation_band=(0.9999, 1.0001))

    assert excinfo.value.node is not None


def test_refinement_gives_up_after_the_last_attempt(params: LeslieParams) -> None:
    data = gaussian_data(params, amplitude=0.3, width=0.5, nx=1201)

    with pytest.raises(DilationBoundError):
        solve_characteristics(
            data, None, params, nodes=32, max_refinements=1, dilation_band=(0.9999, 1.0001)
        )


def test_dilation_bounds_hold_for_smooth_data(params: LeslieParams) -> None:
    data = gaussian_data(params, amplitude=0.1, width=0.5, nx=1201)
    state = integrate_semilinear(build_gamma0(data, params, nodes=128), None, params)

    report = check_pq_bounds(state, 0.0)

    assert report.within
    assert report.min_p > 0.0 and report.min_q > 0.0
    assert report.max_p <= report.certified_bound
    assert math.isfinite(report.leg_integral) and report.leg_integral >= 0.0
    with pytest.raises(ValueError, match="flux_norm"):
        check_pq_bounds(state, -1.0)


# Inversion -----------------------------------------------------------------

def test_inversion_of_rest_state() -> None:
    state = _rest_state()
    x_grid = uniform_grid(-2.0, 2.0, 41)

    inversion = invert_to_xt(state, np.linspace(0.0, 0.5, 6), x_grid=x_grid)

    np.testing.assert_allclose(inversion.fields.theta, math.pi / 4)
    np.testing.assert_allclose(inversion.fields.theta_t, 0.0, atol=1e-14)
    assert not inversion.fields.blownup.any()
    np.testing.assert_allclose(inversion.min_one_plus_cos_z, 2.0)


# Export --------------------------------------------------------------------

def test_state_export_lists_computed_nodes(tmp_path: Path) -> None:
    state = _rest_state(nodes=16)

    path = export_state_csv(state, tmp_path / "state.csv")
    frame = read_frame_csv(path)

    assert list(frame.columns) == ["X", "Y", "x", "t", "theta", "w", "z", "p", "q"]
    assert len(frame) == int(state.computed.sum())
    assert frame["t"].min() == 0.0
