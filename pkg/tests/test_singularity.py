from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from nematicflow.core.charsolver import build_gamma0, integrate_semilinear
from nematicflow.core.coupled import SolutionBundle, fixed_point_solve
from nematicflow.core.errors import RegionError
from nematicflow.core.fields import DirectorFields
from nematicflow.core.initial_data import build_blowup_data, constant_data, family_constants
from nematicflow.core.simulator import PoiseuilleSimulator
from nematicflow.core.singularity import (
    CharacteristicTrace,
    characteristic_triangle_energy,
    detect_blowup,
    detection_tolerance,
    export_blowup,
    fit_flux_constant,
    fit_time_constant,
    holder_half_profile,
    predicted_blowup_time,
    riccati_monitor,
    singular_slope,
    trace_forward_characteristic,
    triangle_constant,
)
from nematicflow.core.types import BlowupFamily, FixedPointConfig, LeslieParams

UNIT_SPEED = LeslieParams.special(K1=1.0, K3=1.0)


def _rest_state():
    data = constant_data(math.pi / 4, half_width=2.0, nx=201)
    return integrate_semilinear(build_gamma0(data, UNIT_SPEED, nodes=64), None, UNIT_SPEED)


def _bundle(
    x: np.ndarray, t: np.ndarray, theta: np.ndarray, params: LeslieParams, **extra: object
) -> SolutionBundle:
    zeros = np.zeros_like(theta)
    fields = DirectorFields.from_point_values(
        x=x, t=t, theta=theta, theta_t=zeros, theta_x=np.gradient(theta, x, axis=1), params=params
    )
    return SolutionBundle(
        x=x,
        t=t,
        u=zeros,
        v=zeros,
        J=zeros,
        fields=fields,
        params=params,
        method=extra.pop("method", "finite-difference"),
        **extra,
    )


# Characteristics -----------------------------------------------------------

def test_forward_characteristic_at_unit_speed() -> None:
    trace = trace_forward_characteristic(_rest_state(), 0.5, t_end=1.0)

    frame = trace.frame
    np.testing.assert_allclose(frame["x"] - frame["t"], 0.5, atol=1e-12)
    assert frame["t"].iloc[-1] <= 1.0 + 1e-12
    assert trace.max_drift == 0.0
    assert trace.drift_ok and trace.sign_ok
    assert not trace.S_above_one


def test_forward_characteristic_outside_initial_line() -> None:
    with pytest.raises(RegionError, match="outside"):
        trace_forward_characteristic(_rest_state(), 10.0)


def test_forward_characteristic_requires_a_lattice() -> None:
    x = np.linspace(-1.0, 1.0, 11)
    bundle = _bundle(x, np.array([0.0, 0.1]), np.zeros((2, 11)), UNIT_SPEED)

    with pytest.raises(ValueError, match="characteristic lattice"):
        trace_forward_characteristic(bundle, 0.0)


def test_riccati_monitor_detects_rescaled_slope_first() -> None:
    t = np.array([0.0, 0.1, 0.2, 0.3])
    S = np.array([1.0, 10.0, 42.0, 1e4])
    frame = pd.DataFrame(
        {"t": t, "x": t, "S": S, "R": 0.0, "theta": 0.0, "S_tilde": np.exp(0.5 * t) * S}
    )
    trace = CharacteristicTrace(
        frame=frame, row=0, max_drift=0.0, drift_bound=None, drift_ok=True, sign_ok=True
    )

    monitor = riccati_monitor(trace, tolerance=1e-3)

    assert 1.0 / singular_slope(1e-3) == pytest.approx(math.sqrt(1e-3 / (2.0 - 1e-3)))
    assert monitor.t_detect_S == pytest.approx(0.3)
    assert monitor.t_detect_S_tilde == pytest.approx(0.2)


# Triangle energy -----------------------------------------------------------

def test_triangle_constant() -> None:
    assert triangle_constant(1.0, 0.0, 1.0) == 12.0
    assert triangle_constant(2.0, 1.0, 4.0) == pytest.approx(12.0 * 2.0 * 16.0 + 2.0 * 2.0 * 8.0)


def test_triangle_energy_of_rest_state() -> None:
    energy = characteristic_triangle_energy(
        _rest_state(), (0.0, 0.5), k0=1.0, k1=0.0, epsilon=0.1, C_U=1.0
    )

    assert energy.total == 0.0
    assert energy.within_bound
    assert energy.width == pytest.approx(1.0, abs=1e-9)
    assert energy.width_ok
    assert energy.bound == pytest.approx(1.2)


def test_triangle_apex_outside_lattice() -> None:
    with pytest.raises(RegionError):
        characteristic_triangle_energy(
            _rest_state(), (0.0, 5.0), k0=1.0, k1=0.0, epsilon=0.1, C_U=1.0
        )


# Fits ----------------------------------------------------------------------

def test_flux_fit_on_exact_square_root_law() -> None:
    fit = fit_flux_constant(np.array([0.04, 0.01]), np.array([0.4, 0.2]))

    assert fit.k1 == pytest.approx(2.0)
    assert fit.k1_lsq == pytest.approx(2.0)
    assert fit.residual == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(fit.slack, 0.0, atol=1e-12)


def test_flux_fit_validates_inputs() -> None:
    with pytest.raises(ValueError, match="equal length"):
        fit_flux_constant(np.array([0.1]), np.array([0.1, 0.2]))
    with pytest.raises(ValueError, match="positive"):
        fit_flux_constant(np.array([0.0]), np.array([0.1]))


def test_time_constant_inverts_prediction() -> None:
    dc_star = 1.5 / math.sqrt(2.5)

    k3 = fit_time_constant(0.8, 0.01, 2.0, dc_star)

    assert predicted_blowup_time(k3, 0.01, 2.0, dc_star) == pytest.approx(0.8)
    assert fit_time_constant(0.3, 0.01, 2.0, dc_star) == 0.0


# Detection -----------------------------------------------------------------

def test_no_blowup_in_rest_state() -> None:
    params = LeslieParams.special()
    data = constant_data(math.pi / 4, half_width=2.0, nx=201)
    bundle = fixed_point_solve(data, params, T=0.2, nx=101, nt=11, lattice_nodes=64)

    report = detect_blowup(bundle, params, BlowupFamily(epsilon=0.1), t_limit=0.2)

    assert not report.detected
    assert report.t_star is None
    assert not report.before_one
    assert report.J_sup == 0.0
    assert report.to_dict()["triangle"] is None


def test_steep_initial_bump_is_not_reported() -> None:
    params = LeslieParams.special()
    family = BlowupFamily(epsilon=0.5)
    data = build_blowup_data(params, family)
    state = integrate_semilinear(build_gamma0(data, params, nodes=256), None, params, t_stop=0.01)
    assert float(np.min(state.one_plus_cos_z[state.computed])) < state.singular_tolerance

    x = np.linspace(-1.0, 1.0, 21)
    theta = np.full((1, 21), math.pi / 4)
    bundle = _bundle(x, np.array([0.0]), theta, params, method="characteristic", state=state)
    report = detect_blowup(bundle, params, family, t_limit=0.01)

    constants = family_constants(params, family)
    assert detection_tolerance(state) < 2.0 / (1.0 + (5.0 * constants.s_initial) ** 2)
    assert not report.detected


@pytest.mark.slow
def test_concentrated_bump_forms_a_one_sided_cusp(tmp_path: Path) -> None:
    params = LeslieParams.special()
    simulator = PoiseuilleSimulator(
        params, config=FixedPointConfig(), nx=1025, nt=101, lattice_nodes=1024
    )

    bundle, report = simulator.blowup(BlowupFamily(epsilon=0.04))

    assert report.detected
    assert report.before_one
    assert report.sign_ok
    trace = trace_forward_characteristic(bundle, 0.0, t_end=report.t_star)
    paths = export_blowup(report, trace, tmp_path)
    payload = json.loads(paths[0].read_text())
    assert payload["detected"] is True
    assert (tmp_path / "gamma.csv").exists()


# Regularity ----------------------------------------------------------------

def test_holder_profile_of_square_root_cusp() -> None:
    x = np.linspace(-1.0, 1.0, 201)
    theta = np.sqrt(np.abs(x))[None, :]
    bundle = _bundle(x, np.array([0.0]), theta, UNIT_SPEED)

    profile = holder_half_profile(bundle, 0.0)

    assert profile.holder_half == pytest.approx(1.0, rel=1e-6)
    assert profile.lipschitz == pytest.approx(1.0 / math.sqrt(0.01), rel=1e-6)
    assert profile.points == 201


def test_holder_profile_on_lattice_level() -> None:
    profile = holder_half_profile(_rest_state(), 0.5)

    assert profile.holder_half == 0.0
    assert profile.lipschitz == 0.0
    assert profile.points > 2
