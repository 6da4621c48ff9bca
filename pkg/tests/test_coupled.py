from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from nematicflow.core.charsolver import build_gamma0, integrate_semilinear, level_curve
from nematicflow.core.coupled import (
    BUNDLE_FIELDS,
    energy_ledger,
    export_bundle,
    fd_reference_solve,
    fixed_point_solve,
    heat_identity_residual,
    weak_form_residual,
)
from nematicflow.core.errors import ConvergenceError
from nematicflow.core.helpers import read_field_csv, read_frame_csv, space_l2, uniform_grid
from nematicflow.core.initial_data import constant_data, gaussian_data
from nematicflow.core.simulator import PoiseuilleSimulator
from nematicflow.core.types import FixedPointConfig, InitialData, LeslieParams


def _rest_bundle():
    data = constant_data(math.pi / 4, half_width=2.0, nx=201)
    return fixed_point_solve(
        data, LeslieParams.special(), T=0.2, nx=101, nt=11, lattice_nodes=64
    )


def _standing_wave(amplitude: float = 0.1) -> InitialData:
    x = uniform_grid(0.0, math.pi, 401)
    zeros = np.zeros_like(x)
    return InitialData(
        x=x,
        u0=zeros,
        theta0=math.pi / 4 + amplitude * np.sin(2.0 * x),
        theta1=zeros.copy(),
        theta_far=math.pi / 4,
    )


# Fixed point ---------------------------------------------------------------

def test_rest_state_is_a_fixed_point() -> None:
    bundle = _rest_bundle()

    assert bundle.method == "characteristic"
    assert bundle.u.shape == (11, 101)
    np.testing.assert_allclose(bundle.J, 0.0, atol=1e-14)
    np.testing.assert_allclose(bundle.u, 0.0, atol=1e-14)
    np.testing.assert_allclose(bundle.theta, math.pi / 4)
    assert [record["iterations"] for record in bundle.slab_log] == [1, 1]
    assert bundle.slab_log[-1]["t_end"] == pytest.approx(0.2)


def test_fixed_point_rejects_general_params() -> None:
    params = LeslieParams(
        alpha1=-0.5,
        alpha2=-1.2,
        alpha3=-0.1,
        alpha4=1.0,
        alpha5=0.8,
        alpha6=-0.5,
        K1=1.0,
        K3=2.0,
    )

    with pytest.raises(ValueError, match="g = h = 1"):
        fixed_point_solve(constant_data(0.0, nx=11), params, T=0.1, nx=11, nt=3)


def test_fixed_point_reports_non_convergence(params: LeslieParams) -> None:
    data = gaussian_data(params, velocity_amplitude=0.5, half_width=4.0, nx=401)
    config = FixedPointConfig(max_iterations=1, tolerance=1e-14, max_halvings=0)

    with pytest.raises(ConvergenceError) as excinfo:
        fixed_point_solve(data, params, config, T=0.1, nx=81, nt=5, lattice_nodes=64)

    assert excinfo.value.diagnostics["t_start"] == 0.0
    assert excinfo.value.diagnostics["history"]


@pytest.mark.slow
def test_smooth_run_agrees_with_finite_differences(params: LeslieParams) -> None:
    data = gaussian_data(
        params,
        amplitude=0.1,
        rate_amplitude=0.5,
        velocity_amplitude=0.1,
        width=0.5,
        half_width=6.0,
        nx=1201,
    )

    bundle = fixed_point_solve(data, params, T=0.5, nx=241, nt=51, lattice_nodes=512)
    reference = fd_reference_solve(data, params, 0.5, 0.01, 0.002, store_every=25)

    row = bundle.row(0.5)
    theta_ref = np.interp(bundle.x, reference.x, reference.theta[reference.row(0.5)])
    error = space_l2((bundle.theta[row] - theta_ref)[None, :], bundle.x)[0]
    assert error < 1e-3
    J_ref = np.interp(bundle.x, reference.x, reference.J[reference.row(0.5)])
    assert np.max(np.abs(bundle.J[row] - J_ref)) < 1e-2
    report = energy_ledger(bundle)
    assert report.relative_slack() < 1e-2
    assert report.inequality_holds(1e-2)
    assert heat_identity_residual(bundle) < 5e-2


@pytest.mark.slow
def test_slab_contraction_improves_as_slabs_shrink(params: LeslieParams) -> None:
    data = gaussian_data(
        params, amplitude=0.1, rate_amplitude=0.5, velocity_amplitude=0.1, half_width=4.0, nx=801
    )

    ratios = []
    for delta in (0.2, 0.1, 0.05):
        config = FixedPointConfig(
            slab_length=delta, relaxation=1.0, tolerance=1e-8, max_iterations=40, max_halvings=0
        )
        bundle = fixed_point_solve(data, params, config, T=delta, nx=161, nt=9, lattice_nodes=256)
        (record,) = bundle.slab_log
        assert record["halvings"] == 0
        ratios.append(record["contraction"])

    assert all(0.0 < ratio < 1.0 for ratio in ratios)
    assert ratios[0] > ratios[1] > ratios[2]


# Finite differences --------------------------------------------------------

def test_finite_differences_keep_the_rest_state() -> None:
    data = constant_data(0.4, half_width=1.0, nx=101)

    bundle = fd_reference_solve(data, LeslieParams.special(), 0.1, 0.02, 0.005)

    np.testing.assert_allclose(bundle.theta, 0.4)
    np.testing.assert_allclose(bundle.u, 0.0, atol=1e-15)
    np.testing.assert_allclose(bundle.J, 0.0, atol=1e-15)
    assert bundle.truncated_at is None
    assert bundle.t.shape == (21,)


def test_finite_differences_enforce_cfl_and_step_multiples() -> None:
    data = constant_data(0.4, half_width=1.0, nx=101)
    params = LeslieParams.special()

    with pytest.raises(ValueError, match="dt must satisfy"):
        fd_reference_solve(data, params, 0.1, 0.02, 0.01)
    with pytest.raises(ValueError, match="multiple of dt"):
        fd_reference_solve(data, params, 0.1, 0.02, 0.003)
    with pytest.raises(ValueError, match="store_every"):
        fd_reference_solve(data, params, 0.1, 0.02, 0.005, store_every=3)


def test_damped_standing_wave_matches_closed_form() -> None:
    params = LeslieParams.special(K1=1.0, K3=1.0)
    amplitude = 0.1
    data = _standing_wave(amplitude)

    bundle = fd_reference_solve(data, params, 1.0, math.pi / 400, 1.0 / 400, freeze_velocity=True)

    # θ_tt + 2 θ_t = θ_xx with θ - θ* = a(t) sin 2x
    omega = math.sqrt(3.0)
    t = bundle.t[-1]
    a = amplitude * math.exp(-t) * (math.cos(omega * t) + math.sin(omega * t) / omega)
    np.testing.assert_allclose(bundle.theta[-1], math.pi / 4 + a * np.sin(2.0 * bundle.x), atol=1e-4)


def test_gradient_cap_rejects_rough_initial_data() -> None:
    params = LeslieParams.special(K1=1.0, K3=1.0)

    with pytest.raises(ValueError, match="initial data"):
        fd_reference_solve(
            _standing_wave(0.1), params, 0.1, math.pi / 400, 0.1 / 40, gradient_cap=0.1
        )


def test_characteristic_march_matches_finite_differences_at_unit_speed() -> None:
    params = LeslieParams.special(K1=1.0, K3=1.0)
    data = gaussian_data(params, amplitude=0.1, width=0.5, half_width=6.0, nx=1201)

    state = integrate_semilinear(build_gamma0(data, params, nodes=512), None, params, damping=2.0)
    reference = fd_reference_solve(data, params, 0.5, 0.01, 0.005, freeze_velocity=True)

    curve = level_curve(state, 0.5)
    inside = np.abs(curve.x) < 4.0
    theta_ref = np.interp(curve.x[inside], reference.x, reference.theta[-1])
    np.testing.assert_allclose(curve.theta[inside], theta_ref, atol=1e-3)


# Energy and residuals ------------------------------------------------------

def test_rest_state_ledger_is_flat() -> None:
    report = energy_ledger(_rest_bundle())

    np.testing.assert_allclose(report.frame["E"], 0.0)
    np.testing.assert_allclose(report.frame["dissipation"], 0.0)
    assert report.max_abs_slack == 0.0
    assert report.inequality_holds()
    assert list(report.frame.columns) == [
        "t",
        "E",
        "dissipation",
        "slack",
        "maxJ",
        "min_one_plus_cos_w",
        "min_one_plus_cos_z",
    ]


def test_finite_difference_energy_balance(params: LeslieParams) -> None:
    data = gaussian_data(params, amplitude=0.1, width=0.5, half_width=6.0, nx=1201)

    bundle = fd_reference_solve(data, params, 0.5, 0.01, 0.001)
    report = energy_ledger(bundle)

    assert report.initial > 0.0
    assert report.frame["E"].iloc[-1] < report.initial
    assert report.relative_slack() < 5e-2
    assert report.inequality_holds(1e-3)
    assert heat_identity_residual(bundle) < 5e-2


def test_weak_form_residual_of_standing_wave() -> None:
    params = LeslieParams.special(K1=1.0, K3=1.0)
    bundle = fd_reference_solve(
        _standing_wave(0.1), params, 1.0, math.pi / 400, 1.0 / 400, freeze_velocity=True
    )

    report = weak_form_residual(bundle)

    assert report.residuals.shape == (10,)
    assert report.relative < 1e-2
    with pytest.raises(ValueError, match="even"):
        weak_form_residual(bundle, count=3)


# Facade --------------------------------------------------------------------

def test_simulator_dispatches_to_finite_differences(params: LeslieParams) -> None:
    simulator = PoiseuilleSimulator(params, nx=101, nt=11)
    data = constant_data(0.4, half_width=1.0, nx=101)

    bundle = simulator.simulate(data, T=0.1, method="finite-difference")

    assert bundle.method == "finite-difference"
    assert bundle.t.shape == (11,)
    assert bundle.t[-1] == pytest.approx(0.1)
    with pytest.raises(ValueError, match="unknown method"):
        simulator.simulate(data, T=0.1, method="spectral")  # type: ignore[arg-type]


# Export --------------------------------------------------------------------

def test_export_bundle_writes_fields_and_summary(tmp_path: Path) -> None:
    bundle = _rest_bundle()

    paths = export_bundle(bundle, tmp_path / "run")

    names = sorted(path.name for path in paths)
    assert names == sorted([f"{name}.csv" for name in BUNDLE_FIELDS] + ["ledger.csv", "summary.json"])
    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert summary["method"] == "characteristic"
    assert summary["nt"] == 11
    matrix = read_frame_csv(tmp_path / "run" / "theta.csv")
    assert list(matrix.columns[:1]) == ["x"]
    np.testing.assert_array_equal(matrix.columns[1:].astype(float), bundle.t)
    np.testing.assert_array_equal(matrix["x"].to_numpy(), bundle.x)
    assert matrix.shape == (bundle.x.size, bundle.t.size + 1)
    theta = read_field_csv(tmp_path / "run" / "theta.csv", "theta")
    np.testing.assert_allclose(theta.values, bundle.theta)
    np.testing.assert_allclose(theta.t, bundle.t)
