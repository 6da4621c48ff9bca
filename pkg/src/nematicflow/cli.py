"""Command-line front end: ``nematicflow {run,simulate,blowup,sweep,validate}``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .config import RunConfig, load_config
from .core.charsolver import check_pq_bounds
from .core.coupled import (
    EnergyReport,
    energy_ledger,
    export_bundle,
    heat_identity_residual,
    weak_form_residual,
)
from .core.errors import ConfigError, NematicFlowError
from .core.heatkernel import FluxField, convolution_stencil, heat_propagate
from .core.helpers import space_l2, uniform_grid, write_frame_csv, write_json
from .core.initial_data import family_constants, gaussian_data, initial_energy
from .core.model import validate
from .core.simulator import PoiseuilleSimulator
from .core.singularity import (
    detect_blowup,
    export_blowup,
    fit_flux_constant,
    fit_time_constant,
    predicted_blowup_time,
    trace_forward_characteristic,
)
from .core.types import HeatQuadrature, InitialData

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

COMMANDS = ("run", "simulate", "blowup", "sweep", "validate")
_SCENARIO_OF = {"simulate": "smooth", "blowup": "blowup", "sweep": "sweep", "validate": "validate"}
SWEEP_COLUMNS = [
    "epsilon",
    "E0",
    "J_sup",
    "detected",
    "t_star",
    "x_star",
    "theta_x_peak",
    "energy_inequality",
    "one_sided",
    "error",
]


# Parsing -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--epsilon", type=float, action="append", help="bump width (repeatable)")
    common.add_argument(
        "--resolution", type=int, help="lattice intervals; the heat grid gets one more point"
    )
    common.add_argument("--T", type=float, dest="T", help="final time")
    common.add_argument(
        "--out", type=Path, help="output root (default $NEMATICFLOW_OUTPUT_ROOT or ./runs)"
    )
    common.add_argument("--workers", type=int, help="concurrent sweep members")
    common.add_argument("--seed", type=int, help="seed for Hölder pair sampling")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--svg", action="store_true", help="also write SVG line charts (needs matplotlib)")

    parser = argparse.ArgumentParser(prog="nematicflow", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)
    run = commands.add_parser("run", parents=[common], help="run the configured scenario")
    run.add_argument("--scenario", choices=["smooth", "blowup", "sweep", "validate"])
    commands.add_parser("simulate", parents=[common], help="smooth small-amplitude run")
    commands.add_parser("blowup", parents=[common], help="concentrated bump run with cusp detection")
    commands.add_parser("sweep", parents=[common], help="blow-up runs over several epsilons")
    commands.add_parser("validate", parents=[common], help="invariant suite; exit 1 on any failure")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    scenario = getattr(args, "scenario", None) or _SCENARIO_OF.get(args.command)
    if scenario is not None:
        overrides["scenario"] = scenario
    if args.epsilon:
        overrides["blowup"] = {"epsilon": args.epsilon[0]}
        overrides["epsilons"] = list(args.epsilon)
    grid: dict[str, Any] = {}
    if args.resolution is not None:
        grid.update(lattice_nodes=args.resolution, nx=args.resolution + 1)
    if args.T is not None:
        grid["T"] = args.T
    if grid:
        overrides["grid"] = grid
    for key in ("out", "workers", "seed"):
        value = getattr(args, key)
        if value is not None:
            overrides["output" if key == "out" else key] = value
    return overrides


# Shared pieces -------------------------------------------------------------

def simulator_for(config: RunConfig) -> PoiseuilleSimulator:
    return PoiseuilleSimulator(
        config.params,
        config=config.fixed_point,
        quadrature=HeatQuadrature(),
        nx=config.grid.nx,
        nt=config.grid.nt,
        lattice_nodes=config.grid.lattice_nodes,
        singular_tolerance=config.tolerances.singular,
    )


def smooth_data(config: RunConfig) -> InitialData:
    """Small-amplitude Gaussian data around ``θ*`` with nonzero ``theta1`` and ``u0``."""

    return gaussian_data(
        config.params,
        theta_star=config.blowup.theta_star,
        rate_amplitude=0.2,
        velocity_amplitude=0.1,
    )


def write_svg(
    frame: pd.DataFrame, columns: Sequence[str], path: Path, *, x: str = "t"
) -> Path | None:
    """Line chart of ``columns`` against ``x``; skipped when matplotlib is missing."""

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        logger.warning("matplotlib is not installed; skipping %s", path)
        return None
    figure, axis = plt.subplots(figsize=(6.0, 4.0))
    for column in columns:
        axis.plot(frame[x], frame[column], label=column)
    axis.set_xlabel(x)
    axis.legend()
    path.parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(path, format="svg", metadata={"Date": None})
    plt.close(figure)
    return path


def _emit_ledger_chart(report: EnergyReport, directory: Path, svg: bool) -> None:
    if svg:
        write_svg(report.frame, ["E", "dissipation", "slack"], directory / "ledger.svg")


# Scenarios -----------------------------------------------------------------

def run_smooth(config: RunConfig, *, svg: bool = False) -> int:
    directory = config.output_root() / "smooth"
    simulator = simulator_for(config)
    bundle = simulator.simulate(smooth_data(config), T=config.grid.T)
    report = energy_ledger(bundle)
    export_bundle(bundle, directory, report=report)
    _emit_ledger_chart(report, directory, svg)
    limit = config.tolerances.energy_slack * report.initial
    ok = report.max_abs_slack <= limit
    write_json(
        {
            "scenario": "smooth",
            "E0": report.initial,
            "max_abs_slack": report.max_abs_slack,
            "slack_limit": limit,
            "passed": ok,
        },
        directory / "run.json",
    )
    logger.info("smooth run: max |slack| %.3e (limit %.3e)", report.max_abs_slack, limit)
    return EXIT_OK if ok else EXIT_FAILED


def _blowup_run(config: RunConfig, epsilon: float, directory: Path, *, svg: bool) -> dict[str, Any]:
    simulator = simulator_for(config)
    family = config.blowup.family(epsilon)
    bundle, report = simulator.blowup(
        family, T=config.grid.T, nodes_per_bump=config.grid.nodes_per_bump
    )
    ledger = energy_ledger(bundle)
    export_bundle(bundle, directory, report=ledger)
    trace = trace_forward_characteristic(bundle, 0.0, t_end=report.t_star or config.grid.T)
    export_blowup(report, trace, directory)
    _emit_ledger_chart(ledger, directory, svg)
    if svg:
        write_svg(trace.frame, ["S", "R"], directory / "gamma.svg")
    return {
        "epsilon": epsilon,
        "E0": ledger.initial,
        "J_sup": report.J_sup,
        "detected": report.detected,
        "t_star": report.t_star,
        "x_star": report.x_star,
        "theta_x_peak": report.theta_x_peak,
        "energy_inequality": ledger.inequality_holds(config.tolerances.energy_slack),
        "one_sided": report.one_sided,
    }


def run_blowup(config: RunConfig, *, svg: bool = False) -> int:
    directory = config.output_root() / "blowup"
    row = _blowup_run(config, config.blowup.epsilon, directory, svg=svg)
    ok = bool(row["detected"] and row["t_star"] < 1.0 and row["energy_inequality"])
    write_json({"scenario": "blowup", **row, "passed": ok}, directory / "run.json")
    return EXIT_OK if ok else EXIT_FAILED


def sweep_member(payload: dict[str, Any], epsilon: float) -> dict[str, Any]:
    """Run one sweep member; failures are returned in the ``error`` column."""

    config = RunConfig.model_validate(payload)
    directory = config.output_root() / "sweep" / f"eps_{epsilon:g}"
    try:
        row = _blowup_run(config, epsilon, directory, svg=False)
    except (NematicFlowError, ValueError) as exc:
        logger.error("sweep member eps=%g failed: %s", epsilon, exc)
        return {"epsilon": epsilon, "error": str(exc)}
    return {**row, "error": None}


def run_sweep(config: RunConfig, *, svg: bool = False) -> int:
    epsilons = sorted(set(config.epsilons), reverse=True)
    if len(epsilons) < 2:
        raise ConfigError("epsilons", "a sweep needs at least two distinct values")
    payload = config.model_dump(mode="json")
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(sweep_member, [payload] * len(epsilons), epsilons))
    else:
        rows = [sweep_member(payload, epsilon) for epsilon in epsilons]

    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS).sort_values(
        "epsilon", ascending=False, ignore_index=True
    )
    ok_rows = frame[frame["error"].isna() & frame["detected"].eq(True)]
    summary: dict[str, Any] = {
        "scenario": "sweep",
        "members": len(frame),
        "failed": int(frame["error"].notna().sum()),
    }

    frame["t_pred"] = np.nan
    if len(ok_rows) >= 1:
        fit = fit_flux_constant(ok_rows["epsilon"].to_numpy(), ok_rows["J_sup"].to_numpy())
        coarsest = ok_rows.iloc[0]
        constants = family_constants(config.params, config.blowup.family(float(coarsest["epsilon"])))
        k3 = fit_time_constant(
            float(coarsest["t_star"]), float(coarsest["epsilon"]), constants.C_U, constants.dc_star
        )
        frame["t_pred"] = [
            predicted_blowup_time(k3, eps, constants.C_U, constants.dc_star) for eps in frame["epsilon"]
        ]
        summary.update(k1=fit.k1, k1_lsq=fit.k1_lsq, k1_residual=fit.residual, k3=k3)
    if frame["E0"].notna().sum() >= 2:
        valid = frame[frame["E0"].notna()]
        slope, _ = np.polyfit(np.log(valid["epsilon"]), np.log(valid["E0"]), 1)
        summary["energy_slope"] = float(slope)

    directory = config.output_root() / "sweep"
    write_frame_csv(frame, directory / "sweep.csv")
    t_star = frame["t_star"].dropna()
    ok = summary["failed"] == 0 and len(t_star) == len(frame) and bool((t_star < 1.0).all())
    summary["passed"] = ok
    write_json(summary, directory / "sweep.json")
    if svg and len(ok_rows):
        write_svg(frame, ["t_star", "t_pred"], directory / "sweep.svg", x="epsilon")
    return EXIT_OK if ok else EXIT_FAILED


def _check(name: str, value: float, limit: float) -> dict[str, Any]:
    ok = bool(math.isfinite(value) and value <= limit)
    if not ok:
        logger.warning("check %s failed: %.3e > %.3e", name, value, limit)
    return {"check": name, "value": float(value), "limit": float(limit), "passed": ok}


def run_validate(config: RunConfig, *, svg: bool = False) -> int:
    tol = config.tolerances
    params = config.params
    checks = [_check("material", float(len(validate(params).violations)), 0.0)]

    x = uniform_grid(-4.0, 4.0, 801)
    dx = float(x[1] - x[0])
    mass = max(abs(float(np.sum(convolution_stencil(tau, dx))) - 1.0) for tau in (1e-5, 1e-3, 0.1))
    checks.append(_check("kernel_mass", mass, tol.kernel_mass))
    row = np.exp(-(x**2) / 0.1)
    twice = heat_propagate(heat_propagate(row, 0.01, dx), 0.02, dx)
    once = heat_propagate(row, 0.03, dx)
    checks.append(_check("semigroup", float(np.max(np.abs(twice - once))), tol.semigroup))

    simulator = simulator_for(config)
    data = smooth_data(config)
    T = config.grid.T
    bundle = simulator.simulate(data, T=T)
    report = energy_ledger(bundle)
    slack_limit = tol.energy_slack * initial_energy(data, params)
    checks.append(_check("energy_slack", report.max_abs_slack, slack_limit))
    checks.append(_check("heat_identity", heat_identity_residual(bundle), tol.heat_identity))
    checks.append(_check("weak_form", weak_form_residual(bundle).relative, tol.weak_form))
    flux = FluxField.from_values(bundle.x, bundle.t, bundle.J)
    dilation = check_pq_bounds(bundle.state, flux.norms(tol.holder_exponent, seed=config.seed).combined)
    checks.append(_check("dilation_bound", 0.0 if dilation.within else 1.0, 0.0))

    reference = simulator.simulate(data, T=T, method="finite-difference")
    when = min(0.5, T)
    theta_fd = np.interp(bundle.x, reference.x, reference.theta[reference.row(when)])
    error = space_l2((bundle.theta[bundle.row(when)] - theta_fd)[None, :], bundle.x)[0]
    checks.append(_check("oracle_l2", float(error), tol.oracle_l2))

    detection = detect_blowup(bundle, params, config.blowup.family(), t_limit=T)
    checks.append(_check("smooth_no_blowup", 1.0 if detection.detected else 0.0, 0.0))

    directory = config.output_root() / "validate"
    frame = pd.DataFrame(checks)
    write_frame_csv(frame, directory / "checks.csv")
    export_bundle(bundle, directory, report=report)
    _emit_ledger_chart(report, directory, svg)
    passed = bool(frame["passed"].all())
    write_json({"scenario": "validate", "passed": passed, "checks": checks}, directory / "validate.json")
    logger.info("validate: %d/%d checks passed", int(frame["passed"].sum()), len(frame))
    return EXIT_OK if passed else EXIT_FAILED


SCENARIOS = {
    "smooth": run_smooth,
    "blowup": run_blowup,
    "sweep": run_sweep,
    "validate": run_validate,
}


def run(config: RunConfig, *, svg: bool = False) -> int:
    """Execute ``config.scenario`` and return the exit status."""

    return SCENARIOS[config.scenario](config, svg=svg)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if args.command == "sweep" and args.epsilon is not None and len(set(args.epsilon)) < 2:
        parser.error("sweep needs at least two distinct --epsilon values")
    try:
        config = load_config(args.config, _overrides(args))
        return run(config, svg=args.svg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NematicFlowError as exc:
        logger.error("%s", exc)
        return EXIT_FAILED


__all__ = [
    "COMMANDS",
    "EXIT_FAILED",
    "EXIT_OK",
    "EXIT_USAGE",
    "SCENARIOS",
    "build_parser",
    "main",
    "run",
    "run_blowup",
    "run_smooth",
    "run_sweep",
    "run_validate",
    "simulator_for",
    "smooth_data",
    "sweep_member",
    "write_svg",
]
