"""Run configuration: TOML files validated by pydantic models."""

from __future__ import annotations

import math
import os
import tomllib
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .core.charsolver import SINGULAR_TOLERANCE
from .core.errors import ConfigError
from .core.model import speed_bounds
from .core.types import BlowupFamily, FixedPointConfig, LeslieParams, Scenario

#: Environment variable naming the default output root.
OUTPUT_ROOT_ENV = "NEMATICFLOW_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = Path("runs")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class MaterialConfig(_Section):
    """``[material]``; the Leslie coefficients default to the ``g = h = 1`` set."""

    alpha1: float = 0.0
    alpha2: float = -1.0
    alpha3: float = 1.0
    alpha4: float = 1.0
    alpha5: float = 0.0
    alpha6: float = 0.0
    K1: float = Field(gt=0.0)
    K3: float = Field(gt=0.0)
    gamma1: float | None = None
    gamma2: float | None = None
    rho: float = Field(default=1.0, gt=0.0)
    nu: float = Field(default=1.0, gt=0.0)
    a: float = 0.0

    @model_validator(mode="after")
    def _consistent_gammas(self) -> "MaterialConfig":
        if self.gamma1 is not None and not math.isclose(
            self.gamma1, self.alpha3 - self.alpha2, rel_tol=0.0, abs_tol=1e-12
        ):
            raise ValueError("gamma1 must equal alpha3 - alpha2")
        if self.gamma2 is not None and not math.isclose(
            self.gamma2, self.alpha6 - self.alpha5, rel_tol=0.0, abs_tol=1e-12
        ):
            raise ValueError("gamma2 must equal alpha6 - alpha5")
        return self

    def to_params(self) -> LeslieParams:
        return LeslieParams(
            alpha1=self.alpha1,
            alpha2=self.alpha2,
            alpha3=self.alpha3,
            alpha4=self.alpha4,
            alpha5=self.alpha5,
            alpha6=self.alpha6,
            K1=self.K1,
            K3=self.K3,
            gamma1=self.gamma1,
            gamma2=self.gamma2,
            rho=self.rho,
            nu=self.nu,
            pressure_gradient=self.a,
        )


class BlowupConfig(_Section):
    """``[blowup]``; ``M = None`` picks 1.2 times the cusp threshold."""

    epsilon: float = Field(default=0.01, gt=0.0, lt=1.0)
    theta_star: float = math.pi / 4
    M: float | None = Field(default=40.0, gt=0.0)

    def family(self, epsilon: float | None = None) -> BlowupFamily:
        return BlowupFamily(
            epsilon=self.epsilon if epsilon is None else epsilon,
            theta_star=self.theta_star,
            steepness=self.M,
        )


class GridConfig(_Section):
    nodes_per_bump: int = Field(default=64, gt=1)
    lattice_nodes: int = Field(default=1024, gt=1)
    nx: int = Field(default=1025, gt=2)
    nt: int = Field(default=101, gt=1)
    T: float = Field(default=1.0, gt=0.0)


class SolverConfig(_Section):
    slab_length: float = Field(default=0.1, gt=0.0)
    max_iterations: int = Field(default=30, gt=0)
    tolerance: float = Field(default=1e-5, gt=0.0)
    relaxation: float = Field(default=0.5, gt=0.0, le=1.0)
    max_halvings: int = Field(default=4, ge=0)
    probe_halved_slabs: bool = False

    def to_fixed_point(self, holder_exponent: float) -> FixedPointConfig:
        return FixedPointConfig(
            slab_length=self.slab_length,
            max_iterations=self.max_iterations,
            tolerance=self.tolerance,
            relaxation=self.relaxation,
            max_halvings=self.max_halvings,
            holder_exponent=holder_exponent,
            probe_halved_slabs=self.probe_halved_slabs,
        )


class TolerancesConfig(_Section):
    """``[tolerances]``: every threshold used by the checks of ``validate``."""

    singular: float = Field(default=SINGULAR_TOLERANCE, gt=0.0)
    kernel_mass: float = Field(default=1e-12, gt=0.0)
    semigroup: float = Field(default=1e-8, gt=0.0)
    gradient_cap: float = Field(default=1e2, gt=0.0)
    energy_slack: float = Field(default=1e-3, gt=0.0)
    oracle_l2: float = Field(default=1e-3, gt=0.0)
    heat_identity: float = Field(default=5e-2, gt=0.0)
    weak_form: float = Field(default=5e-2, gt=0.0)
    r_fiber: float = Field(default=10.0, gt=0.0)
    holder_exponent: float = Field(default=0.2, gt=0.0, lt=0.25)


class RunConfig(_Section):
    """A complete run: scenario, material, discretisation and output location."""

    scenario: Scenario = "smooth"
    seed: int = 0
    output: Path | None = None
    epsilons: list[float] = Field(default_factory=lambda: [0.04, 0.02, 0.01])
    workers: int = Field(default=1, gt=0)
    material: MaterialConfig = Field(default_factory=lambda: MaterialConfig(K1=1.0, K3=4.0))
    blowup: BlowupConfig = Field(default_factory=BlowupConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    tolerances: TolerancesConfig = Field(default_factory=TolerancesConfig)

    @model_validator(mode="after")
    def _epsilons_below_min_speed(self) -> "RunConfig":
        C_L, _ = speed_bounds(self.params)
        for key, value in [("blowup.epsilon", self.blowup.epsilon)] + [
            ("epsilons", value) for value in self.epsilons
        ]:
            if not 0.0 < value < C_L:
                raise ValueError(f"{key} = {value:g} must lie in (0, C_L) with C_L = {C_L:g}")
        return self

    @property
    def params(self) -> LeslieParams:
        return self.material.to_params()

    @property
    def fixed_point(self) -> FixedPointConfig:
        return self.solver.to_fixed_point(self.tolerances.holder_exponent)

    def output_root(self) -> Path:
        """``output`` when set, else ``$NEMATICFLOW_OUTPUT_ROOT``, else ``./runs``."""

        if self.output is not None:
            return self.output
        env = os.environ.get(OUTPUT_ROOT_ENV)
        return Path(env) if env else DEFAULT_OUTPUT_ROOT


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def build_config(raw: dict[str, Any], overrides: dict[str, Any] | None = None) -> RunConfig:
    """Validate a raw mapping, applying nested ``overrides`` on top.

    Raises:
        ConfigError: Naming the dotted key of the first invalid or missing entry.
    """

    payload = _merge(raw, overrides or {})
    try:
        return RunConfig.model_validate(payload)
    except ValidationError as exc:
        error = exc.errors()[0]
        key = ".".join(str(part) for part in error["loc"]) or "<root>"
        kind = error["type"]
        message = "missing required key" if kind == "missing" else error["msg"]
        raise ConfigError(key, message) from exc


def load_config(path: Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Read ``path`` (TOML) when given and validate it with ``overrides`` applied.

    Raises:
        ConfigError: If the file cannot be read or parsed, or fails validation.
    """

    raw: dict[str, Any] = {}
    if path is not None:
        try:
            with Path(path).open("rb") as handle:
                raw = tomllib.load(handle)
        except FileNotFoundError as exc:
            raise ConfigError("config", f"file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"invalid TOML in {path}: {exc}") from exc
    return build_config(raw, overrides)


__all__ = [
    "DEFAULT_OUTPUT_ROOT",
    "OUTPUT_ROOT_ENV",
    "BlowupConfig",
    "GridConfig",
    "MaterialConfig",
    "RunConfig",
    "SolverConfig",
    "TolerancesConfig",
    "build_config",
    "load_config",
]
