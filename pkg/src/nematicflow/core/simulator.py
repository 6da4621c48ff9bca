"""Primary entry point for running Poiseuille-flow simulations."""

from __future__ import annotations

import math
from typing import Literal

from .charsolver import SINGULAR_TOLERANCE
from .coupled import (
    EnergyReport,
    SolutionBundle,
    energy_ledger,
    fd_reference_solve,
    fixed_point_solve,
)
from .initial_data import build_blowup_data, family_constants
from .model import require_valid, speed_bounds
from .singularity import BlowupReport, detect_blowup
from .types import BlowupFamily, FixedPointConfig, HeatQuadrature, InitialData, LeslieParams


class PoiseuilleSimulator:
    """Director/velocity solver bound to one parameter set and discretisation."""

    def __init__(
        self,
        params: LeslieParams,
        *,
        config: FixedPointConfig = FixedPointConfig(),
        quadrature: HeatQuadrature = HeatQuadrature(),
        nx: int = 1025,
        nt: int = 101,
        lattice_nodes: int = 1024,
        singular_tolerance: float = SINGULAR_TOLERANCE,
    ) -> None:
        """Instantiate the simulator with shared solver settings.

        Args:
            params: Material constants; checked for admissibility.
            config: Fixed-point slab settings.
            quadrature: Heat-kernel discretisation.
            nx: Points of the output ``x`` grid.
            nt: Time levels on ``[0, T]``.
            lattice_nodes: Intervals along the initial curve.
            singular_tolerance: Threshold on ``1 + cos`` flagging blown-up nodes.
        """
        require_valid(params)
        self.params = params
        self.config = config
        self.quadrature = quadrature
        self.nx = nx
        self.nt = nt
        self.lattice_nodes = lattice_nodes
        self.singular_tolerance = singular_tolerance

    def simulate(
        self,
        data: InitialData,
        *,
        T: float,
        method: Literal["characteristic", "finite-difference"] = "characteristic",
        cfl: float = 0.5,
    ) -> SolutionBundle:
        """Run one coupled simulation.

        Args:
            data: Initial data.
            T: Final time.
            method: ``"characteristic"`` for the fixed-point solver or
                ``"finite-difference"`` for the reference scheme.
            cfl: Ratio ``C_U dt / dx`` of the reference scheme.

        Returns:
            The solution bundle on ``[0, T]``.
        """

        if method == "characteristic":
            return fixed_point_solve(
                data,
                self.params,
                self.config,
                T,
                nx=self.nx,
                nt=self.nt,
                lattice_nodes=self.lattice_nodes,
                quadrature=self.quadrature,
                singular_tolerance=self.singular_tolerance,
            )
        if method == "finite-difference":
            dx = float(data.x[-1] - data.x[0]) / (self.nx - 1)
            _, C_U = speed_bounds(self.params)
            steps = max(self.nt - 1, int(round(T * C_U / (cfl * dx))))
            store_every = max(1, math.ceil(steps / (self.nt - 1)))
            steps = store_every * (self.nt - 1)
            return fd_reference_solve(
                data, self.params, T, dx, T / steps, store_every=store_every
            )
        raise ValueError(f"unknown method {method!r}")

    def blowup(
        self,
        family: BlowupFamily,
        *,
        T: float = 1.0,
        nodes_per_bump: int = 64,
        k3: float | None = None,
    ) -> tuple[SolutionBundle, BlowupReport]:
        """Build concentrated bump data, solve to ``T`` and look for the cusp."""

        data = build_blowup_data(self.params, family, T_max=T, nodes_per_bump=nodes_per_bump)
        bundle = self.simulate(data, T=T)
        report = detect_blowup(
            bundle,
            self.params,
            family,
            constants=family_constants(self.params, family),
            k3=k3,
            t_limit=T,
        )
        return bundle, report

    def ledger(self, bundle: SolutionBundle) -> EnergyReport:
        return energy_ledger(bundle, self.params)


__all__ = ["PoiseuilleSimulator"]
