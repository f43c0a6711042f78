"""
convergence: observed order of the solver against the Cole-Hopf solution
under simultaneous refinement of dx and dt.
"""

import math
import os
from dataclasses import replace

import numpy as np

from core.config import ExperimentConfig
from core.errors import ToleranceViolation
from core.exact import cole_hopf_solution
from core.solver import SolverConfig, solve
from utils.logging import FileManager, RunLogger

LEVELS = 3


def refinement_levels(config: ExperimentConfig, levels: int = LEVELS):
    """(grid, solver config) at dx, dx/2, dx/4, ... with dt scaled alongside."""
    runs = []
    for level in range(levels):
        factor = 2 ** level
        grid = replace(config.grid, dx=config.grid.dx / factor).build()
        base = config.solver
        solver = SolverConfig(
            dt=base.dt / factor,
            T=base.T,
            scheme=base.scheme,
            bc=base.bc,
            snapshot_times=(base.T,),
            boundary_guard_tol=base.boundary_guard_tol,
            guard_fraction=base.guard_fraction,
            guard_spread=base.guard_spread,
        )
        runs.append((grid, solver))
    return runs


def observed_orders(errors):
    """log2 of successive error ratios; None where either error is zero."""
    orders = [None]
    for coarse, fine in zip(errors[:-1], errors[1:]):
        orders.append(math.log2(coarse / fine) if coarse > 0 and fine > 0 else None)
    return orders


def run_convergence(config: ExperimentConfig, logger: RunLogger) -> dict:
    params = config.model
    quad = config.quadrature.build()
    T = config.solver.T
    rows, errors = [], []
    for grid, solver in refinement_levels(config):
        logger.log(f"convergence: dx={grid.dx:g}, dt={solver.dt:g}")
        trajectory = solve(config.initial, grid, solver, params, logger)
        t, phi = trajectory[-1]
        exact = config.initial.value(grid.x) if t == 0 else cole_hopf_solution(config.initial, grid.x, t, params, quad)
        error = float(np.max(np.abs(phi.values - exact)))
        errors.append(error)
        rows.append((grid.dx, solver.dt, error))
        logger.log(f"convergence: max |phi - phi_exact| at T={T:g}: {error:.3e}")

    orders = observed_orders(errors)
    FileManager.write_csv(
        os.path.join(config.output_dir, "convergence.csv"),
        ("dx", "dt", "max_abs_err", "order"),
        [row + ("nan" if order is None else order,) for row, order in zip(rows, orders)],
    )
    measured = [order for order in orders[1:] if order is not None]
    order = measured[-1] if measured else None
    low, high = config.tolerances.order_min, config.tolerances.order_max
    summary = {
        "command": "convergence",
        "c": params.c,
        "T": T,
        "max_abs_err": errors,
        "order": "undefined" if order is None else order,
        "order_min": low,
        "order_max": high,
    }
    FileManager.write_summary(config.output_dir, summary)
    if order is None:
        logger.log("convergence: order undefined (errors vanish at every level)")
        return summary
    logger.log(f"convergence: observed order {order:.3f}")
    if not low <= order <= high:
        raise ToleranceViolation(f"observed order {order:.3f} outside [{low:g}, {high:g}]")
    return summary
