"""
Finite-difference solver for the nonlinear phase equation on [-L, L].

    phi_t = phi_xx - c tanh(c x / 2) phi_x + phi_x^2

Diffusion is treated by Crank-Nicolson (banded solve), advection by
second-order upwinding and the quadratic term by centred differences, both
explicitly inside a two-stage predictor-corrector.
"""

import os
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_banded

from core.errors import (
    BoundaryContaminationError,
    CFLViolationError,
    ConfigValidationError,
    DomainGuardError,
    NonFiniteFieldError,
)
from core.exact import InitialCondition
from core.grid import Field, Grid
from core.kernels import ModelParams
from utils.logging import FileManager

IMEX_CN = "imex_cn"
EXPLICIT = "explicit"
SCHEMES = (IMEX_CN, EXPLICIT)

DIRICHLET_ZERO = "dirichlet_zero"
NEUMANN_ZERO = "neumann_zero"
BOUNDARY_CONDITIONS = (DIRICHLET_ZERO, NEUMANN_ZERO)

Trajectory = List[Tuple[float, Field]]


@dataclass(frozen=True)
class SolverConfig:
    """Time stepping, boundary treatment and snapshot schedule."""

    dt: float = 0.005
    T: float = 10.0
    scheme: str = IMEX_CN
    bc: str = DIRICHLET_ZERO
    snapshot_times: Tuple[float, ...] = field(default=())
    boundary_guard_tol: float = 1e-6
    guard_fraction: float = 0.05
    guard_spread: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigValidationError(f"time step must satisfy dt > 0, got dt={self.dt}")
        if not self.T >= 0:
            raise ConfigValidationError(f"final time must satisfy T >= 0, got T={self.T}")
        if self.scheme not in SCHEMES:
            raise ConfigValidationError(f"unknown scheme '{self.scheme}', expected one of {SCHEMES}")
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ConfigValidationError(f"unknown boundary condition '{self.bc}', expected one of {BOUNDARY_CONDITIONS}")
        times = tuple(float(t) for t in self.snapshot_times)
        if list(times) != sorted(times):
            raise ConfigValidationError("snapshot times must be sorted")
        if times and (times[0] < 0 or times[-1] > self.T + 1e-12):
            raise ConfigValidationError(f"snapshot times must lie in [0, T={self.T}]")
        object.__setattr__(self, "snapshot_times", times)

    @classmethod
    def every(cls, spacing: float, **kwargs) -> "SolverConfig":
        """Config with snapshots at 0, spacing, 2 spacing, ..., T."""
        T = kwargs.get("T", cls.T)
        count = int(round(T / spacing))
        times = tuple(round(k * spacing, 12) for k in range(count + 1))
        return cls(snapshot_times=times, **kwargs)

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    def check_cfl(self, grid: Grid, params: ModelParams):
        advective = grid.dx / (2.0 * params.c)
        if self.dt > advective * (1 + 1e-12):
            raise CFLViolationError(
                f"dt={self.dt} violates the advective CFL limit dt <= dx/(2c) = {advective:.6g}"
            )
        diffusive = grid.dx ** 2 / 2.0
        if self.scheme == EXPLICIT and self.dt > diffusive * (1 + 1e-12):
            raise CFLViolationError(
                f"dt={self.dt} violates the explicit diffusion limit dt <= dx^2/2 = {diffusive:.6g}"
            )

    def check_schedule(self):
        if abs(self.steps * self.dt - self.T) > 1e-9 * max(1.0, self.T):
            raise ConfigValidationError(f"T={self.T} is not a multiple of dt={self.dt}")
        for t in self.snapshot_times:
            if abs(round(t / self.dt) * self.dt - t) > 1e-9 * max(1.0, t):
                raise ConfigValidationError(f"snapshot time {t} is not a multiple of dt={self.dt}")


def required_half_width(T: float, params: ModelParams, spread: float) -> float:
    """Smallest L with L >= cT + 8 sqrt(spread (T+1))."""
    return params.c * T + 8.0 * np.sqrt(spread * (T + 1.0))


def check_domain_guard(grid: Grid, config: SolverConfig, params: ModelParams):
    needed = required_half_width(config.T, params, config.guard_spread)
    if grid.L < needed:
        raise DomainGuardError(
            f"domain too small: L={grid.L} < cT + 8 sqrt({config.guard_spread} (T+1)) = {needed:.6g}; "
            f"use a larger L or a shorter T"
        )


class PhaseStepper:
    """Advances phase fields on a fixed grid; tanh profile and matrices are built once."""

    def __init__(self, grid: Grid, config: SolverConfig, params: ModelParams):
        self.grid = grid
        self.config = config
        self.params = params
        self.dx = grid.dx
        self.velocity = params.c * np.tanh(0.5 * params.c * grid.x)
        self.dirichlet = config.bc == DIRICHLET_ZERO
        self._banded = self._crank_nicolson_matrix() if config.scheme == IMEX_CN else None

    def _crank_nicolson_matrix(self) -> np.ndarray:
        # (I - dt/2 D) in banded storage; Dirichlet keeps only interior unknowns
        r = self.config.dt / self.dx ** 2
        size = self.grid.nx - 2 if self.dirichlet else self.grid.nx
        banded = np.zeros((3, size))
        banded[0, 1:] = -0.5 * r
        banded[1, :] = 1.0 + r
        banded[2, :-1] = -0.5 * r
        if not self.dirichlet:
            banded[0, 1] = -r
            banded[2, -2] = -r
        return banded

    def _padded(self, values: np.ndarray) -> np.ndarray:
        mode = "constant" if self.dirichlet else "reflect"
        return np.pad(values, 2, mode=mode)

    def diffusion(self, values: np.ndarray) -> np.ndarray:
        p = self._padded(values)
        out = (p[1:-3] - 2.0 * p[2:-2] + p[3:-1]) / self.dx ** 2
        if self.dirichlet:
            out[0] = out[-1] = 0.0
        return out

    def explicit_terms(self, values: np.ndarray) -> np.ndarray:
        """-c tanh(cx/2) phi_x (second-order upwind) + phi_x^2 (centred)."""
        p = self._padded(values)
        backward = (3.0 * p[2:-2] - 4.0 * p[1:-3] + p[:-4]) / (2.0 * self.dx)
        forward = (-3.0 * p[2:-2] + 4.0 * p[3:-1] - p[4:]) / (2.0 * self.dx)
        upwind = np.where(self.velocity > 0.0, backward, forward)
        centred = (p[3:-1] - p[1:-3]) / (2.0 * self.dx)
        out = -self.velocity * upwind + centred ** 2
        if self.dirichlet:
            out[0] = out[-1] = 0.0
        return out

    def _implicit_solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.dirichlet:
            out = np.zeros_like(rhs)
            out[1:-1] = solve_banded((1, 1), self._banded, rhs[1:-1])
            return out
        return solve_banded((1, 1), self._banded, rhs)

    def advance(self, values: np.ndarray) -> np.ndarray:
        dt = self.config.dt
        explicit_now = self.explicit_terms(values)
        if self.config.scheme == IMEX_CN:
            base = values + 0.5 * dt * self.diffusion(values)
            predictor = self._implicit_solve(base + dt * explicit_now)
            corrected = base + 0.5 * dt * (explicit_now + self.explicit_terms(predictor))
            return self._implicit_solve(corrected)
        rate_now = self.diffusion(values) + explicit_now
        predictor = values + dt * rate_now
        rate_next = self.diffusion(predictor) + self.explicit_terms(predictor)
        return values + 0.5 * dt * (rate_now + rate_next)

    def step(self, phi: Field, t: float) -> Field:
        values = self.advance(phi.values)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            index = int(bad[0])
            raise NonFiniteFieldError(
                f"non-finite value after step at t={t + self.config.dt:.6g}, index {index} "
                f"(x={self.grid.x[index]:.6g})",
                index=index,
            )
        return Field(self.grid, values)


def step(phi: Field, t: float, config: SolverConfig, params: ModelParams) -> Field:
    """Advance phi from t to t + dt."""
    config.check_cfl(phi.grid, params)
    return PhaseStepper(phi.grid, config, params).step(phi, t)


def solve(
    phi0: InitialCondition,
    grid: Grid,
    config: SolverConfig,
    params: ModelParams,
    logger=None,
) -> Trajectory:
    """Integrate from t=0 to T; returns the requested (t, Field) snapshots."""
    config.check_cfl(grid, params)
    config.check_schedule()
    if config.bc == DIRICHLET_ZERO:
        check_domain_guard(grid, config, params)

    stepper = PhaseStepper(grid, config, params)
    outer = grid.outer_mask(config.guard_fraction)
    snapshot_steps = {int(round(t / config.dt)): t for t in config.snapshot_times}

    phi = Field.sample(grid, phi0.value)
    if config.bc == DIRICHLET_ZERO:
        phi = Field(grid, np.where(np.abs(grid.x) >= grid.L, 0.0, phi.values))
    trajectory: Trajectory = []
    if 0 in snapshot_steps:
        trajectory.append((snapshot_steps[0], phi))

    report_every = max(1, config.steps // 10)
    for k in range(1, config.steps + 1):
        t_prev = (k - 1) * config.dt
        phi = stepper.step(phi, t_prev)
        if config.bc == DIRICHLET_ZERO:
            edge = phi.sup(outer)
            if edge > config.boundary_guard_tol:
                raise BoundaryContaminationError(
                    f"|phi| = {edge:.3g} on the outer {config.guard_fraction:.0%} of the domain at "
                    f"t={k * config.dt:.6g} exceeds {config.boundary_guard_tol:g}; increase L"
                )
        if k in snapshot_steps:
            trajectory.append((snapshot_steps[k], phi))
        if logger is not None and k % report_every == 0:
            logger.log(f"solver: t={k * config.dt:.4g} / {config.T:g}, max|phi|={phi.sup():.4g}")
    return trajectory


def export_snapshots(trajectory: Sequence[Tuple[float, Field]], directory: str) -> List[str]:
    """Write one `x,phi` CSV per snapshot plus manifest.json; returns written paths."""
    FileManager.ensure_directory_exists(directory)
    written, entries = [], []
    for index, (t, phi) in enumerate(trajectory):
        filename = f"snapshot_{index:04d}.csv"
        path = os.path.join(directory, filename)
        FileManager.write_csv(path, ("x", "phi"), zip(phi.grid.x, phi.values))
        written.append(path)
        entries.append({"t": t, "filename": filename})
    manifest = os.path.join(directory, "manifest.json")
    FileManager.write_json(manifest, {"snapshots": entries})
    written.append(manifest)
    return written
