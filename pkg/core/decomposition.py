"""
Decomposition of a computed phase field into a moving plateau and a remainder.

    phi(x,t) = phi*(x,t,p(t)) + v(x,t),   phi* = log(1 + p B(x,t))

p(0) is fixed by requiring int psi v(.,0) dy = 0, and p(t) then follows the
implicit scalar ODE

    pdot = (1 + c p/4) int psi (v_y^2 + N) dy,
    N    = 2 p v_x B_x/(1 + pB) + pdot (B/(1 + cp/4) - B/(1 + pB)),

which is affine in pdot and is solved in closed form. The remainder is
measured against the moving-Gaussian templates theta1, theta2 through the
running suprema h1 and h2.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import make_interp_spline
from scipy.optimize import bisect

from core.errors import (
    ConfigValidationError,
    DomainViolationError,
    IllConditionedError,
    SmallAmplitudeError,
)
from core.exact import InitialCondition, phi_star
from core.grid import Field, Grid
from core.kernels import (
    ModelParams,
    adjoint_eigenfunction,
    adjoint_window,
    bfield,
    bfield_x,
    greens_windows,
    plateau_window,
)
from core.quadrature import QuadratureSpec, integrate_grid, integrate_line

NEWTON = "newton"
BISECTION = "bisection"

# Largest snapshot spacing the p integration accepts.
MAX_SNAPSHOT_SPACING = 0.1
P0_TOLERANCE = 1e-10
# Templates below this are treated as underflowed and skipped.
TEMPLATE_FLOOR = 1e-280


@dataclass(frozen=True)
class TemplateParams:
    """Decay exponent gamma and Gaussian spread M of the templates."""

    gamma: float = 0.45
    M: float = 64.0

    def __post_init__(self):
        if not 0.0 < self.gamma < 0.5:
            raise ConfigValidationError(f"template exponent must satisfy 0 < gamma < 1/2, got gamma={self.gamma}")
        if not self.M >= 8.0:
            raise ConfigValidationError(f"template spread must satisfy M >= 8, got M={self.M}")


def theta1(x, t, tparams: TemplateParams, params: ModelParams = ModelParams()):
    """(1+t)^-gamma (exp(-(x-ct)^2/M(t+1)) + exp(-(x+ct)^2/M(t+1)))."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ConfigValidationError("templates are defined for t >= 0 only")
    c = params.c
    spread = tparams.M * (t + 1.0)
    gaussians = np.exp(-(x - c * t) ** 2 / spread) + np.exp(-(x + c * t) ** 2 / spread)
    return (1.0 + t) ** (-tparams.gamma) * gaussians


def theta2(x, t, tparams: TemplateParams, params: ModelParams = ModelParams()):
    return theta1(x, t, tparams, params) / np.sqrt(1.0 + np.asarray(t, dtype=float))


@dataclass(frozen=True)
class DecompositionState:
    """Everything recorded at the stored snapshot times of one run."""

    grid: Grid
    times: Tuple[float, ...]
    p: Tuple[float, ...]
    pdot: Tuple[float, ...]
    v_fields: Tuple[Field, ...]
    vx_fields: Tuple[Field, ...]
    h1: Tuple[float, ...]
    h2: Tuple[float, ...]
    sup_v_ratio: Tuple[float, ...]
    sup_vx_ratio: Tuple[float, ...]
    psi_forcing: Tuple[float, ...]
    psi_v: Tuple[float, ...]
    skipped_samples: int = 0

    @property
    def p0(self) -> float:
        return self.p[0]

    def rows(self) -> List[Tuple[float, ...]]:
        """Rows of the time-series table t,p,pdot,h1,h2,sup_v_ratio,sup_vx_ratio."""
        return list(zip(self.times, self.p, self.pdot, self.h1, self.h2, self.sup_v_ratio, self.sup_vx_ratio))


def _bfield_windows(params: ModelParams):
    # B(y, 0) = G(y, 0, 1): Gaussians at y = +-c joined by the plateau
    return greens_windows(0.0, 1.0, params) + (plateau_window(1.0, params),)


def p_max(params: ModelParams) -> float:
    """Bracket half-width keeping 1 + p B(y,0) > 0 for |p| <= p_max."""
    reach = params.c + 16.0 + 40.0 / params.c
    y = np.linspace(-reach, reach, 8001)
    return 0.99 / float(np.max(bfield(y, 0.0, params)))


def normalization_residual(p: float, phi0: InitialCondition, params: ModelParams, quad: QuadratureSpec) -> float:
    """F(p) = int psi(y)(phi_0(y) - log(1 + p B(y,0))) dy."""
    spec = quad.around(*_bfield_windows(params), *phi0.windows())
    return float(integrate_line(
        lambda y: adjoint_eigenfunction(y, params) * (phi0.value(y) - np.log1p(p * bfield(y, 0.0, params))),
        spec,
    ))


def _normalization_slope(p: float, params: ModelParams, quad: QuadratureSpec) -> float:
    spec = quad.around(*_bfield_windows(params))

    def integrand(y):
        b = bfield(y, 0.0, params)
        return adjoint_eigenfunction(y, params) * b / (1.0 + p * b)

    return -float(integrate_line(integrand, spec))


def solve_p0(
    phi0: InitialCondition,
    params: ModelParams,
    quad: QuadratureSpec,
    method: str = NEWTON,
    max_iterations: int = 50,
) -> float:
    """Root of F(p) = 0 fixing the initial split of phi_0.

    Newton's method from p = 0 with the analytic slope; falls back to
    bisection on [-p_max, p_max] when Newton leaves the bracket or stalls.
    """
    if method not in (NEWTON, BISECTION):
        raise ConfigValidationError(f"unknown root method '{method}', expected '{NEWTON}' or '{BISECTION}'")
    bound = p_max(params)

    def residual(p):
        return normalization_residual(p, phi0, params, quad)

    if method == NEWTON:
        p = 0.0
        value = residual(p)
        for _ in range(max_iterations):
            if abs(value) <= 1e-2 * P0_TOLERANCE:
                return p
            step = value / _normalization_slope(p, params, quad)
            p -= step
            if abs(p) >= bound:
                break
            value = residual(p)
            if abs(step) <= 1e-13 * max(1.0, abs(p)):
                if abs(value) <= P0_TOLERANCE:
                    return p
                break

    low, high = residual(-bound), residual(bound)
    if low == 0.0:
        return -bound
    if high == 0.0:
        return bound
    if np.sign(low) == np.sign(high):
        raise SmallAmplitudeError(
            f"initial data outside small-amplitude regime: no root of the normalization on "
            f"[-{bound:.6g}, {bound:.6g}] (F = {low:.3g}, {high:.3g})"
        )
    return float(bisect(residual, -bound, bound, xtol=1e-15, rtol=4.5e-16, maxiter=200))


def _denominators(x, t, p: float, params: ModelParams):
    b = bfield(x, t, params)
    local = 1.0 + p * b
    if np.any(local <= 0.0):
        raise DomainViolationError(f"1 + p B(x,t) <= 0 for p={p:.6g} at t={t:.6g}")
    plateau_level = 1.0 + 0.25 * params.c * p
    if plateau_level <= 0.0:
        raise DomainViolationError(f"1 + c p/4 <= 0 for p={p:.6g}")
    return b, local, plateau_level


def nonlinearity_parts(x, t, p: float, vx, params: ModelParams) -> Tuple[np.ndarray, np.ndarray]:
    """(N0, N1) with N = N0 + pdot N1."""
    b, local, plateau_level = _denominators(x, t, p, params)
    n0 = 2.0 * p * np.asarray(vx, dtype=float) * bfield_x(x, t, params) / local
    n1 = b / plateau_level - b / local
    return n0, n1


def nonlinearity_N(x, t, p: float, pdot: float, vx, params: ModelParams):
    n0, n1 = nonlinearity_parts(x, t, p, vx, params)
    return n0 + pdot * n1


def _forcing_integrals(p: float, vx_field: Field, t: float, params: ModelParams):
    x = vx_field.grid.x
    psi = adjoint_eigenfunction(x, params)
    n0, n1 = nonlinearity_parts(x, t, p, vx_field.values, params)
    weight = 1.0 + 0.25 * params.c * p
    a = weight * integrate_grid(Field(vx_field.grid, psi * (vx_field.values ** 2 + n0)))
    k = weight * integrate_grid(Field(vx_field.grid, psi * n1))
    return a, k


def pdot_solve(p: float, v_field: Field, vx_field: Field, t: float, params: ModelParams) -> float:
    """Closed-form solution pdot = A / (1 - K) of the affine implicit relation."""
    if v_field.grid != vx_field.grid:
        raise ConfigValidationError("v and v_x must share a grid")
    a, k = _forcing_integrals(p, vx_field, t, params)
    if abs(1.0 - k) < 0.5:
        raise IllConditionedError(f"implicit ODE ill-conditioned: |1 - K| = {abs(1.0 - k):.3g} at t={t:.6g}")
    return a / (1.0 - k)


def pdot_fixed_point(
    p: float,
    v_field: Field,
    vx_field: Field,
    t: float,
    params: ModelParams,
    tol: float = 1e-15,
    max_iterations: int = 200,
) -> float:
    """Same pdot by iterating pdot <- (1 + cp/4) int psi (v_y^2 + N(pdot)) dy."""
    a, k = _forcing_integrals(p, vx_field, t, params)
    pdot = 0.0
    for _ in range(max_iterations):
        updated = a + k * pdot
        if abs(updated - pdot) <= tol * max(1.0, abs(updated)):
            return updated
        pdot = updated
    raise IllConditionedError(f"pdot fixed point did not converge (K = {k:.3g})")


def _template_ratios(v: Field, vx: Field, t: float, tparams: TemplateParams, params: ModelParams):
    x = v.grid.x
    t1 = theta1(x, t, tparams, params)
    t2 = theta2(x, t, tparams, params)
    usable = (t1 > TEMPLATE_FLOOR) & (t2 > TEMPLATE_FLOOR)
    r1 = np.abs(v.values[usable]) / t1[usable]
    r2 = np.abs(vx.values[usable]) / t2[usable]
    if not r1.size:
        return 0.0, 0.0, 0.0, int(x.size)
    return float(np.max(r1)), float(np.max(r2)), float(np.max(r1 + r2)), int(x.size - r1.size)


def _check_schedule(times: Sequence[float]):
    if not times:
        raise ConfigValidationError("decomposition needs at least one snapshot")
    if abs(times[0]) > 1e-12:
        raise ConfigValidationError(f"first snapshot must be at t=0, got t={times[0]}")
    gaps = np.diff(times)
    if np.any(gaps <= 0):
        raise ConfigValidationError("snapshot times must be strictly increasing")
    if gaps.size and np.max(gaps) > MAX_SNAPSHOT_SPACING + 1e-12:
        raise ConfigValidationError(
            f"snapshot spacing {np.max(gaps):.6g} exceeds {MAX_SNAPSHOT_SPACING} needed to integrate p"
        )


def evolve_decomposition(
    trajectory: Sequence[Tuple[float, Field]],
    phi0: InitialCondition,
    params: ModelParams,
    tparams: TemplateParams,
    quad: QuadratureSpec,
    logger=None,
) -> DecompositionState:
    """Split a solver trajectory into phi* + v and integrate p by classical RK4.

    Between snapshots phi is taken from a cubic interpolating spline in time
    and v is recomputed at each stage from that phi and the stage's p.
    """
    times = [float(t) for t, _ in trajectory]
    _check_schedule(times)
    grid = trajectory[0][1].grid
    x = grid.x
    values = np.stack([phi.values for _, phi in trajectory])
    spline = make_interp_spline(times, values, k=min(3, len(times) - 1), axis=0) if len(times) > 1 else None

    def split(phi_values: np.ndarray, t: float, p: float) -> Tuple[Field, Field]:
        v = Field(grid, phi_values - phi_star(x, t, p, params))
        return v, v.derivative()

    def rate(t: float, p: float) -> float:
        v, vx = split(spline(t), t, p)
        return pdot_solve(p, v, vx, t, params)

    p_values = [solve_p0(phi0, params, quad)]
    if logger is not None:
        logger.log(f"decomposition: p0 = {p_values[0]:.10g}")
    for i in range(len(times) - 1):
        t, h, p = times[i], times[i + 1] - times[i], p_values[-1]
        k1 = rate(t, p)
        k2 = rate(t + 0.5 * h, p + 0.5 * h * k1)
        k3 = rate(t + 0.5 * h, p + 0.5 * h * k2)
        k4 = rate(t + h, p + h * k3)
        p_values.append(p + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0)

    psi = adjoint_eigenfunction(x, params)
    record = {key: [] for key in ("pdot", "v", "vx", "h1", "h2", "r1", "r2", "forcing", "psi_v")}
    h1 = h2 = 0.0
    skipped = 0
    report_every = max(1, len(times) // 10)
    for i, ((t, phi), p) in enumerate(zip(trajectory, p_values)):
        v, vx = split(phi.values, t, p)
        pdot = pdot_solve(p, v, vx, t, params)
        r1, r2, combined, missed = _template_ratios(v, vx, t, tparams, params)
        skipped += missed
        h1 = max(h1, combined)
        h2 = max(h2, abs(pdot) * np.exp(params.c ** 2 * t / tparams.M))
        forcing = vx.values ** 2 + nonlinearity_N(x, t, p, pdot, vx.values, params)
        record["pdot"].append(pdot)
        record["v"].append(v)
        record["vx"].append(vx)
        record["h1"].append(h1)
        record["h2"].append(float(h2))
        record["r1"].append(r1)
        record["r2"].append(r2)
        record["forcing"].append(integrate_grid(Field(grid, psi * forcing)))
        record["psi_v"].append(integrate_grid(Field(grid, psi * v.values)))
        if logger is not None and (i + 1) % report_every == 0:
            logger.log(f"decomposition: t={t:.4g}, p={p:.8g}, pdot={pdot:.3g}, h1={h1:.4g}, h2={h2:.4g}")

    return DecompositionState(
        grid=grid,
        times=tuple(times),
        p=tuple(float(p) for p in p_values),
        pdot=tuple(record["pdot"]),
        v_fields=tuple(record["v"]),
        vx_fields=tuple(record["vx"]),
        h1=tuple(record["h1"]),
        h2=tuple(record["h2"]),
        sup_v_ratio=tuple(record["r1"]),
        sup_vx_ratio=tuple(record["r2"]),
        psi_forcing=tuple(record["forcing"]),
        psi_v=tuple(record["psi_v"]),
        skipped_samples=skipped,
    )


def forcing_field(state: DecompositionState, index: int, params: ModelParams) -> Field:
    """v_y^2 + N at the stored snapshot `index`."""
    t, p, pdot = state.times[index], state.p[index], state.pdot[index]
    vx = state.vx_fields[index].values
    return Field(state.grid, vx ** 2 + nonlinearity_N(state.grid.x, t, p, pdot, vx, params))


def p_identity_errors(state: DecompositionState, params: ModelParams) -> np.ndarray:
    """|log(1+cp(t)/4) - log(1+cp0/4) - (c/4) int_0^t int psi (v_y^2 + N) dy ds| at every stored t.

    The time integral is taken by Simpson's rule over the stored forcing
    integrals, independently of the Runge-Kutta steps that produced p.
    """
    c = params.c
    p = np.asarray(state.p)
    lhs = np.log1p(0.25 * c * p) - np.log1p(0.25 * c * p[0])
    if len(state.times) < 3:
        rhs = np.zeros_like(lhs)
        if len(state.times) == 2:
            rhs[1] = 0.125 * c * (state.times[1] - state.times[0]) * (state.psi_forcing[0] + state.psi_forcing[1])
        return np.abs(lhs - rhs)
    rhs = 0.25 * c * cumulative_simpson(np.asarray(state.psi_forcing), x=np.asarray(state.times), initial=0.0)
    return np.abs(lhs - rhs)


def p_identity_residual(state: DecompositionState, params: ModelParams) -> float:
    return float(np.max(p_identity_errors(state, params)))


def leading_order_p0(phi0: InitialCondition, params: ModelParams, quad: QuadratureSpec) -> float:
    """int psi phi_0 dy / int psi B(y,0) dy, the small-amplitude value of p0."""
    spec = quad.around(adjoint_window(params), *_bfield_windows(params), *phi0.windows())
    top = integrate_line(lambda y: adjoint_eigenfunction(y, params) * phi0.value(y), spec)
    bottom = integrate_line(lambda y: adjoint_eigenfunction(y, params) * bfield(y, 0.0, params), spec)
    return float(top / bottom)
