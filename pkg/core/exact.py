"""
Exact solutions of the nonlinear phase equation.

    phi_t + c tanh(c x / 2) phi_x = phi_xx + phi_x^2

The Cole-Hopf substitution phi~ = exp(phi) - 1 maps solutions onto solutions
of the linear equation, so phi(x,t) = log(1 + int G(x,y,t) phi~_0(y) dy).
The family phi*(x,t,p) = log(1 + p B(x,t)) with B(x,t) = G(x,0,t+1) is exact
for every fixed p.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from core.errors import ConfigValidationError, DomainViolationError
from core.kernels import (
    ModelParams,
    adjoint_eigenfunction,
    adjoint_window,
    bfield,
    bfield_t,
    bfield_x,
    greens,
    greens_windows,
)
from core.quadrature import QuadratureSpec, Window, integrate_line

GAUSSIAN = "gaussian"
SECH_BUMP = "sech_bump"
ZERO = "zero"
CONSTANT = "constant"
KINDS = (GAUSSIAN, SECH_BUMP, ZERO, CONSTANT)

# Points per block when a kernel integral is evaluated for many x at once.
X_BLOCK = 256


def _sech(u):
    q = np.exp(-2.0 * np.abs(u))
    return 2.0 * np.sqrt(q) / (1.0 + q)


@dataclass(frozen=True)
class InitialCondition:
    """Initial phase profile phi_0.

    gaussian:  a exp(-(x/w)^2)
    sech_bump: a sech(x/w)
    zero:      0
    constant:  k
    """

    kind: str = GAUSSIAN
    amplitude: float = 0.0
    width: float = 1.0
    level: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigValidationError(f"unknown initial condition '{self.kind}', expected one of {KINDS}")
        if self.kind in (GAUSSIAN, SECH_BUMP) and not self.width > 0:
            raise ConfigValidationError(f"{self.kind} width must be positive, got {self.width}")

    @classmethod
    def gaussian(cls, amplitude: float, width: float) -> "InitialCondition":
        return cls(GAUSSIAN, amplitude=amplitude, width=width)

    @classmethod
    def sech_bump(cls, amplitude: float, width: float) -> "InitialCondition":
        return cls(SECH_BUMP, amplitude=amplitude, width=width)

    @classmethod
    def zero(cls) -> "InitialCondition":
        return cls(ZERO)

    @classmethod
    def constant(cls, level: float) -> "InitialCondition":
        return cls(CONSTANT, level=level)

    @property
    def is_localized(self) -> bool:
        return self.kind != CONSTANT

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == GAUSSIAN:
            return self.amplitude * np.exp(-(x / self.width) ** 2)
        if self.kind == SECH_BUMP:
            return self.amplitude * _sech(x / self.width)
        if self.kind == CONSTANT:
            return np.full_like(x, self.level)
        return np.zeros_like(x)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == GAUSSIAN:
            return -2.0 * x / self.width ** 2 * self.value(x)
        if self.kind == SECH_BUMP:
            u = x / self.width
            return -self.amplitude / self.width * _sech(u) * np.tanh(u)
        return np.zeros_like(x)

    def windows(self) -> Tuple[Window, ...]:
        """Where phi_0 lives; empty for data that is not localised."""
        if self.kind == GAUSSIAN:
            return (Window(0.0, self.width),)
        if self.kind == SECH_BUMP:
            # exp(-|x|/w) decay: widen so 8 widths reach exp(-40)
            return (Window(0.0, 5.0 * self.width),)
        if self.kind == ZERO:
            return (Window(0.0, 1.0),)
        return ()

    def localization_norm(self, M0: float, x) -> float:
        """sup |exp(x^2/M0) phi_0| + sup |exp(x^2/M0) phi_0'| over the sample points x."""
        x = np.asarray(x, dtype=float)
        weight = np.exp(x * x / M0)
        return float(np.max(np.abs(weight * self.value(x))) + np.max(np.abs(weight * self.derivative(x))))


def _line_windows(phi0: InitialCondition, x: np.ndarray, t: float, params: ModelParams) -> Tuple[Window, ...]:
    if phi0.is_localized:
        return phi0.windows()
    windows = {adjoint_window(params)}
    for xi in np.unique(x):
        windows.update(greens_windows(float(xi), t, params))
    return tuple(sorted(windows, key=lambda w: (w.center, w.width)))


def _propagate(data, phi0: InitialCondition, x, t: float, params: ModelParams, quad: QuadratureSpec):
    """int G(x,y,t) data(y) dy for every x (vectorised in blocks)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    spec = quad.around(*_line_windows(phi0, x, t, params))
    out = np.empty_like(x)
    for start in range(0, x.size, X_BLOCK):
        block = x[start:start + X_BLOCK]
        out[start:start + X_BLOCK] = integrate_line(
            lambda y: greens(block[:, None], y[None, :], t, params) * data(y)[None, :], spec
        )
    return out


def _check_log_argument(argument, what: str):
    if np.any(argument <= 0.0):
        raise DomainViolationError(f"{what}: logarithm argument {np.min(argument):.6g} <= 0")


def linear_solution(phi0: InitialCondition, x, t: float, params: ModelParams, quad: QuadratureSpec):
    """Solution int G(x,y,t) phi_0(y) dy of the linear equation."""
    values = _propagate(phi0.value, phi0, x, t, params, quad)
    return values if np.ndim(x) else float(values[0])


def linear_limit(phi0: InitialCondition, params: ModelParams, quad: QuadratureSpec) -> float:
    """Pointwise t -> infinity limit (c/4) int psi phi_0 dy of the linear solution."""
    spec = quad.around(adjoint_window(params), *phi0.windows())
    return 0.25 * params.c * integrate_line(lambda y: adjoint_eigenfunction(y, params) * phi0.value(y), spec)


def cole_hopf_solution(phi0: InitialCondition, x, t: float, params: ModelParams, quad: QuadratureSpec):
    """Exact solution log(1 + int G(x,y,t)(exp(phi_0(y)) - 1) dy) of the nonlinear equation."""
    if not t > 0:
        raise ConfigValidationError(f"Cole-Hopf solution needs t > 0, got t={t}")
    transformed = _propagate(lambda y: np.expm1(phi0.value(y)), phi0, x, t, params, quad)
    _check_log_argument(1.0 + transformed, "Cole-Hopf solution")
    values = np.log1p(transformed)
    return values if np.ndim(x) else float(values[0])


def asymptotic_constant(phi0: InitialCondition, params: ModelParams, quad: QuadratureSpec) -> float:
    """Pointwise t -> infinity limit of the Cole-Hopf solution.

    G(x,y,t) tends to (c/4) psi(y), so the limit is
    log(1 + (c/4) int psi(y)(exp(phi_0(y)) - 1) dy).
    """
    spec = quad.around(adjoint_window(params), *phi0.windows())
    mass = integrate_line(lambda y: adjoint_eigenfunction(y, params) * np.expm1(phi0.value(y)), spec)
    argument = 1.0 + 0.25 * params.c * mass
    _check_log_argument(np.asarray(argument), "asymptotic constant")
    return float(np.log(argument))


def _phi_star_denominator(x, t, p: float, params: ModelParams) -> np.ndarray:
    denominator = 1.0 + p * bfield(x, t, params)
    if np.any(denominator <= 0.0):
        raise DomainViolationError(f"1 + p B(x,t) <= 0 for p={p:.6g}")
    return denominator


def phi_star(x, t, p: float, params: ModelParams):
    """phi*(x,t,p) = log(1 + p B(x,t))."""
    _phi_star_denominator(x, t, p, params)
    return np.log1p(p * bfield(x, t, params))


def phi_star_x(x, t, p: float, params: ModelParams):
    return p * bfield_x(x, t, params) / _phi_star_denominator(x, t, p, params)


def phi_star_t(x, t, p: float, params: ModelParams):
    return p * bfield_t(x, t, params) / _phi_star_denominator(x, t, p, params)
