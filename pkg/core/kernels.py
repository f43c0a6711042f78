"""
Green's function kernels of the linearised phase equation.

    phi_t = phi_xx - c tanh(c x / 2) phi_x

All functions accept scalars or numpy arrays (broadcast against each other)
and are pure. Error-function differences are evaluated through tail
complements, or through a short-interval Gauss-Legendre integral when the two
arguments agree to three significant digits, so that the moving-plateau
subtraction in the reduced kernel keeps its relative accuracy for large t.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erfc, expit

from core.errors import ConfigValidationError
from core.quadrature import Window

SQRT_PI = np.sqrt(np.pi)

# Relative agreement below which errfn(a) - errfn(b) is integrated directly.
CLOSE_ARGUMENTS = 1e-3
_SHORT_NODES, _SHORT_WEIGHTS = leggauss(16)


@dataclass(frozen=True)
class ModelParams:
    """Wave speed c of the equation; characteristic speeds are +-c."""

    c: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c > 0):
            raise ConfigValidationError(f"wave speed must satisfy c > 0, got c={self.c}")


def _positive_time(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise ConfigValidationError("kernels are defined for t > 0 only")
    return t


def errfn(z):
    """(1/sqrt(pi)) * integral of exp(-s^2) from -inf to z; values in (0, 1)."""
    return 0.5 * erfc(-np.asarray(z, dtype=float))


def errfn_tail(z):
    """1 - errfn(z) without cancellation for large z."""
    return 0.5 * erfc(np.asarray(z, dtype=float))


def _short_interval(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    half = 0.5 * (a - b)
    s = 0.5 * (a + b)[..., None] + half[..., None] * _SHORT_NODES
    return half * (np.exp(-s * s) @ _SHORT_WEIGHTS) / SQRT_PI


def errfn_diff(a, b):
    """errfn(a) - errfn(b), cancellation-safe for nearby or large arguments."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    # Right of zero subtract upper tails, left of zero lower tails.
    right = 0.5 * (erfc(b) - erfc(a))
    left = 0.5 * (erfc(-a) - erfc(-b))
    result = np.where(np.minimum(a, b) >= 0.0, right, left)
    close = np.abs(a - b) <= CLOSE_ARGUMENTS * np.maximum(np.abs(a), np.abs(b))
    if np.any(close):
        result = np.where(close, _short_interval(a, b), result)
    return result[()] if result.ndim == 0 else result


def adjoint_eigenfunction(y, params: ModelParams):
    """psi(y) = sech^2(c y / 2), written to avoid overflow of cosh."""
    q = np.exp(-params.c * np.abs(np.asarray(y, dtype=float)))
    return 4.0 * q / (1.0 + q) ** 2


def _gaussian(xi, t):
    return np.exp(-xi * xi / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)


def _moving_gaussians(x, y, t, params: ModelParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    c = params.c
    xi_plus = x - y + c * t
    xi_minus = x - y - c * t
    g_plus = _gaussian(xi_plus, t) * expit(-c * y)
    g_minus = _gaussian(xi_minus, t) * expit(c * y)
    return xi_plus, xi_minus, g_plus, g_minus


def plateau(x, t, params: ModelParams):
    """e(x,t) = (c/4)[errfn((x+ct)/sqrt(4t)) - errfn((x-ct)/sqrt(4t))]."""
    t = _positive_time(t)
    x = np.asarray(x, dtype=float)
    root = np.sqrt(4.0 * t)
    return 0.25 * params.c * errfn_diff((x + params.c * t) / root, (x - params.c * t) / root)


def plateau_x(x, t, params: ModelParams):
    t = _positive_time(t)
    x = np.asarray(x, dtype=float)
    c = params.c
    return 0.25 * c * (_gaussian(x + c * t, t) - _gaussian(x - c * t, t))


def greens(x, y, t, params: ModelParams):
    """G(x,y,t): two moving Gaussians plus the errfn plateau weighted by psi(y)."""
    t = _positive_time(t)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    c = params.c
    _, _, g_plus, g_minus = _moving_gaussians(x, y, t, params)
    root = np.sqrt(4.0 * t)
    step = errfn_diff((y - x + c * t) / root, (y - x - c * t) / root)
    return g_plus + g_minus + 0.25 * c * step * adjoint_eigenfunction(y, params)


def greens_x(x, y, t, params: ModelParams):
    t = _positive_time(t)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    c = params.c
    xi_plus, xi_minus, g_plus, g_minus = _moving_gaussians(x, y, t, params)
    bumps = _gaussian(y - x + c * t, t) - _gaussian(y - x - c * t, t)
    return (
        -xi_plus / (2.0 * t) * g_plus
        - xi_minus / (2.0 * t) * g_minus
        - 0.25 * c * bumps * adjoint_eigenfunction(y, params)
    )


def greens_xx(x, y, t, params: ModelParams):
    t = _positive_time(t)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    c = params.c
    xi_plus, xi_minus, g_plus, g_minus = _moving_gaussians(x, y, t, params)
    eta_plus, eta_minus = y - x + c * t, y - x - c * t
    slopes = (eta_plus * _gaussian(eta_plus, t) - eta_minus * _gaussian(eta_minus, t)) / (2.0 * t)
    return (
        (xi_plus ** 2 / (4.0 * t * t) - 0.5 / t) * g_plus
        + (xi_minus ** 2 / (4.0 * t * t) - 0.5 / t) * g_minus
        - 0.25 * c * slopes * adjoint_eigenfunction(y, params)
    )


def greens_tilde(x, y, t, params: ModelParams):
    """G minus its non-decaying part e(x,t) psi(y), in the explicit four-term form."""
    t = _positive_time(t)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    c = params.c
    _, _, g_plus, g_minus = _moving_gaussians(x, y, t, params)
    root = np.sqrt(4.0 * t)
    shift_plus = errfn_diff((y - x + c * t) / root, (-x + c * t) / root)
    shift_minus = errfn_diff((y - x - c * t) / root, (-x - c * t) / root)
    return g_plus + g_minus + 0.25 * c * (shift_plus - shift_minus) * adjoint_eigenfunction(y, params)


def _gaussian_shift(eta, zeta, t):
    # exp(-eta^2/4t) - exp(-zeta^2/4t) through expm1, the larger Gaussian factored out
    eta, zeta = np.broadcast_arrays(np.asarray(eta, dtype=float), np.asarray(zeta, dtype=float))
    gap = np.abs((eta - zeta) * (eta + zeta)) / (4.0 * t)
    near = np.minimum(eta * eta, zeta * zeta) / (4.0 * t)
    sign = np.where(eta * eta >= zeta * zeta, 1.0, -1.0)
    return sign * np.exp(-near) * np.expm1(-gap)


def greens_tilde_x(x, y, t, params: ModelParams):
    t = _positive_time(t)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    c = params.c
    xi_plus, xi_minus, g_plus, g_minus = _moving_gaussians(x, y, t, params)
    shifts = _gaussian_shift(y - x + c * t, -x + c * t, t) - _gaussian_shift(y - x - c * t, -x - c * t, t)
    return (
        -xi_plus / (2.0 * t) * g_plus
        - xi_minus / (2.0 * t) * g_minus
        - 0.25 * c * shifts / np.sqrt(4.0 * np.pi * t) * adjoint_eigenfunction(y, params)
    )


def bfield(x, t, params: ModelParams):
    """B(x,t) = G(x, 0, t+1)."""
    return greens(x, 0.0, np.asarray(t, dtype=float) + 1.0, params)


def bfield_x(x, t, params: ModelParams):
    return greens_x(x, 0.0, np.asarray(t, dtype=float) + 1.0, params)


def bfield_xx(x, t, params: ModelParams):
    return greens_xx(x, 0.0, np.asarray(t, dtype=float) + 1.0, params)


def bfield_t(x, t, params: ModelParams):
    """Time derivative of B from the linear equation it solves."""
    x = np.asarray(x, dtype=float)
    advection = params.c * np.tanh(0.5 * params.c * x)
    return bfield_xx(x, t, params) - advection * bfield_x(x, t, params)


def greens_windows(x: float, t: float, params: ModelParams) -> Tuple[Window, ...]:
    """Where G(x, ., t) lives as a function of y."""
    width = np.sqrt(4.0 * t)
    return (
        Window(x + params.c * t, width),
        Window(x - params.c * t, width),
        adjoint_window(params),
    )


def adjoint_window(params: ModelParams) -> Window:
    # psi decays like 4 exp(-c|y|); 8 widths of 5/c put the cutoff below 1e-17
    return Window(0.0, 5.0 / params.c)


def plateau_window(t: float, params: ModelParams, center: float = 0.0) -> Window:
    """Covers the plateau [center - ct, center + ct] of G(., y, t) and its Gaussian edges."""
    return Window(center, params.c * t / 8.0 + np.sqrt(4.0 * t))
