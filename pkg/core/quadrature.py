"""
Quadrature over the real line and over sampled fields.

Line integrals are truncated to the union of windows placed on the Gaussian
centres of the integrand and evaluated by composite Gauss-Legendre (or
composite Simpson) rules whose panel count doubles until two successive
estimates agree.
"""

from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, List, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import simpson

from core.errors import ConfigValidationError, QuadratureError
from core.grid import Field

GAUSS_LEGENDRE = "gauss_legendre"
SIMPSON = "simpson"
RULES = (GAUSS_LEGENDRE, SIMPSON)


@dataclass(frozen=True)
class Window:
    """Region where an integrand lives: it decays like exp(-((y - center)/width)**2) outside."""

    center: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ConfigValidationError(f"window width must be positive, got {self.width}")


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances, truncation policy and rule of a line integral."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    n_sigmas: float = 8.0
    windows: Tuple[Window, ...] = field(default=(Window(0.0, 1.0),))
    rule: str = GAUSS_LEGENDRE
    order: int = 20
    initial_panels: int = 4
    max_doublings: int = 14

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ConfigValidationError("quadrature tolerances must be positive")
        if self.n_sigmas < 8:
            raise ConfigValidationError(f"n_sigmas must be >= 8, got {self.n_sigmas}")
        if self.rule not in RULES:
            raise ConfigValidationError(f"unknown quadrature rule '{self.rule}', expected one of {RULES}")
        if not self.windows:
            raise ConfigValidationError("at least one truncation window is required")

    def around(self, *windows: Window) -> "QuadratureSpec":
        """Same tolerances, truncated around the given windows."""
        return replace(self, windows=tuple(windows))

    def with_rule(self, rule: str) -> "QuadratureSpec":
        return replace(self, rule=rule)

    def relaxed(self, tol: float = 1e-7) -> "QuadratureSpec":
        """Looser tolerances for the inner layer of double integrals."""
        return replace(self, abs_tol=max(self.abs_tol, tol), rel_tol=max(self.rel_tol, tol))


def truncation_intervals(windows: Sequence[Window], n_sigmas: float) -> List[Tuple[float, float, float]]:
    """Disjoint pieces (a, b, width) covering the union of the windows.

    Each piece carries the narrowest width of the windows overlapping it, so
    a narrow window only refines the panels under its own reach.
    """
    events = []
    for w in set(windows):
        events.append((w.center - n_sigmas * w.width, 0, w.width))
        events.append((w.center + n_sigmas * w.width, 1, w.width))
    # opening events sort before closing ones at the same position
    events.sort()
    active = Counter()
    pieces: List[List[float]] = []
    previous = None
    for position, closing, width in events:
        if active and previous is not None and position > previous:
            narrowest = min(active)
            if pieces and pieces[-1][1] == previous and pieces[-1][2] == narrowest:
                pieces[-1][1] = position
            else:
                pieces.append([previous, position, narrowest])
        if closing:
            active[width] -= 1
            if not active[width]:
                del active[width]
        else:
            active[width] += 1
        previous = position
    return [(a, b, w) for a, b, w in pieces]


def _gauss_panels(f: Callable, a: float, b: float, panels: int, order: int) -> np.ndarray:
    nodes, weights = leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    y = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    values = np.asarray(f(y), dtype=float)
    values = values.reshape(values.shape[:-1] + (panels, order))
    return np.sum((values @ weights) * half, axis=-1)


def _simpson_panels(f: Callable, a: float, b: float, panels: int, order: int) -> np.ndarray:
    y = np.linspace(a, b, 2 * panels * order + 1)
    return simpson(np.asarray(f(y), dtype=float), x=y, axis=-1)


_PANEL_RULES = {GAUSS_LEGENDRE: _gauss_panels, SIMPSON: _simpson_panels}


def _converged(previous: np.ndarray, current: np.ndarray, spec: QuadratureSpec) -> bool:
    limit = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(current))
    return bool(np.all(np.abs(current - previous) < limit))


def integrate_interval(f: Callable, a: float, b: float, spec: QuadratureSpec, min_width: float = None):
    """Integral of a vectorised f over [a, b].

    f maps an array of nodes of shape (n,) to values of shape (..., n); the
    result has shape (...), a float for scalar integrands.
    """
    if b <= a:
        return 0.0
    rule = _PANEL_RULES[spec.rule]
    panels = spec.initial_panels
    if min_width:
        panels = max(panels, int(np.ceil((b - a) / min_width)))
    previous = current = rule(f, a, b, panels, spec.order)
    for _ in range(spec.max_doublings):
        panels *= 2
        current = rule(f, a, b, panels, spec.order)
        if _converged(previous, current, spec):
            return current if np.ndim(current) else float(current)
        previous = current
    raise QuadratureError(
        f"no convergence on [{a:.6g}, {b:.6g}] after {spec.max_doublings} refinements "
        f"({panels} panels)",
        estimates=(float(np.max(previous)), float(np.max(current))),
    )


def integrate_line(f: Callable, spec: QuadratureSpec):
    """Integral over the real line of an integrand localised in spec.windows."""
    total = 0.0
    for a, b, width in truncation_intervals(spec.windows, spec.n_sigmas):
        # cap the starting panel count
        width = max(width, (b - a) / 4096.0)
        total = total + integrate_interval(f, a, b, spec, min_width=width)
    return total


def integrate_grid(field_: Field) -> float:
    """Trapezoid rule over the support of a sampled field."""
    return float(np.trapezoid(field_.values, dx=field_.grid.dx))
