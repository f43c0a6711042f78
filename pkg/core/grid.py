"""
Uniform spatial grids and sampled fields.

Shared by the quadrature, solver and decomposition modules.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.errors import ConfigValidationError, NonFiniteFieldError


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-L, L] with an odd number of points (x=0 is a node)."""

    L: float
    nx: int

    def __post_init__(self):
        if not self.L > 0:
            raise ConfigValidationError(f"grid half-width must satisfy L > 0, got L={self.L}")
        if self.nx < 3 or self.nx % 2 == 0:
            raise ConfigValidationError(f"grid point count must be odd and >= 3, got nx={self.nx}")

    @classmethod
    def from_spacing(cls, L: float, dx: float) -> "Grid":
        """Grid on [-L, L] whose spacing is as close to dx as an odd count allows."""
        if not dx > 0:
            raise ConfigValidationError(f"grid spacing must be positive, got dx={dx}")
        intervals = int(round(2.0 * L / dx))
        if intervals % 2:
            intervals += 1
        return cls(L=L, nx=intervals + 1)

    @property
    def dx(self) -> float:
        return 2.0 * self.L / (self.nx - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.nx)

    @property
    def center_index(self) -> int:
        return (self.nx - 1) // 2

    def outer_mask(self, fraction: float = 0.05) -> np.ndarray:
        """Boolean mask of the outer `fraction` of the grid (both ends)."""
        return np.abs(self.x) >= (1.0 - fraction) * self.L

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(L=self.L, nx=(self.nx - 1) * factor + 1)


@dataclass(frozen=True)
class Field:
    """Real samples on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.nx,):
            raise ConfigValidationError(
                f"field has shape {values.shape}, grid expects ({self.grid.nx},)"
            )
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            index = int(bad[0])
            raise NonFiniteFieldError(
                f"non-finite value at index {index} (x={self.grid.x[index]:.6g})", index=index
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.nx))

    @classmethod
    def sample(cls, grid: Grid, func) -> "Field":
        return cls(grid, func(grid.x))

    def derivative(self) -> "Field":
        """Fourth-order central differences with one-sided closures at both ends."""
        return Field(self.grid, central_derivative4(self.values, self.grid.dx))

    def sup(self, mask: Optional[np.ndarray] = None) -> float:
        values = self.values if mask is None else self.values[mask]
        return float(np.max(np.abs(values))) if values.size else 0.0

    def at(self, x: float) -> float:
        """Linear interpolation of the samples at x."""
        return float(np.interp(x, self.grid.x, self.values))

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values - other.values)


def central_derivative4(values: np.ndarray, dx: float) -> np.ndarray:
    """First derivative of uniformly spaced samples, fourth order everywhere."""
    f = np.asarray(values, dtype=float)
    n = f.size
    if n < 5:
        return np.gradient(f, dx, edge_order=2)
    df = np.empty_like(f)
    df[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * dx)
    df[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * dx)
    df[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * dx)
    df[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * dx)
    df[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * dx)
    return df
