"""
Experiment configuration for SourceChecker.

A run is described by one JSON file with nested sections. Missing keys take
the embedded defaults, unknown keys are rejected, and every section is
validated on load together with the cross-section constraints (time step
against grid spacing, domain size against final time).
"""

import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from typing import Any, Dict, Tuple

from core.decomposition import TemplateParams
from core.errors import ConfigValidationError
from core.exact import InitialCondition
from core.grid import Grid
from core.kernels import ModelParams
from core.quadrature import QuadratureSpec
from core.solver import DIRICHLET_ZERO, IMEX_CN, SolverConfig, check_domain_guard
from core.verify import LemmaSamples, SampleGrid


@dataclass(frozen=True)
class GridSection:
    L: float = 40.0
    dx: float = 0.02

    def build(self) -> Grid:
        return Grid.from_spacing(self.L, self.dx)


@dataclass(frozen=True)
class SolverSection:
    dt: float = 0.005
    T: float = 10.0
    scheme: str = IMEX_CN
    bc: str = DIRICHLET_ZERO
    snapshot_every: float = 1.0
    boundary_guard_tol: float = 1e-6
    guard_fraction: float = 0.05
    guard_spread: float = 1.0

    def __post_init__(self):
        if not self.snapshot_every > 0:
            raise ConfigValidationError(f"snapshot spacing must be positive, got {self.snapshot_every}")

    def build(self, snapshot_every: float = None) -> SolverConfig:
        return SolverConfig.every(
            snapshot_every or self.snapshot_every,
            dt=self.dt,
            T=self.T,
            scheme=self.scheme,
            bc=self.bc,
            boundary_guard_tol=self.boundary_guard_tol,
            guard_fraction=self.guard_fraction,
            guard_spread=self.guard_spread,
        )


@dataclass(frozen=True)
class DecompositionSection:
    snapshot_every: float = 0.05
    export_every: float = 1.0

    def __post_init__(self):
        if not 0 < self.snapshot_every <= 0.1:
            raise ConfigValidationError(
                f"decomposition snapshot spacing must lie in (0, 0.1], got {self.snapshot_every}"
            )
        if not self.export_every > 0:
            raise ConfigValidationError(f"v-field export spacing must be positive, got {self.export_every}")


@dataclass(frozen=True)
class QuadratureSection:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    n_sigmas: float = 8.0
    rule: str = "gauss_legendre"
    order: int = 20
    max_doublings: int = 14

    def __post_init__(self):
        self.build()

    def build(self) -> QuadratureSpec:
        return QuadratureSpec(
            abs_tol=self.abs_tol,
            rel_tol=self.rel_tol,
            n_sigmas=self.n_sigmas,
            rule=self.rule,
            order=self.order,
            max_doublings=self.max_doublings,
        )


@dataclass(frozen=True)
class VerifySection:
    semigroup_cases: Tuple[Tuple[float, float], ...] = ((2.0, 0.5), (8.0, 3.0))
    semigroup_x: Tuple[float, ...] = tuple(float(x) for x in range(-10, 11))
    mass_x: Tuple[float, ...] = (-5.0, 0.0, 5.0)
    mass_t: Tuple[float, ...] = (0.5, 1.0, 10.0)
    residual_samples: int = 100
    phi_star_samples: int = 50
    phi_star_p: float = 0.2
    bound_grid: SampleGrid = field(default_factory=SampleGrid)
    lemma_samples: LemmaSamples = field(default_factory=LemmaSamples)
    plateau_times: Tuple[float, ...] = (25.0, 100.0)
    refinement_factor: int = 2

    def __post_init__(self):
        for t, s in self.semigroup_cases:
            if not 0 < s < t:
                raise ConfigValidationError(f"semigroup cases need 0 < s < t, got (t={t}, s={s})")
        if self.refinement_factor < 2:
            raise ConfigValidationError("sample refinement factor must be >= 2")


@dataclass(frozen=True)
class Tolerances:
    simulate_max_abs_err: float = 5e-3
    order_min: float = 1.7
    order_max: float = 2.3
    mass: float = 1e-8
    greens_residual: float = 1e-4
    semigroup: float = 1e-6
    phi_star_residual: float = 1e-4
    plateau_profile: float = 0.01
    normalization: float = 1e-8
    p_identity: float = 1e-6
    integral_equation: float = 0.05
    stability: float = 0.05
    tail_to_head: float = 1.1
    r_squared: float = 0.9

    def __post_init__(self):
        if not self.order_min < self.order_max:
            raise ConfigValidationError("convergence order band must satisfy order_min < order_max")


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one run."""

    model: ModelParams = field(default_factory=ModelParams)
    template: TemplateParams = field(default_factory=TemplateParams)
    initial: InitialCondition = field(default_factory=lambda: InitialCondition.gaussian(0.1, 1.0))
    grid: GridSection = field(default_factory=GridSection)
    solver: SolverSection = field(default_factory=SolverSection)
    decomposition: DecompositionSection = field(default_factory=DecompositionSection)
    quadrature: QuadratureSection = field(default_factory=QuadratureSection)
    verify: VerifySection = field(default_factory=VerifySection)
    tolerances: Tolerances = field(default_factory=Tolerances)
    output_dir: str = "out"
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.workers < 0:
            raise ConfigValidationError(f"workers must be >= 0 (0 = all cores), got {self.workers}")

    @classmethod
    def defaults(cls) -> "ExperimentConfig":
        return cls()

    @classmethod
    def for_decomposition(cls) -> "ExperimentConfig":
        """Defaults of the long decomposition run: wider domain, T = 20."""
        return cls(
            initial=InitialCondition.gaussian(0.05, 1.0),
            grid=GridSection(L=60.0, dx=0.02),
            solver=SolverSection(T=20.0),
        )

    def validate(self):
        """Cross-section constraints; component invariants are checked on construction."""
        grid = self.grid.build()
        solver = self.solver.build()
        solver.check_cfl(grid, self.model)
        solver.check_schedule()
        if solver.bc == DIRICHLET_ZERO:
            check_domain_guard(grid, solver, self.model)
        return self

    def with_output_dir(self, output_dir: str) -> "ExperimentConfig":
        return replace(self, output_dir=output_dir)

    def to_dict(self) -> Dict[str, Any]:
        return _plain(asdict(self))

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base: "ExperimentConfig" = None) -> "ExperimentConfig":
        """Build from a JSON mapping; missing keys are taken from base (the defaults when omitted)."""
        return _build(cls, data, "config", base).validate()

    @classmethod
    def load(cls, path: str, base: "ExperimentConfig" = None) -> "ExperimentConfig":
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigValidationError(f"config file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigValidationError(f"config file {path} is not valid JSON: {e}")
        return cls.from_dict(data, base)


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def _build(kind, data, path: str, base=None):
    """Instantiate dataclass `kind` from a JSON mapping; missing keys keep the values of base."""
    if not isinstance(data, dict):
        raise ConfigValidationError(f"section '{path}' must be an object")
    known = {f.name: f for f in fields(kind)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigValidationError(f"unknown key(s) in '{path}': {', '.join(unknown)}")
    if base is None:
        base = kind()
    values = {}
    for name, value in data.items():
        default = getattr(base, name)
        if is_dataclass(default):
            values[name] = _build(type(default), value, f"{path}.{name}", default)
        else:
            values[name] = _tupled(value)
    try:
        return replace(base, **values)
    except TypeError as e:
        raise ConfigValidationError(f"invalid section '{path}': {e}")
