"""
verify: run named checks and write one report per check.

Sup-ratio checks are evaluated twice, on the configured samples and on a
refined copy; they pass when both ratios are finite and the sup moves by no
more than the stability tolerance.
"""

import os
from dataclasses import replace
from typing import Callable, Dict, List, Optional

from cli.decompose import decomposition_run
from core.config import ExperimentConfig
from core.decomposition import DecompositionState
from core.errors import ConfigValidationError, ToleranceViolation
from core.verify import (
    EDIFF_SAMPLES,
    BoundReport,
    check_bfield_bound,
    check_greens_residual,
    check_gtilde_bound,
    check_integral_equation_residual,
    check_lemma_ediff,
    check_lemma_tG,
    check_mass,
    check_nonlinearity_bound,
    check_normalization,
    check_p_identity,
    check_phi_star_residual,
    check_plateau_profile,
    check_semigroup,
    check_theorem_decay,
    refinement_change,
)
from utils.logging import FileManager, RunLogger


class VerifyContext:
    """Shared state of one verify run; the decomposition run is computed once."""

    def __init__(self, config: ExperimentConfig, logger: RunLogger):
        self.config = config
        self.logger = logger
        self.params = config.model
        self.tparams = config.template
        self.quad = config.quadrature.build()
        self.samples = config.verify
        self.tolerances = config.tolerances
        self._decomposition: Optional[DecompositionState] = None

    @property
    def decomposition(self) -> DecompositionState:
        if self._decomposition is None:
            self.logger.log("verify: running the decomposition the run-based checks share")
            self._decomposition = decomposition_run(self.config, self.logger)
        return self._decomposition


def refined_pair(ctx: VerifyContext, build: Callable[[int], BoundReport]) -> BoundReport:
    """build(1) and build(factor); the refined report carries the stability verdict."""
    factor = ctx.samples.refinement_factor
    coarse = build(1)
    fine = build(factor)
    change = refinement_change(coarse, fine)
    parameters = dict(fine.parameters, coarse_value=coarse.value, coarse_samples=coarse.samples,
                      refinement_factor=factor, refinement_change=change)
    passed = coarse.passed and fine.passed and change <= ctx.tolerances.stability
    return replace(fine, passed=bool(passed), parameters=parameters)


def _mass(ctx: VerifyContext) -> BoundReport:
    return check_mass(ctx.params, ctx.samples.mass_x, ctx.samples.mass_t, ctx.quad, ctx.tolerances.mass)


def _greens_residual(ctx: VerifyContext) -> BoundReport:
    return check_greens_residual(ctx.params, ctx.samples.residual_samples, ctx.config.seed,
                                 tolerance=ctx.tolerances.greens_residual)


def _semigroup(ctx: VerifyContext) -> BoundReport:
    reports = [
        check_semigroup(ctx.params, t, s, ctx.samples.semigroup_x, ctx.quad, ctx.tolerances.semigroup)
        for t, s in ctx.samples.semigroup_cases
    ]
    worst = max(reports, key=lambda r: r.value)
    return replace(
        worst,
        samples=sum(r.samples for r in reports),
        passed=all(r.passed for r in reports),
        rows=tuple(row for r in reports for row in r.rows),
        parameters=dict(worst.parameters, cases=[list(case) for case in ctx.samples.semigroup_cases]),
    )


def _phi_star_residual(ctx: VerifyContext) -> BoundReport:
    return check_phi_star_residual(ctx.params, ctx.samples.phi_star_p, ctx.samples.phi_star_samples,
                                   ctx.config.seed, tolerance=ctx.tolerances.phi_star_residual)


def _plateau_profile(ctx: VerifyContext) -> BoundReport:
    return check_plateau_profile(ctx.params, ctx.samples.plateau_times, tolerance=ctx.tolerances.plateau_profile)


def _gtilde_bound(ctx: VerifyContext) -> BoundReport:
    grid = ctx.samples.bound_grid
    return refined_pair(ctx, lambda f: check_gtilde_bound(ctx.params, grid if f == 1 else grid.refined(f)))


def _bfield_bound(ctx: VerifyContext) -> BoundReport:
    grid = ctx.samples.bound_grid
    return refined_pair(ctx, lambda f: check_bfield_bound(ctx.params, grid if f == 1 else grid.refined(f)))


def _nonlinearity_bound(ctx: VerifyContext) -> BoundReport:
    grid = ctx.samples.bound_grid
    return refined_pair(ctx, lambda f: check_nonlinearity_bound(ctx.params, grid if f == 1 else grid.refined(f)))


def _lemma_tG(ctx: VerifyContext) -> BoundReport:
    layout = ctx.samples.lemma_samples
    return refined_pair(ctx, lambda f: check_lemma_tG(
        ctx.params, ctx.tparams, layout if f == 1 else layout.refined(f), ctx.quad, ctx.config.workers,
    ))


def _lemma_ediff(ctx: VerifyContext) -> BoundReport:
    decomp = ctx.decomposition
    return refined_pair(ctx, lambda f: check_lemma_ediff(
        decomp, ctx.params, ctx.tparams, ctx.quad, ctx.config.initial,
        EDIFF_SAMPLES if f == 1 else EDIFF_SAMPLES.refined(f), ctx.config.workers,
    ))


def _theorem_decay(ctx: VerifyContext) -> BoundReport:
    return check_theorem_decay(ctx.decomposition, ctx.tparams, ctx.tolerances.tail_to_head,
                               ctx.tolerances.r_squared)


def _p_identity(ctx: VerifyContext) -> BoundReport:
    return check_p_identity(ctx.decomposition, ctx.params, ctx.tolerances.p_identity)


def _normalization(ctx: VerifyContext) -> BoundReport:
    return check_normalization(ctx.decomposition, ctx.tolerances.normalization)


def _integral_equation(ctx: VerifyContext) -> BoundReport:
    return check_integral_equation_residual(ctx.decomposition, ctx.params, ctx.tparams, ctx.quad,
                                            tolerance=ctx.tolerances.integral_equation,
                                            workers=ctx.config.workers)


CHECKS: Dict[str, Callable[[VerifyContext], BoundReport]] = {
    "mass": _mass,
    "greens_residual": _greens_residual,
    "semigroup": _semigroup,
    "phi_star_residual": _phi_star_residual,
    "plateau_profile": _plateau_profile,
    "gtilde_bound": _gtilde_bound,
    "bfield_bound": _bfield_bound,
    "nonlinearity_bound": _nonlinearity_bound,
    "lemma_tG": _lemma_tG,
    "lemma_ediff": _lemma_ediff,
    "theorem_decay": _theorem_decay,
    "p_identity": _p_identity,
    "normalization": _normalization,
    "integral_equation": _integral_equation,
}


def select_checks(names: List[str]) -> List[str]:
    """Expand 'all' and reject unknown names, keeping registry order."""
    available = ", ".join(CHECKS)
    if not names:
        raise ConfigValidationError(f"no checks selected; pass --checks all or a list of: {available}")
    if "all" in names:
        return list(CHECKS)
    unknown = [name for name in names if name not in CHECKS]
    if unknown:
        raise ConfigValidationError(f"unknown check(s) {', '.join(unknown)}; available: all, {available}")
    return [name for name in CHECKS if name in names]


def write_report(report: BoundReport, directory: str):
    FileManager.write_json(os.path.join(directory, f"{report.name}.json"), report.to_dict())
    FileManager.write_csv(os.path.join(directory, f"{report.name}.csv"), report.columns, report.rows)


def run_verify(config: ExperimentConfig, check_names: List[str], logger: RunLogger) -> Dict[str, BoundReport]:
    selected = select_checks(check_names)
    ctx = VerifyContext(config, logger)
    reports_dir = os.path.join(config.output_dir, "reports")
    reports: Dict[str, BoundReport] = {}
    for name in selected:
        logger.log(f"verify: {name}")
        report = CHECKS[name](ctx)
        write_report(report, reports_dir)
        reports[name] = report
        verdict = "passed" if report.passed else "FAILED"
        detail = f" ({report.note})" if report.note else ""
        logger.log(f"verify: {name} {report.kind} = {report.value:.6g}, {verdict}{detail}",
                   "success" if report.passed else "error")

    summary = {"command": "verify", "c": config.model.c, "checks": ",".join(selected)}
    for name, report in reports.items():
        summary[f"{name}_value"] = report.value
        summary[f"{name}_passed"] = report.passed
    failed = [name for name, report in reports.items() if not report.passed]
    summary["failed"] = ",".join(failed)
    FileManager.write_summary(config.output_dir, summary)
    if failed:
        raise ToleranceViolation(f"{len(failed)} of {len(selected)} check(s) failed: {', '.join(failed)}")
    return reports
