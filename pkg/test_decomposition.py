#!/usr/bin/env python3
"""
Tests for the split phi = phi*(x, t, p(t)) + v: templates, the initial
normalization, the nonlinearity, the implicit rate of p and the evolution
along a solver run.
"""

import numpy as np
import pytest

from core.decomposition import (
    BISECTION,
    TemplateParams,
    evolve_decomposition,
    leading_order_p0,
    nonlinearity_N,
    nonlinearity_parts,
    normalization_residual,
    p_identity_residual,
    p_max,
    pdot_fixed_point,
    pdot_solve,
    solve_p0,
    theta1,
    theta2,
)
from core.errors import ConfigValidationError, DomainViolationError, SmallAmplitudeError
from core.exact import InitialCondition
from core.grid import Field, Grid
from core.kernels import ModelParams, bfield
from core.quadrature import QuadratureSpec
from core.solver import SolverConfig, solve
from core.verify import (
    EDIFF_SAMPLES,
    MIN_DECAY_TIME,
    check_integral_equation_residual,
    check_lemma_ediff,
    check_normalization,
    check_p_identity,
    check_theorem_decay,
    refinement_change,
)

C1 = ModelParams(c=1.0)
QUAD = QuadratureSpec()
TEMPLATE = TemplateParams(gamma=0.45, M=64.0)
SMALL_GRID = Grid.from_spacing(20.0, 0.1)


def test_templates():
    assert theta1(0.0, 0.0, TEMPLATE, C1) == pytest.approx(2.0)
    x = np.linspace(-30.0, 30.0, 61)
    for t in (0.0, 1.0, 7.5):
        np.testing.assert_allclose(theta2(x, t, TEMPLATE, C1), theta1(x, t, TEMPLATE, C1) / np.sqrt(1.0 + t))
        np.testing.assert_array_equal(theta1(x, t, TEMPLATE, C1), theta1(-x, t, TEMPLATE, C1))


def test_template_params_validation():
    with pytest.raises(ConfigValidationError):
        TemplateParams(gamma=0.5)
    with pytest.raises(ConfigValidationError):
        TemplateParams(gamma=0.0)
    with pytest.raises(ConfigValidationError):
        TemplateParams(M=4.0)


def test_p_max_keeps_log_domain():
    bound = p_max(C1)
    y = np.linspace(-40.0, 40.0, 4001)
    assert np.all(1.0 - bound * bfield(y, 0.0, C1) > 0.0)


def test_zero_data_gives_zero_p0():
    assert solve_p0(InitialCondition.zero(), C1, QUAD) == 0.0


def test_newton_matches_bisection():
    phi0 = InitialCondition.gaussian(0.05, 1.0)
    newton = solve_p0(phi0, C1, QUAD)
    bisection = solve_p0(phi0, C1, QUAD, method=BISECTION)
    assert newton > 0.0
    assert newton == pytest.approx(bisection, abs=1e-9)
    assert abs(normalization_residual(newton, phi0, C1, QUAD)) <= 1e-10


def test_leading_order_p0_for_small_data():
    phi0 = InitialCondition.gaussian(1e-4, 1.0)
    assert solve_p0(phi0, C1, QUAD) == pytest.approx(leading_order_p0(phi0, C1, QUAD), rel=1e-3)


def test_p0_is_nearly_linear_in_amplitude():
    full = solve_p0(InitialCondition.gaussian(0.05, 1.0), C1, QUAD)
    half = solve_p0(InitialCondition.gaussian(0.025, 1.0), C1, QUAD)
    assert full / half == pytest.approx(2.0, rel=0.1)


def test_large_data_is_rejected():
    with pytest.raises(SmallAmplitudeError) as info:
        solve_p0(InitialCondition.gaussian(50.0, 1.0), C1, QUAD)
    assert "small-amplitude regime" in str(info.value)


def test_unknown_root_method():
    with pytest.raises(ConfigValidationError):
        solve_p0(InitialCondition.zero(), C1, QUAD, method="secant")


def test_nonlinearity():
    x = np.linspace(-10.0, 10.0, 21)
    np.testing.assert_array_equal(nonlinearity_N(x, 1.0, 0.0, 0.0, 0.01, C1), 0.0)
    p, t = 0.1, 2.0
    b = bfield(x, t, C1)
    slope = nonlinearity_N(x, t, p, 1.0, 0.0, C1) - nonlinearity_N(x, t, p, 0.0, 0.0, C1)
    np.testing.assert_allclose(slope, b / (1.0 + 0.25 * p) - b / (1.0 + p * b), atol=1e-15)
    n0, _ = nonlinearity_parts(x, t, p, np.zeros_like(x), C1)
    np.testing.assert_array_equal(n0, 0.0)
    with pytest.raises(DomainViolationError):
        nonlinearity_N(x, 0.0, -10.0, 0.0, 0.0, C1)


def test_pdot_vanishes_without_remainder():
    zero = Field.zeros(SMALL_GRID)
    assert pdot_solve(0.0, zero, zero, 1.0, C1) == 0.0
    assert pdot_solve(0.2, zero, zero, 1.0, C1) == 0.0


def test_pdot_fixed_point_agrees_with_closed_form():
    v = Field.sample(SMALL_GRID, lambda x: 0.01 * np.exp(-x * x))
    vx = v.derivative()
    direct = pdot_solve(0.1, v, vx, 1.0, C1)
    iterated = pdot_fixed_point(0.1, v, vx, 1.0, C1)
    assert direct != 0.0
    assert abs(direct - iterated) <= 1e-12 * max(1.0, abs(direct))


def test_zero_trajectory_decomposes_to_zero():
    trajectory = solve(InitialCondition.zero(), SMALL_GRID, SolverConfig.every(0.1, dt=0.05, T=1.0), C1)
    state = evolve_decomposition(trajectory, InitialCondition.zero(), C1, TEMPLATE, QUAD)
    assert len(state.times) == 11
    assert all(p == 0.0 for p in state.p)
    assert all(v.sup() == 0.0 for v in state.v_fields)
    assert max(state.h1) == 0.0 and max(state.h2) == 0.0
    assert p_identity_residual(state, C1) == 0.0
    assert check_lemma_ediff(state, C1, TEMPLATE, QUAD, InitialCondition.zero()).value == 0.0
    assert check_integral_equation_residual(state, C1, TEMPLATE, QUAD).value == 0.0


def test_decay_fit_needs_a_long_run():
    trajectory = solve(InitialCondition.zero(), SMALL_GRID, SolverConfig.every(0.1, dt=0.05, T=1.0), C1)
    state = evolve_decomposition(trajectory, InitialCondition.zero(), C1, TEMPLATE, QUAD)
    report = check_theorem_decay(state, TEMPLATE)
    assert not report.passed
    assert report.note.startswith("run too short for the decay fit")
    assert f"< {MIN_DECAY_TIME:g}" in report.note


def test_snapshot_schedule_is_checked():
    trajectory = solve(InitialCondition.zero(), SMALL_GRID, SolverConfig.every(0.2, dt=0.05, T=1.0), C1)
    with pytest.raises(ConfigValidationError):
        evolve_decomposition(trajectory, InitialCondition.zero(), C1, TEMPLATE, QUAD)
    late = solve(InitialCondition.zero(), SMALL_GRID, SolverConfig(dt=0.05, T=1.0, snapshot_times=(0.5, 0.6)), C1)
    with pytest.raises(ConfigValidationError):
        evolve_decomposition(late, InitialCondition.zero(), C1, TEMPLATE, QUAD)


@pytest.fixture(scope="module")
def long_run():
    phi0 = InitialCondition.gaussian(0.05, 1.0)
    grid = Grid.from_spacing(60.0, 0.02)
    trajectory = solve(phi0, grid, SolverConfig.every(0.05, dt=0.005, T=20.0), C1)
    return evolve_decomposition(trajectory, phi0, C1, TEMPLATE, QUAD)


@pytest.mark.slow
def test_long_run_normalization_and_identity(long_run):
    assert long_run.p0 > 0.0
    assert check_normalization(long_run).passed
    assert check_p_identity(long_run, C1).value <= 1e-6


@pytest.mark.slow
def test_long_run_decay(long_run):
    report = check_theorem_decay(long_run, TEMPLATE)
    assert np.all(np.isfinite(long_run.h1)) and np.all(np.isfinite(long_run.h2))
    assert report.note == ""
    assert report.parameters["tail_to_head_h1"] <= 1.1
    assert report.parameters["eta"] > 0.0
    assert report.parameters["r_squared"] >= 0.9
    assert report.passed


@pytest.mark.slow
def test_long_run_ediff_is_stable_under_refinement(long_run):
    phi0 = InitialCondition.gaussian(0.05, 1.0)
    coarse = check_lemma_ediff(long_run, C1, TEMPLATE, QUAD, phi0, EDIFF_SAMPLES)
    fine = check_lemma_ediff(long_run, C1, TEMPLATE, QUAD, phi0, EDIFF_SAMPLES.refined(2))
    assert np.isfinite(coarse.value) and coarse.value > 0.0
    assert refinement_change(coarse, fine) <= 0.05
    # the far tail point closes each time block
    tail_rows = [row for row in coarse.rows if row[0] > C1.c * row[1] + 8.0 * np.sqrt(TEMPLATE.M * row[1])]
    assert len(tail_rows) == len(EDIFF_SAMPLES.times)
    assert all(np.all(np.isfinite(row)) for row in tail_rows)


@pytest.mark.slow
def test_long_run_solves_its_integral_equation(long_run):
    report = check_integral_equation_residual(long_run, C1, TEMPLATE, QUAD)
    assert report.value <= 0.05
    assert report.passed
