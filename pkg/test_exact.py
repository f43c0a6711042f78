#!/usr/bin/env python3
"""
Tests for initial conditions, the Cole-Hopf solution and the plateau family
phi*(x, t, p).
"""

import numpy as np
import pytest

from core.errors import ConfigValidationError, DomainViolationError
from core.exact import (
    InitialCondition,
    asymptotic_constant,
    cole_hopf_solution,
    linear_limit,
    linear_solution,
    phi_star,
    phi_star_x,
)
from core.kernels import ModelParams
from core.quadrature import QuadratureSpec

C1 = ModelParams(c=1.0)
QUAD = QuadratureSpec()


def test_initial_condition_kinds():
    x = np.linspace(-3.0, 3.0, 7)
    assert InitialCondition.gaussian(0.1, 1.0).value(0.0) == pytest.approx(0.1)
    assert InitialCondition.sech_bump(0.2, 2.0).value(0.0) == pytest.approx(0.2)
    np.testing.assert_array_equal(InitialCondition.zero().value(x), 0.0)
    np.testing.assert_array_equal(InitialCondition.constant(0.3).value(x), 0.3)
    assert not InitialCondition.constant(0.3).is_localized
    with pytest.raises(ConfigValidationError):
        InitialCondition("square")
    with pytest.raises(ConfigValidationError):
        InitialCondition.gaussian(0.1, 0.0)


def test_initial_condition_derivative():
    x = np.linspace(-4.0, 4.0, 17)
    h = 1e-6
    for phi0 in (InitialCondition.gaussian(0.1, 1.5), InitialCondition.sech_bump(0.2, 0.7)):
        fd = (phi0.value(x + h) - phi0.value(x - h)) / (2.0 * h)
        np.testing.assert_allclose(phi0.derivative(x), fd, atol=1e-8)


def test_localization_norm():
    x = np.linspace(-20.0, 20.0, 4001)
    assert InitialCondition.zero().localization_norm(64.0, x) == 0.0
    # exp(x^2/64 - x^2) peaks at x = 0
    assert InitialCondition.gaussian(0.05, 1.0).localization_norm(64.0, x) >= 0.05


def test_zero_data_stays_zero():
    x = np.linspace(-5.0, 5.0, 11)
    np.testing.assert_array_equal(cole_hopf_solution(InitialCondition.zero(), x, 2.0, C1, QUAD), 0.0)
    assert asymptotic_constant(InitialCondition.zero(), C1, QUAD) == 0.0


def test_constant_data_is_preserved():
    k = 0.3
    x = np.array([-3.0, 0.0, 3.0])
    values = cole_hopf_solution(InitialCondition.constant(k), x, 2.0, C1, QUAD)
    np.testing.assert_allclose(values, k, rtol=1e-7)
    assert asymptotic_constant(InitialCondition.constant(k), C1, QUAD) == pytest.approx(k, rel=1e-8)


def test_scalar_input_gives_float():
    value = cole_hopf_solution(InitialCondition.gaussian(0.1, 1.0), 0.0, 1.0, C1, QUAD)
    assert isinstance(value, float)


def test_cole_hopf_needs_positive_time():
    with pytest.raises(ConfigValidationError):
        cole_hopf_solution(InitialCondition.gaussian(0.1, 1.0), 0.0, 0.0, C1, QUAD)


def test_cole_hopf_approaches_asymptotic_constant():
    phi0 = InitialCondition.gaussian(0.1, 1.0)
    late = cole_hopf_solution(phi0, 0.0, 200.0, C1, QUAD)
    assert late == pytest.approx(asymptotic_constant(phi0, C1, QUAD), abs=1e-3)


@pytest.mark.parametrize("t", [1.0, 3.0])
def test_cole_hopf_transform_solves_the_linear_equation(t):
    phi0 = InitialCondition.gaussian(0.1, 1.0)
    x = np.array([-2.0, 0.0, 1.5])
    h = 1e-2

    def u(xx, tt):
        return np.expm1(cole_hopf_solution(phi0, xx, tt, C1, QUAD))

    u_t = (u(x, t + h) - u(x, t - h)) / (2.0 * h)
    u_x = (u(x + h, t) - u(x - h, t)) / (2.0 * h)
    u_xx = (u(x + h, t) - 2.0 * u(x, t) + u(x - h, t)) / (h * h)
    residual = u_t - u_xx + C1.c * np.tanh(0.5 * C1.c * x) * u_x
    assert np.max(np.abs(residual)) <= 1e-4


def test_cole_hopf_approach_to_the_constant_is_monotone():
    phi0 = InitialCondition.gaussian(0.1, 1.0)
    limit = asymptotic_constant(phi0, C1, QUAD)
    gaps = [abs(cole_hopf_solution(phi0, 0.0, t, C1, QUAD) - limit) for t in (10.0, 40.0, 160.0)]
    assert gaps[0] > gaps[1] >= gaps[2]


def test_linear_solution_limit():
    phi0 = InitialCondition.gaussian(0.1, 1.0)
    limit = linear_limit(phi0, C1, QUAD)
    assert limit > 0.0
    assert linear_solution(phi0, 0.0, 200.0, C1, QUAD) == pytest.approx(limit, rel=1e-6)


def test_cole_hopf_small_data_is_close_to_linear():
    phi0 = InitialCondition.gaussian(1e-4, 1.0)
    x = np.linspace(-4.0, 4.0, 9)
    nonlinear = cole_hopf_solution(phi0, x, 1.0, C1, QUAD)
    linear = linear_solution(phi0, x, 1.0, C1, QUAD)
    np.testing.assert_allclose(nonlinear, linear, rtol=1e-3)


def test_phi_star():
    x = np.linspace(-10.0, 10.0, 21)
    np.testing.assert_array_equal(phi_star(x, 1.0, 0.0, C1), 0.0)
    assert phi_star(0.0, 1e4, 0.2, C1) == pytest.approx(np.log(1.0 + 0.2 * 0.25), rel=1e-8)
    h = 1e-6
    fd = (phi_star(x + h, 2.0, 0.2, C1) - phi_star(x - h, 2.0, 0.2, C1)) / (2.0 * h)
    np.testing.assert_allclose(phi_star_x(x, 2.0, 0.2, C1), fd, atol=1e-8)


def test_phi_star_domain():
    with pytest.raises(DomainViolationError):
        phi_star(0.0, 0.0, -10.0, C1)
