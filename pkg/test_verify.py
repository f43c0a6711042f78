#!/usr/bin/env python3
"""
Tests for the verification checks: kernel identities, pointwise bounds and
the report plumbing.
"""

import numpy as np
import pytest

from core.decomposition import TemplateParams
from core.errors import ConfigValidationError, VerificationError
from core.kernels import ModelParams
from core.quadrature import QuadratureSpec
from core.verify import (
    EDIFF_SAMPLES,
    MAX_RESIDUAL,
    SUP_RATIO,
    LemmaSamples,
    SampleGrid,
    _report,
    check_bfield_bound,
    check_greens_residual,
    check_gtilde_bound,
    check_lemma_tG,
    check_mass,
    check_nonlinearity_bound,
    check_phi_star_residual,
    check_plateau_profile,
    check_semigroup,
    gtilde_ceiling,
    refinement_change,
)

C1 = ModelParams(c=1.0)
QUAD = QuadratureSpec()
TEMPLATE = TemplateParams(gamma=0.45, M=64.0)


def test_mass():
    report = check_mass(C1, (-5.0, 0.0, 5.0), (0.5, 1.0, 10.0), QUAD)
    assert report.kind == MAX_RESIDUAL
    assert report.samples == 9
    assert report.value <= 1e-8
    assert report.passed


def test_greens_residual():
    report = check_greens_residual(C1, samples=100, seed=0)
    assert report.samples == 100
    assert report.value <= 1e-4 and report.passed


def test_phi_star_residual():
    report = check_phi_star_residual(C1, p=0.2, samples=50, seed=0)
    assert report.value <= 1e-4 and report.passed


@pytest.mark.parametrize("t, s", [(2.0, 0.5), (8.0, 3.0), (2.0, 1e-3)])
def test_semigroup(t, s):
    report = check_semigroup(C1, t, s, [float(x) for x in range(-10, 11)], QUAD)
    assert report.samples == 21
    assert report.value <= 1e-6 and report.passed


def test_semigroup_residual_follows_the_quadrature_tolerance():
    x = [float(x) for x in range(-10, 11)]
    values = []
    for tol in (1e-4, 1e-6, 1e-8):
        report = check_semigroup(C1, 8.0, 3.0, x, QuadratureSpec(abs_tol=tol, rel_tol=tol), tolerance=10.0 * tol)
        assert report.passed, tol
        values.append(report.value)
    for looser, tighter in zip(values, values[1:]):
        assert tighter <= looser or tighter <= 1e-10


def test_plateau_profile():
    report = check_plateau_profile(C1, times=(25.0, 100.0), points=801)
    assert report.passed
    assert len(report.rows) == 2 * 801
    assert report.columns == ("t", "z", "profile")


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_pointwise_bounds_are_finite(c):
    params = ModelParams(c=c)
    grid = SampleGrid()
    for check in (check_gtilde_bound, check_bfield_bound, check_nonlinearity_bound):
        report = check(params, grid)
        assert report.kind == SUP_RATIO
        assert np.isfinite(report.value) and report.value > 0.0
        assert report.passed


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_pointwise_bounds_are_stable_under_refinement(c):
    params = ModelParams(c=c)
    grid = SampleGrid()
    for check in (check_gtilde_bound, check_bfield_bound, check_nonlinearity_bound):
        coarse = check(params, grid)
        fine = check(params, grid.refined(2))
        assert refinement_change(coarse, fine) <= 0.05, check.__name__


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_gtilde_ratio_stays_below_the_band_ceiling(c):
    params = ModelParams(c=c)
    grid = SampleGrid()
    report = check_gtilde_bound(params, grid)
    assert report.value <= gtilde_ceiling(params, grid)
    assert report.tolerance == gtilde_ceiling(params, grid)
    assert report.parameters["band"] == grid.band
    # every sample sits on a characteristic band
    for x, y, t, _ in report.rows:
        offset = min(abs(x - y - c * t), abs(x - y + c * t))
        assert offset <= grid.band * np.sqrt(t) * (1.0 + 1e-12) + 1e-12


def test_band_offsets_nest_under_refinement():
    grid = SampleGrid(nxi=5, band=2.0)
    coarse = grid.offsets(4.0, 1.0)
    fine = grid.refined(2).offsets(4.0, 1.0)
    assert coarse.min() == pytest.approx(-8.0) and coarse.max() == pytest.approx(8.0)
    assert all(np.any(np.isclose(fine, xi)) for xi in coarse)
    with pytest.raises(ConfigValidationError):
        SampleGrid(band=0.0)


def test_refined_samples_contain_the_coarse_ones():
    grid = SampleGrid()
    coarse = check_bfield_bound(C1, grid)
    fine = check_bfield_bound(C1, grid.refined(2))
    assert fine.samples > coarse.samples
    assert fine.value >= coarse.value
    assert refinement_change(coarse, coarse) == 0.0
    assert 0.0 <= refinement_change(coarse, fine) < 1.0


def test_report_requires_samples():
    with pytest.raises(VerificationError):
        _report("empty", SUP_RATIO, [], [], ("x",))


def test_report_tolerance_and_rows():
    report = _report("demo", MAX_RESIDUAL, [1e-9, 3e-9], [(0.0,), (1.0,)], ("x",), tolerance=2e-9)
    assert not report.passed
    assert report.argmax == (1.0,)
    assert report.columns == ("x", "value")
    assert report.rows == ((0.0, 1e-9), (1.0, 3e-9))
    assert report.to_dict()["columns"] == ["x"]


def test_lemma_samples_layout():
    samples = LemmaSamples(times=(1.0, 4.0), nx=3, tail=True)
    points = samples.points(C1, TEMPLATE)
    assert len(points) == 8
    assert points[0] == (0.0, 1.0)
    assert samples.refined(2).nx == 5
    snapped = samples.on_snapshots([0.0, 0.9, 3.8, 5.0])
    assert snapped.times == (0.9, 3.8)


def test_front_samples_straddle_the_plateau_edge():
    samples = LemmaSamples(times=(3.0,), nx=5, spread=2.0, front=True)
    xs = [x for x, _ in samples.points(C1, TEMPLATE)]
    # c (t + 1) = 4, half-width 2 sqrt(4 (t + 1)) = 8
    np.testing.assert_allclose(xs, [-4.0, 0.0, 4.0, 8.0, 12.0])
    fine = [x for x, _ in samples.refined(2).points(C1, TEMPLATE)]
    assert len(fine) == 9
    assert all(np.any(np.isclose(fine, x)) for x in xs)
    assert EDIFF_SAMPLES.front and EDIFF_SAMPLES.tail


@pytest.mark.slow
def test_lemma_tg_ratio_is_finite():
    report = check_lemma_tG(C1, TEMPLATE, LemmaSamples(times=(1.0, 4.0), nx=2), QUAD)
    assert report.samples == 4
    assert np.isfinite(report.value) and report.value > 0.0
    assert set(report.parameters["sup_by_time"]) == {"1", "4"}
    off_center = [row for row in report.rows if row[0] > 0.0]
    assert len(off_center) == 2
    assert all(np.all(np.isfinite(row)) for row in report.rows)
