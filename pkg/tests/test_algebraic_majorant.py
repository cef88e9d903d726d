"""Tangency system, radius branch, and convexity screening."""

import math

import numpy as np
import pytest

from volmaj.algebraic_majorant import (
    LyapunovSpec,
    check_convexity,
    majorant_branch,
    solve_lyapunov,
    solve_tangency,
)
from volmaj.errors import NumericError, SpecValidationError
from volmaj.quadrature import graded_mesh

QUAD = LyapunovSpec(
    f=lambda r, t: t * r * r + t,
    f_r=lambda r, t: 2.0 * t * r,
    inv_norm_bound=1.0,
    r_max=10.0,
    t_max=5.0,
    name="quadratic",
)


def closed_branch(t):
    return 0.0 if t == 0.0 else (1.0 - math.sqrt(1.0 - 4.0 * t * t)) / (2.0 * t)


class TestTangency:
    def test_unit_inverse_bound(self):
        tng = solve_tangency(QUAD)
        assert tng.radius == pytest.approx(1.0, abs=1e-10)
        assert tng.horizon == pytest.approx(0.5, abs=1e-10)

    def test_doubled_inverse_bound(self):
        spec = LyapunovSpec(
            f=QUAD.f,
            f_r=QUAD.f_r,
            inv_norm_bound=2.0,
            r_max=10.0,
            t_max=5.0,
            name="doubled",
        )
        tng = solve_tangency(spec)
        # eliminating the slope equation by hand: r = 1/(4t) gives t = 1/4
        assert tng.radius == pytest.approx(1.0, abs=1e-9)
        assert tng.horizon == pytest.approx(0.25, abs=1e-9)

    def test_exponential_growth(self):
        spec = LyapunovSpec(
            f=lambda r, t: t * math.exp(r),
            f_r=lambda r, t: t * math.exp(r),
            inv_norm_bound=1.0,
            r_max=10.0,
            t_max=5.0,
            name="exponential",
        )
        tng = solve_tangency(spec)
        assert tng.radius == pytest.approx(1.0, abs=1e-9)
        assert tng.horizon == pytest.approx(1.0 / math.e, abs=1e-9)

    def test_two_routes_agree(self):
        tng = solve_tangency(QUAD)
        assert abs(tng.radius - tng.fallback_radius) < 1e-8
        assert abs(tng.horizon - tng.fallback_horizon) < 1e-8

    def test_finite_difference_slope_route(self):
        spec = LyapunovSpec(
            f=lambda r, t: t * r * r + t,
            f_r=None,
            inv_norm_bound=1.0,
            r_max=10.0,
            t_max=5.0,
            name="fd slope",
        )
        tng = solve_tangency(spec)
        assert tng.radius == pytest.approx(1.0, abs=1e-8)
        assert tng.horizon == pytest.approx(0.5, abs=1e-8)

    def test_no_tangency_reported(self):
        spec = LyapunovSpec(
            f=lambda r, t: t + 0.1 * r,
            f_r=lambda r, t: 0.1,
            inv_norm_bound=1.0,
            r_max=50.0,
            t_max=100.0,
            name="subunit slope",
        )
        with pytest.raises(NumericError):
            solve_tangency(spec)


class TestBranch:
    def test_closed_form_on_mesh(self):
        mesh = graded_mesh(0.45, 9, 1.0)
        branch = majorant_branch(QUAD, mesh)
        want = np.array([closed_branch(float(t)) for t in mesh.nodes])
        assert np.all(branch.converged_mask)
        assert np.max(np.abs(branch.values - want)) < 1e-9

    def test_value_at_three_tenths(self):
        mesh = graded_mesh(0.3, 3, 1.0)
        branch = majorant_branch(QUAD, mesh)
        assert branch.values[-1] == pytest.approx(1.0 / 3.0, abs=1e-9)

    def test_monotone_in_time(self):
        mesh = graded_mesh(0.49, 50, 1.0)
        branch = majorant_branch(QUAD, mesh)
        assert np.all(np.diff(branch.values) >= -1e-12)

    def test_divergence_past_horizon(self):
        mesh = graded_mesh(0.8, 4, 1.0)  # horizon is 0.5
        with pytest.raises(NumericError):
            majorant_branch(QUAD, mesh)


class TestConvexity:
    def test_quadratic_passes(self):
        report = check_convexity(QUAD)
        assert report.passed
        assert not report.degenerate
        assert report.violations == ()

    def test_concave_fails_with_location(self):
        spec = LyapunovSpec(
            f=lambda r, t: t * math.sqrt(r) if r > 0 else 0.0,
            f_r=None,
            inv_norm_bound=1.0,
            r_max=1.0,
            t_max=1.0,
            name="concave",
        )
        report = check_convexity(spec)
        assert not report.passed
        kind, r, t, margin = report.violations[0]
        assert margin < 0
        assert 0.0 <= r <= 1.0 and 0.0 <= t <= 1.0

    def test_identically_zero_is_degenerate_pass(self):
        spec = LyapunovSpec(
            f=lambda r, t: 0.0,
            f_r=lambda r, t: 0.0,
            inv_norm_bound=1.0,
            r_max=1.0,
            t_max=1.0,
            name="flat",
        )
        report = check_convexity(spec)
        assert report.passed
        assert report.degenerate


class TestSolveLyapunov:
    def test_full_solution(self):
        sol = solve_lyapunov(QUAD, n=10, t_end=0.45)
        assert sol.tangency.radius == pytest.approx(1.0, abs=1e-10)
        assert np.all(sol.converged_mask)
        j = 6  # node t = 0.27
        want = closed_branch(float(sol.mesh.nodes[j]))
        assert sol.radii[j] == pytest.approx(want, abs=1e-9)

    def test_defaults_run_to_horizon(self):
        sol = solve_lyapunov(QUAD, n=16)
        assert sol.mesh.end == pytest.approx(0.5, abs=1e-9)
        # the endpoint sits at the tangency where convergence is O(1/k)
        assert bool(sol.converged_mask[-1]) in (True, False)

    def test_end_beyond_horizon_rejected(self):
        with pytest.raises(SpecValidationError):
            solve_lyapunov(QUAD, n=8, t_end=0.7)


def test_spec_validation():
    with pytest.raises(SpecValidationError):
        LyapunovSpec(
            f=lambda r, t: 1.0 + r,
            f_r=None,
            inv_norm_bound=1.0,
            r_max=1.0,
            t_max=1.0,
            name="nonzero origin",
        )
    with pytest.raises(SpecValidationError):
        LyapunovSpec(
            f=lambda r, t: 2.0 * r,
            f_r=lambda r, t: 2.0,
            inv_norm_bound=1.0,
            r_max=1.0,
            t_max=1.0,
            name="slope above one",
        )
    with pytest.raises(SpecValidationError):
        LyapunovSpec(
            f=lambda r, t: t * r * r,
            f_r=None,
            inv_norm_bound=-2.0,
            r_max=1.0,
            t_max=1.0,
            name="negative c",
        )
