"""Sampled audits of the domination conditions, with replayable witnesses."""

import math

import numpy as np
import pytest

from volmaj.conditions import (
    DEFAULT_SEED,
    STREAM_U,
    ConditionStatus,
    TrajectorySampler,
    check_A,
    run_suite,
    sample_margins_A,
)
from volmaj.corpus import corpus_build
from volmaj.errors import SpecValidationError
from volmaj.integral_majorant import MajorantSpec
from volmaj.problem import DenseOperator, VolterraProblem
from volmaj.quadrature import graded_mesh


def bvp_setup(t_end=0.4, nodes=60):
    entry = corpus_build("sine_bvp")
    return entry, graded_mesh(t_end, nodes, 1.0)


class TestSuiteOnCorpus:
    def test_bvp_all_pass(self):
        entry, mesh = bvp_setup()
        report = run_suite(
            problem=entry.problem,
            majorant=entry.majorant,
            lyapunov=entry.lyapunov,
            mesh=mesh,
            n_samples=40,
        )
        assert report.failed == ()
        for label in "ABCDEG":
            assert report.outcomes[label].status is ConditionStatus.PASS

    def test_power_family_increment_condition_fails_honestly(self):
        # the growth rate has unbounded slope at zero, so increments of
        # sign-flipping samples overshoot the bound; the suite reports
        # the failure instead of crashing
        entry = corpus_build("power_family")
        mesh = graded_mesh(1.0, 60, 1.0)
        report = run_suite(
            problem=entry.problem,
            majorant=entry.majorant,
            mesh=mesh,
            n_samples=40,
        )
        assert report.outcomes["D"].status is ConditionStatus.FAIL
        assert "D" in report.failed
        w = report.outcomes["D"].witness
        assert w is not None and w.lhs > w.rhs

    def test_majorant_only_skips_trajectory_conditions(self):
        entry = corpus_build("linear_majorant")
        report = run_suite(majorant=entry.majorant, mesh=graded_mesh(1.0, 20, 1.0))
        for label in "ADE":
            o = report.outcomes[label]
            assert o.status is ConditionStatus.SKIPPED
            assert "no problem" in o.reason
        assert report.outcomes["B"].status is ConditionStatus.PASS
        assert report.failed == ()

    def test_problem_without_mesh_rejected(self):
        entry, _ = bvp_setup()
        with pytest.raises(SpecValidationError):
            run_suite(problem=entry.problem, majorant=entry.majorant, mesh=None)

    def test_no_upper_solution_skips_candidate_audit(self):
        spec = MajorantSpec(f=lambda t, w: w + 1.0, gamma=lambda z: z, name="bare")
        report = run_suite(majorant=spec, mesh=graded_mesh(1.0, 10, 1.0))
        c = report.outcomes["C"]
        assert c.status is ConditionStatus.SKIPPED
        assert "upper solution" in c.reason


class TestConstructedFailures:
    def test_residual_bound_failure(self):
        # nonlinear part is 2t while the bound only allows t
        def outer(t, integrals, u):
            return u + 2.0 * t

        problem = VolterraProblem(
            dim=1,
            stages=(),
            outer=outer,
            operator=DenseOperator(np.array([[1.0]])),
            inv_norm_bound=1.0,
            name="forcing too big",
        )
        spec = MajorantSpec(
            f=lambda t, w: w + t, gamma=lambda z: 0.0, name="tight bound"
        )
        mesh = graded_mesh(1.0, 10, 1.0)
        outcome = check_A(problem, spec, mesh, n_samples=5)
        assert outcome.status is ConditionStatus.FAIL
        w = outcome.witness
        assert w is not None
        assert w.lhs == pytest.approx(2.0 * w.t, rel=1e-12)
        assert w.rhs == pytest.approx(w.t, rel=1e-12)

    def test_monotonicity_failure_of_rate(self):
        spec = MajorantSpec(f=lambda t, w: w, gamma=math.sin, name="wavy rate")
        report = run_suite(majorant=spec)
        assert report.outcomes["B"].status is ConditionStatus.FAIL


class TestWitnessReplay:
    def test_margins_reproduce_from_stream(self):
        entry, mesh = bvp_setup()
        outcome = check_A(entry.problem, entry.majorant, mesh, n_samples=15)
        assert outcome.status is ConditionStatus.PASS
        sampler = TrajectorySampler(mesh, entry.problem.dim, seed=DEFAULT_SEED)
        # margins for any sample index can be recomputed bit for bit
        tr = sampler.draw(STREAM_U, 7)
        lhs_a, rhs_a = sample_margins_A(entry.problem, entry.majorant, tr)
        lhs_b, rhs_b = sample_margins_A(
            entry.problem, entry.majorant, sampler.draw(STREAM_U, 7)
        )
        assert np.array_equal(lhs_a, lhs_b)
        assert np.array_equal(rhs_a, rhs_b)

    def test_suite_deterministic(self):
        entry, mesh = bvp_setup(nodes=40)
        kw = dict(
            problem=entry.problem,
            majorant=entry.majorant,
            lyapunov=entry.lyapunov,
            mesh=mesh,
            n_samples=25,
        )
        a = run_suite(**kw)
        b = run_suite(**kw)
        for label in a.outcomes:
            x, y = a.outcomes[label], b.outcomes[label]
            assert x.status is y.status
            assert (
                x.worst_margin == y.worst_margin
                or (math.isnan(x.worst_margin) and math.isnan(y.worst_margin))
            )

    def test_seed_changes_samples(self):
        entry, mesh = bvp_setup(nodes=30)
        a = check_A(entry.problem, entry.majorant, mesh, n_samples=10, seed=1)
        b = check_A(entry.problem, entry.majorant, mesh, n_samples=10, seed=2)
        assert a.worst_margin != b.worst_margin


class TestSampler:
    def test_continuity_smoothing_keeps_bound(self):
        mesh = graded_mesh(1.0, 50, 1.0)
        sampler = TrajectorySampler(mesh, 3, bound=0.7, seed=DEFAULT_SEED)
        tr = sampler.draw(STREAM_U, 0)
        assert tr.values.shape == (51, 3)
        assert float(np.max(np.abs(tr.values))) <= 0.7 + 1e-12

    def test_distinct_streams_distinct_draws(self):
        mesh = graded_mesh(1.0, 20, 1.0)
        sampler = TrajectorySampler(mesh, 2, DEFAULT_SEED)
        a = sampler.draw(1, 0).values
        b = sampler.draw(2, 0).values
        assert not np.array_equal(a, b)
