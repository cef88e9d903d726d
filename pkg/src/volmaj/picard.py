"""Successive approximation of the main solution with certified stops.

The main solution is the limit of u_0 = 0, u_{n+1} = u_n - A^{-1}F(u_n).
When a certified majorant on the same mesh is supplied, each iterate
norm is dominated by the matching chain iterate and the distance to the
limit by (certified bound - chain iterate), so iteration can stop as
soon as that tail drops below tolerance even if the step size alone
would not justify stopping.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import SpecValidationError
from .integral_majorant import MajorantSolution
from .meshes import Mesh, Trajectory, zero_trajectory
from .problem import VolterraProblem, eval_residual, picard_step
from .quadrature import trapezoid_weights

__all__ = [
    "SolveStatus",
    "SolveReport",
    "DominationReport",
    "solve_main",
    "solve_from",
    "residual_norms",
    "verify_domination",
]


class SolveStatus(enum.Enum):
    CONVERGED = "converged"
    NOT_CONVERGED = "not-converged"


@dataclass(frozen=True, eq=False)
class SolveReport:
    trajectory: Trajectory
    iterations: int
    status: SolveStatus
    residuals: np.ndarray
    residual_bound: float
    certified_bounds: np.ndarray | None
    iterates: tuple[tuple[int, Trajectory], ...]
    stop_reason: str
    final_step: float
    final_tail: float | None
    main_solution: bool


@dataclass(frozen=True)
class DominationReport:
    holds: bool
    checked: int
    worst_margin: float
    violations: tuple[tuple[int, int, float, float], ...]


def _check_majorant_mesh(mesh: Mesh, majorant: MajorantSolution) -> None:
    if not np.array_equal(mesh.nodes, majorant.mesh.nodes):
        raise SpecValidationError(
            "majorant and solver must share one mesh; rebuild the majorant"
            " on the solver mesh"
        )


def _solve(
    problem: VolterraProblem,
    start: Trajectory,
    tol: float,
    n_max: int,
    majorant: MajorantSolution | None,
    chain_cap: int,
    main: bool,
) -> SolveReport:
    mesh = start.mesh
    if mesh.end > problem.t_max:
        raise SpecValidationError(
            f"mesh end {mesh.end!r} exceeds the problem window {problem.t_max!r}"
        )
    if majorant is not None:
        _check_majorant_mesh(mesh, majorant)
    if n_max < 1:
        raise SpecValidationError(f"n_max must be >= 1, got {n_max}")
    if chain_cap < 4:
        raise SpecValidationError(f"chain_cap must be >= 4, got {chain_cap}")
    weights = trapezoid_weights(mesh)
    u = start
    stored: list[tuple[int, Trajectory]] = [(0, u)]
    status = SolveStatus.NOT_CONVERGED
    stop_reason = "max-iterations"
    final_step = np.inf
    final_tail: float | None = None
    iterations = 0
    for n in range(1, n_max + 1):
        u_new = picard_step(problem, u, weights)
        final_step = float(np.max(np.abs(u_new.values - u.values)))
        u = u_new
        iterations = n
        stored.append((n, u))
        if len(stored) > chain_cap:
            last = stored[-1]
            stored = stored[::2]
            if stored[-1][0] != last[0]:
                stored.append(last)
        if majorant is not None:
            k = min(n, majorant.chain.count - 1)
            tail_arr = majorant.certificate_bound - majorant.chain.iterates[k]
            final_tail = float(np.max(tail_arr))
        if final_step <= tol * (1.0 + u.max_norm):
            status = SolveStatus.CONVERGED
            stop_reason = "step"
            break
        if final_tail is not None and final_tail <= tol:
            status = SolveStatus.CONVERGED
            stop_reason = "certified-tail"
            break
    certified = None
    if majorant is not None:
        k = min(iterations, majorant.chain.count - 1)
        certified = np.maximum(
            majorant.certificate_bound - majorant.chain.iterates[k], 0.0
        )
        u = Trajectory(mesh, u.values, certified_bounds=certified)
        stored[-1] = (stored[-1][0], u)
    residuals = residual_norms(problem, u, weights)
    return SolveReport(
        trajectory=u,
        iterations=iterations,
        status=status,
        residuals=residuals,
        residual_bound=float(np.max(residuals)),
        certified_bounds=certified,
        iterates=tuple(stored),
        stop_reason=stop_reason,
        final_step=final_step,
        final_tail=final_tail,
        main_solution=main,
    )


def solve_main(
    problem: VolterraProblem,
    mesh: Mesh,
    tol: float = 1e-10,
    n_max: int = 200,
    majorant: MajorantSolution | None = None,
    chain_cap: int = 50,
) -> SolveReport:
    """Iterate from the zero trajectory until the step or the certified
    tail drops below tol."""
    return _solve(
        problem, zero_trajectory(mesh, problem.dim), tol, n_max, majorant,
        chain_cap, main=True,
    )


def solve_from(
    problem: VolterraProblem,
    start: Trajectory,
    tol: float = 1e-10,
    n_max: int = 200,
    chain_cap: int = 50,
) -> SolveReport:
    """Iterate from an arbitrary start; no domination claims attach."""
    if start.dim != problem.dim:
        raise SpecValidationError(
            f"start dimension {start.dim} != problem dimension {problem.dim}"
        )
    return _solve(problem, start, tol, n_max, None, chain_cap, main=False)


def residual_norms(
    problem: VolterraProblem,
    trajectory: Trajectory,
    weights=None,
) -> np.ndarray:
    """Nodewise max-abs of F(u): how far the trajectory is from solving
    the discretized equation (diagnostic, not a certified quantity)."""
    if weights is None:
        weights = trapezoid_weights(trajectory.mesh)
    return np.array(
        [
            float(np.max(np.abs(eval_residual(problem, trajectory, j, weights))))
            for j in range(trajectory.mesh.nodes.size)
        ]
    )


def verify_domination(
    report: SolveReport,
    majorant: MajorantSolution,
    slack: float = 1e-9,
) -> DominationReport:
    """Audit that every stored iterate sits under its chain iterate and
    the final iterate under the certificate bound.

    Applies to main solutions only: domination is inherited from the
    zero start, so an arbitrary start voids it.
    """
    if not report.main_solution:
        raise SpecValidationError(
            "domination auditing applies to main solutions (zero start) only"
        )
    _check_majorant_mesh(report.trajectory.mesh, majorant)
    worst = np.inf
    checked = 0
    violations: list[tuple[int, int, float, float]] = []
    top = majorant.chain.count - 1
    for idx, traj in report.iterates:
        z = majorant.chain.iterates[min(idx, top)]
        norms = traj.norms
        checked += norms.size
        margins = z - norms
        worst = min(worst, float(np.min(margins)))
        for j in np.nonzero(margins < -slack)[0]:
            if len(violations) < 20:
                violations.append(
                    (idx, int(j), float(norms[j]), float(z[j]))
                )
    final_norms = report.trajectory.norms
    margins = majorant.certificate_bound - final_norms
    checked += final_norms.size
    worst = min(worst, float(np.min(margins)))
    for j in np.nonzero(margins < -slack)[0]:
        if len(violations) < 20:
            violations.append(
                (
                    report.iterations,
                    int(j),
                    float(final_norms[j]),
                    float(majorant.certificate_bound[j]),
                )
            )
    return DominationReport(
        holds=not violations,
        checked=checked,
        worst_margin=worst,
        violations=tuple(violations),
    )
