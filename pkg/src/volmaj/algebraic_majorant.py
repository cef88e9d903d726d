"""Algebraic majorants: tangency radius, horizon, and branch.

Here the bound at time t is the smallest root r(t) of r = c * f(r, t)
with c a bound on the inverse of the linear part.  The root exists up
to the first time the line touches the graph tangentially:

    r = c * f(r, T),   1 = c * f_r(r, T).

That pair (radius, horizon) is computed twice: by a damped Newton
iteration on the 2x2 system, and by a derivative-free route that
bisects the horizon on the sign of min_r (c * f(r, t) - r) and then
polishes the radius.  The two must agree to 1e-8 or the solve is
rejected, so a silent slide into a wrong tangency cannot happen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NumericError, SpecValidationError
from .meshes import Mesh
from .quadrature import graded_mesh

__all__ = [
    "LyapunovSpec",
    "TangencyResult",
    "BranchResult",
    "ConvexityReport",
    "LyapunovSolution",
    "solve_tangency",
    "majorant_branch",
    "check_convexity",
    "solve_lyapunov",
]


def _fd_slope(f: Callable[[float, float], float], r: float, t: float) -> float:
    h = 1e-6 * max(1.0, abs(r))
    if r - h < 0.0:
        # one-sided second-order stencil keeps samples inside r >= 0
        return (-3.0 * f(r, t) + 4.0 * f(r + h, t) - f(r + 2.0 * h, t)) / (2.0 * h)
    return (f(r + h, t) - f(r - h, t)) / (2.0 * h)


@dataclass(frozen=True)
class LyapunovSpec:
    """Algebraic majorant data.

    f(r, t) must vanish at the origin and satisfy
    inv_norm_bound * f_r(0, 0) < 1, otherwise even the zero state is
    not dominated.  f_r may be omitted; a finite-difference slope is
    substituted.  r_max / t_max bound the search box.
    """

    f: Callable[[float, float], float]
    f_r: Callable[[float, float], float] | None = None
    inv_norm_bound: float = 1.0
    r_max: float = 100.0
    t_max: float = 100.0
    name: str = "lyapunov"

    def __post_init__(self):
        if not (self.inv_norm_bound > 0) or not math.isfinite(self.inv_norm_bound):
            raise SpecValidationError(
                f"inverse-norm bound must be positive and finite,"
                f" got {self.inv_norm_bound!r}"
            )
        if not (self.r_max > 0) or not (self.t_max > 0):
            raise SpecValidationError("r_max and t_max must be positive")
        try:
            f00 = float(self.f(0.0, 0.0))
        except Exception as exc:
            raise SpecValidationError(f"f(0, 0) is not evaluable: {exc}") from exc
        if not (abs(f00) <= 1e-12):
            raise SpecValidationError(
                f"f must vanish at the origin, got f(0, 0) = {f00!r}"
            )
        slope0 = self.inv_norm_bound * self.slope(0.0, 0.0)
        if not (0.0 <= slope0 < 1.0):
            raise SpecValidationError(
                f"contraction at the origin requires c * f_r(0, 0) in [0, 1),"
                f" got {slope0!r}"
            )

    def slope(self, r: float, t: float) -> float:
        if self.f_r is not None:
            return float(self.f_r(r, t))
        return _fd_slope(self.f, r, t)


@dataclass(frozen=True)
class TangencyResult:
    radius: float
    horizon: float
    fixed_residual: float
    slope_residual: float
    fallback_radius: float
    fallback_horizon: float
    newton_iterations: int


@dataclass(frozen=True, eq=False)
class BranchResult:
    values: np.ndarray
    iterations: np.ndarray
    converged_mask: np.ndarray


@dataclass(frozen=True)
class ConvexityReport:
    passed: bool
    degenerate: bool
    violations: tuple[tuple[str, float, float, float], ...]
    samples: int


@dataclass(frozen=True, eq=False)
class LyapunovSolution:
    tangency: TangencyResult
    mesh: Mesh
    radii: np.ndarray
    converged_mask: np.ndarray
    iterations: np.ndarray


def _residual(spec: LyapunovSpec, r: float, t: float) -> np.ndarray:
    c = spec.inv_norm_bound
    return np.array(
        [c * float(spec.f(r, t)) - r, c * spec.slope(r, t) - 1.0]
    )


def _try_residual(spec: LyapunovSpec, r: float, t: float) -> np.ndarray | None:
    if r < 0.0 or t < 0.0 or r > 10.0 * spec.r_max or t > 10.0 * spec.t_max:
        return None
    try:
        v = _residual(spec, r, t)
    except (DomainError, OverflowError, ValueError, ZeroDivisionError):
        return None
    if not np.all(np.isfinite(v)):
        return None
    return v


def _newton_from(
    spec: LyapunovSpec, seed: tuple[float, float], max_iter: int = 80
) -> tuple[float, float, int] | None:
    # an FD slope carries eps/h cancellation noise near 1e-10, so the
    # residual cannot be driven to the exact-slope tolerance
    floor = 1e-13 if spec.f_r is not None else 3e-9
    x = np.array(seed, dtype=float)
    res = _try_residual(spec, x[0], x[1])
    if res is None:
        return None
    for it in range(max_iter):
        nr = float(np.max(np.abs(res)))
        if nr <= floor * (1.0 + float(np.max(np.abs(x)))):
            return float(x[0]), float(x[1]), it
        jac = np.empty((2, 2))
        ok = True
        for col in range(2):
            h = 1e-7 * max(1.0, abs(x[col]))
            bumped = x.copy()
            bumped[col] += h
            res_h = _try_residual(spec, bumped[0], bumped[1])
            if res_h is None:
                ok = False
                break
            jac[:, col] = (res_h - res) / h
        if not ok:
            return None
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        accepted = False
        while lam >= 1e-6:
            cand = x + lam * step
            res_c = _try_residual(spec, cand[0], cand[1])
            if res_c is not None:
                nc = float(np.max(np.abs(res_c)))
                if nc < (1.0 - 0.25 * lam) * nr or nc < 1e-14:
                    x, res = cand, res_c
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            nr = float(np.max(np.abs(res)))
            if nr <= floor * (1.0 + float(np.max(np.abs(x)))):
                return float(x[0]), float(x[1]), it
            return None
    return None


def _branch_min(
    spec: LyapunovSpec, t: float, iters: int = 200
) -> tuple[float, float]:
    """Minimum of c*f(r, t) - r over r in [0, r_max] by ternary search;
    returns (argmin, min).  Non-finite samples push the search away."""
    c = spec.inv_norm_bound

    def phi(r: float) -> float:
        try:
            v = c * float(spec.f(r, t)) - r
        except (DomainError, OverflowError, ValueError, ZeroDivisionError):
            return math.inf
        return v if math.isfinite(v) else math.inf

    lo, hi = 0.0, spec.r_max
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if phi(m1) <= phi(m2):
            hi = m2
        else:
            lo = m1
    mid = 0.5 * (lo + hi)
    return mid, phi(mid)


def _polish_radius(spec: LyapunovSpec, r0: float, t: float) -> float:
    """1D Newton on c * f_r(r, t) = 1 in r, seeded at the ternary argmin."""
    c = spec.inv_norm_bound
    r = r0
    for _ in range(60):
        g = c * spec.slope(r, t) - 1.0
        if abs(g) <= 1e-13:
            return r
        h = 1e-6 * max(1.0, abs(r))
        curv = (c * spec.slope(r + h, t) - c * spec.slope(max(r - h, 0.0), t)) / (
            h + min(h, r)
        )
        if not math.isfinite(curv) or abs(curv) < 1e-300:
            return r
        r_new = r - g / curv
        if not math.isfinite(r_new) or r_new < 0.0 or r_new > 10.0 * spec.r_max:
            return r
        if abs(r_new - r) <= 1e-15 * max(1.0, abs(r)):
            return r_new
        r = r_new
    return r


def _fallback_tangency(spec: LyapunovSpec) -> tuple[float, float]:
    """Horizon by bisection on the sign of min_r (c*f - r), radius by
    polishing the argmin.  Needs no Jacobian, so it cross-checks the
    Newton route through entirely different arithmetic."""
    _, m0 = _branch_min(spec, 0.0)
    if not (m0 < 0.0):
        raise NumericError(
            "the majorant line already fails to cross at t=0; no branch exists"
        )
    t_hi = None
    t = spec.t_max
    _, m_hi = _branch_min(spec, t)
    if m_hi > 0.0:
        t_hi = t
    else:
        raise NumericError(
            f"no tangency below t_max={spec.t_max!r}: the smallest root"
            " persists on the whole window (consider raising t_max)"
        )
    t_lo = 0.0
    while t_hi - t_lo > 1e-11 * max(1.0, t_hi):
        mid = 0.5 * (t_lo + t_hi)
        _, m_mid = _branch_min(spec, mid)
        if m_mid > 0.0:
            t_hi = mid
        else:
            t_lo = mid
    horizon = 0.5 * (t_lo + t_hi)
    argmin, _ = _branch_min(spec, horizon)
    radius = _polish_radius(spec, argmin, horizon)
    return radius, horizon


def solve_tangency(spec: LyapunovSpec) -> TangencyResult:
    """Locate the tangency point (radius, horizon) with a cross-check.

    A 24x24 log-spaced scan seeds a damped Newton iteration on the 2x2
    tangency system; every converged root is kept and duplicates are
    merged.  More than one distinct root means the surface has several
    tangency basins and the result would be ambiguous, which raises
    NumericError, as does disagreement beyond 1e-8 with the
    derivative-free fallback.
    """
    r_grid = np.geomspace(1e-4, 1.0, 24) * spec.r_max
    t_grid = np.geomspace(1e-4, 1.0, 24) * spec.t_max
    scored: list[tuple[float, float, float]] = []
    for r in r_grid:
        for t in t_grid:
            res = _try_residual(spec, float(r), float(t))
            if res is not None:
                scored.append((float(np.max(np.abs(res))), float(r), float(t)))
    if not scored:
        raise NumericError("tangency scan found no evaluable point")
    scored.sort()
    roots: list[tuple[float, float, int]] = []
    for score, r, t in scored[:12]:
        hit = _newton_from(spec, (r, t))
        if hit is None:
            continue
        rr, tt, its = hit
        if rr <= 0.0 or tt <= 0.0:
            continue
        dup = False
        for er, et, _ in roots:
            if abs(er - rr) <= 1e-6 * max(1.0, abs(er)) and abs(
                et - tt
            ) <= 1e-6 * max(1.0, abs(et)):
                dup = True
                break
        if not dup:
            roots.append((rr, tt, its))
    if not roots:
        raise NumericError(
            f"Newton found no tangency from the best scan seeds (best scan"
            f" residual {scored[0][0]:.3e} at r={scored[0][1]:.3g},"
            f" t={scored[0][2]:.3g})"
        )
    if len(roots) > 1:
        listing = ", ".join(f"(r={r:.6g}, t={t:.6g})" for r, t, _ in roots)
        raise NumericError(f"multiple tangency candidates: {listing}")
    radius, horizon, iterations = roots[0]
    fb_radius, fb_horizon = _fallback_tangency(spec)
    scale_r = max(1.0, abs(radius))
    scale_t = max(1.0, abs(horizon))
    if abs(fb_radius - radius) > 1e-8 * scale_r or abs(
        fb_horizon - horizon
    ) > 1e-8 * scale_t:
        raise NumericError(
            f"tangency routes disagree: newton (r={radius!r}, t={horizon!r})"
            f" vs fallback (r={fb_radius!r}, t={fb_horizon!r})"
        )
    res = _residual(spec, radius, horizon)
    return TangencyResult(
        radius=radius,
        horizon=horizon,
        fixed_residual=float(res[0]),
        slope_residual=float(res[1]),
        fallback_radius=fb_radius,
        fallback_horizon=fb_horizon,
        newton_iterations=iterations,
    )


def majorant_branch(
    spec: LyapunovSpec,
    mesh: Mesh,
    tol: float = 1e-12,
    max_iter: int = 50000,
) -> BranchResult:
    """Smallest-root branch r(t) at every mesh node.

    Each node iterates r <- c * f(r, t) from 0, which increases
    monotonically to the smallest root.  Convergence slows to O(1/n)
    exactly at the horizon; the mask records which nodes met tol.
    Escape past the search box means the node lies beyond the horizon
    and raises NumericError.
    """
    c = spec.inv_norm_bound
    values = np.zeros(mesh.nodes.size)
    iterations = np.zeros(mesh.nodes.size, dtype=int)
    mask = np.zeros(mesh.nodes.size, dtype=bool)
    for j, t in enumerate(mesh.nodes):
        t = float(t)
        r = 0.0
        for k in range(1, max_iter + 1):
            try:
                r_new = c * float(spec.f(r, t))
            except (DomainError, OverflowError, ValueError, ZeroDivisionError) as exc:
                raise NumericError(
                    f"branch iteration failed at t={t!r}: {exc}"
                ) from exc
            if not math.isfinite(r_new) or r_new > 10.0 * spec.r_max:
                raise NumericError(
                    f"branch diverges at t={t!r}; the node lies beyond the"
                    " horizon"
                )
            done = abs(r_new - r) <= tol * (1.0 + abs(r_new))
            r = r_new
            if done:
                mask[j] = True
                break
        values[j] = r
        iterations[j] = k
    return BranchResult(values, iterations, mask)


def check_convexity(
    spec: LyapunovSpec,
    r_grid: np.ndarray | None = None,
    t_grid: np.ndarray | None = None,
) -> ConvexityReport:
    """Sample convexity and monotonicity of f over a grid.

    Checks, with small negative slack for roundoff: f nondecreasing in
    r and in t, f convex in r (second differences), and the slope f_r
    nondecreasing in r and in t.  An identically zero f passes but is
    flagged degenerate.
    """
    if r_grid is None:
        r_grid = np.linspace(0.0, spec.r_max, 128)
    if t_grid is None:
        t_grid = np.linspace(0.0, spec.t_max, 128)
    r_grid = np.asarray(r_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if r_grid.size < 3 or t_grid.size < 2:
        raise SpecValidationError("convexity grids need >= 3 radii and >= 2 times")
    violations: list[tuple[str, float, float, float]] = []

    def note(kind: str, r: float, t: float, v: float) -> None:
        if len(violations) < 50:
            violations.append((kind, float(r), float(t), float(v)))

    fvals = np.empty((t_grid.size, r_grid.size))
    svals = np.empty_like(fvals)
    for i, t in enumerate(t_grid):
        for j, r in enumerate(r_grid):
            try:
                fv = float(spec.f(float(r), float(t)))
                sv = spec.slope(float(r), float(t))
            except (DomainError, OverflowError, ValueError, ZeroDivisionError):
                fv = math.nan
                sv = math.nan
            if not math.isfinite(fv):
                note("not-finite", r, t, fv)
                fv = math.nan
            fvals[i, j] = fv
            svals[i, j] = sv
    scale = 1.0
    finite = fvals[np.isfinite(fvals)]
    if finite.size:
        scale = max(1.0, float(np.max(np.abs(finite))))
    slack1 = 1e-12 * scale
    # slope comparisons inherit eps/h cancellation noise when the slope
    # is a finite difference, so they get a wider margin
    slack2 = (1e-10 if spec.f_r is not None else 3e-9) * scale
    for i, t in enumerate(t_grid):
        row = fvals[i]
        srow = svals[i]
        for j in range(1, r_grid.size):
            d = row[j] - row[j - 1]
            if d < -slack1:
                note("f-decreasing-in-r", r_grid[j], t, d)
            ds = srow[j] - srow[j - 1]
            if ds < -slack2:
                note("slope-decreasing-in-r", r_grid[j], t, ds)
        for j in range(1, r_grid.size - 1):
            h1 = r_grid[j] - r_grid[j - 1]
            h2 = r_grid[j + 1] - r_grid[j]
            second = (row[j + 1] - row[j]) / h2 - (row[j] - row[j - 1]) / h1
            if second < -slack2:
                note("f-not-convex-in-r", r_grid[j], t, second)
    for j, r in enumerate(r_grid):
        col = fvals[:, j]
        scol = svals[:, j]
        for i in range(1, t_grid.size):
            d = col[i] - col[i - 1]
            if d < -slack1:
                note("f-decreasing-in-t", r, t_grid[i], d)
            ds = scol[i] - scol[i - 1]
            if ds < -slack2:
                note("slope-decreasing-in-t", r, t_grid[i], ds)
    degenerate = finite.size > 0 and float(np.max(np.abs(finite))) == 0.0
    return ConvexityReport(
        passed=not violations,
        degenerate=degenerate,
        violations=tuple(violations),
        samples=int(fvals.size),
    )


def solve_lyapunov(
    spec: LyapunovSpec,
    n: int = 200,
    t_end: float | None = None,
    tol: float = 1e-12,
    max_iter: int = 50000,
) -> LyapunovSolution:
    """Tangency point plus the branch on a uniform mesh up to t_end
    (default: the horizon itself; the final node then converges only
    like O(1/n), which the mask records)."""
    tangency = solve_tangency(spec)
    if t_end is None:
        t_end = tangency.horizon
    elif t_end > tangency.horizon * (1.0 + 1e-12):
        raise SpecValidationError(
            f"end time {t_end!r} lies beyond the horizon {tangency.horizon!r}"
        )
    mesh = graded_mesh(t_end, n, 1.0)
    branch = majorant_branch(spec, mesh, tol=tol, max_iter=max_iter)
    return LyapunovSolution(
        tangency=tangency,
        mesh=mesh,
        radii=branch.values,
        converged_mask=branch.converged_mask,
        iterations=branch.iterations,
    )
