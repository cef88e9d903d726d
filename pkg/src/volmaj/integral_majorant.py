"""Integral majorants with blow-up classification and certified bounds.

A majorant couples an outer function f(t, w) with a rate gamma(z).  The
scalar bound z solves z(t) = f(t, integral of gamma(z) over [0, t]); the
substitution w(t) = integral of gamma(z(s)) ds turns that into the
initial value problem

    w' = gamma(f(t, w)),  w(0) = 0,

whose maximal existence time is the certified horizon.  Three outcomes
are distinguished: the bound itself escapes to infinity at a finite
time (value blow-up), the bound stays finite while its slope escapes at
a finite rate pole (derivative blow-up), or the bound exists globally.

Two independent routes compute the bound on a mesh: direct integration
of the initial value problem (solve_cauchy) and successive
approximation from zero (majorant_picard).  The chain from zero is
nondecreasing and converges to the minimal bound from below, so the
pointwise maximum of the two routes is itself a valid bound; that
maximum is what gets certified.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NumericError, SpecValidationError
from .meshes import Mesh
from .quadrature import (
    _inverse_rate,
    _probe_rate,
    adaptive_quad,
    graded_mesh,
    improper_integral,
    integral_to_pole,
    trapezoid_weights,
)

__all__ = [
    "Blowup",
    "MajorantSpec",
    "BlowupReport",
    "PicardChain",
    "CauchySolution",
    "MajorantSolution",
    "UpperSolutionReport",
    "majorant_picard",
    "classify_blowup",
    "solve_cauchy",
    "certified_tail",
    "check_upper_solution",
    "solve_majorant",
]


class Blowup(enum.Enum):
    VALUE = "ValueBlowUp"
    DERIVATIVE = "DerivativeBlowUp"
    GLOBAL = "Global"


@dataclass(frozen=True)
class MajorantSpec:
    """Scalar majorant data: outer function f(t, w) and rate gamma(z).

    pole, if given, is the point where the reduced rate
    gamma(f(0, w)) stops being finite (only meaningful when f does not
    depend on t).  z_max / omega_max are optional box hints for the
    monotonicity sampler.  upper_solution is an optional closed-form
    candidate bound used by the dedicated audit.
    """

    f: Callable[[float, float], float]
    gamma: Callable[[float], float]
    pole: float | None = None
    upper_solution: Callable[[float], float] | None = None
    f_depends_on_t: bool = False
    z_max: float | None = None
    omega_max: float | None = None
    name: str = "majorant"

    def __post_init__(self):
        try:
            f00 = float(self.f(0.0, 0.0))
        except Exception as exc:
            raise SpecValidationError(f"f(0, 0) is not evaluable: {exc}") from exc
        if not math.isfinite(f00) or f00 < -1e-12:
            raise SpecValidationError(
                f"f(0, 0) must be finite and nonnegative, got {f00!r}"
            )
        try:
            g0 = float(self.gamma(max(f00, 0.0)))
        except Exception as exc:
            raise SpecValidationError(
                f"gamma is not evaluable at the initial bound: {exc}"
            ) from exc
        if not math.isfinite(g0) or g0 < -1e-12:
            raise SpecValidationError(
                f"gamma at the initial bound must be finite and nonnegative,"
                f" got {g0!r}"
            )
        if self.pole is not None and not (self.pole > 0):
            raise SpecValidationError(f"pole must be positive, got {self.pole!r}")
        for label, v in (("z_max", self.z_max), ("omega_max", self.omega_max)):
            if v is not None and not (v > 0):
                raise SpecValidationError(f"{label} must be positive, got {v!r}")

    def rate(self, w: float) -> float:
        """Reduced rate at t = 0 (the autonomous rate)."""
        return float(self.gamma(self.f(0.0, w)))

    def rate_at(self, t: float, w: float) -> float:
        return float(self.gamma(self.f(t, w)))


@dataclass(frozen=True)
class BlowupReport:
    kind: Blowup
    horizon: float
    pole: float | None
    detail: str


@dataclass(frozen=True, eq=False)
class PicardChain:
    """Successive approximations z_0 = 0, z_{k+1} = f(t, int gamma(z_k))."""

    mesh: Mesh
    iterates: tuple[np.ndarray, ...]
    converged: bool
    final_delta: float

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def count(self) -> int:
        return len(self.iterates)


@dataclass(frozen=True, eq=False)
class CauchySolution:
    """Nodewise solution of w' = gamma(f(t, w)), w(0) = 0.

    phi, present only for time-independent f, is a fresh evaluator of
    the time map: phi(w) recomputes the integral of 1/rate from 0 to w
    without reusing any cached state, so phi(omega[j]) ~ t_j is a real
    round-trip check.
    """

    mesh: Mesh
    omega: np.ndarray
    bound: np.ndarray
    phi: Callable[[float], float] | None


@dataclass(frozen=True, eq=False)
class MajorantSolution:
    classification: BlowupReport
    mesh: Mesh
    omega: np.ndarray
    bound: np.ndarray
    chain: PicardChain
    certificate_bound: np.ndarray
    phi: Callable[[float], float] | None


@dataclass(frozen=True)
class UpperSolutionReport:
    holds: bool
    worst_margin: float
    node: int
    t: float


def _apply_gamma(spec: MajorantSpec, z: np.ndarray) -> np.ndarray:
    return np.array([float(spec.gamma(float(v))) for v in z])


def _apply_f(spec: MajorantSpec, t_nodes: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.array(
        [float(spec.f(float(t), float(v))) for t, v in zip(t_nodes, w)]
    )


def majorant_picard(
    spec: MajorantSpec,
    mesh: Mesh,
    tol: float = 1e-12,
    n_max: int = 500,
) -> PicardChain:
    """Iterate the discrete majorant map from zero on a mesh.

    The chain is nondecreasing node by node; it converges whenever the
    mesh ends strictly inside the existence window.
    """
    weights = trapezoid_weights(mesh)
    z = np.zeros(mesh.nodes.size)
    iterates = [z]
    delta = math.inf
    converged = False
    for _ in range(n_max):
        samples = _apply_gamma(spec, z)
        integrals = weights.prefix(samples)
        z_new = _apply_f(spec, mesh.nodes, integrals)
        if not np.all(np.isfinite(z_new)):
            raise NumericError(
                "majorant chain diverged on this mesh; its end time is at or"
                " beyond the blow-up horizon"
            )
        delta = float(np.max(np.abs(z_new - z)))
        iterates.append(z_new)
        z = z_new
        if delta <= tol * (1.0 + float(np.max(np.abs(z_new)))):
            converged = True
            break
    return PicardChain(mesh, tuple(iterates), converged, delta)


def _detect_pole(rate: Callable[[float], float]) -> float | None:
    """Scan for the edge of the rate's validity region.

    Returns a point just inside the edge when the rate provably spikes
    there (an actual pole), None when the rate is evaluable out to 2^60.
    """
    if _probe_rate(rate, 0.0) is None:
        raise NumericError("rate is not positive at omega=0; cannot classify")
    prev = 0.0
    first_bad = None
    for k in range(0, 61):
        w = 2.0**k
        if _probe_rate(rate, w) is None:
            first_bad = w
            break
        prev = w
    if first_bad is None:
        return None
    lo, hi = prev, first_bad
    while hi - lo > 1e-10 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if _probe_rate(rate, mid) is None:
            hi = mid
        else:
            lo = mid
    near = _probe_rate(rate, lo)
    ref = _probe_rate(rate, 0.5 * lo) if lo > 0 else None
    if near is None or ref is None:
        raise NumericError(
            f"rate validity edge near omega={hi!r} could not be probed"
        )
    if not (1.0 / near <= 1e-3 * (1.0 + 1.0 / ref)):
        raise NumericError(
            f"rate stops being evaluable near omega={hi!r} without"
            " diverging there; cannot classify the blow-up kind"
        )
    return lo


def _rk4(fn: Callable[[float, float], float], t: float, w: float, h: float) -> float:
    k1 = fn(t, w)
    k2 = fn(t + 0.5 * h, w + 0.5 * h * k1)
    k3 = fn(t + 0.5 * h, w + 0.5 * h * k2)
    k4 = fn(t + h, w + h * k3)
    return w + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _frozen_tail(spec: MajorantSpec, t: float, omega: float) -> float:
    res = improper_integral(
        lambda w: spec.rate_at(t, omega + w), tol=1e-9, octaves=80
    )
    return res.value if res.converged else math.inf


def _classify_forward(
    spec: MajorantSpec, t_cap: float, omega_cap: float
) -> BlowupReport:
    rate = spec.rate_at
    t, w, h = 0.0, 0.0, 1e-3
    rtol = 1e-10
    for _ in range(400000):
        if w >= omega_cap:
            tail = _frozen_tail(spec, t, w)
            if math.isfinite(tail):
                return BlowupReport(
                    Blowup.VALUE,
                    t + tail,
                    None,
                    f"forward integration reached w={w:.3e} at t={t:.12g};"
                    f" frozen-rate tail {tail:.3e}",
                )
            return BlowupReport(
                Blowup.GLOBAL,
                math.inf,
                None,
                f"bound exceeded {omega_cap:.1e} at t={t:.6g} but the"
                " frozen-rate tail diverges, so growth is subcritical",
            )
        if t >= t_cap:
            return BlowupReport(
                Blowup.GLOBAL,
                math.inf,
                None,
                f"bound still {w:.3e} at t={t:.3e}",
            )
        try:
            big = _rk4(rate, t, w, h)
            half = _rk4(rate, t, w, 0.5 * h)
            small = _rk4(rate, t + 0.5 * h, half, 0.5 * h)
        except (DomainError, OverflowError, ValueError, ZeroDivisionError):
            h *= 0.5
            if h < 1e-14 * max(1.0, t):
                raise NumericError(
                    f"forward integration stalled at t={t!r}: the rate stops"
                    " being evaluable ahead of the current state"
                ) from None
            continue
        if math.isfinite(small) and math.isfinite(big):
            err = abs(small - big) / 15.0
            scale = rtol * max(1.0, abs(small))
        else:
            err, scale = math.inf, 0.0
        if err <= scale:
            t += h
            w = small + (small - big) / 15.0
            h *= min(4.0, max(0.5, 0.9 * (scale / max(err, 1e-300)) ** 0.2))
        else:
            if err == math.inf:
                h *= 0.1
            else:
                h *= max(0.1, 0.9 * (scale / err) ** 0.2)
    raise NumericError("forward integration exceeded its step budget")


def classify_blowup(
    spec: MajorantSpec,
    tol: float = 1e-6,
    t_cap: float = 1e8,
    omega_cap: float = 1e12,
    octaves: int = 60,
) -> BlowupReport:
    """Decide value blow-up / derivative blow-up / global existence and
    compute the horizon.

    For time-independent f the decision comes from the improper integral
    of the inverse rate (finite: value blow-up at that time; infinite:
    global) unless the rate has a pole, in which case the slope escapes
    while the bound stays below f(pole) (derivative blow-up) and the
    horizon is the integral of the inverse rate up to the pole.  A
    time-dependent f is integrated forward instead.
    """
    if spec.f_depends_on_t:
        if spec.pole is not None:
            raise SpecValidationError(
                "a declared rate pole combines only with time-independent f"
            )
        return _classify_forward(spec, t_cap, omega_cap)
    rate = spec.rate
    if spec.pole is not None:
        horizon = integral_to_pole(rate, spec.pole, tol)
        return BlowupReport(
            Blowup.DERIVATIVE,
            horizon,
            spec.pole,
            f"declared rate pole at w={spec.pole!r}",
        )
    pole = _detect_pole(rate)
    if pole is not None:
        horizon = integral_to_pole(rate, pole, tol)
        return BlowupReport(
            Blowup.DERIVATIVE, horizon, pole, f"detected rate pole near w={pole!r}"
        )
    res = improper_integral(rate, tol=tol, octaves=octaves)
    if res.converged:
        return BlowupReport(
            Blowup.VALUE,
            res.value,
            None,
            f"inverse-rate integral converged after {len(res.trace)} panels",
        )
    return BlowupReport(
        Blowup.GLOBAL, math.inf, None, "inverse-rate integral diverges"
    )


def _autonomous_cauchy(
    spec: MajorantSpec, mesh: Mesh, pole: float | None
) -> CauchySolution:
    rate = spec.rate
    h = _inverse_rate(rate)
    target = mesh.end
    knots = [0.0]
    phis = [0.0]
    panel_tol = 1e-15 * max(1.0, target)
    while phis[-1] <= target:
        w_last = knots[-1]
        if pole is not None:
            w_next = w_last + 0.3 * (pole - w_last)
            if pole - w_next <= 1e-13 * pole:
                raise NumericError(
                    "mesh end time is not reachable below the rate pole; the"
                    " mesh extends to or past the horizon"
                )
        else:
            w_next = 1e-2 if w_last == 0.0 else 1.3 * w_last
            if w_next > 1e18:
                raise NumericError(
                    "time map failed to reach the mesh end below w=1e18; the"
                    " mesh extends to or past the horizon"
                )
        knots.append(w_next)
        phis.append(phis[-1] + adaptive_quad(h, w_last, w_next, panel_tol))
        if len(knots) > 4000:
            raise NumericError("time map knot table exceeded its budget")
    phis_arr = np.array(phis)
    knots_arr = np.array(knots)

    def omega_at(t: float) -> float:
        if t <= 0.0:
            return 0.0
        i = int(np.searchsorted(phis_arr, t, side="right")) - 1
        i = max(0, min(i, len(knots_arr) - 2))
        lo_w, hi_w = knots_arr[i], knots_arr[i + 1]
        lo_p, hi_p = phis_arr[i], phis_arr[i + 1]
        frac = (t - lo_p) / (hi_p - lo_p) if hi_p > lo_p else 0.5
        w = lo_w + frac * (hi_w - lo_w)
        blo, bhi = lo_w, hi_w
        quad_tol = 1e-15 * max(1.0, t)
        for _ in range(200):
            phi_w = lo_p + adaptive_quad(h, lo_w, w, quad_tol)
            err = phi_w - t
            if abs(err) <= 1e-11 * max(1.0, t):
                return float(w)
            if err > 0.0:
                bhi = min(bhi, w)
            else:
                blo = max(blo, w)
            r = _probe_rate(rate, w)
            w_new = w - err * r if r is not None and math.isfinite(r) else None
            if w_new is None or not (blo < w_new < bhi):
                w_new = 0.5 * (blo + bhi)
            w = w_new
        raise NumericError(f"time map inversion stalled at t={t!r}")

    omega = np.array([omega_at(float(t)) for t in mesh.nodes])
    bound = _apply_f(spec, mesh.nodes, omega)

    def fresh_phi(w: float) -> float:
        return adaptive_quad(h, 0.0, float(w), 1e-12)

    return CauchySolution(mesh, omega, bound, fresh_phi)


def _gap_rk4(
    rate: Callable[[float, float], float], t0: float, w0: float, gap: float
) -> float:
    prev = None
    n = 4
    while n <= 2**22:
        w = w0
        sub = gap / n
        for i in range(n):
            w = _rk4(rate, t0 + i * sub, w, sub)
        if not math.isfinite(w):
            raise NumericError(
                f"bound integration left the finite range inside the gap"
                f" starting at t={t0!r}"
            )
        if prev is not None and abs(w - prev) <= 1e-12 * max(1.0, abs(w)):
            return w + (w - prev) / 15.0
        prev = w
        n *= 2
    raise NumericError(f"gap integration did not settle at t={t0!r}")


def solve_cauchy(spec: MajorantSpec, mesh: Mesh) -> CauchySolution:
    """Solve the reduced initial value problem at every mesh node.

    Time-independent f goes through the monotone time map (integral of
    the inverse rate) inverted by bracketed Newton steps; the result
    carries a fresh phi for round-trip audits.  Time-dependent f falls
    back to per-gap Runge-Kutta with Richardson control and phi=None.
    """
    if spec.f_depends_on_t:
        omega = np.zeros(mesh.nodes.size)
        for j in range(mesh.n):
            omega[j + 1] = _gap_rk4(
                spec.rate_at,
                float(mesh.nodes[j]),
                float(omega[j]),
                float(mesh.gaps[j]),
            )
        bound = _apply_f(spec, mesh.nodes, omega)
        return CauchySolution(mesh, omega, bound, None)
    pole = spec.pole
    if pole is None:
        pole = _detect_pole(spec.rate)
    return _autonomous_cauchy(spec, mesh, pole)


def certified_tail(
    chain: PicardChain, z_plus: np.ndarray, slack: float = 1e-12
) -> np.ndarray:
    """Per-iterate certified error bounds: row n holds z_plus - z_n.

    Requires every iterate to sit below z_plus (within slack) and the
    rows to be nonincreasing in n, which is exactly the domination
    structure the chain guarantees; violations raise NumericError.
    """
    z_plus = np.asarray(z_plus, dtype=float)
    if z_plus.shape != (chain.mesh.nodes.size,):
        raise SpecValidationError("z_plus must hold one value per mesh node")
    rows = []
    for n, z in enumerate(chain.iterates):
        diff = z_plus - z
        low = float(np.min(diff))
        if low < -slack:
            raise NumericError(
                f"iterate {n} exceeds the certified bound by {-low:.3e}"
            )
        rows.append(np.maximum(diff, 0.0))
    tails = np.vstack(rows)
    drops = np.diff(tails, axis=0)
    if drops.size and float(np.max(drops)) > slack:
        raise NumericError(
            "certified tails are not nonincreasing along the chain"
        )
    return tails


def check_upper_solution(
    spec: MajorantSpec,
    upper: Callable[[float], float],
    mesh: Mesh,
    slack: float = 1e-10,
) -> UpperSolutionReport:
    """Audit a candidate closed-form bound on a mesh.

    The candidate passes when upper(t) >= f(t, integral of
    gamma(upper)) - slack at every node; the running integral is
    accumulated with per-gap adaptive quadrature on the continuous
    candidate, not on mesh samples, so equality cases survive the
    audit.  On failure the report points at the first violating node
    while the margin stays the worst one seen anywhere.
    """
    running = 0.0
    worst = math.inf
    first_bad = None
    for j, t in enumerate(mesh.nodes):
        if j > 0:
            a, b = float(mesh.nodes[j - 1]), float(t)
            running += adaptive_quad(
                lambda s: float(spec.gamma(upper(s))),
                a,
                b,
                1e-14 * max(1.0, running),
            )
        margin = float(upper(float(t))) - float(spec.f(float(t), running))
        worst = min(worst, margin)
        if margin < -slack and first_bad is None:
            first_bad = j
    node = 0 if first_bad is None else first_bad
    return UpperSolutionReport(
        first_bad is None, worst, node, float(mesh.nodes[node])
    )


def solve_majorant(
    spec: MajorantSpec,
    t_end: float | None = None,
    n: int = 200,
    ratio: float = 1.0,
    tol: float = 1e-12,
    n_max: int = 500,
    horizon_fraction: float = 0.95,
    classification: BlowupReport | None = None,
    mesh: Mesh | None = None,
) -> MajorantSolution:
    """Classify, mesh, and certify a majorant in one call.

    Without an explicit t_end the mesh covers horizon_fraction of a
    finite horizon; a global majorant then has no natural end time and
    the caller must provide one.  A prebuilt mesh overrides t_end / n /
    ratio, which lets a solver and its certificate share exact nodes.
    certificate_bound is the pointwise maximum of the two independent
    routes and is the array safe to certify against.
    """
    report = classification or classify_blowup(spec)
    if mesh is not None:
        t_end = mesh.end
    elif t_end is None:
        if not math.isfinite(report.horizon):
            raise SpecValidationError(
                "a global majorant needs an explicit end time"
            )
        if not (0 < horizon_fraction < 1):
            raise SpecValidationError(
                f"horizon fraction must sit in (0, 1), got {horizon_fraction!r}"
            )
        t_end = horizon_fraction * report.horizon
    if t_end >= report.horizon:
        raise SpecValidationError(
            f"end time {t_end!r} is not inside the existence window"
            f" [0, {report.horizon!r})"
        )
    if mesh is None:
        mesh = graded_mesh(t_end, n, ratio)
    cauchy = solve_cauchy(spec, mesh)
    chain = majorant_picard(spec, mesh, tol=tol, n_max=n_max)
    certificate = np.maximum(cauchy.bound, chain.final)
    return MajorantSolution(
        classification=report,
        mesh=mesh,
        omega=cauchy.omega,
        bound=cauchy.bound,
        chain=chain,
        certificate_bound=certificate,
        phi=cauchy.phi,
    )
