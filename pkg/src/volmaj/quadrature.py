"""Quadrature: composite trapezoid tables on a mesh, tensor-product
nested integrals, adaptive Simpson, and improper integrals over [0, inf).

The trapezoid rule is the workhorse because its weights are nonnegative
for any mesh, which the domination arguments for certified bounds rely
on.  Everything adaptive (Simpson, octave doubling) is used only for
scalar classification integrals, never for trajectory quadrature.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CostLimitError, DomainError, NumericError, SpecValidationError
from .meshes import Mesh, Trajectory

__all__ = [
    "graded_mesh",
    "WeightTable",
    "trapezoid_weights",
    "nested_integral",
    "ImproperResult",
    "improper_integral",
    "integral_to_pole",
    "adaptive_quad",
]


def graded_mesh(t_end: float, n: int, ratio: float = 1.0) -> Mesh:
    """Mesh on [0, t_end] with n gaps in geometric progression.

    ratio is the factor between consecutive gaps; ratio < 1 concentrates
    nodes near t_end, which is where majorants steepen.
    """
    if not (t_end > 0):
        raise SpecValidationError(f"t_end must be positive, got {t_end!r}")
    if n < 1:
        raise SpecValidationError(f"need at least one gap, got n={n}")
    if not (ratio > 0) or not math.isfinite(ratio):
        raise SpecValidationError(f"gap ratio must be positive, got {ratio!r}")
    if ratio == 1.0:
        nodes = np.linspace(0.0, t_end, n + 1)
        return Mesh(nodes, grading="uniform", ratio=1.0)
    k = np.arange(n + 1, dtype=float)
    nodes = t_end * (1.0 - ratio**k) / (1.0 - ratio**n)
    nodes[0] = 0.0
    nodes[-1] = t_end
    return Mesh(nodes, grading="geometric", ratio=ratio)


class WeightTable:
    """Composite trapezoid weights for prefixes of a mesh.

    row(j) holds weights w such that sum_k w[k] * f(t_k) approximates
    the integral of f from 0 to t_j.  Rows are cached lazily.
    """

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self._rows: dict[int, np.ndarray] = {}

    def row(self, j: int) -> np.ndarray:
        if not 0 <= j <= self.mesh.n:
            raise IndexError(f"node index {j} outside 0..{self.mesh.n}")
        cached = self._rows.get(j)
        if cached is not None:
            return cached
        w = np.zeros(j + 1)
        if j > 0:
            half = self.mesh.gaps[:j] / 2.0
            w[:-1] += half
            w[1:] += half
        w.flags.writeable = False
        self._rows[j] = w
        return w

    def prefix(self, samples: np.ndarray) -> np.ndarray:
        """Integrals from 0 to every node of a sampled integrand."""
        samples = np.asarray(samples, dtype=float)
        if samples.shape != (self.mesh.nodes.size,):
            raise SpecValidationError(
                "prefix needs one sample per mesh node"
            )
        panels = self.mesh.gaps * (samples[:-1] + samples[1:]) / 2.0
        out = np.empty_like(samples)
        out[0] = 0.0
        np.cumsum(panels, out=out[1:])
        return out

    def matrix(self) -> np.ndarray:
        """Dense (n+1, n+1) lower-triangular weight matrix."""
        size = self.mesh.nodes.size
        m = np.zeros((size, size))
        for j in range(size):
            m[j, : j + 1] = self.row(j)
        return m


def trapezoid_weights(mesh: Mesh) -> WeightTable:
    return WeightTable(mesh)


def nested_integral(
    stage,
    weights: WeightTable,
    trajectory: Trajectory,
    j: int,
    max_evals: float = 2e7,
) -> np.ndarray:
    """Tensor-product trapezoid value of one integral stage at node j.

    A stage of fold d integrates its kernel over the d-fold box
    [0, t_j]^d; the rule uses every tuple of mesh nodes up to j, which
    costs (j+1)**d kernel calls.
    """
    fold = stage.fold
    if fold < 1:
        raise SpecValidationError(f"stage fold must be >= 1, got {fold}")
    if float(j + 1) ** fold > max_evals:
        raise CostLimitError(
            f"nested integral needs {(j + 1) ** fold:.3g} kernel calls"
            f" at node {j}, above the budget {max_evals:.3g}"
        )
    t = float(trajectory.mesh.nodes[j])
    w = weights.row(j)
    nodes = trajectory.mesh.nodes
    values = trajectory.values
    total = np.zeros(trajectory.dim)
    if fold == 1:
        for k in range(j + 1):
            if w[k] == 0.0:
                continue
            total += w[k] * np.asarray(
                stage.evaluate(t, (float(nodes[k]),), (values[k],)), dtype=float
            )
        return total
    if fold == 2:
        for k1 in range(j + 1):
            if w[k1] == 0.0:
                continue
            for k2 in range(j + 1):
                wk = w[k1] * w[k2]
                if wk == 0.0:
                    continue
                total += wk * np.asarray(
                    stage.evaluate(
                        t,
                        (float(nodes[k1]), float(nodes[k2])),
                        (values[k1], values[k2]),
                    ),
                    dtype=float,
                )
        return total
    for combo in itertools.product(range(j + 1), repeat=fold):
        wk = 1.0
        for k in combo:
            wk *= w[k]
        if wk == 0.0:
            continue
        total += wk * np.asarray(
            stage.evaluate(
                t,
                tuple(float(nodes[k]) for k in combo),
                tuple(values[k] for k in combo),
            ),
            dtype=float,
        )
    return total


def _simpson_rec(g, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = g(lm)
    frm = g(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return _simpson_rec(
        g, a, m, fa, flm, fm, left, tol / 2.0, depth - 1
    ) + _simpson_rec(g, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)


def adaptive_quad(
    g: Callable[[float], float],
    a: float,
    b: float,
    tol: float,
    fa: float | None = None,
    fb: float | None = None,
    max_depth: int = 48,
) -> float:
    """Adaptive Simpson with Richardson correction.

    fa / fb override the endpoint samples, which lets callers force a
    known limit value at an endpoint the integrand cannot be evaluated
    at (for example a pole of the underlying rate).
    """
    if b == a:
        return 0.0
    if b < a:
        raise SpecValidationError("integration bounds must satisfy a <= b")
    fa = g(a) if fa is None else fa
    fb = g(b) if fb is None else fb
    m = 0.5 * (a + b)
    fm = g(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_rec(g, a, b, fa, fm, fb, whole, tol, max_depth)


def _probe_rate(g: Callable[[float], float], w: float) -> float | None:
    """Sample a rate function, mapping failures to None and magnitude
    overflow to +inf."""
    try:
        v = g(w)
    except OverflowError:
        return math.inf
    except (DomainError, ValueError, ZeroDivisionError):
        return None
    if isinstance(v, complex):
        return None
    v = float(v)
    if math.isnan(v) or v <= 0.0:
        return None
    return v


@dataclass(frozen=True)
class ImproperResult:
    converged: bool
    value: float
    trace: tuple[tuple[float, float], ...]


_PROBE_POINTS = (0.0, 1e-6, 0.5, 1.0, 10.0, 1e3)


def _inverse_rate(g: Callable[[float], float]) -> Callable[[float], float]:
    def h(w: float) -> float:
        r = _probe_rate(g, w)
        if r is None:
            raise NumericError(
                f"rate is not positive at omega={w!r}; classification needs a"
                " positive rate away from a declared pole"
            )
        if r == math.inf:
            return 0.0
        return 1.0 / r

    return h


def improper_integral(
    g: Callable[[float], float],
    tol: float = 1e-6,
    cap: float = 1e8,
    octaves: int = 60,
) -> ImproperResult:
    """Integral of 1/g over [0, inf) by octave doubling.

    Returns converged=True with the value (finite blow-up time) when the
    octave increments decay geometrically, or converged=False with value
    +inf when the running total passes cap or the octaves are exhausted,
    which signals divergence (global existence).
    """
    for w in _PROBE_POINTS:
        r = _probe_rate(g, w)
        if r is None or (w == 0.0 and r == 0.0):
            raise NumericError(
                f"rate must be positive on [0, inf); failed at omega={w!r}"
            )
    h = _inverse_rate(g)
    trace: list[tuple[float, float]] = []

    def panel_tol(total: float) -> float:
        return max(1e-15, 0.01 * tol * max(1.0, total))

    total = adaptive_quad(h, 0.0, 1.0, panel_tol(0.0))
    trace.append((1.0, total))
    incs: list[float] = []
    for k in range(1, octaves + 1):
        lo, hi = 2.0 ** (k - 1), 2.0**k
        if k == 1:
            inc = adaptive_quad(h, lo, hi, panel_tol(total))
        else:
            # map [lo, hi] to [1/hi, 1/lo] via omega = 1/v so the panel
            # stays O(1) wide however far out the tail goes
            def mapped(v: float) -> float:
                return h(1.0 / v) / (v * v)

            inc = adaptive_quad(mapped, 1.0 / hi, 1.0 / lo, panel_tol(total))
        total += inc
        trace.append((hi, total))
        if total > cap:
            return ImproperResult(False, math.inf, tuple(trace))
        incs.append(inc)
        if len(incs) >= 2:
            scale = max(1.0, total)
            prev, last = incs[-2], incs[-1]
            if prev < tol * scale and last < tol * scale:
                if prev > 0.0 and 0.0 < last / prev < 0.9:
                    ratio = last / prev
                    tail = last * ratio / (1.0 - ratio)
                else:
                    tail = last
                if tail < tol * scale:
                    return ImproperResult(True, total + tail, tuple(trace))
    return ImproperResult(False, math.inf, tuple(trace))


def integral_to_pole(
    g: Callable[[float], float], pole: float, tol: float = 1e-6
) -> float:
    """Integral of 1/g from 0 up to a pole of g, where 1/g tends to 0.

    The endpoint sample at the pole is forced to zero because g itself
    is typically not evaluable there.
    """
    if not (pole > 0) or not math.isfinite(pole):
        raise SpecValidationError(f"pole must be a positive number, got {pole!r}")
    h = _inverse_rate(g)
    return adaptive_quad(h, 0.0, pole, max(1e-15, 0.01 * tol), fb=0.0)
