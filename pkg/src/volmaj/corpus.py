"""Worked examples wired for end-to-end runs and cross-checked tests.

Each entry bundles whatever pieces the example has: a discrete problem,
an integral majorant, an algebraic majorant, and closed forms that the
test suite uses as independent oracles.  Entries without a problem are
majorant-only demonstrations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebraic_majorant import LyapunovSpec
from .errors import SpecValidationError
from .integral_majorant import MajorantSpec
from .problem import DenseOperator, KernelStage, TridiagonalOperator, VolterraProblem

__all__ = [
    "CorpusEntry",
    "corpus_names",
    "corpus_build",
    "corpus_param_types",
    "power_family",
    "sine_bvp",
    "linear_majorant",
    "sqrt_pole",
    "interior_points",
    "second_difference_operator",
    "green_matrix",
    "green_apply",
    "bvp_divided_differences",
]


@dataclass(frozen=True, eq=False)
class CorpusEntry:
    name: str
    params: dict
    problem: VolterraProblem | None
    majorant: MajorantSpec | None
    lyapunov: LyapunovSpec | None
    closed_forms: dict
    notes: str
    majorant_classifiable: bool = True
    degenerate: bool = False
    default_t_end: float | None = None
    default_nodes: int = 40


def power_family(p: float = 2.0) -> CorpusEntry:
    """Scalar equation u(t) = integral of p * sign(u) |u|^((p-1)/p).

    The main solution is identically zero, yet t^p and every shifted
    copy max(t - c, 0)^p solve the equation too, so uniqueness fails
    while the zero bound stays exact.  The exponent is (p-1)/p so that
    t^p satisfies the equation identically; with p/(p-1) in its place
    t^p would not solve it.
    """
    if not (p > 1.0) or not math.isfinite(p):
        raise SpecValidationError(f"power_family needs p > 1, got {p!r}")
    e = (p - 1.0) / p

    def kernel(t: float, s: tuple, u: tuple) -> np.ndarray:
        v = float(u[0][0])
        return np.array([p * math.copysign(abs(v) ** e, v)])

    def outer(t: float, integrals: tuple, u: np.ndarray) -> np.ndarray:
        return u - integrals[0]

    problem = VolterraProblem(
        dim=1,
        stages=(KernelStage(1, kernel),),
        outer=outer,
        operator=DenseOperator([[1.0]]),
        inv_norm_bound=1.0,
        name=f"power_family(p={p:g})",
    )
    majorant = MajorantSpec(
        f=lambda t, w: p * w,
        gamma=lambda z: max(z, 0.0) ** e,
        upper_solution=lambda t: t**p,
        name=f"power_family(p={p:g}) majorant",
    )

    def shifted(c: float) -> Callable[[float], float]:
        return lambda t: max(t - c, 0.0) ** p

    return CorpusEntry(
        name="power_family",
        params={"p": p},
        problem=problem,
        majorant=majorant,
        lyapunov=None,
        closed_forms={
            "zero": lambda t: 0.0,
            "monomial": lambda t: t**p,
            "shifted": shifted,
        },
        notes=(
            "non-unique scalar equation; rate vanishes at zero, so blow-up"
            " classification does not apply and the chain from zero is"
            " identically zero"
        ),
        majorant_classifiable=False,
        default_t_end=1.0,
        default_nodes=40,
    )


def interior_points(m: int) -> np.ndarray:
    if m < 3:
        raise SpecValidationError(f"need at least 3 interior points, got {m}")
    h = 1.0 / (m + 1)
    return np.arange(1, m + 1) * h


def second_difference_operator(m: int) -> TridiagonalOperator:
    """Divided second differences on m interior points of [0, 1] with
    zero boundary values."""
    h = 1.0 / (m + 1)
    scale = 1.0 / (h * h)
    return TridiagonalOperator(
        np.full(m - 1, scale), np.full(m, -2.0 * scale), np.full(m - 1, scale)
    )


def green_matrix(m: int) -> np.ndarray:
    """h-weighted kernel x(s-1) / s(x-1): the exact inverse of the
    divided second-difference operator, entry for entry."""
    x = interior_points(m)
    h = 1.0 / (m + 1)
    xi = x[:, None]
    sj = x[None, :]
    return h * np.where(xi <= sj, xi * (sj - 1.0), sj * (xi - 1.0))


def green_apply(m: int, values: np.ndarray) -> np.ndarray:
    return green_matrix(m) @ np.asarray(values, dtype=float)


def sine_bvp(m: int = 21) -> CorpusEntry:
    """Boundary value problem coupled to a quadratic memory integral.

    The divided second difference of u at each interior point x equals
    t - integral of sin(t - s + x) u(s, x)^2; the scalar bound solves
    z = t + integral of z^2 and equals tan t up to pi/2.
    """
    if not isinstance(m, int) or m < 3:
        raise SpecValidationError(f"sine_bvp needs an integer m >= 3, got {m!r}")
    x = interior_points(m)
    op = second_difference_operator(m)
    a_matrix = op.matrix()

    def kernel(t: float, s: tuple, u: tuple) -> np.ndarray:
        return np.sin(t - s[0] + x) * u[0] ** 2

    def outer(t: float, integrals: tuple, u: np.ndarray) -> np.ndarray:
        return a_matrix @ u + integrals[0] - t

    problem = VolterraProblem(
        dim=m,
        stages=(KernelStage(1, kernel),),
        outer=outer,
        operator=op,
        inv_norm_bound=1.0,
        name=f"sine_bvp(m={m})",
    )
    majorant = MajorantSpec(
        f=lambda t, w: w + t,
        gamma=lambda z: z * z,
        f_depends_on_t=True,
        upper_solution=math.tan,
        name=f"sine_bvp(m={m}) majorant",
    )
    lyapunov = LyapunovSpec(
        f=lambda r, t: t * r * r + t,
        f_r=lambda r, t: 2.0 * t * r,
        inv_norm_bound=1.0,
        r_max=10.0,
        t_max=5.0,
        name=f"sine_bvp(m={m}) algebraic majorant",
    )

    def branch(t: float) -> float:
        if t == 0.0:
            return 0.0
        return (1.0 - math.sqrt(1.0 - 4.0 * t * t)) / (2.0 * t)

    return CorpusEntry(
        name="sine_bvp",
        params={"m": m},
        problem=problem,
        majorant=majorant,
        lyapunov=lyapunov,
        closed_forms={
            "bound": math.tan,
            "branch": branch,
            "tangency": (1.0, 0.5),
        },
        notes=(
            "vector problem with an oscillatory memory kernel; the scalar"
            " bound tan t certifies existence strictly inside [0, pi/2)"
        ),
        default_t_end=0.4,
        default_nodes=40,
    )


def linear_majorant(a: float = 1.0, b: float = 1.0) -> CorpusEntry:
    """Majorant-only entry z = b + integral of a*z, bound b * exp(a t).

    With b = 0 the rate vanishes at the origin: the entry is flagged
    degenerate and classification is refused rather than guessed.
    """
    if not (a > 0) or not math.isfinite(a):
        raise SpecValidationError(f"linear_majorant needs a > 0, got {a!r}")
    if b < 0 or not math.isfinite(b):
        raise SpecValidationError(f"linear_majorant needs b >= 0, got {b!r}")
    majorant = MajorantSpec(
        f=lambda t, w: w + b,
        gamma=lambda z: a * z,
        upper_solution=lambda t: b * math.exp(a * t),
        name=f"linear_majorant(a={a:g}, b={b:g})",
    )
    degenerate = b == 0.0
    return CorpusEntry(
        name="linear_majorant",
        params={"a": a, "b": b},
        problem=None,
        majorant=majorant,
        lyapunov=None,
        closed_forms={"bound": lambda t: b * math.exp(a * t)},
        notes="globally existing linear bound" if not degenerate else (
            "degenerate linear bound: starts at zero and stays there; the"
            " classification integral is singular at the origin"
        ),
        majorant_classifiable=not degenerate,
        degenerate=degenerate,
        default_t_end=1.0,
        default_nodes=40,
    )


def sqrt_pole() -> CorpusEntry:
    """Majorant-only entry whose rate 1/sqrt(1 - w) has a pole at w = 1.

    The bound stays below 1 while its slope escapes, so this is the
    slope-escape case; the horizon is the integral of sqrt(1 - w) from
    0 to 1, exactly 2/3.
    """

    def gamma(z: float) -> float:
        # math.sqrt keeps arithmetic real and raises past the pole
        return 1.0 / math.sqrt(1.0 - z)

    def upper(t: float) -> float:
        return 1.0 - (1.0 - 1.5 * t) ** (2.0 / 3.0)

    majorant = MajorantSpec(
        f=lambda t, w: w,
        gamma=gamma,
        pole=1.0,
        upper_solution=upper,
        z_max=0.999,
        omega_max=0.999,
        name="sqrt_pole majorant",
    )
    return CorpusEntry(
        name="sqrt_pole",
        params={},
        problem=None,
        majorant=majorant,
        lyapunov=None,
        closed_forms={
            "bound": upper,
            "horizon": 2.0 / 3.0,
        },
        notes="slope escapes at a finite rate pole while the bound stays"
        " below 1; horizon 2/3",
        default_t_end=None,
        default_nodes=40,
    )


_BUILDERS: dict[str, Callable[..., CorpusEntry]] = {
    "linear_majorant": linear_majorant,
    "power_family": power_family,
    "sine_bvp": sine_bvp,
    "sqrt_pole": sqrt_pole,
}

_PARAM_TYPES: dict[str, dict[str, type]] = {
    "linear_majorant": {"a": float, "b": float},
    "power_family": {"p": float},
    "sine_bvp": {"m": int},
    "sqrt_pole": {},
}


def corpus_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILDERS))


def corpus_param_types(name: str) -> dict[str, type]:
    if name not in _PARAM_TYPES:
        raise SpecValidationError(f"unknown corpus entry {name!r}")
    return dict(_PARAM_TYPES[name])


def corpus_build(name: str, params: dict | None = None) -> CorpusEntry:
    if name not in _BUILDERS:
        raise SpecValidationError(
            f"unknown corpus entry {name!r}; available: {', '.join(corpus_names())}"
        )
    params = dict(params or {})
    types = _PARAM_TYPES[name]
    kwargs = {}
    for key, raw in params.items():
        if key not in types:
            raise SpecValidationError(
                f"corpus entry {name!r} takes no parameter {key!r}"
            )
        try:
            kwargs[key] = types[key](raw)
        except (TypeError, ValueError):
            raise SpecValidationError(
                f"parameter {key!r} of {name!r} must be {types[key].__name__},"
                f" got {raw!r}"
            ) from None
    return _BUILDERS[name](**kwargs)


def bvp_divided_differences(
    values: np.ndarray, h: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-time-node size, slope, and curvature of a grid function with
    zero boundary values: max |u|, max |du| / h, max |d2u| / h^2."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise SpecValidationError("expected (time nodes, space points) values")
    padded = np.zeros((values.shape[0], values.shape[1] + 2))
    padded[:, 1:-1] = values
    d0 = np.max(np.abs(values), axis=1) if values.size else np.zeros(len(values))
    first = np.diff(padded, axis=1) / h
    d1 = np.max(np.abs(first), axis=1)
    second = np.diff(padded, n=2, axis=1) / (h * h)
    d2 = np.max(np.abs(second), axis=1)
    return d0, d1, d2
