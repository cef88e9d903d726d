"""Command line front end.

Subcommands: solve, majorant, lyapunov, verify (each driven by an INI
config) and corpus (list / run the built-in examples).  All numbers in
text and CSV outputs use %.9g; files are written atomically; with
--no-timestamp two runs of the same command produce byte-identical
outputs.

Exit codes: 0 ok, 2 bad config or spec, 3 numeric failure,
4 not converged, 5 sampled condition failed.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import configparser
import csv
import io
import math
import os
import sys
import tempfile
from datetime import datetime, timezone

import numpy as np

from . import expr
from .algebraic_majorant import LyapunovSpec, check_convexity, solve_lyapunov
from .conditions import DEFAULT_SEED, ConditionStatus, run_suite
from .corpus import (
    CorpusEntry,
    bvp_divided_differences,
    corpus_build,
    corpus_names,
    corpus_param_types,
)
from .errors import (
    ExprError,
    NumericError,
    SpecValidationError,
    VolmajError,
)
from .integral_majorant import (
    MajorantSolution,
    MajorantSpec,
    classify_blowup,
    majorant_picard,
    solve_majorant,
)
from .picard import SolveStatus, solve_main, verify_domination
from .problem import DenseOperator, KernelStage, VolterraProblem
from .quadrature import graded_mesh, trapezoid_weights

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_NOT_CONVERGED = 4
EXIT_CONDITION = 5

_EPILOG = (
    "expression language: numbers, + - * / ^, parentheses, and"
    " sin cos tan exp log sqrt abs.  '^' is right-associative and binds"
    " tighter than unary minus, so -t^2 means -(t^2) and 2^-3 is legal."
)


def format_number(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.9g}"


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _write_summary(
    path: str, command: str, pairs: list[tuple[str, str]], timestamp: bool
) -> None:
    lines = [f"command = {command}"]
    if timestamp:
        stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        lines.append(f"timestamp = {stamp}")
    lines.extend(f"{k} = {v}" for k, v in pairs)
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [format_number(c) if isinstance(c, float) else c for c in row]
        )
    _atomic_write(path, buf.getvalue())


def _load_config(path: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        raise SpecValidationError(f"cannot parse config {path!r}: {exc}") from exc
    if not read:
        raise SpecValidationError(f"config file {path!r} not found or unreadable")
    return cp


def _get_float(cp, section, key, default=None):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        return float(raw)
    except ValueError:
        raise SpecValidationError(
            f"[{section}] {key} must be a number, got {raw!r}"
        ) from None


def _get_int(cp, section, key, default=None):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        return int(raw)
    except ValueError:
        raise SpecValidationError(
            f"[{section}] {key} must be an integer, got {raw!r}"
        ) from None


_INLINE_KEYS = {
    "problem": frozenset(("a", "c", "kernel", "kernel2", "phi")),
    "majorant": frozenset(("f", "gamma", "pole", "zprime", "z_max", "omega_max")),
    "lyapunov": frozenset(("f", "fr", "c", "r_max", "t_max")),
}
_PLAIN_KEYS = {
    "mesh": frozenset(("n", "t_end", "theta", "ratio")),
    "tolerances": frozenset(("tol", "n_max", "blowup_tol")),
    "run": frozenset(("seed", "samples", "sample_bound")),
}


def _check_config_keys(cp) -> None:
    """A typo'd key would otherwise fall back to a default silently."""
    for section in cp.sections():
        if section in _PLAIN_KEYS:
            allowed = _PLAIN_KEYS[section]
        elif section in _INLINE_KEYS:
            src = cp.get(section, "source", fallback="inline").strip().lower()
            if src == "corpus":
                name = (cp.get(section, "entry", fallback="") or "").strip()
                try:
                    allowed = frozenset(("entry",)) | set(corpus_param_types(name))
                except SpecValidationError:
                    continue  # the bad entry name reports on its own
            elif src == "inline":
                allowed = _INLINE_KEYS[section]
            else:
                continue  # off, or a bad source value; _source_of reports those
        else:
            known = ", ".join((*_INLINE_KEYS, *_PLAIN_KEYS))
            raise SpecValidationError(
                f"unknown config section [{section}]; known sections: {known}"
            )
        for key in sorted(set(cp.options(section)) - set(cp.defaults())):
            if key != "source" and key not in allowed:
                raise SpecValidationError(
                    f"[{section}] unknown key {key!r}; known keys:"
                    f" {', '.join(sorted(allowed))}"
                )


def _source_of(cp, section: str) -> str:
    if not cp.has_section(section):
        return "none"
    src = cp.get(section, "source", fallback="inline" if cp[section] else "none")
    src = src.strip().lower()
    if src not in ("corpus", "inline", "none"):
        raise SpecValidationError(
            f"[{section}] source must be corpus, inline, or none, got {src!r}"
        )
    return src


def _corpus_entry_from(cp, section: str) -> CorpusEntry:
    name = cp.get(section, "entry", fallback=None)
    if not name:
        raise SpecValidationError(f"[{section}] source=corpus needs entry=<name>")
    name = name.strip()
    params = {}
    for key in corpus_param_types(name):
        if cp.has_option(section, key):
            params[key] = cp.get(section, key)
    return corpus_build(name, params)


def _inline_problem(cp) -> VolterraProblem:
    a = _get_float(cp, "problem", "a", 1.0)
    if a == 0 or not math.isfinite(a):
        raise SpecValidationError(f"[problem] a must be nonzero, got {a!r}")
    c = _get_float(cp, "problem", "c", 1.0 / abs(a))
    stages = []
    phi_vars = ["t", "om1"]
    kernel_text = cp.get("problem", "kernel", fallback=None)
    if kernel_text is None:
        raise SpecValidationError("[problem] inline problems need kernel=<expr>")
    k1 = expr.as_function(expr.parse(kernel_text, ("t", "s", "u")), ("t", "s", "u"))
    stages.append(
        KernelStage(1, lambda t, s, u: np.array([k1(t, s[0], float(u[0][0]))]))
    )
    kernel2_text = cp.get("problem", "kernel2", fallback=None)
    if kernel2_text is not None:
        names2 = ("t", "s1", "s2", "u1", "u2")
        k2 = expr.as_function(expr.parse(kernel2_text, names2), names2)
        stages.append(
            KernelStage(
                2,
                lambda t, s, u: np.array(
                    [k2(t, s[0], s[1], float(u[0][0]), float(u[1][0]))]
                ),
            )
        )
        phi_vars.append("om2")
    phi_vars.append("u")
    phi_text = cp.get("problem", "phi", fallback=None)
    if phi_text is None:
        raise SpecValidationError("[problem] inline problems need phi=<expr>")
    phi = expr.as_function(expr.parse(phi_text, tuple(phi_vars)), tuple(phi_vars))
    if len(stages) == 2:
        def outer(t, integrals, u):
            return np.array(
                [phi(t, float(integrals[0][0]), float(integrals[1][0]), float(u[0]))]
            )
    else:
        def outer(t, integrals, u):
            return np.array([phi(t, float(integrals[0][0]), float(u[0]))])
    return VolterraProblem(
        dim=1,
        stages=tuple(stages),
        outer=outer,
        operator=DenseOperator([[a]]),
        inv_norm_bound=c,
        name="inline",
    )


def _inline_majorant(cp) -> MajorantSpec:
    f_text = cp.get("majorant", "f", fallback=None)
    g_text = cp.get("majorant", "gamma", fallback=None)
    if f_text is None or g_text is None:
        raise SpecValidationError(
            "[majorant] inline majorants need f=<expr over t, w> and"
            " gamma=<expr over z>"
        )
    f_expr = expr.parse(f_text, ("t", "w"))
    g_expr = expr.parse(g_text, ("z",))
    f_fn = expr.as_function(f_expr, ("t", "w"))
    g_fn = expr.as_function(g_expr, ("z",))
    upper = None
    upper_text = cp.get("majorant", "zprime", fallback=None)
    if upper_text is not None:
        upper = expr.as_function(expr.parse(upper_text, ("t",)), ("t",))
    return MajorantSpec(
        f=f_fn,
        gamma=g_fn,
        pole=_get_float(cp, "majorant", "pole", None),
        upper_solution=upper,
        f_depends_on_t="t" in expr.variables(f_expr),
        z_max=_get_float(cp, "majorant", "z_max", None),
        omega_max=_get_float(cp, "majorant", "omega_max", None),
        name="inline majorant",
    )


def _inline_lyapunov(cp) -> LyapunovSpec:
    f_text = cp.get("lyapunov", "f", fallback=None)
    if f_text is None:
        raise SpecValidationError("[lyapunov] needs f=<expr over r, t>")
    f_fn = expr.as_function(expr.parse(f_text, ("r", "t")), ("r", "t"))
    fr_fn = None
    fr_text = cp.get("lyapunov", "fr", fallback=None)
    if fr_text is not None:
        fr_fn = expr.as_function(expr.parse(fr_text, ("r", "t")), ("r", "t"))
    return LyapunovSpec(
        f=f_fn,
        f_r=fr_fn,
        inv_norm_bound=_get_float(cp, "lyapunov", "c", 1.0),
        r_max=_get_float(cp, "lyapunov", "r_max", 100.0),
        t_max=_get_float(cp, "lyapunov", "t_max", 100.0),
        name="inline algebraic majorant",
    )


class _Setup:
    """Everything a subcommand can need, resolved from one config."""

    def __init__(self, cp: configparser.ConfigParser):
        _check_config_keys(cp)
        self.entry: CorpusEntry | None = None
        self.problem: VolterraProblem | None = None
        self.majorant: MajorantSpec | None = None
        self.majorant_classifiable = True
        p_src = _source_of(cp, "problem")
        if p_src == "corpus":
            self.entry = _corpus_entry_from(cp, "problem")
            self.problem = self.entry.problem
            if self.problem is None:
                raise SpecValidationError(
                    f"corpus entry {self.entry.name!r} has no problem part"
                )
        elif p_src == "inline":
            self.problem = _inline_problem(cp)
        m_src = _source_of(cp, "majorant")
        if m_src == "corpus":
            entry = self.entry or _corpus_entry_from(cp, "majorant")
            if entry.majorant is None:
                raise SpecValidationError(
                    f"corpus entry {entry.name!r} has no majorant part"
                )
            self.entry = self.entry or entry
            self.majorant = entry.majorant
            self.majorant_classifiable = entry.majorant_classifiable
        elif m_src == "inline":
            self.majorant = _inline_majorant(cp)
        elif self.entry is not None and self.entry.majorant is not None:
            # a corpus problem brings its own majorant unless disabled
            self.majorant = self.entry.majorant
            self.majorant_classifiable = self.entry.majorant_classifiable
        l_src = _source_of(cp, "lyapunov")
        if l_src == "corpus":
            entry = self.entry or _corpus_entry_from(cp, "lyapunov")
            if entry.lyapunov is None:
                raise SpecValidationError(
                    f"corpus entry {entry.name!r} has no algebraic majorant"
                )
            self.lyapunov = entry.lyapunov
        elif l_src == "inline":
            self.lyapunov = _inline_lyapunov(cp)
        else:
            self.lyapunov = (
                self.entry.lyapunov if self.entry is not None else None
            )
        self.n = _get_int(cp, "mesh", "n", None)
        self.t_end = _get_float(cp, "mesh", "t_end", None)
        self.theta = _get_float(cp, "mesh", "theta", 0.95)
        self.theta_explicit = cp.has_option("mesh", "theta")
        self.ratio = _get_float(cp, "mesh", "ratio", 1.0)
        self.tol = _get_float(cp, "tolerances", "tol", 1e-10)
        self.n_max = _get_int(cp, "tolerances", "n_max", 200)
        self.blowup_tol = _get_float(cp, "tolerances", "blowup_tol", 1e-6)
        self.seed = _get_int(cp, "run", "seed", DEFAULT_SEED)
        self.samples = _get_int(cp, "run", "samples", 100)
        self.sample_bound = _get_float(cp, "run", "sample_bound", 1.0)

    def nodes(self) -> int:
        if self.n is not None:
            return self.n
        if self.entry is not None:
            return self.entry.default_nodes
        return 200

    def resolve_t_end(self, horizon: float | None, fallback: float | None = None):
        """Explicit t_end, else an explicit horizon fraction, else the
        entry default, else the default fraction, else the fallback."""
        if self.t_end is not None:
            return self.t_end
        usable = horizon is not None and math.isfinite(horizon)
        if usable and not (0 < self.theta < 1):
            raise SpecValidationError(
                f"[mesh] theta must sit in (0, 1), got {self.theta!r}"
            )
        if usable and self.theta_explicit:
            return self.theta * horizon
        if self.entry is not None and self.entry.default_t_end is not None:
            return self.entry.default_t_end
        if usable:
            return self.theta * horizon
        if fallback is not None:
            return fallback
        raise SpecValidationError(
            "no end time: set [mesh] t_end (required when the bound exists"
            " globally or is not classified)"
        )


def _majorant_pipeline(
    setup: _Setup, out: str, timestamp: bool
) -> MajorantSolution | None:
    """Write majorant_summary.txt / majorant_table.csv; returns the
    solution when the majorant is classifiable, else None (chain only)."""
    spec = setup.majorant
    pairs: list[tuple[str, str]] = [("name", spec.name)]
    if not setup.majorant_classifiable:
        t_end = setup.resolve_t_end(None)
        mesh = graded_mesh(t_end, setup.nodes(), setup.ratio)
        chain = majorant_picard(spec, mesh)
        omega = trapezoid_weights(mesh).prefix(
            np.array([spec.gamma(float(z)) for z in chain.final])
        )
        pairs += [
            ("classification", "skipped (rate degenerate at zero)"),
            ("t_end", format_number(mesh.end)),
            ("nodes", str(mesh.n)),
            ("ratio", format_number(setup.ratio)),
            ("chain_iterations", str(chain.count - 1)),
            ("chain_converged", "yes" if chain.converged else "no"),
            ("final_delta", format_number(chain.final_delta)),
        ]
        _write_summary(
            os.path.join(out, "majorant_summary.txt"), "majorant", pairs, timestamp
        )
        rows = [
            [float(t), float(w), float(z)]
            for t, w, z in zip(mesh.nodes, omega, chain.final)
        ]
        _write_csv(
            os.path.join(out, "majorant_table.csv"),
            ["t", "omega_last", "z_last"],
            rows,
        )
        return None
    report = classify_blowup(spec, tol=setup.blowup_tol)
    t_end = setup.resolve_t_end(report.horizon)
    solution = solve_majorant(
        spec,
        mesh=graded_mesh(t_end, setup.nodes(), setup.ratio),
        classification=report,
    )
    chain = solution.chain
    gap = float(np.max(np.abs(solution.bound - chain.final)))
    pairs += [
        ("classification", report.kind.value),
        ("horizon", format_number(report.horizon)),
        ("pole", "none" if report.pole is None else format_number(report.pole)),
        ("detail", report.detail),
        ("t_end", format_number(solution.mesh.end)),
        ("nodes", str(solution.mesh.n)),
        ("ratio", format_number(setup.ratio)),
        ("chain_iterations", str(chain.count - 1)),
        ("chain_converged", "yes" if chain.converged else "no"),
        ("final_delta", format_number(chain.final_delta)),
        ("routes_gap", format_number(gap)),
    ]
    _write_summary(
        os.path.join(out, "majorant_summary.txt"), "majorant", pairs, timestamp
    )
    rows = [
        [float(t), float(w), float(zc), float(zl)]
        for t, w, zc, zl in zip(
            solution.mesh.nodes,
            solution.omega,
            solution.certificate_bound,
            chain.final,
        )
    ]
    _write_csv(
        os.path.join(out, "majorant_table.csv"),
        ["t", "omega_plus", "z_plus", "z_last"],
        rows,
    )
    return solution


def _solve_pipeline(setup: _Setup, out: str, timestamp: bool) -> int:
    problem = setup.problem
    majorant_solution = None
    horizon = None
    if setup.majorant is not None and setup.majorant_classifiable:
        report = classify_blowup(setup.majorant, tol=setup.blowup_tol)
        horizon = report.horizon
        t_end = setup.resolve_t_end(horizon)
        mesh = graded_mesh(t_end, setup.nodes(), setup.ratio)
        majorant_solution = solve_majorant(
            setup.majorant, mesh=mesh, classification=report
        )
    else:
        t_end = setup.resolve_t_end(None, fallback=1.0)
        mesh = graded_mesh(t_end, setup.nodes(), setup.ratio)
    result = solve_main(
        problem,
        mesh,
        tol=setup.tol,
        n_max=setup.n_max,
        majorant=majorant_solution,
    )
    pairs = [
        ("name", problem.name),
        ("status", result.status.value),
        ("stop_reason", result.stop_reason),
        ("iterations", str(result.iterations)),
        ("final_step", format_number(result.final_step)),
        (
            "final_tail",
            "none" if result.final_tail is None else format_number(result.final_tail),
        ),
        ("residual_bound", format_number(result.residual_bound)),
        ("max_norm", format_number(result.trajectory.max_norm)),
        ("t_end", format_number(mesh.end)),
        ("nodes", str(mesh.n)),
    ]
    if majorant_solution is not None:
        domination = verify_domination(result, majorant_solution)
        pairs.append(
            ("domination", "holds" if domination.holds else "violated")
        )
        pairs.append(
            ("domination_margin", format_number(domination.worst_margin))
        )
    _write_summary(os.path.join(out, "solve_summary.txt"), "solve", pairs, timestamp)
    header = ["t", "norm", "residual"]
    norms = result.trajectory.norms
    columns = [list(map(float, mesh.nodes)), list(map(float, norms)),
               list(map(float, result.residuals))]
    if result.certified_bounds is not None:
        header.append("certified_bound")
        columns.append(list(map(float, result.certified_bounds)))
    if setup.entry is not None and setup.entry.name == "sine_bvp":
        m = setup.entry.params["m"]
        d0, d1, d2 = bvp_divided_differences(
            result.trajectory.values, 1.0 / (m + 1)
        )
        header += ["d0", "d1", "d2"]
        columns += [list(map(float, d0)), list(map(float, d1)), list(map(float, d2))]
    rows = [list(row) for row in zip(*columns)]
    _write_csv(os.path.join(out, "solve_table.csv"), header, rows)
    return (
        EXIT_OK if result.status is SolveStatus.CONVERGED else EXIT_NOT_CONVERGED
    )


def _lyapunov_pipeline(setup: _Setup, out: str, timestamp: bool) -> int:
    convexity = check_convexity(setup.lyapunov)
    if not convexity.passed:
        kind, r, t, margin = convexity.violations[0]
        raise SpecValidationError(
            "growth map fails the convexity/monotonicity screen: "
            f"{len(convexity.violations)} violations over {convexity.samples}"
            f" samples; first is {kind} at r={format_number(r)},"
            f" t={format_number(t)} (margin {format_number(margin)})"
        )
    solution = solve_lyapunov(
        setup.lyapunov, n=setup.nodes(), t_end=setup.t_end
    )
    tang = solution.tangency
    pairs = [
        ("name", setup.lyapunov.name),
        (
            "convexity",
            "degenerate" if convexity.degenerate else "pass",
        ),
        ("radius", format_number(tang.radius)),
        ("horizon", format_number(tang.horizon)),
        ("fixed_residual", format_number(tang.fixed_residual)),
        ("slope_residual", format_number(tang.slope_residual)),
        ("fallback_radius", format_number(tang.fallback_radius)),
        ("fallback_horizon", format_number(tang.fallback_horizon)),
        ("newton_iterations", str(tang.newton_iterations)),
        ("branch_nodes", str(solution.mesh.n)),
        (
            "branch_converged",
            "all" if bool(np.all(solution.converged_mask)) else "partial",
        ),
    ]
    _write_summary(
        os.path.join(out, "lyapunov_summary.txt"), "lyapunov", pairs, timestamp
    )
    rows = [
        [float(t), float(r)] for t, r in zip(solution.mesh.nodes, solution.radii)
    ]
    _write_csv(os.path.join(out, "lyapunov_branch.csv"), ["t", "r"], rows)
    return EXIT_OK


def _verify_pipeline(setup: _Setup, out: str, timestamp: bool) -> int:
    mesh = None
    if setup.problem is not None or setup.majorant is not None:
        horizon = None
        if setup.majorant is not None and setup.majorant_classifiable:
            horizon = classify_blowup(
                setup.majorant, tol=setup.blowup_tol
            ).horizon
        t_end = setup.resolve_t_end(horizon, fallback=1.0)
        mesh = graded_mesh(t_end, setup.nodes(), setup.ratio)
    report = run_suite(
        problem=setup.problem,
        majorant=setup.majorant,
        lyapunov=setup.lyapunov,
        mesh=mesh,
        n_samples=setup.samples,
        seed=setup.seed,
        bound=setup.sample_bound,
    )
    pairs: list[tuple[str, str]] = [("seed", str(report.seed))]
    for label in sorted(report.outcomes):
        o = report.outcomes[label]
        if o.status is ConditionStatus.SKIPPED:
            pairs.append((f"condition_{label}", f"skipped ({o.reason})"))
        else:
            margin = format_number(o.worst_margin)
            detail = f"worst margin {margin}; {o.note}"
            if o.reason:
                detail = f"{o.reason}; {detail}"
            pairs.append((f"condition_{label}", f"{o.status.value} ({detail})"))
    failed = report.failed
    pairs.append(("failed", ",".join(failed) if failed else "none"))
    _write_summary(
        os.path.join(out, "verify_summary.txt"), "verify", pairs, timestamp
    )
    rows = []
    for label in sorted(report.outcomes):
        o = report.outcomes[label]
        w = o.witness
        rows.append(
            [
                label,
                o.status.value,
                str(o.samples),
                format_number(o.worst_margin),
                "" if w is None else str(w.sample),
                "" if w is None else str(w.node),
                "" if w is None else format_number(w.t),
                "" if w is None else format_number(w.lhs),
                "" if w is None else format_number(w.rhs),
                o.reason,
            ]
        )
    _write_csv(
        os.path.join(out, "verify_witnesses.csv"),
        [
            "condition",
            "status",
            "samples",
            "worst_margin",
            "sample",
            "node",
            "t",
            "lhs",
            "rhs",
            "reason",
        ],
        rows,
    )
    return EXIT_CONDITION if failed else EXIT_OK


def cmd_majorant(args) -> int:
    setup = _Setup(_load_config(args.config))
    if setup.majorant is None:
        raise SpecValidationError("the majorant command needs a [majorant] section")
    _majorant_pipeline(setup, args.out, not args.no_timestamp)
    return EXIT_OK


def cmd_solve(args) -> int:
    setup = _Setup(_load_config(args.config))
    if setup.problem is None:
        raise SpecValidationError("the solve command needs a [problem] section")
    return _solve_pipeline(setup, args.out, not args.no_timestamp)


def cmd_lyapunov(args) -> int:
    setup = _Setup(_load_config(args.config))
    if setup.lyapunov is None:
        raise SpecValidationError("the lyapunov command needs a [lyapunov] section")
    return _lyapunov_pipeline(setup, args.out, not args.no_timestamp)


def cmd_verify(args) -> int:
    setup = _Setup(_load_config(args.config))
    if setup.problem is None and setup.majorant is None and setup.lyapunov is None:
        raise SpecValidationError(
            "the verify command needs at least one of [problem], [majorant],"
            " [lyapunov]"
        )
    return _verify_pipeline(setup, args.out, not args.no_timestamp)


def _corpus_run_one(name: str, out_root: str, timestamp: bool) -> int:
    entry = corpus_build(name)
    out = os.path.join(out_root, name)
    os.makedirs(out, exist_ok=True)
    cp = configparser.ConfigParser()
    if entry.problem is not None:
        section = "problem"
    elif entry.majorant is not None:
        section = "majorant"
    else:
        section = "lyapunov"
    cp.add_section(section)
    cp.set(section, "source", "corpus")
    cp.set(section, "entry", name)
    setup = _Setup(cp)
    worst = EXIT_OK
    if entry.majorant is not None:
        _majorant_pipeline(setup, out, timestamp)
    if entry.problem is not None:
        worst = max(worst, _solve_pipeline(setup, out, timestamp))
    if entry.lyapunov is not None:
        worst = max(worst, _lyapunov_pipeline(setup, out, timestamp))
    worst = max(worst, _verify_pipeline(setup, out, timestamp))
    return worst


def cmd_corpus(args) -> int:
    if args.action == "list":
        for name in corpus_names():
            entry = corpus_build(name)
            types = corpus_param_types(name)
            params = ", ".join(
                f"{k}: {types[k].__name__} = {v}"
                for k, v in sorted(entry.params.items())
            )
            parts = []
            if entry.problem is not None:
                parts.append("problem")
            if entry.majorant is not None:
                parts.append("majorant")
            if entry.lyapunov is not None:
                parts.append("algebraic")
            suffix = f" [{params}]" if params else ""
            print(f"{name}{suffix}: {', '.join(parts)}; {entry.notes}")
        return EXIT_OK
    names = args.names or list(corpus_names())
    for name in names:
        if name not in corpus_names():
            raise SpecValidationError(
                f"unknown corpus entry {name!r}; available:"
                f" {', '.join(corpus_names())}"
            )
    timestamp = not args.no_timestamp
    worst = EXIT_OK
    if args.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
            futures = {
                pool.submit(_corpus_run_one, name, args.out, timestamp): name
                for name in names
            }
            for fut in concurrent.futures.as_completed(futures):
                worst = max(worst, fut.result())
    else:
        for name in names:
            worst = max(worst, _corpus_run_one(name, args.out, timestamp))
    return worst


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volmaj",
        description=(
            "certified successive approximation for nonlinear Volterra-type"
            " equations: scalar majorant bounds, blow-up horizons, and"
            " sampled condition audits"
        ),
        epilog=_EPILOG,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="INI config path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument(
            "--no-timestamp",
            action="store_true",
            help="omit timestamps so reruns are byte-identical",
        )

    p = sub.add_parser("solve", help="iterate the main solution on a mesh")
    add_common(p)
    p.set_defaults(func=cmd_solve)
    p = sub.add_parser("majorant", help="classify and certify a scalar bound")
    add_common(p)
    p.set_defaults(func=cmd_majorant)
    p = sub.add_parser("lyapunov", help="tangency radius/horizon and branch")
    add_common(p)
    p.set_defaults(func=cmd_lyapunov)
    p = sub.add_parser("verify", help="sample the structural conditions")
    add_common(p)
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("corpus", help="list or run the built-in examples")
    p.add_argument("action", choices=["list", "run"])
    p.add_argument("names", nargs="*", help="entries to run (default: all)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel entries")
    p.add_argument(
        "--no-timestamp",
        action="store_true",
        help="omit timestamps so reruns are byte-identical",
    )
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ExprError as exc:
        print(f"volmaj: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SpecValidationError as exc:
        print(f"volmaj: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"volmaj: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"volmaj: i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VolmajError as exc:
        print(f"volmaj: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
