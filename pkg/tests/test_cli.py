"""End-to-end command line checks on temporary configs and outputs."""

import math
import os
import textwrap

import pytest

from volmaj.cli import main


def ini(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return str(path)


def summary(out, fname):
    text = (out / fname).read_text()
    pairs = {}
    for line in text.splitlines():
        key, _, value = line.partition(" = ")
        pairs[key] = value
    return text, pairs


def csv_header(out, fname):
    return (out / fname).read_text().splitlines()[0]


BVP_SOLVE = """
    [problem]
    source = corpus
    entry = sine_bvp

    [mesh]
    n = 16

    [tolerances]
    tol = 1e-8
"""


class TestSolve:
    def test_corpus_bvp(self, tmp_path):
        cfg = ini(tmp_path, BVP_SOLVE)
        out = tmp_path / "out"
        assert main(["solve", "--config", cfg, "--out", str(out),
                     "--no-timestamp"]) == 0
        text, pairs = summary(out, "solve_summary.txt")
        assert text.splitlines()[0] == "command = solve"
        assert pairs["status"] == "converged"
        assert pairs["domination"] == "holds"
        assert float(pairs["t_end"]) == pytest.approx(0.4)
        header = csv_header(out, "solve_table.csv")
        assert header == "t,norm,residual,certified_bound,d0,d1,d2"

    def test_explicit_theta_overrides_entry_default(self, tmp_path):
        cfg = ini(
            tmp_path,
            """
            [problem]
            source = corpus
            entry = sine_bvp

            [mesh]
            n = 16
            theta = 0.25
            """,
        )
        out = tmp_path / "out"
        assert main(["solve", "--config", cfg, "--out", str(out),
                     "--no-timestamp"]) == 0
        _, pairs = summary(out, "solve_summary.txt")
        assert float(pairs["t_end"]) == pytest.approx(0.25 * math.pi / 2, abs=1e-6)

    def test_inline_problem_tracks_exponential(self, tmp_path):
        cfg = ini(
            tmp_path,
            """
            [problem]
            source = inline
            kernel = u
            phi = u - om1 - t

            [majorant]
            source = inline
            f = w + t
            gamma = 1.1 * z

            [mesh]
            t_end = 1.0
            n = 200

            [tolerances]
            tol = 1e-8
            """,
        )
        out = tmp_path / "out"
        assert main(["solve", "--config", cfg, "--out", str(out),
                     "--no-timestamp"]) == 0
        _, pairs = summary(out, "solve_summary.txt")
        assert pairs["domination"] == "holds"
        assert float(pairs["max_norm"]) == pytest.approx(math.e - 1.0, abs=2e-4)

    def test_iteration_budget_exhaustion_exits_4(self, tmp_path):
        cfg = ini(
            tmp_path,
            BVP_SOLVE.replace("tol = 1e-8", "tol = 1e-14\n    n_max = 2"),
        )
        out = tmp_path / "out"
        assert main(["solve", "--config", cfg, "--out", str(out),
                     "--no-timestamp"]) == 4
        _, pairs = summary(out, "solve_summary.txt")
        assert pairs["status"] == "not-converged"
        assert pairs["stop_reason"] == "max-iterations"


class TestMajorant:
    def test_inline_linear_is_global(self, tmp_path):
        cfg = ini(
            tmp_path,
            """
            [majorant]
            source = inline
            f = w + 1
            gamma = z

            [mesh]
            t_end = 1.0
            n = 120
            """,
        )
        out = tmp_path / "out"
        assert main(["majorant", "--config", cfg, "--out", str(out),
                     "--no-timestamp"]) == 0
        _, pairs = summary(out, "majorant_summary.txt")
        assert pairs["classification"] == "Global"
        assert pairs["horizon"] == "inf"
        assert csv_header(out, "majorant_table.csv") == "t,omega_plus,z_plus,z_last"
        last = (out / "majorant_table.csv").read_text().splitlines()[-1]
        z_plus = float(last.split(",")[2])
        assert z_plus == pytest.approx(math.e, abs=5e-3)

    def test_inline_value_blowup(self, tmp_path):
        cfg = ini(
            tmp_path,
            """
            [majorant]
            source = inline
            f = w
            gamma = 1 + z^2

            [mesh]
            n = 80
            """,
        )
        out = tmp_path / "out"
        assert main(["majorant", "--config", cfg, "--out", str(out),
                     "--no-timestamp"]) == 0
        _, pairs = summary(out, "majorant_summary.txt")
        assert pairs["classification"] == "ValueBlowUp"
        assert float(pairs["horizon"]) == pytest.approx(math.pi / 2, abs=1e-4)
        # default end is the default fraction of the horizon
        assert float(pairs["t_end"]) == pytest.approx(0.95 * math.pi / 2, abs=1e-4)

    def test_corpus_slope_escape(self, tmp_path):
        cfg = ini(
            tmp_path,
            """
            [majorant]
            source = corpus
            entry = sqrt_pole
            """,
        )
        out = tmp_path / "out"
        assert main(["majorant", "--config", cfg, "--out", str(out),
                     "--no-timestamp"]) == 0
        _, pairs = summary(out, "majorant_summary.txt")
        assert pairs["classification"] == "DerivativeBlowUp"
        assert float(pairs["horizon"]) == pytest.approx(2.0 / 3.0, abs=1e-4)
        assert float(pairs["pole"]) == 1.0

    def test_degenerate_rate_skips_classification(self, tmp_path):
        cfg = ini(
            tmp_path,
            """
            [majorant]
            source = corpus
            entry = linear_majorant
            b = 0

            [mesh]
            t_end = 1.0
            n = 20
            """,
        )
        out = tmp_path / "out"
        assert main(["majorant", "--config", cfg, "--out", str(out),
                     "--no-timestamp"]) == 0
        text, pairs = summary(out, "majorant_summary.txt")
        assert pairs["classification"].startswith("skipped")
        assert csv_header(out, "majorant_table.csv") == "t,omega_last,z_last"

    def test_mesh_past_horizon_rejected(self, tmp_path, capsys):
        cfg = ini(
            tmp_path,
            """
            [majorant]
            source = inline
            f = w
            gamma = 1 + z^2

            [mesh]
            t_end = 1.6
            n = 40
            """,
        )
        code = main(["majorant", "--config", cfg, "--out", str(tmp_path / "o"),
                     "--no-timestamp"])
        assert code == 2
        assert "existence window" in capsys.readouterr().err


class TestLyapunov:
    def test_corpus_tangency(self, tmp_path):
        cfg = ini(
            tmp_path,
            """
            [lyapunov]
            source = corpus
            entry = sine_bvp
            """,
        )
        out = tmp_path / "out"
        assert main(["lyapunov", "--config", cfg, "--out", str(out),
                     "--no-timestamp"]) == 0
        _, pairs = summary(out, "lyapunov_summary.txt")
        assert pairs["convexity"] == "pass"
        assert float(pairs["radius"]) == pytest.approx(1.0, abs=1e-8)
        assert float(pairs["horizon"]) == pytest.approx(0.5, abs=1e-8)
        assert csv_header(out, "lyapunov_branch.csv") == "t,r"
        last = (out / "lyapunov_branch.csv").read_text().splitlines()[-1]
        assert float(last.split(",")[0]) == pytest.approx(0.5, abs=1e-9)

    def test_concave_growth_rejected(self, tmp_path, capsys):
        cfg = ini(
            tmp_path,
            """
            [lyapunov]
            source = inline
            f = t * sqrt(r)
            r_max = 4
            t_max = 2
            """,
        )
        code = main(["lyapunov", "--config", cfg, "--out", str(tmp_path / "o"),
                     "--no-timestamp"])
        assert code == 2
        assert "convexity/monotonicity screen" in capsys.readouterr().err

    def test_no_tangency_exits_3(self, tmp_path, capsys):
        cfg = ini(
            tmp_path,
            """
            [lyapunov]
            source = inline
            f = t + 0.1 * r
            r_max = 5
            t_max = 2
            """,
        )
        code = main(["lyapunov", "--config", cfg, "--out", str(tmp_path / "o"),
                     "--no-timestamp"])
        assert code == 3
        assert "tangency" in capsys.readouterr().err


class TestVerify:
    def test_bvp_all_conditions_pass(self, tmp_path):
        cfg = ini(
            tmp_path,
            """
            [problem]
            source = corpus
            entry = sine_bvp

            [mesh]
            n = 20

            [run]
            samples = 15
            """,
        )
        out = tmp_path / "out"
        assert main(["verify", "--config", cfg, "--out", str(out),
                     "--no-timestamp"]) == 0
        text, pairs = summary(out, "verify_summary.txt")
        assert pairs["failed"] == "none"
        assert pairs["condition_A"].startswith("pass")
        header = csv_header(out, "verify_witnesses.csv")
        assert header == (
            "condition,status,samples,worst_margin,sample,node,t,lhs,rhs,reason"
        )
        lines = (out / "verify_witnesses.csv").read_text().splitlines()
        assert len(lines) == 7

    def test_power_family_fails_exit_5(self, tmp_path):
        cfg = ini(
            tmp_path,
            """
            [problem]
            source = corpus
            entry = power_family

            [mesh]
            n = 30

            [run]
            samples = 60
            """,
        )
        out = tmp_path / "out"
        assert main(["verify", "--config", cfg, "--out", str(out),
                     "--no-timestamp"]) == 5
        text, pairs = summary(out, "verify_summary.txt")
        assert pairs["condition_D"].startswith("fail")
        assert "D" in pairs["failed"]


class TestDeterminism:
    def test_no_timestamp_reruns_are_byte_identical(self, tmp_path):
        cfg = ini(tmp_path, BVP_SOLVE)
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["solve", "--config", cfg, "--out", str(out),
                         "--no-timestamp"]) == 0
        for fname in ("solve_summary.txt", "solve_table.csv"):
            assert (a / fname).read_bytes() == (b / fname).read_bytes()

    def test_verify_reruns_are_byte_identical(self, tmp_path):
        cfg = ini(
            tmp_path,
            """
            [majorant]
            source = corpus
            entry = linear_majorant

            [run]
            samples = 10
            """,
        )
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["verify", "--config", cfg, "--out", str(out),
                         "--no-timestamp"]) == 0
        for fname in ("verify_summary.txt", "verify_witnesses.csv"):
            assert (a / fname).read_bytes() == (b / fname).read_bytes()

    def test_timestamp_written_by_default(self, tmp_path):
        cfg = ini(tmp_path, BVP_SOLVE)
        out = tmp_path / "out"
        assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "solve_summary.txt").read_text().splitlines()
        assert lines[1].startswith("timestamp = 20")


class TestCorpusCommand:
    def test_list_shows_schemas(self, tmp_path, capsys):
        assert main(["corpus", "list"]) == 0
        text = capsys.readouterr().out
        assert "sine_bvp [m: int = 21]: problem, majorant, algebraic" in text
        assert "linear_majorant [a: float = 1.0, b: float = 1.0]: majorant" in text
        assert "power_family [p: float = 2.0]: problem, majorant" in text
        assert "sqrt_pole: majorant" in text

    def test_run_majorant_only_entry(self, tmp_path):
        out = tmp_path / "out"
        assert main(["corpus", "run", "linear_majorant", "--out", str(out),
                     "--no-timestamp"]) == 0
        sub = out / "linear_majorant"
        for fname in (
            "majorant_summary.txt",
            "majorant_table.csv",
            "verify_summary.txt",
            "verify_witnesses.csv",
        ):
            assert (sub / fname).exists(), fname

    def test_parallel_run_matches_serial(self, tmp_path):
        serial, par = tmp_path / "s", tmp_path / "p"
        names = ["linear_majorant", "sqrt_pole"]
        assert main(["corpus", "run", *names, "--out", str(serial),
                     "--no-timestamp"]) == 0
        assert main(["corpus", "run", *names, "--out", str(par),
                     "--jobs", "2", "--no-timestamp"]) == 0
        for name in names:
            for fname in os.listdir(serial / name):
                assert (serial / name / fname).read_bytes() == (
                    par / name / fname
                ).read_bytes(), f"{name}/{fname}"

    def test_unknown_entry_exits_2(self, tmp_path, capsys):
        assert main(["corpus", "run", "nonesuch", "--out", str(tmp_path)]) == 2
        assert "unknown corpus entry" in capsys.readouterr().err


class TestConfigErrors:
    def test_missing_file(self, tmp_path, capsys):
        code = main(["solve", "--config", str(tmp_path / "nope.ini"),
                     "--out", str(tmp_path)])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_corpus_source_without_entry(self, tmp_path, capsys):
        cfg = ini(tmp_path, "[problem]\nsource = corpus\n")
        assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "needs entry=" in capsys.readouterr().err

    def test_command_needs_its_section(self, tmp_path, capsys):
        cfg = ini(tmp_path, "[majorant]\nsource = corpus\nentry = sqrt_pole\n")
        assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "[problem] section" in capsys.readouterr().err

    def test_bad_source_value(self, tmp_path, capsys):
        cfg = ini(tmp_path, "[majorant]\nsource = nowhere\n")
        assert main(["majorant", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "source must be" in capsys.readouterr().err

    def test_bad_expression_reports_offset(self, tmp_path, capsys):
        cfg = ini(
            tmp_path,
            """
            [majorant]
            source = inline
            f = w +
            gamma = z
            """,
        )
        assert main(["majorant", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_bad_number_in_mesh(self, tmp_path, capsys):
        cfg = ini(
            tmp_path,
            """
            [majorant]
            source = corpus
            entry = sqrt_pole

            [mesh]
            n = few
            """,
        )
        assert main(["majorant", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "must be an integer" in capsys.readouterr().err

    def test_misspelled_mesh_key_rejected(self, tmp_path, capsys):
        cfg = ini(
            tmp_path,
            """
            [majorant]
            source = corpus
            entry = sqrt_pole

            [mesh]
            nodes = 60
            """,
        )
        assert main(["majorant", "--config", cfg, "--out", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "unknown key 'nodes'" in err and "[mesh]" in err

    def test_unknown_section_rejected(self, tmp_path, capsys):
        cfg = ini(
            tmp_path,
            """
            [majorant]
            source = corpus
            entry = sqrt_pole

            [solver]
            tol = 1e-10
            """,
        )
        assert main(["majorant", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "unknown config section [solver]" in capsys.readouterr().err

    def test_stray_key_on_corpus_section_rejected(self, tmp_path, capsys):
        cfg = ini(
            tmp_path,
            """
            [problem]
            source = corpus
            entry = sine_bvp
            kernel = u
            """,
        )
        assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "unknown key 'kernel'" in err and "[problem]" in err
