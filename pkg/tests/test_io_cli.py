import csv
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import recall_dyn
from recall_dyn import cli
from recall_dyn.config import load_config, safe_eval
from recall_dyn.errors import InputError
from recall_dyn.io import (format_patterns, format_weights, parse_patterns, parse_weights,
                           read_weights)
from recall_dyn.learning import REFERENCE_PATTERNS, LearningSpec, learn_weights
from recall_dyn.model import NetworkConfig, WeightMatrix

from conftest import ALPHA, random_network

CONFIGS = Path(recall_dyn.__file__).parent / "configs"
PATTERNS = CONFIGS / "reference_patterns.txt"

NETWORK = """[network]
n = 6
m = 3
alpha = 1/54
g_bar_a = 97/54
"""


def write_cfg(tmp_path, body, name="run.cfg"):
    path = tmp_path / name
    path.write_text(body + f"\n[run]\nseed = 0\noutput_dir = {tmp_path / 'out'}\n")
    return path


def reference_cfg(tmp_path, mu1, extra=""):
    return write_cfg(tmp_path, NETWORK + f"[weights]\npatterns = {PATTERNS}\nmu1 = {mu1}\n" + extra)


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def table(path):
    rows = read_rows(path)
    return {r[0]: r[1] for r in rows[1:]}


class TestPatternFiles:
    def test_round_trip(self):
        assert parse_patterns(format_patterns(REFERENCE_PATTERNS)) == list(REFERENCE_PATTERNS)

    def test_comments_and_blank_lines(self):
        pats = parse_patterns("# header\n\n1 2 3  # first\n3 2 1\n")
        assert [p.values for p in pats] == [(1, 2, 3), (3, 2, 1)]

    @pytest.mark.parametrize("text,line,fragment", [
        ("1 2 3\n1 2 x\n", 2, "non-integer"),
        ("1 0 3\n", 1, "one-based"),
        ("1 2 3\n\n1 2\n", 3, "entries"),
    ])
    def test_errors_carry_line(self, text, line, fragment):
        with pytest.raises(InputError, match=fragment) as info:
            parse_patterns(text, "p.txt")
        assert info.value.line == line
        assert f"line {line}" in str(info.value)

    def test_empty(self):
        with pytest.raises(InputError):
            parse_patterns("# nothing\n")


class TestWeightFiles:
    def test_round_trip_is_exact(self, rng):
        W, _ = random_network(rng, 3, 4)
        back = parse_weights(format_weights(W))
        assert back.dims == (3, 4)
        assert np.array_equal(back.entries, W.entries)

    def test_format(self):
        text = format_weights(WeightMatrix.zeros(2, 2))
        lines = text.splitlines()
        assert lines[0] == "2 2"
        assert len(lines) == 5 and lines[1] == "0,0,0,0"

    @pytest.mark.parametrize("text,fragment", [
        ("", "empty"),
        ("2\n", "header"),
        ("1 2\n0,0\n0\n", "entries"),
        ("1 2\n0,0\n0,a\n", "non-numeric"),
        ("1 2\n0,0\n", "rows"),
    ])
    def test_errors(self, text, fragment):
        with pytest.raises(InputError, match=fragment):
            parse_weights(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="cannot read"):
            read_weights(tmp_path / "nope.csv")


class TestConfig:
    @pytest.mark.parametrize("expr,value", [("3*(1+alpha) + 40", 3 * (1 + ALPHA) + 40),
                                            ("2**3 - -1", 9.0), ("97/54", 97 / 54)])
    def test_safe_eval(self, expr, value):
        assert safe_eval(expr, {"alpha": ALPHA}) == pytest.approx(value, rel=1e-15)

    @pytest.mark.parametrize("expr", ["__import__('os')", "beta + 1", "1/0", "True", "x.y"])
    def test_safe_eval_rejects(self, expr):
        with pytest.raises(ValueError):
            safe_eval(expr, {"alpha": 0.1})

    def test_shipped_configs_load(self):
        for path in sorted(CONFIGS.glob("*.cfg")):
            rc = load_config(path)
            assert rc.network.size >= 2

    def test_cycle_config_values(self):
        rc = load_config(CONFIGS / "fig7.cfg")
        assert rc.weights.mu1 == pytest.approx(3 * (1 + ALPHA) + 40)
        assert len(rc.sweep_mu1) == 9
        assert rc.sweep_mu1[0] < 3 * (1 + ALPHA) < rc.sweep_mu1[-1]

    def test_missing_weights(self, tmp_path):
        with pytest.raises(InputError, match="weights"):
            load_config(write_cfg(tmp_path, NETWORK))

    def test_bad_network(self, tmp_path):
        with pytest.raises(InputError):
            load_config(write_cfg(tmp_path, NETWORK.replace("m = 3", "m = 1")
                                  + f"[weights]\npatterns = {PATTERNS}\nmu1 = 2\n"))

    def test_missing_referenced_file(self, tmp_path):
        with pytest.raises(InputError, match="not found"):
            load_config(write_cfg(tmp_path, NETWORK + "[weights]\npatterns = missing.txt\nmu1 = 2\n"))

    def test_file_weights_rescaled(self, tmp_path):
        cfg = NetworkConfig(6, 3, ALPHA, 97 / 54)
        W = learn_weights(LearningSpec(REFERENCE_PATTERNS, 5.0, 6, 3), cfg)
        (tmp_path / "w.csv").write_text(format_weights(W))
        rc = load_config(write_cfg(tmp_path, NETWORK + "[weights]\nfile = w.csv\n"))
        np.testing.assert_allclose(rc.weight_matrix().entries, W.entries)
        np.testing.assert_allclose(rc.weight_matrix(7.0).entries, 1.4 * W.entries, rtol=1e-12)


class TestLearnCommand:
    def test_reference_patterns(self, tmp_path, capsys):
        assert cli.main(["learn", "--config", str(reference_cfg(tmp_path, 5.0))]) == 0
        out = tmp_path / "out"
        W = read_weights(out / "weights.csv")
        assert W.dims == (6, 3)
        assert (out / "assumptions.txt").read_text().splitlines()[-1] == "overall: pass"
        assert "overall: pass" in capsys.readouterr().out

    def test_malformed_pattern(self, tmp_path, capsys):
        (tmp_path / "bad.txt").write_text("1 1 1 1 1 1\n1 2 x 1 1 1\n")
        path = write_cfg(tmp_path, NETWORK + "[weights]\npatterns = bad.txt\nmu1 = 2\n")
        assert cli.main(["learn", "--config", str(path)]) == 1
        assert "line 2" in capsys.readouterr().err

    def test_m2_without_flag(self, tmp_path, capsys):
        (tmp_path / "p.txt").write_text("1 2 1\n2 1 2\n")
        body = "[network]\nn = 3\nm = 2\nalpha = 0.1\ng_bar_a = 1\n[weights]\npatterns = p.txt\nmu1 = 4\n"
        assert cli.main(["learn", "--config", str(write_cfg(tmp_path, body))]) == 2
        assert "m-2" in capsys.readouterr().err
        ok = body + "remark1 = yes\n"
        assert cli.main(["learn", "--config", str(write_cfg(tmp_path, ok))]) == 0

    def test_missing_config(self, tmp_path):
        assert cli.main(["learn", "--config", str(tmp_path / "none.cfg")]) == 1

    def test_bad_jobs(self, tmp_path):
        assert cli.main(["learn", "--config", str(reference_cfg(tmp_path, 5.0)), "--jobs", "0"]) == 1


class TestAnalyzeCommand:
    def test_zero_weights(self, tmp_path, capsys):
        path = write_cfg(tmp_path, "[network]\nn = 1\nm = 2\nalpha = 0.5\ng_bar_a = 1\n"
                                   f"[weights]\nfile = {CONFIGS / 'zero_weights.csv'}\n")
        assert cli.main(["analyze", "--config", str(path)]) == 0
        rows = read_rows(tmp_path / "out" / "regime.csv")
        assert rows[-1][:2] == ["regime", "GLOBAL_EQUILIBRIUM"]

    def test_stable_config(self, tmp_path):
        assert cli.main(["analyze", "--config", str(reference_cfg(tmp_path, "2*(1+alpha) - 0.1"))]) == 0
        rows = {r[0]: r for r in read_rows(tmp_path / "out" / "regime.csv")[1:]}
        assert rows["regime"][1] == "GLOBAL_EQUILIBRIUM"
        assert rows["local.mu1<m(1+alpha)"][1] == "True"

    def test_cycle_config_flags_hopf(self, tmp_path):
        assert cli.main(["analyze", "--config", str(reference_cfg(tmp_path, "3*(1+alpha) + 40"))]) == 0
        out = tmp_path / "out"
        rows = {r[0]: r for r in read_rows(out / "regime.csv")[1:]}
        assert rows["hopf.mu1>m(1+alpha)"][1] == "True"
        assert rows["regime"][1] in ("HOPF_LIMIT_CYCLE", "UNCLASSIFIED")
        spec = read_rows(out / "spectrum.csv")
        assert spec[0][:3] == ["index", "group", "mu"]
        assert len(spec) == 1 + 18
        assert float(spec[1][3]) > 0

    def test_structure_failure(self, tmp_path):
        A = np.zeros((4, 4))
        A[0, 2] = 1.0
        (tmp_path / "w.csv").write_text("2 2\n" + "\n".join(",".join(map(str, r)) for r in A) + "\n")
        path = write_cfg(tmp_path, "[network]\nn = 2\nm = 2\nalpha = 0.1\ng_bar_a = 1\n"
                                   "[weights]\nfile = w.csv\n")
        assert cli.main(["analyze", "--config", str(path)]) == 2


class TestHopfCommand:
    def test_m2_toy(self, tmp_path):
        (tmp_path / "p.txt").write_text("1 2 1\n2 1 2\n")
        body = ("[network]\nn = 3\nm = 2\nalpha = 0.1\ng_bar_a = 1\n"
                "[weights]\npatterns = p.txt\nmu1 = 2.2\nremark1 = yes\n")
        assert cli.main(["hopf", "--config", str(write_cfg(tmp_path, body))]) == 0
        t = table(tmp_path / "out" / "hopf.csv")
        assert t["verdict"] == "VAGUE_ATTRACTOR"
        assert abs(float(t["I2"])) < 1e-14 and abs(float(t["I3"])) < 1e-14
        assert float(t["total"]) < 0
        assert float(t["agreement"]) < 1e-6

    def test_reference_network(self, tmp_path):
        assert cli.main(["hopf", "--config", str(reference_cfg(tmp_path, 3))]) == 0
        t = table(tmp_path / "out" / "hopf.csv")
        assert float(t["agreement"]) < 1e-6
        assert t["certified"] == "True"

    def test_non_simple_mu1(self, tmp_path, capsys):
        n, m = 3, 3
        A = -(np.ones((n, n)) - np.eye(n))
        W = WeightMatrix(np.kron(A, np.eye(m) - np.ones((m, m)) / m), n, m)
        (tmp_path / "w.csv").write_text(format_weights(W))
        path = write_cfg(tmp_path, "[network]\nn = 3\nm = 3\nalpha = 0.1\ng_bar_a = 1\n"
                                   "[weights]\nfile = w.csv\n")
        assert cli.main(["hopf", "--config", str(path)]) == 3
        assert "simple" in capsys.readouterr().err


class TestSimulateCommand:
    def test_stable_config_outputs(self, tmp_path):
        extra = "[integrator]\ndt = 0.01\nt_end = 500\nrecord_stride = 100\ninclude_outputs = yes\n"
        assert cli.main(["simulate", "--config", str(reference_cfg(tmp_path, "2*(1+alpha) - 0.1", extra))]) == 0
        out = tmp_path / "out"
        rows = read_rows(out / "trajectory_p1.csv")
        assert rows[0][0] == "t" and rows[0][-1] == "o_6_3"
        assert len(rows) == 1 + 501
        assert read_rows(out / "recall.csv") == [["initial_pattern", "pattern", "t_start", "t_end"]]
        summary = read_rows(out / "summary.csv")[1]
        assert summary[1] == "" and float(summary[4]) < 1e-3

    def test_divergence_exit(self, tmp_path, capsys):
        extra = "[integrator]\ndt = 50\nt_end = 10000\n"
        assert cli.main(["simulate", "--config", str(reference_cfg(tmp_path, "3*(1+alpha) + 200", extra))]) == 4
        assert "last valid time" in capsys.readouterr().err

    def test_pattern_beyond_stored(self, tmp_path):
        extra = "[initial]\npatterns = 4\n[integrator]\nt_end = 1\n"
        assert cli.main(["simulate", "--config", str(reference_cfg(tmp_path, 5, extra))]) == 1

    def test_seed_and_out_override(self, tmp_path):
        extra = "[integrator]\nt_end = 2\n[initial]\nnoise = 0.1\n"
        path = reference_cfg(tmp_path, 5, extra)
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        for d, seed in ((a, 1), (b, 1), (c, 2)):
            assert cli.main(["simulate", "--config", str(path), "--seed", str(seed), "--out", str(d)]) == 0
        ta, tb, tc = ((d / "trajectory_p1.csv").read_bytes() for d in (a, b, c))
        assert ta == tb and ta != tc


class TestOtherCommands:
    def test_linear_lyapunov(self, tmp_path):
        path = write_cfg(tmp_path, (CONFIGS / "linear.cfg").read_text().split("[run]")[0]
                         .replace("zero_weights.csv", str(CONFIGS / "zero_weights.csv"))
                         .replace("t_total = 400", "t_total = 200"))
        assert cli.main(["lyapunov", "--config", str(path)]) == 0
        rows = read_rows(tmp_path / "out" / "lyapunov.csv")[1:]
        for _, e, r in rows:
            assert abs(float(e) - float(r)) < 1e-3
        conv = read_rows(tmp_path / "out" / "convergence.csv")
        assert conv[0] == ["t", "exponent_1", "exponent_2", "exponent_3"]

    def test_equilibria(self, tmp_path):
        extra = "[equilibria]\nn_starts = 5\n"
        assert cli.main(["equilibria", "--config", str(reference_cfg(tmp_path, "3*(1+alpha) + 200", extra))]) == 0
        rows = read_rows(tmp_path / "out" / "equilibria.csv")
        recalled = {r[1] for r in rows[1:]}
        assert {"1", "2", "3"} <= recalled
        assert all(float(r[2]) < 1e-9 for r in rows[1:])

    def test_sweep_single_point_matches_analyze_and_simulate(self, tmp_path):
        mu1 = 3 * (1 + ALPHA) + 0.5
        extra = ("[integrator]\ndt = 0.02\nt_end = 400\nrecord_stride = 1\ninclude_outputs = yes\n"
                 f"[sweep]\nmu1 = {mu1!r}\nt_end = 400\n")
        path = reference_cfg(tmp_path, repr(mu1), extra)
        for cmd in ("sweep", "analyze", "simulate"):
            assert cli.main([cmd, "--config", str(path)]) == 0
        out = tmp_path / "out"
        row = read_rows(out / "sweep.csv")[1]
        regime = [r for r in read_rows(out / "regime.csv") if r[0] == "regime"][0][1]
        assert row[1] == regime
        spec = read_rows(out / "spectrum.csv")[1:]
        assert float(row[2]) == max(max(float(r[3]), float(r[5])) for r in spec)
        traj = read_rows(out / "trajectory_p1.csv")
        col = traj[0].index("o_1_1")
        tail = [float(r[col]) for r in traj[1:] if float(r[0]) >= 300 - 1e-9]
        assert float(row[3]) == pytest.approx(max(tail) - min(tail), rel=1e-12, abs=1e-15)

    def test_sweep_onset_and_parallel_determinism(self, tmp_path):
        crit = 3 * (1 + ALPHA)
        extra = ("[integrator]\ndt = 0.02\nrecord_stride = 10\n"
                 f"[sweep]\nmu1 = {crit - 0.5!r} {crit + 0.5!r}\nt_end = 1500\n")
        path = reference_cfg(tmp_path, 5, extra)
        assert cli.main(["sweep", "--config", str(path), "--out", str(tmp_path / "s1")]) == 0
        assert cli.main(["sweep", "--config", str(path), "--out", str(tmp_path / "s2"), "--jobs", "2"]) == 0
        a = (tmp_path / "s1" / "sweep.csv").read_bytes()
        assert a == (tmp_path / "s2" / "sweep.csv").read_bytes()
        rows = read_rows(tmp_path / "s1" / "sweep.csv")[1:]
        (_, _, re_lo, amp_lo, err_lo), (_, _, re_hi, amp_hi, err_hi) = rows
        assert err_lo == err_hi == ""
        assert float(re_lo) < 0 < float(re_hi)
        assert float(amp_lo) < 1e-4 < 1e-2 < float(amp_hi)

    def test_sweep_records_failures_inline(self, tmp_path):
        extra = "[integrator]\ndt = 50\n[sweep]\nmu1 = 2 600\nt_end = 10000\n"
        assert cli.main(["sweep", "--config", str(reference_cfg(tmp_path, 5, extra))]) == 0
        rows = read_rows(tmp_path / "out" / "sweep.csv")[1:]
        assert len(rows) == 2
        assert any(r[4].startswith("DivergenceError") for r in rows)

    def test_sweep_without_grid(self, tmp_path):
        assert cli.main(["sweep", "--config", str(reference_cfg(tmp_path, 5))]) == 1


def test_log_level_from_environment(tmp_path):
    path = reference_cfg(tmp_path, "3*(1+alpha) + 200", "[integrator]\nt_end = 0.1\n")
    env_cmd = [sys.executable, "-m", "recall_dyn.cli", "simulate", "--config", str(path)]
    quiet = subprocess.run(env_cmd, capture_output=True, text=True, env={"RECALL_DYN_LOG": "error"})
    loud = subprocess.run(env_cmd, capture_output=True, text=True, env={"RECALL_DYN_LOG": "warn"})
    assert quiet.returncode == loud.returncode == 0
    assert "WARNING" not in quiet.stderr
    assert "dt * max|nu|" in loud.stderr


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "recall_dyn.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in cli.COMMANDS:
        assert cmd in res.stdout
