"""Command-line front end.

    recall-dyn <learn|analyze|hopf|simulate|equilibria|lyapunov|sweep>
               --config PATH [--jobs N] [--seed S] [--out DIR]

Every command writes CSV (or plain-text) files into the output directory and
prints a short human-readable summary.  Exit codes: 0 success, 1 input
error, 2 structure/assumption failure, 3 analysis degeneracy, 4 divergence.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import dynamics as dyn
from .config import RunConfig, load_config
from .errors import InputError, RecallDynError
from .hopf import hopf_report, theorem3_verdict
from .io import write_weights
from .learning import LearningSpec, accumulate_patterns, normalize_weights
from .model import softmax_output, validate_assumptions
from .spectral import classify_regime

log = logging.getLogger("recall_dyn")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _require_patterns(rc: RunConfig, what: str):
    if not rc.patterns:
        raise InputError(f"{what} needs stored patterns ([weights] patterns)", path=rc.path)
    return rc.patterns


def _initial_state(rc: RunConfig, W, k: int):
    pats = _require_patterns(rc, "pattern-biased initial conditions")
    if k > len(pats):
        raise InputError(f"[initial] pattern {k} exceeds the {len(pats)} stored patterns", path=rc.path)
    rng = np.random.default_rng([rc.seed, k])
    return dyn.pattern_biased_state(W, rc.network, pats[k - 1], rc.epsilon, rc.noise, rng)


# -- commands ---------------------------------------------------------------------

def cmd_learn(rc: RunConfig, out: Path, jobs: int) -> int:
    pats = _require_patterns(rc, "learn")
    src = rc.weights
    spec = LearningSpec(pats, src.mu1, rc.network.n, rc.network.m, remark1=src.remark1)
    W = normalize_weights(accumulate_patterns(spec), spec.mu1, rc.network)
    report = validate_assumptions(W)
    write_weights(W, out / "weights.csv")
    lines = report.lines()
    (out / "assumptions.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    if not report.all_pass:
        print("error: learned weights violate the model assumptions", file=sys.stderr)
        return 2
    return 0


def cmd_analyze(rc: RunConfig, out: Path, jobs: int) -> int:
    W = rc.weight_matrix()
    cls = classify_regime(W, rc.network)
    rep = cls.report
    rows = []
    for i, (mu, (nup, num)) in enumerate(zip(rep.mu, rep.nu), start=1):
        group = "sum_zero" if i <= rep.n_first else "row_sum"
        rows.append([i, group, mu, nup.real, nup.imag, num.real, num.imag])
    _write_csv(out / "spectrum.csv",
               ["index", "group", "mu", "nu_plus_re", "nu_plus_im", "nu_minus_re", "nu_minus_im"], rows)
    _write_csv(out / "regime.csv", ["condition", "passed", "margin", "detail"],
               [[c.name, c.passed, c.margin, c.detail] for c in cls.conditions]
               + [["regime", cls.regime.value, "", ""]])
    print("mu:", " ".join(f"{v:.6g}" for v in rep.mu_first))
    print("F eigenvalues:", " ".join(f"{v:.6g}" for v in rep.mu[rep.n_first:]))
    print(f"max Re(nu): {rep.max_real_part:.6g}")
    for c in cls.conditions:
        print(f"  {'PASS' if c.passed else 'FAIL'} {c.name} margin={c.margin:.6g} {c.detail}".rstrip())
    print(f"regime: {cls.regime.value}")
    return 0


def cmd_hopf(rc: RunConfig, out: Path, jobs: int) -> int:
    W = rc.weight_matrix()
    rep = hopf_report(W, rc.network)
    verdict = theorem3_verdict(W, rc.network)
    rows = [["lambda0_abs", rep.lambda0_abs], ["I1", rep.I1], ["I2", rep.I2], ["I3", rep.I3],
            ["total", rep.total], ["numeric_total", rep.numeric_total],
            ["agreement", rep.agreement], ["verdict", rep.verdict.value],
            ["case_used", rep.case_used], ["certified", verdict.certified]]
    _write_csv(out / "hopf.csv", ["quantity", "value"], rows)
    for k, v in rows:
        print(f"{k}: {_fmt(v)}")
    for reason in verdict.reasons:
        print(f"note: {reason}")
    return 0


def cmd_simulate(rc: RunConfig, out: Path, jobs: int) -> int:
    W = rc.weight_matrix()
    pats = _require_patterns(rc, "simulate")
    spec = dyn.IntegratorSpec(t_end=rc.t_end, dt=rc.dt, record_stride=rc.record_stride)
    recall_rows, summary = [], []
    x0 = np.stack([_initial_state(rc, W, k).as_array() for k in rc.initial_patterns])
    batch = dyn.integrate(x0, W, rc.network, spec)
    for b, k in enumerate(rc.initial_patterns):
        traj = dyn.Trajectory(batch.times, batch.states[:, b], rc.network)
        dyn.write_trajectory_csv(traj, out / f"trajectory_p{k}.csv", rc.include_outputs)
        events = dyn.detect_recall(traj, pats, rc.threshold)
        for e in events.events:
            recall_rows.append([k, e.pattern, e.t_start, e.t_end])
        late = traj.window(rc.burn_in * rc.t_end)
        period = dyn.estimate_period(late)
        late_events = dyn.detect_recall(late, pats, rc.threshold)
        o_final = traj.outputs[-1]
        steady = [j for j, p in enumerate(pats, start=1)
                  if o_final[p.flat_indices(rc.network.m)].min() > rc.threshold]
        dev = float(np.abs(o_final - 1.0 / rc.network.m).max())
        recalled = sorted(late_events.patterns_recalled())
        summary.append([k, "" if period is None else period,
                        " ".join(map(str, recalled)), " ".join(map(str, steady)), dev])
        print(f"initial pattern {k}: period={'none' if period is None else f'{period:.4g}'}"
              f" recalled after burn-in={recalled or 'none'} final recall={steady or 'none'}"
              f" max|o-1/m|={dev:.3g}")
    _write_csv(out / "recall.csv", ["initial_pattern", "pattern", "t_start", "t_end"], recall_rows)
    _write_csv(out / "summary.csv",
               ["initial_pattern", "period", "recalled_after_burn_in", "final_recall",
                "final_max_dev_uniform"], summary)
    return 0


def cmd_equilibria(rc: RunConfig, out: Path, jobs: int) -> int:
    W = rc.weight_matrix()
    cfg = rc.network
    eqs = dyn.find_equilibria(W, cfg, rc.n_starts, rc.seed, rc.patterns or None)
    head = ["index", "recalled_pattern", "residual"] + [
        f"{v}_{i + 1}_{j + 1}" for v in ("s", "o") for i in range(cfg.n) for j in range(cfg.m)]
    rows = []
    A = W.entries - cfg.gain_ratio * np.eye(cfg.size)
    for idx, e in enumerate(eqs, start=1):
        o = softmax_output(e.s, cfg)
        rec = [j for j, p in enumerate(rc.patterns, start=1)
               if o[p.flat_indices(cfg.m)].min() > rc.threshold]
        res = float(np.abs(A @ o - e.s).max())
        rows.append([idx, " ".join(map(str, rec)), res, *e.s, *o])
        print(f"equilibrium {idx}: recalls {rec or 'none'}, max output {o.max():.4g}")
    _write_csv(out / "equilibria.csv", head, rows)
    print(f"{len(eqs)} equilibria")
    return 0


def cmd_lyapunov(rc: RunConfig, out: Path, jobs: int) -> int:
    if rc.linear_matrix is not None:
        A = rc.linear_matrix
        ly = dyn.linear_lyapunov_spectrum(A, dt=rc.dt, renorm_interval=rc.renorm_interval,
                                          t_total=rc.lyap_t_total, frame_burn_in=rc.frame_burn_in,
                                          seed=rc.seed)
        ref = np.sort(np.linalg.eigvals(A).real)[::-1]
        _write_csv(out / "lyapunov.csv", ["index", "exponent", "eigenvalue_real_part"],
                   [[i, e, r] for i, (e, r) in enumerate(zip(ly.exponents, ref), start=1)])
    else:
        W = rc.weight_matrix()
        spec = dyn.IntegratorSpec(t_end=rc.lyap_t_total, dt=rc.dt)
        x0 = _initial_state(rc, W, rc.initial_patterns[0])
        ly = dyn.lyapunov_spectrum(x0, W, rc.network, spec, rc.renorm_interval, rc.lyap_t_total,
                                   transient=rc.lyap_transient, frame_burn_in=rc.frame_burn_in,
                                   record_stride=rc.record_stride if rc.window else None)
        _write_csv(out / "lyapunov.csv", ["index", "exponent"],
                   [[i, e] for i, e in enumerate(ly.exponents, start=1)])
        if rc.window:
            w = ly.trajectory.window(*rc.window)
            events = dyn.detect_recall(w, rc.patterns, rc.threshold)
            _write_csv(out / "window_recall.csv", ["pattern", "t_start", "t_end"],
                       [[e.pattern, e.t_start, e.t_end] for e in events.events])
            dyn.write_trajectory_csv(w, out / "window.csv", include_outputs=True)
            print(f"patterns recalled in window {rc.window}: {sorted(events.patterns_recalled())}")
    d = ly.history.shape[1] - 1
    _write_csv(out / "convergence.csv", ["t"] + [f"exponent_{i}" for i in range(1, d + 1)],
               ly.history.tolist())
    print("exponents:", " ".join(f"{v:.5g}" for v in ly.exponents))
    return 0


def sweep_point(rc: RunConfig, mu1: float) -> list:
    """One row of the sweep table: mu1, regime, max Re(nu), amplitude, error."""
    try:
        W = rc.weight_matrix(mu1)
        cls = classify_regime(W, rc.network)
        spec = dyn.IntegratorSpec(t_end=rc.sweep_t_end, dt=rc.dt, record_stride=rc.record_stride)
        traj = dyn.integrate(_initial_state(rc, W, rc.initial_patterns[0]), W, rc.network, spec)
        tail = traj.window(0.75 * rc.sweep_t_end).outputs[:, 0]
        amp = float(tail.max() - tail.min())
        return [mu1, cls.regime.value, cls.report.max_real_part, amp, ""]
    except RecallDynError as exc:
        return [mu1, "", "", "", f"{type(exc).__name__}: {exc}"]


def cmd_sweep(rc: RunConfig, out: Path, jobs: int) -> int:
    if not rc.sweep_mu1:
        raise InputError("[sweep] needs mu1 values or mu1_start/mu1_stop/steps", path=rc.path)
    grid = list(rc.sweep_mu1)
    if jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(sweep_point, [rc] * len(grid), grid))
    else:
        rows = [sweep_point(rc, mu1) for mu1 in grid]
    _write_csv(out / "sweep.csv", ["mu1", "regime", "max_re_nu", "amplitude_o_1_1", "error"], rows)
    for r in rows:
        tail = r[4] or f"{r[1]} maxRe={_fmt(r[2])} amp={_fmt(r[3])}"
        print(f"mu1={r[0]:.6g}: {tail}")
    return 0


COMMANDS = {
    "learn": cmd_learn,
    "analyze": cmd_analyze,
    "hopf": cmd_hopf,
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "lyapunov": cmd_lyapunov,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="recall-dyn",
                                description="Free-recall attractor network analysis and simulation.")
    p.add_argument("command", choices=list(COMMANDS))
    p.add_argument("--config", required=True, help="INI run configuration")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (sweep only)")
    p.add_argument("--seed", type=int, default=None, help="override [run] seed")
    p.add_argument("--out", default=None, help="override [run] output_dir")
    return p


def _configure_logging() -> None:
    name = os.environ.get("RECALL_DYN_LOG", "warn").lower()
    level = LOG_LEVELS.get(name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if name not in LOG_LEVELS:
        log.warning("unknown RECALL_DYN_LOG value %r; using warn", name)


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 1
    try:
        rc = load_config(args.config)
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.out is not None:
            changes["output_dir"] = Path(args.out)
        rc = dataclasses.replace(rc, **changes)
        rc.output_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](rc, rc.output_dir, args.jobs)
    except RecallDynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
