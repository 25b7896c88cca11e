"""
Command-line surface: configuration ingestion, subcommand dispatch, and
CSV/SVG emission.

    esolab synth        --config cfg.json
    esolab simulate     --config cfg.json [--out traj.csv] [--fig traj.svg|--no-fig]
    esolab sweep        --config cfg.json [--out sweep.csv] [--fig sweep.svg|--no-fig]
    esolab differentiate --config cfg.json [--signal EXPR|file.csv] [--order N] [--out diff.csv]
    esolab plot traj.csv --cols e1,sigma [--out fig.svg]

Exit codes: 0 success, 1 validation error, 2 numerical divergence.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import config as cfgmod
from .errors import (ConfigError, DivergenceError, EvaluationError,
                     ValidationError)
from .expr import max_variable_index, parse
from .gains import build_observer_matrix, delta_bound, eigen_factorize
from .observer import ObserverConfig, run_differentiator
from .sim import (STIFFNESS_FACTOR, epsilon_sweep, estimate_m,
                  run_closed_loop, steady_state_metrics)
from . import report


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _fmt_list(vals) -> str:
    return "[" + ", ".join(_fmt(v) for v in vals) + "]"


def _fig_path(out: str) -> str:
    root, ext = os.path.splitext(out)
    return root + ".svg" if ext != ".svg" else root + "_fig.svg"


class _Parser(argparse.ArgumentParser):
    # usage problems are validation errors: exit 1, not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="esolab",
                     description="extended-observer gain synthesis, "
                                 "simulation and verification")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True,
                           help="JSON experiment configuration")
        p.add_argument("--seedless", action="store_true",
                       help="assert the run uses no randomness (esolab is "
                            "always deterministic; accepted for interface "
                            "stability)")

    p = sub.add_parser("synth", help="print the observer gain report")
    add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="run the closed loop, write CSV")
    add_common(p)
    p.add_argument("--out", default="traj.csv", help="trajectory CSV path")
    p.add_argument("--fig", default=None,
                   help="figure path (default: alongside --out)")
    p.add_argument("--no-fig", action="store_true", help="skip the figure")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="rerun per epsilon, write CSV")
    add_common(p)
    p.add_argument("--out", default="sweep.csv", help="sweep CSV path")
    p.add_argument("--fig", default=None,
                   help="figure path (default: alongside --out)")
    p.add_argument("--no-fig", action="store_true", help="skip the figure")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("differentiate",
                       help="estimate signal derivatives with the observer")
    add_common(p)
    p.add_argument("--signal", default=None,
                   help="expression in t, or a two-column (t, y) CSV path; "
                        "defaults to the config reference signal")
    p.add_argument("--order", type=int, default=None,
                   help="derivative order n (must match the pole count)")
    p.add_argument("--out", default="diff.csv", help="estimate CSV path")
    p.add_argument("--fig", default=None,
                   help="figure path (default: alongside --out)")
    p.add_argument("--no-fig", action="store_true", help="skip the figure")
    p.set_defaults(func=cmd_differentiate)

    p = sub.add_parser("plot", help="render CSV columns to an SVG chart")
    p.add_argument("table", help="CSV file written by simulate/sweep/"
                                 "differentiate")
    p.add_argument("--cols", required=True,
                   help="comma-separated column names to plot")
    p.add_argument("--out", default="fig.svg", help="SVG output path")
    p.add_argument("--seedless", action="store_true",
                   help="assert the run uses no randomness")
    p.set_defaults(func=cmd_plot)
    return parser


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    doc = cfgmod.load_config(args.config)
    cfgmod.require_sections(doc, "observer")
    gains = cfgmod.build_gains(doc)
    poles = gains.poles
    matrix = build_observer_matrix(gains)
    fact = eigen_factorize(gains, poles)

    m_label, m_value = _resolve_m(doc)
    print("gain synthesis report")
    print(f"  poles:                  {_fmt_list(poles.lambdas)}")
    print(f"  epsilon:                {_fmt(gains.epsilon)}")
    print(f"  h coefficients:         {_fmt_list(gains.h)}")
    print(f"  A first column:         {_fmt_list(matrix.a[:, 0])}")
    print(f"  eigenvalues:            {_fmt_list(fact.d)}")
    print(f"  factorization residual: {fact.residual:.6e}")
    print(f"  conditioning:           {_fmt(fact.conditioning)}")
    if m_value is None:
        unit = delta_bound(gains.epsilon, 1.0, gains.lambda_min,
                           fact.conditioning)
        print(f"  delta bound per unit M: {_fmt(unit)}")
    else:
        bound = delta_bound(gains.epsilon, m_value, gains.lambda_min,
                            fact.conditioning)
        print(f"  {m_label}: {_fmt(m_value)}")
        print(f"  delta bound:            {_fmt(bound)}")
    return 0


def _resolve_m(doc):
    """Given M from the config, or M-hat estimated along a run, or nothing."""
    sim = doc.get("sim", {})
    if "m_bound" in sim:
        return "M (given)", float(sim["m_bound"])
    needed = ("plant", "reference", "controller", "sim")
    if all(name in doc for name in needed):
        cfg = cfgmod.build_experiment(doc)
        traj = run_closed_loop(cfg)
        if not traj.diverged and traj.t.size >= 3:
            return "M-hat (estimated)", estimate_m(traj, cfg)
    return None, None


def cmd_simulate(args) -> int:
    doc = cfgmod.load_config(args.config)
    cfg = cfgmod.build_experiment(doc)
    traj = run_closed_loop(cfg)
    report.write_trajectory_csv(traj, args.out)
    for warning in traj.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if traj.diverged:
        print(f"run diverged at t = {traj.abort_time:.6g}; partial "
              f"trajectory written to {args.out}", file=sys.stderr)
        return 2
    if not args.no_fig:
        report.trajectory_figure(traj, args.fig or _fig_path(args.out))

    metrics = steady_state_metrics(traj)
    if cfg.m_bound is not None:
        m_label, m_value = "M (given)", cfg.m_bound
    else:
        m_label, m_value = "M-hat (estimated)", estimate_m(traj, cfg)
    fact = eigen_factorize(cfg.gains, cfg.gains.poles)
    bound = delta_bound(cfg.gains.epsilon, m_value, cfg.gains.lambda_min,
                        fact.conditioning)
    n_steps = int(math.floor(cfg.t_end / cfg.dt + 1e-9))
    print("simulation summary")
    print(f"  steps:              {n_steps} (dt = {_fmt(cfg.dt)}, "
          f"t_end = {_fmt(cfg.t_end)})")
    print(f"  records:            {traj.t.size} "
          f"(stride {cfg.record_stride})")
    print(f"  window:             t in [{_fmt(metrics.window_start)}, "
          f"{_fmt(traj.t[-1])}]")
    print(f"  avg ||e||:          {_fmt(metrics.e_avg)}")
    print(f"  max ||e||:          {_fmt(metrics.e_max)}")
    print(f"  avg ||delta||:      {_fmt(metrics.delta_avg)}")
    print(f"  max ||delta||:      {_fmt(metrics.delta_max)}")
    print(f"  {m_label}:  {_fmt(m_value)}")
    print(f"  delta bound:        {_fmt(bound)}")
    verdict = "PASS" if metrics.delta_avg <= bound else "FAIL"
    print(f"  delta bound check: {verdict}")
    return 0


def cmd_sweep(args) -> int:
    doc = cfgmod.load_config(args.config)
    cfg = cfgmod.build_experiment(doc)
    epsilons = cfgmod.sweep_epsilons(doc)
    if epsilons and min(epsilons) > 0.0:
        limit = min(epsilons) / (STIFFNESS_FACTOR
                                 * max(cfg.gains.poles.lambdas))
        if cfg.dt > limit:
            print(f"warning: dt = {cfg.dt:.3g} exceeds the stiffness budget "
                  f"{limit:.3g} of the smallest sweep epsilon",
                  file=sys.stderr)
    try:
        result = epsilon_sweep(cfg, epsilons)
    except ValidationError as exc:
        raise ConfigError("/sweep/epsilons", str(exc)) from exc
    report.write_sweep_csv(result, args.out)
    if not args.no_fig:
        report.sweep_figure(result, args.fig or _fig_path(args.out))
    print("epsilon sweep summary")
    print("  epsilon      ||e||_ss     ||delta||_ss  bound         kp_fit")
    for row in result.rows:
        print(f"  {row.epsilon:<12.6g} {row.e_metric:<12.6g} "
              f"{row.delta_metric:<13.6g} {row.delta_bound:<13.6g} "
              f"{row.kp_fit:.6g}")
    print(f"  fitted kp:               {_fmt(result.kp)}")
    print(f"  delta monotone (10% slack): "
          f"{'yes' if result.delta_monotone else 'NO'}")
    print(f"  e monotone (10% slack):     "
          f"{'yes' if result.e_monotone else 'NO'}")
    return 0


def _read_signal_csv(path: str):
    """Two-column (t, y) CSV, optional header, rejected with line numbers."""
    times, values = [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != 2:
                raise ValidationError(
                    f"{path}: line {lineno}: expected 2 fields, got "
                    f"{len(row)}")
            try:
                t, y = float(row[0]), float(row[1])
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise ValidationError(
                    f"{path}: line {lineno}: not a number: {row!r}")
            times.append(t)
            values.append(y)
    if len(times) < 2:
        raise ValidationError(f"{path}: need at least 2 samples")
    return np.asarray(times), np.asarray(values)


def cmd_differentiate(args) -> int:
    doc = cfgmod.load_config(args.config)
    cfgmod.require_sections(doc, "observer", "sim")
    gains = cfgmod.build_gains(doc)
    n = gains.n
    if args.order is not None and args.order != n:
        raise ValidationError(
            f"--order {args.order} implies {args.order + 1} poles, the "
            f"config has {n + 1}")
    sim = doc["sim"]
    dt = float(sim["dt"])
    t_end = float(sim["t_end"])
    stride = int(sim.get("record_stride", 1))

    truth_fn = None
    if args.signal is None:
        ref = cfgmod.build_reference(doc)
        grid = np.arange(int(math.floor(t_end / dt + 1e-9)) + 1) * dt
        samples = np.array([ref.value(tk, 0) for tk in grid])
        truth_fn = ref.value
    elif os.path.exists(args.signal):
        grid, samples = _read_signal_csv(args.signal)
    else:
        signal = parse(args.signal)
        if max_variable_index(signal) != 0:
            raise ValidationError(
                "--signal expressions may only use t (and pi)")
        grid = np.arange(int(math.floor(t_end / dt + 1e-9)) + 1) * dt
        samples = np.array([signal(tk, ()) for tk in grid])

    ocfg = ObserverConfig(gains=gains, b=1.0,
                          initial_state=cfgmod.observer_initial(doc))
    run = run_differentiator(grid, samples, ocfg, dt, record_stride=stride)

    truth = None
    if truth_fn is not None:
        truth = np.array([[truth_fn(tk, k) for k in range(n + 1)]
                          for tk in run.t])
    report.write_differentiator_csv(run, args.out, truth=truth)
    if not args.no_fig:
        report.differentiator_figure(run, args.fig or _fig_path(args.out),
                                     truth=truth)
    print(f"differentiator run: {run.t.size} records, orders 0..{n}, "
          f"epsilon = {_fmt(gains.epsilon)}")
    return 0


def cmd_plot(args) -> int:
    header, columns = report.read_table(args.table)
    wanted = [name.strip() for name in args.cols.split(",") if name.strip()]
    if not wanted:
        raise ValidationError("--cols must name at least one column")
    missing = [name for name in wanted if name not in columns]
    if missing:
        raise ValidationError(
            f"unknown column(s) {', '.join(missing)}; available: "
            f"{', '.join(header)}")
    x_name = header[0]
    series = {name: columns[name] for name in wanted}
    report.render_lines(args.out, columns[x_name], series, xlabel=x_name,
                        ylabel="value")
    print(f"wrote {args.out} ({len(wanted)} series, {columns[x_name].size} "
          f"points)")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DivergenceError, EvaluationError) as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
