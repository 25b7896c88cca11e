"""
Delimited output and figure rendering.

CSV files are RFC-4180 with '.' decimals and 17 significant digits, so
identical runs write identical bytes.  Figures are SVG rendered through
matplotlib with a pinned hash salt and no date metadata, which makes the
SVG byte output deterministic as well.
"""

from __future__ import annotations

import csv

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import ValidationError  # noqa: E402
from .observer import DifferentiatorRun  # noqa: E402
from .sim import SweepResult, Trajectory  # noqa: E402

_SVG_SALT = "esolab"


def format_value(v: float) -> str:
    return f"{v:.17g}"


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def trajectory_header(n: int) -> list:
    head = ["t"]
    head += [f"x{k}" for k in range(1, n + 1)]
    head.append("yd")
    head += [f"e{k}" for k in range(1, n + 2)]
    head += [f"ehat{k}" for k in range(1, n + 2)]
    head += [f"delta{k}" for k in range(1, n + 2)]
    head += ["sigma", "u"]
    return head


def write_trajectory_csv(traj: Trajectory, path: str) -> None:
    n = traj.x.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(trajectory_header(n))
        for i in range(traj.t.size):
            row = [traj.t[i], *traj.x[i], traj.yd[i], *traj.e[i],
                   *traj.ehat[i], *traj.delta[i], traj.sigma[i], traj.u[i]]
            writer.writerow(format_value(v) for v in row)


SWEEP_HEADER = ["epsilon", "e_metric", "delta_metric", "delta_bound",
                "kp_fit", "monotone_ok"]


def write_sweep_csv(result: SweepResult, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        for row in result.rows:
            writer.writerow([
                format_value(row.epsilon), format_value(row.e_metric),
                format_value(row.delta_metric), format_value(row.delta_bound),
                format_value(row.kp_fit),
                "true" if row.monotone_ok else "false"])


def write_differentiator_csv(run: DifferentiatorRun, path: str,
                             truth: np.ndarray | None = None) -> None:
    """Columns t, d0..dn; when exact derivatives are known, d0_true..dn_true."""
    m = run.estimates.shape[1]
    header = ["t"] + [f"d{k}" for k in range(m)]
    if truth is not None:
        header += [f"d{k}_true" for k in range(m)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(run.t.size):
            row = [run.t[i], *run.estimates[i]]
            if truth is not None:
                row += list(truth[i])
            writer.writerow(format_value(v) for v in row)


def read_table(path: str):
    """Read a CSV written by this package: header row plus float columns."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty CSV")
        columns = {name: [] for name in header}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValidationError(
                    f"{path}: line {lineno} has {len(row)} fields, "
                    f"expected {len(header)}")
            for name, field in zip(header, row):
                if field in ("true", "false"):
                    columns[name].append(1.0 if field == "true" else 0.0)
                    continue
                try:
                    columns[name].append(float(field))
                except ValueError:
                    raise ValidationError(
                        f"{path}: line {lineno}: not a number: {field!r}")
    if not columns[header[0]]:
        raise ValidationError(f"{path}: CSV has a header but no data rows")
    return header, {name: np.asarray(vals) for name, vals in columns.items()}


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def render_lines(path: str, x: np.ndarray, series: dict, xlabel: str,
                 ylabel: str, title: str = "") -> None:
    """One polyline per named series, linear axes, legend; deterministic SVG."""
    if not series:
        raise ValidationError("nothing to plot")
    with matplotlib.rc_context({"svg.hashsalt": _SVG_SALT}):
        fig, ax = plt.subplots(figsize=(8.0, 4.5))
        for name, values in series.items():
            ax.plot(x, values, linewidth=1.0, label=name)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def trajectory_figure(traj: Trajectory, path: str) -> None:
    """Tracking errors over time, the report companion to the trajectory CSV."""
    series = {f"e{k + 1}": traj.e[:, k] for k in range(traj.e.shape[1])}
    series["sigma"] = traj.sigma
    render_lines(path, traj.t, series, xlabel="t [s]", ylabel="error",
                 title="output tracking errors")


def sweep_figure(result: SweepResult, path: str) -> None:
    eps = np.array([row.epsilon for row in result.rows])
    series = {
        "||e|| steady-state": np.array([r.e_metric for r in result.rows]),
        "||delta|| steady-state": np.array([r.delta_metric
                                            for r in result.rows]),
    }
    with matplotlib.rc_context({"svg.hashsalt": _SVG_SALT}):
        fig, ax = plt.subplots(figsize=(8.0, 4.5))
        for name, values in series.items():
            ax.plot(eps, values, marker="o", linewidth=1.0, label=name)
        ax.set_xlabel("epsilon")
        ax.set_ylabel("steady-state norm")
        ax.set_title("epsilon sweep")
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def differentiator_figure(run: DifferentiatorRun, path: str,
                          truth: np.ndarray | None = None) -> None:
    series = {}
    m = run.estimates.shape[1]
    for k in range(m):
        series[f"d{k}"] = run.estimates[:, k]
    if truth is not None:
        for k in range(m):
            series[f"d{k} true"] = truth[:, k]
    render_lines(path, run.t, series, xlabel="t [s]", ylabel="estimate",
                 title="derivative estimates")
