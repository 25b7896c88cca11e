"""
Fixed-step integration of the coupled plant-observer-controller loop,
true-error bookkeeping, steady-state metrics, the estimation-error bound
check, and epsilon-sweep experiments.

The loop is deliberately fixed-step with zero-order-hold control: the
sign switch defeats adaptive integrators, and a fixed step makes the
chatter band explicit and every run bit-deterministic.  Sweeps fan out
over processes; ESO_LAB_THREADS caps the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .controller import SlidingController, control_law, sliding_variable
from .errors import DivergenceError, EvaluationError, ValidationError
from .gains import GainSet, delta_bound, eigen_factorize
from .integrate import rk4_step
from .observer import ObserverConfig, observer_rhs
from .plant import PlantModel, ReferenceSignal, plant_rhs

__all__ = [
    "ExperimentConfig", "Trajectory", "SteadyStateMetrics", "SweepRow",
    "SweepResult", "rk4_step", "run_closed_loop", "true_errors",
    "estimate_m", "steady_state_metrics", "epsilon_sweep",
    "STIFFNESS_FACTOR", "MONOTONE_SLACK",
]

STIFFNESS_FACTOR = 10.0
MONOTONE_SLACK = 0.10
THREADS_ENV = "ESO_LAB_THREADS"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one closed-loop run needs; immutable and picklable."""

    plant: PlantModel
    reference: ReferenceSignal
    gains: GainSet
    controller: SlidingController
    observer_initial: tuple
    dt: float
    t_end: float
    m_bound: float | None = None
    record_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValidationError(f"dt must be positive, got {self.dt!r}")
        if self.t_end < self.dt:
            raise ValidationError(
                f"t_end must be at least one step, got {self.t_end!r}")
        if not isinstance(self.record_stride, int) or self.record_stride < 1:
            raise ValidationError(
                f"record_stride must be an integer >= 1, got "
                f"{self.record_stride!r}")
        if self.m_bound is not None and self.m_bound < 0.0:
            raise ValidationError(f"m_bound must be >= 0, got {self.m_bound!r}")
        obs0 = tuple(float(v) for v in self.observer_initial)
        object.__setattr__(self, "observer_initial", obs0)
        n = self.plant.n
        if self.gains.n != n:
            raise ValidationError(
                f"gain set is for order {self.gains.n}, plant has order {n}")
        if len(obs0) != n + 1:
            raise ValidationError(
                f"observer initial state needs {n + 1} entries, got "
                f"{len(obs0)}")
        if len(self.controller.a) != n - 1:
            raise ValidationError(
                f"controller needs {n - 1} surface coefficients, got "
                f"{len(self.controller.a)}")
        if self.controller.b != self.plant.b:
            raise ValidationError(
                "controller and plant disagree on the input gain b")

    def stiffness_limit(self) -> float:
        """Largest comfortable step: eps / (10 * max pole)."""
        return self.gains.epsilon / (STIFFNESS_FACTOR
                                     * max(self.gains.poles.lambdas))


@dataclass(frozen=True)
class Trajectory:
    """Uniformly spaced records of one closed-loop run."""

    t: np.ndarray        # (R,)
    x: np.ndarray        # (R, n)
    yd: np.ndarray       # (R,)
    e: np.ndarray        # (R, n+1) true errors
    ehat: np.ndarray     # (R, n+1) observer estimates
    delta: np.ndarray    # (R, n+1) ehat - e, exact at every record
    sigma: np.ndarray    # (R,)
    u: np.ndarray        # (R,)
    diverged: bool
    abort_time: float | None
    warnings: tuple


def true_errors(x, t: float, model: PlantModel, ref: ReferenceSignal) -> list:
    """e_k = x_k - y_d^(k-1) for k <= n, then f(x, t) - y_d^(n)."""
    if len(x) != model.n:
        raise ValidationError(f"state needs {model.n} entries, got {len(x)}")
    out = [x[k] - ref.value(t, k) for k in range(model.n)]
    out.append(model.drift(t, x) - ref.value(t, model.n))
    return out


def run_closed_loop(cfg: ExperimentConfig) -> Trajectory:
    """Integrate plant and observer with zero-order-hold control.

    Per step: u comes from the current observer state and measurement,
    then plant and observer each advance one rk4_step with that frozen u
    (and frozen measurement).  Non-finite values or an expression fault
    abort the run, returning the partial trajectory with the abort time.
    """
    plant = cfg.plant
    ref = cfg.reference
    gains = cfg.gains
    ctrl = cfg.controller
    dt = cfg.dt
    stride = cfg.record_stride
    n = plant.n

    warnings = []
    limit = cfg.stiffness_limit()
    if dt > limit:
        warnings.append(
            f"dt = {dt:.3g} exceeds the stiffness budget eps/(10*max lambda) "
            f"= {limit:.3g}; the fastest observer mode may be underresolved")

    ocfg = ObserverConfig(gains=gains, b=plant.b,
                          initial_state=cfg.observer_initial)
    n_steps = int(math.floor(cfg.t_end / dt + 1e-9))
    n_rec = n_steps // stride + 1

    rec_t = np.empty(n_rec)
    rec_x = np.empty((n_rec, n))
    rec_yd = np.empty(n_rec)
    rec_e = np.empty((n_rec, n + 1))
    rec_ehat = np.empty((n_rec, n + 1))
    rec_delta = np.empty((n_rec, n + 1))
    rec_sigma = np.empty(n_rec)
    rec_u = np.empty(n_rec)

    x = list(plant.initial_state)
    ehat = list(cfg.observer_initial)
    ri = 0
    diverged = False
    abort_time = None

    ref_value = ref.value
    for k in range(n_steps + 1):
        t = k * dt
        yd = ref_value(t, 0)
        e1 = x[0] - yd
        try:
            sigma = sliding_variable(ehat, ctrl)
            u = control_law(ehat, e1, gains, ctrl)
            if k % stride == 0:
                err = true_errors(x, t, plant, ref)
                rec_t[ri] = t
                rec_x[ri] = x
                rec_yd[ri] = yd
                rec_e[ri] = err
                rec_ehat[ri] = ehat
                rec_delta[ri] = [ehat[j] - err[j] for j in range(n + 1)]
                rec_sigma[ri] = sigma
                rec_u[ri] = u
                ri += 1
            if k == n_steps:
                break
            x = rk4_step(lambda s, tau: plant_rhs(s, tau, u, plant), x, t, dt)
            ehat = rk4_step(lambda s, tau: observer_rhs(s, e1, u, ocfg),
                            ehat, t, dt)
        except (EvaluationError, DivergenceError):
            diverged = True
            abort_time = t
            break
        check = 0.0
        for v in x:
            check += v
        for v in ehat:
            check += v
        if not math.isfinite(check):
            diverged = True
            abort_time = t + dt
            break

    return Trajectory(
        t=rec_t[:ri], x=rec_x[:ri], yd=rec_yd[:ri], e=rec_e[:ri],
        ehat=rec_ehat[:ri], delta=rec_delta[:ri], sigma=rec_sigma[:ri],
        u=rec_u[:ri], diverged=diverged, abort_time=abort_time,
        warnings=tuple(warnings))


def estimate_m(traj: Trajectory, cfg: ExperimentConfig) -> float:
    """Trajectory-local estimate of the bound on |f_dot| + |y_d^(n+1)|.

    Central-differences the recorded lumped-uncertainty signal
    e_{n+1} + y_d^(n) and adds the exact reference term pointwise; the
    maximum over interior records is the estimate (labelled M-hat in all
    reports to distinguish it from a user-supplied global bound).
    """
    if traj.t.size < 3:
        raise ValidationError("need at least 3 records to estimate M")
    n = cfg.plant.n
    ref = cfg.reference
    t = traj.t
    f_rec = traj.e[:, n] + np.array([ref.value(tk, n) for tk in t])
    deriv = (f_rec[2:] - f_rec[:-2]) / (t[2:] - t[:-2])
    tail = np.array([abs(ref.value(tk, n + 1)) for tk in t[1:-1]])
    return float(np.max(np.abs(deriv) + tail))


@dataclass(frozen=True)
class SteadyStateMetrics:
    """Windowed norms of the true error and estimation error."""

    window_start: float
    e_avg: float
    e_max: float
    delta_avg: float
    delta_max: float


def steady_state_metrics(traj: Trajectory,
                         window: float = 0.5) -> SteadyStateMetrics:
    """Time-averaged and max 2-norms over the trailing `window` fraction.

    Averaging smooths the sliding-mode chatter; a diverged trajectory is
    rejected.
    """
    if traj.diverged:
        raise ValidationError("metrics are undefined for a diverged run")
    if not 0.0 < window <= 1.0:
        raise ValidationError(f"window must lie in (0, 1], got {window!r}")
    t = traj.t
    if t.size == 0:
        raise ValidationError("empty trajectory")
    t_lo = t[-1] - window * (t[-1] - t[0])
    mask = t >= t_lo - 1e-12 * max(1.0, abs(t_lo))
    e_norm = np.linalg.norm(traj.e[mask], axis=1)
    d_norm = np.linalg.norm(traj.delta[mask], axis=1)
    return SteadyStateMetrics(
        window_start=float(t_lo),
        e_avg=float(e_norm.mean()), e_max=float(e_norm.max()),
        delta_avg=float(d_norm.mean()), delta_max=float(d_norm.max()))


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    e_metric: float
    delta_metric: float
    delta_bound: float
    kp_fit: float
    monotone_ok: bool


@dataclass(frozen=True)
class SweepResult:
    """Per-epsilon steady-state metrics with bound and monotonicity verdicts."""

    rows: tuple
    kp: float
    delta_monotone: bool
    e_monotone: bool


def _sweep_job(cfg: ExperimentConfig):
    traj = run_closed_loop(cfg)
    eps = cfg.gains.epsilon
    if traj.diverged:
        return ("diverged", eps, traj.abort_time)
    metrics = steady_state_metrics(traj)
    m = cfg.m_bound if cfg.m_bound is not None else estimate_m(traj, cfg)
    fact = eigen_factorize(cfg.gains, cfg.gains.poles)
    bound = delta_bound(eps, m, cfg.gains.lambda_min, fact.conditioning)
    return ("ok", eps, metrics.e_avg, metrics.delta_avg, bound)


def _worker_cap(n_jobs: int) -> int:
    cap = os.cpu_count() or 1
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            cap = min(cap, max(1, int(env)))
        except ValueError:
            raise ValidationError(
                f"{THREADS_ENV} must be an integer, got {env!r}")
    return min(cap, n_jobs)


def epsilon_sweep(cfg: ExperimentConfig, epsilons) -> SweepResult:
    """Rerun the experiment for each epsilon, everything else identical.

    Epsilons must be strictly descending in (0, 1), at least three of
    them.  Runs are independent, so they fan out over a process pool
    (capped by ESO_LAB_THREADS); any diverged run fails the sweep naming
    its epsilon.
    """
    eps_list = [float(e) for e in epsilons]
    if len(eps_list) < 3:
        raise ValidationError(
            f"need at least 3 epsilons, got {len(eps_list)}")
    for e in eps_list:
        if not 0.0 < e < 1.0:
            raise ValidationError(f"epsilon {e!r} is outside (0, 1)")
    for prev, nxt in zip(eps_list, eps_list[1:]):
        if nxt >= prev:
            raise ValidationError(
                f"epsilons must be strictly descending, got {prev!r} "
                f"followed by {nxt!r}")

    jobs = [replace(cfg, gains=GainSet.from_poles(cfg.gains.poles, e))
            for e in eps_list]
    workers = _worker_cap(len(jobs))
    outcomes = None
    if workers > 1:
        try:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(_sweep_job, jobs))
        except OSError:
            outcomes = None  # pool unavailable; fall back to serial
    if outcomes is None:
        outcomes = [_sweep_job(job) for job in jobs]

    rows = []
    prev_e = prev_d = None
    all_e = all_d = True
    for outcome in outcomes:
        if outcome[0] == "diverged":
            raise DivergenceError(
                f"sweep run diverged for epsilon {outcome[1]!r}",
                t=outcome[2])
        _, eps, e_avg, d_avg, bound = outcome
        ok_e = prev_e is None or e_avg <= (1.0 + MONOTONE_SLACK) * prev_e
        ok_d = prev_d is None or d_avg <= (1.0 + MONOTONE_SLACK) * prev_d
        all_e = all_e and ok_e
        all_d = all_d and ok_d
        rows.append(SweepRow(
            epsilon=eps, e_metric=e_avg, delta_metric=d_avg,
            delta_bound=bound, kp_fit=e_avg / math.sqrt(eps),
            monotone_ok=ok_e and ok_d))
        prev_e, prev_d = e_avg, d_avg
    kp = max(row.kp_fit for row in rows)
    return SweepResult(rows=tuple(rows), kp=kp,
                       delta_monotone=all_d, e_monotone=all_e)
