"""
Continuous-time dynamics of the extended high-gain observer.

The observer carries n+1 states: estimates of the tracking error, its
derivatives, and the lumped uncertainty.  Every correction row is driven
by the single measured error through gains h_k/eps^k; the control input
enters only row n.  Run standalone on a measured signal (u = 0, zero
reference) the same equations estimate the signal's derivatives up to
order n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, ValidationError
from .gains import GainSet
from .integrate import rk4_step

UNIFORMITY_JITTER = 1e-9


@dataclass(frozen=True)
class ObserverConfig:
    gains: GainSet
    b: float
    initial_state: tuple

    def __post_init__(self):
        if self.b == 0.0 or not math.isfinite(self.b):
            raise ValidationError(f"b must be a non-zero constant, got {self.b!r}")
        state = tuple(float(v) for v in self.initial_state)
        object.__setattr__(self, "initial_state", state)
        if len(state) != self.gains.n + 1:
            raise ValidationError(
                f"initial state needs {self.gains.n + 1} entries, "
                f"got {len(state)}")


def observer_rhs(e_hat, e1_measured: float, u: float,
                 cfg: ObserverConfig) -> list:
    """Time derivative of the observer state for one measurement and input.

    Row k feeds estimate k+1 minus the scaled innovation; the b*u term
    appears only in row n, and the last row is pure innovation.
    """
    scaled = cfg.gains.scaled
    m = len(scaled)
    if len(e_hat) != m:
        raise ValidationError(
            f"observer state needs {m} entries, got {len(e_hat)}")
    total = e1_measured + u
    for v in e_hat:
        total += v
    if not math.isfinite(total):
        raise DivergenceError("non-finite observer input")
    d1 = e_hat[0] - e1_measured
    out = [e_hat[k + 1] - scaled[k] * d1 for k in range(m - 1)]
    out[m - 2] += cfg.b * u
    out.append(-scaled[m - 1] * d1)
    return out


@dataclass(frozen=True)
class DifferentiatorRun:
    """Estimates recorded on the integration grid: column k is d^k y / dt^k."""

    t: np.ndarray
    estimates: np.ndarray


def run_differentiator(times, values, cfg: ObserverConfig, dt: float,
                       record_stride: int = 1) -> DifferentiatorRun:
    """Feed a uniformly sampled signal through the observer as e1, u = 0.

    Sample spacing must not exceed the integration step dt; values between
    samples are linearly interpolated for the Runge-Kutta stages.
    """
    t_arr = np.asarray(times, dtype=float)
    y_arr = np.asarray(values, dtype=float)
    if t_arr.ndim != 1 or t_arr.shape != y_arr.shape or t_arr.size < 2:
        raise ValidationError("need matching 1-d time and value arrays "
                              "with at least 2 samples")
    spacing = (t_arr[-1] - t_arr[0]) / (t_arr.size - 1)
    if spacing <= 0.0:
        raise ValidationError("sample times must be increasing")
    jitter = float(np.max(np.abs(np.diff(t_arr) - spacing)))
    if jitter > UNIFORMITY_JITTER:
        raise ValidationError(
            f"sampling is non-uniform (jitter {jitter:.3e} exceeds "
            f"{UNIFORMITY_JITTER:.0e})")
    if dt <= 0.0:
        raise ValidationError(f"dt must be positive, got {dt!r}")
    if spacing > dt * (1.0 + 1e-9):
        raise ValidationError(
            f"sample spacing {spacing:.6g} exceeds the integrator step {dt:.6g}")
    if record_stride < 1:
        raise ValidationError("record_stride must be >= 1")

    t0 = float(t_arr[0])
    t_last = float(t_arr[-1])
    n_steps = int(math.floor((t_last - t0) / dt + 1e-9))
    y = y_arr
    last = y.size - 1

    def sample(tau: float) -> float:
        pos = (tau - t0) / spacing
        i = int(pos)
        if i >= last:
            return float(y[last])
        frac = pos - i
        return float(y[i] + frac * (y[i + 1] - y[i]))

    scaled = cfg.gains.scaled
    m = len(scaled)
    state = list(cfg.initial_state)
    n_rec = n_steps // record_stride + 1
    rec_t = np.empty(n_rec)
    rec_e = np.empty((n_rec, m))
    ri = 0
    sixth = dt / 6.0
    half = 0.5 * dt
    for k in range(n_steps + 1):
        t = t0 + k * dt
        if k % record_stride == 0:
            rec_t[ri] = t
            rec_e[ri] = state
            ri += 1
        if k == n_steps:
            break
        # Inlined rk4_step of observer_rhs with u = 0 and interpolated e1;
        # the composition is asserted equivalent in the test suite.
        y0 = sample(t)
        yh = sample(t + half)
        y1 = sample(t + dt)
        d1 = state[0] - y0
        k1 = [state[j + 1] - scaled[j] * d1 for j in range(m - 1)]
        k1.append(-scaled[m - 1] * d1)
        s2 = [state[j] + half * k1[j] for j in range(m)]
        d1 = s2[0] - yh
        k2 = [s2[j + 1] - scaled[j] * d1 for j in range(m - 1)]
        k2.append(-scaled[m - 1] * d1)
        s3 = [state[j] + half * k2[j] for j in range(m)]
        d1 = s3[0] - yh
        k3 = [s3[j + 1] - scaled[j] * d1 for j in range(m - 1)]
        k3.append(-scaled[m - 1] * d1)
        s4 = [state[j] + dt * k3[j] for j in range(m)]
        d1 = s4[0] - y1
        k4 = [s4[j + 1] - scaled[j] * d1 for j in range(m - 1)]
        k4.append(-scaled[m - 1] * d1)
        state = [state[j] + sixth * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j])
                 for j in range(m)]
        check = 0.0
        for v in state:
            check += v
        if not math.isfinite(check):
            raise DivergenceError("differentiator run diverged", t=t + dt)
    return DifferentiatorRun(t=rec_t, estimates=rec_e)


def differentiator_step(state, t: float, dt: float, sample,
                        cfg: ObserverConfig) -> list:
    """Reference one-step update used to cross-check the inlined loop."""
    return rk4_step(lambda s, tau: observer_rhs(s, sample(tau), 0.0, cfg),
                    state, t, dt)
