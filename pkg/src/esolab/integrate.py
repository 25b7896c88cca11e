"""Fixed-step classical Runge-Kutta stepping on plain float sequences."""

from __future__ import annotations

from .errors import ValidationError


def rk4_step(rhs, state, t: float, dt: float) -> list:
    """One classical 4-stage Runge-Kutta update of `state` from t to t + dt.

    `rhs(state, t)` must return a derivative sequence of the same length.
    Works on plain lists of floats; divergence (non-finite results) is the
    caller's concern so the hot loop stays lean.
    """
    if dt <= 0.0:
        raise ValidationError(f"dt must be positive, got {dt!r}")
    half = 0.5 * dt
    k1 = rhs(state, t)
    k2 = rhs([s + half * k for s, k in zip(state, k1)], t + half)
    k3 = rhs([s + half * k for s, k in zip(state, k2)], t + half)
    k4 = rhs([s + dt * k for s, k in zip(state, k3)], t + dt)
    sixth = dt / 6.0
    return [s + sixth * (a + 2.0 * (b + c) + d)
            for s, a, b, c, d in zip(state, k1, k2, k3, k4)]
