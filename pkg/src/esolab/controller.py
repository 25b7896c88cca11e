"""
Sliding-surface construction over observer estimates and the switching
control law.  The law is built so the innovation terms cancel exactly:
composing it with the observer dynamics yields sigma_dot = -U0 * switch(sigma)
identically, whatever the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError
from .gains import GainSet, hurwitz_check

SWITCH_MODES = ("sign", "saturation")


@dataclass(frozen=True)
class SlidingController:
    """Surface coefficients a_1..a_{n-1}, switching gain U0, switch shape."""

    a: tuple
    u0: float
    b: float
    switch_mode: str = "sign"
    phi: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        if not self.u0 > 0.0:
            raise ValidationError(f"U0 must be positive, got {self.u0!r}")
        if self.b == 0.0 or not math.isfinite(self.b):
            raise ValidationError(f"b must be a non-zero constant, got {self.b!r}")
        if self.switch_mode not in SWITCH_MODES:
            raise ValidationError(
                f"switch mode must be one of {SWITCH_MODES}, got "
                f"{self.switch_mode!r}")
        if self.switch_mode == "saturation":
            if self.phi is None or not self.phi > 0.0:
                raise ValidationError(
                    f"saturation mode needs a boundary-layer width phi > 0, "
                    f"got {self.phi!r}")
        # Surface polynomial s^{n-1} + a_{n-1} s^{n-2} + ... + a_1; the
        # empty list (n = 1, constant polynomial) is vacuously Hurwitz.
        if self.a and not hurwitz_check(tuple(reversed(self.a))):
            raise ValidationError(
                f"surface coefficients {self.a} do not form a Hurwitz "
                f"polynomial")


def switch(sigma: float, mode: str = "sign", phi: float | None = None) -> float:
    """Switching function in [-1, 1]: pure sign (sign(0) = 0) or saturation."""
    if mode == "sign":
        if sigma > 0.0:
            return 1.0
        if sigma < 0.0:
            return -1.0
        return 0.0
    if mode == "saturation":
        if phi is None or not phi > 0.0:
            raise ValidationError(f"saturation needs phi > 0, got {phi!r}")
        v = sigma / phi
        if v > 1.0:
            return 1.0
        if v < -1.0:
            return -1.0
        return v
    raise ValidationError(f"unknown switch mode {mode!r}")


def sliding_variable(e_hat, ctrl: SlidingController) -> float:
    """sigma = ehat_n + a_{n-1} ehat_{n-1} + ... + a_1 ehat_1.

    The lumped-uncertainty estimate ehat_{n+1} is not part of sigma.
    """
    n = len(e_hat) - 1
    if len(ctrl.a) != n - 1:
        raise ValidationError(
            f"state of length {len(e_hat)} needs {len(e_hat) - 2} surface "
            f"coefficients, got {len(ctrl.a)}")
    sigma = e_hat[n - 1]
    for i, ai in enumerate(ctrl.a):
        sigma += ai * e_hat[i]
    return sigma


def control_law(e_hat, e1_measured: float, gains: GainSet,
                ctrl: SlidingController) -> float:
    """u = -(U0*switch(sigma) - K*(ehat_1 - e1) + tail) / b.

    K collects h_n/eps^n plus the a-weighted lower-order gains and the
    tail is ehat_{n+1} + a_{n-1} ehat_n + ... + a_1 ehat_2, so that the
    observer's innovation terms cancel and sigma obeys the pure
    reaching law.
    """
    n = gains.n
    if len(e_hat) != n + 1:
        raise ValidationError(
            f"observer state needs {n + 1} entries, got {len(e_hat)}")
    scaled = gains.scaled
    sigma = sliding_variable(e_hat, ctrl)
    k_gain = scaled[n - 1]
    tail = e_hat[n]
    for i, ai in enumerate(ctrl.a):
        k_gain += ai * scaled[i]
        tail += ai * e_hat[i + 1]
    sw = switch(sigma, ctrl.switch_mode, ctrl.phi)
    return -(ctrl.u0 * sw - k_gain * (e_hat[0] - e1_measured) + tail) / ctrl.b


def reaching_time_bound(sigma0: float, u0: float) -> float:
    """Exact hitting time |sigma0| / U0 of the ideal reaching law."""
    if not u0 > 0.0:
        raise ValidationError(f"U0 must be positive, got {u0!r}")
    return abs(sigma0) / u0
