import numpy as np
import pytest

from esolab.controller import (SlidingController, control_law,
                               reaching_time_bound, sliding_variable, switch)
from esolab.errors import ValidationError
from esolab.gains import GainSet, PoleSet
from esolab.observer import ObserverConfig, observer_rhs

from oracles import convolution_expand, draw_poles


def bench_controller(u0=4.0, b=1.0):
    return SlidingController(a=(1.0,), u0=u0, b=b)


def bench_gains(eps=0.1):
    return GainSet.from_poles(PoleSet((1.0, 2.0, 3.0)), eps)


# ---------------------------------------------------------------------------
# sliding variable
# ---------------------------------------------------------------------------

def test_sliding_variable_ignores_uncertainty_estimate():
    sigma = sliding_variable([0.5, -0.2, 7.0], bench_controller())
    assert sigma == pytest.approx(0.3)


def test_sliding_variable_zero_state():
    assert sliding_variable([0.0, 0.0, 0.0], bench_controller()) == 0.0


def test_sliding_variable_third_order():
    ctrl = SlidingController(a=(2.0, 3.0), u0=1.0, b=1.0)
    assert sliding_variable([1.0, 1.0, 1.0, 9.0], ctrl) == pytest.approx(6.0)


def test_sliding_variable_dimension_mismatch():
    with pytest.raises(ValidationError):
        sliding_variable([1.0, 2.0, 3.0, 4.0], bench_controller())


def test_first_order_surface_is_first_estimate():
    ctrl = SlidingController(a=(), u0=1.0, b=1.0)
    assert sliding_variable([0.7, 9.0], ctrl) == 0.7


# ---------------------------------------------------------------------------
# switching function
# ---------------------------------------------------------------------------

def test_pure_sign():
    assert switch(-3.0) == -1.0
    assert switch(2.0) == 1.0
    assert switch(0.0) == 0.0


def test_saturation():
    assert switch(0.05, "saturation", 0.1) == pytest.approx(0.5)
    assert switch(7.0, "saturation", 0.1) == 1.0
    assert switch(-7.0, "saturation", 0.1) == -1.0


def test_saturation_needs_phi():
    with pytest.raises(ValidationError):
        switch(1.0, "saturation", None)
    with pytest.raises(ValidationError):
        SlidingController(a=(1.0,), u0=1.0, b=1.0, switch_mode="saturation")


# ---------------------------------------------------------------------------
# control law
# ---------------------------------------------------------------------------

def test_zero_state_zero_control():
    assert control_law([0.0, 0.0, 0.0], 0.0, bench_gains(),
                       bench_controller()) == 0.0


def test_bench_gain_collection():
    # K = h2/eps^2 + a1*h1/eps = 1100 + 60 = 1160 for the benchmark setup
    gains = bench_gains()
    ctrl = bench_controller()
    rng = np.random.default_rng(8)
    for _ in range(20):
        e_hat = [float(v) for v in rng.uniform(-2, 2, 3)]
        e1 = float(rng.uniform(-2, 2))
        sigma = e_hat[1] + e_hat[0]
        sw = (sigma > 0) - (sigma < 0)
        want = -(4.0 * sw - 1160.0 * (e_hat[0] - e1) + e_hat[2] + e_hat[1])
        assert control_law(e_hat, e1, gains, ctrl) == pytest.approx(
            want, rel=1e-13, abs=1e-13)


def test_bench_numeric_example():
    u = control_law([0.1, 0.2, 0.3], 0.1, bench_gains(), bench_controller())
    assert u == pytest.approx(-4.5, abs=1e-12)


def test_scaling_b_halves_u():
    gains = bench_gains()
    e_hat = [0.3, -0.4, 1.7]
    u1 = control_law(e_hat, 0.1, gains, bench_controller(b=1.0))
    u2 = control_law(e_hat, 0.1, gains, bench_controller(b=2.0))
    assert u2 == u1 / 2.0


def test_controller_validation():
    with pytest.raises(ValidationError, match="U0"):
        SlidingController(a=(1.0,), u0=0.0, b=1.0)
    with pytest.raises(ValidationError, match="Hurwitz"):
        SlidingController(a=(-1.0,), u0=1.0, b=1.0)
    with pytest.raises(ValidationError, match="b"):
        SlidingController(a=(1.0,), u0=1.0, b=0.0)


# ---------------------------------------------------------------------------
# reaching time
# ---------------------------------------------------------------------------

def test_reaching_time_bound():
    assert reaching_time_bound(1.0, 4.0) == 0.25
    assert reaching_time_bound(0.0, 123.0) == 0.0
    assert reaching_time_bound(-2.0, 4.0) == 0.5
    with pytest.raises(ValidationError):
        reaching_time_bound(1.0, 0.0)


# ---------------------------------------------------------------------------
# the cancellation identity
# ---------------------------------------------------------------------------

def random_cancellation_case(rng):
    n = int(rng.integers(1, 4))
    poles = PoleSet(draw_poles(rng, n + 1, lo=0.3, hi=3.0, min_ratio=1.25))
    gains = GainSet.from_poles(poles, float(rng.uniform(0.1, 0.9)))
    if n > 1:
        surface_roots = rng.uniform(0.2, 3.0, n - 1)
        coeffs = convolution_expand(surface_roots)
        a = tuple(reversed(coeffs))
    else:
        a = ()
    mode = "sign" if rng.random() < 0.7 else "saturation"
    phi = float(rng.uniform(0.01, 0.5)) if mode == "saturation" else None
    ctrl = SlidingController(
        a=a, u0=float(rng.uniform(0.1, 10.0)),
        b=float(rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 3.0)),
        switch_mode=mode, phi=phi)
    e_hat = [float(v) for v in rng.uniform(-2.0, 2.0, n + 1)]
    e1 = float(rng.uniform(-2.0, 2.0))
    return gains, ctrl, e_hat, e1


def composed_sigma_dot(gains, ctrl, e_hat, e1):
    """d/dt sigma with u substituted from the control law."""
    u = control_law(e_hat, e1, gains, ctrl)
    ocfg = ObserverConfig(gains=gains, b=ctrl.b,
                          initial_state=(0.0,) * (gains.n + 1))
    rhs = observer_rhs(e_hat, e1, u, ocfg)
    n = gains.n
    sdot = rhs[n - 1]
    for i, ai in enumerate(ctrl.a):
        sdot += ai * rhs[i]
    return sdot, u


def test_cancellation_identity():
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(300):
        gains, ctrl, e_hat, e1 = random_cancellation_case(rng)
        sdot, _ = composed_sigma_dot(gains, ctrl, e_hat, e1)
        sigma = sliding_variable(e_hat, ctrl)
        want = -ctrl.u0 * switch(sigma, ctrl.switch_mode, ctrl.phi)
        worst = max(worst, abs(sdot - want))
    assert worst <= 1e-10
