import numpy as np
import pytest
from scipy.linalg import solve_continuous_lyapunov

from esolab.errors import FactorizationError, ValidationError
from esolab.gains import (GainSet, PoleSet, build_observer_matrix,
                          characteristic_coefficients, companion_eigenvector,
                          delta_bound, eigen_factorize, expand_poles,
                          hurwitz_check, solve_lyapunov)

from oracles import (convolution_expand, draw_poles, random_hurwitz_matrix,
                     random_spd)


# ---------------------------------------------------------------------------
# pole expansion
# ---------------------------------------------------------------------------

def test_expand_bench_poles():
    h = expand_poles(PoleSet((1.0, 2.0, 3.0)))
    assert h == pytest.approx([6.0, 11.0, 6.0], rel=1e-12)


def test_expand_two_poles():
    assert expand_poles(PoleSet((1.0, 2.0))) == pytest.approx([3.0, 2.0])


def test_single_pole_rejected():
    with pytest.raises(ValidationError, match="at least 2"):
        PoleSet((1.0,))


def test_duplicate_poles_rejected_naming_pair():
    with pytest.raises(ValidationError, match="2.0"):
        PoleSet((1.0, 2.0, 2.0))


def test_near_duplicate_poles_rejected():
    with pytest.raises(ValidationError):
        PoleSet((3.0, 3.0 + 1e-9, 1.0))


def test_non_positive_pole_rejected():
    with pytest.raises(ValidationError, match="-1.0"):
        PoleSet((1.0, -1.0))
    with pytest.raises(ValidationError):
        PoleSet((0.0, 1.0))


def test_expansion_matches_convolution_oracle():
    rng = np.random.default_rng(42)
    for _ in range(100):
        m = int(rng.integers(2, 9))
        lam = draw_poles(rng, m, lo=0.3, hi=6.0, min_ratio=1.15)
        got = expand_poles(PoleSet(lam))
        want = convolution_expand(lam)
        for g, w in zip(got, want):
            assert abs(g - w) <= 1e-12 * max(1.0, abs(w))


def test_expansion_roundtrip_roots():
    rng = np.random.default_rng(7)
    for _ in range(50):
        m = int(rng.integers(2, 8))
        lam = draw_poles(rng, m, lo=0.3, hi=5.0, min_ratio=1.2)
        h = expand_poles(PoleSet(lam))
        tol = 1e-9 * max(1.0, float(np.prod(lam)))
        for root in lam:
            value = (-root) ** m + sum(
                hk * (-root) ** (m - 1 - k) for k, hk in enumerate(h))
            assert abs(value) <= tol


# ---------------------------------------------------------------------------
# observer matrix
# ---------------------------------------------------------------------------

def test_bench_observer_matrix_exact():
    g = GainSet.from_poles(PoleSet((1.0, 2.0, 3.0)), 0.1)
    m = build_observer_matrix(g)
    assert list(m.a[:, 0]) == [-60.0, -1100.0, -6000.0]
    assert m.a[0, 1] == 1.0 and m.a[1, 2] == 1.0
    assert m.a[0, 2] == 0.0 and m.a[2, 1] == 0.0
    assert list(m.b_col) == [0.0, 0.0, 1.0]


def test_epsilon_one_rejected():
    with pytest.raises(ValidationError, match="epsilon"):
        GainSet.from_poles(PoleSet((1.0, 2.0)), 1.0)


def test_epsilon_bounds_rejected():
    for eps in (0.0, -0.1, 1.5):
        with pytest.raises(ValidationError):
            GainSet.from_poles(PoleSet((1.0, 2.0)), eps)


def test_gainset_rejects_mismatched_h():
    poles = PoleSet((1.0, 2.0))
    with pytest.raises(ValidationError, match="re-expand"):
        GainSet(n=1, h=(3.0, 2.5), epsilon=0.5,
                lambda_min=1.0, poles=poles)


# ---------------------------------------------------------------------------
# modal factorization
# ---------------------------------------------------------------------------

def test_eigenvector_recurrence_by_hand():
    v = companion_eigenvector((6.0, 11.0, 6.0), 1.0, -1.0)
    assert list(v) == [1.0, 5.0, 6.0]
    # closure of the last row: -h3*v1 == mu*v3
    assert -6.0 * v[0] == -1.0 * v[2]


def test_bench_factorization():
    poles = PoleSet((1.0, 2.0, 3.0))
    g = GainSet.from_poles(poles, 0.1)
    f = eigen_factorize(g, poles)
    assert f.d == (-10.0, -20.0, -30.0)
    assert f.residual <= 1e-8
    assert f.conditioning >= 1.0


def test_factorization_pole_mismatch_rejected():
    g = GainSet.from_poles(PoleSet((1.0, 2.0)), 0.5)
    with pytest.raises(ValidationError, match="does not match"):
        eigen_factorize(g, PoleSet((1.0, 3.0)))


def test_factorization_survives_admissible_near_duplicates():
    # the closest pair PoleSet admits still reconstructs within tolerance,
    # even though T is severely ill-conditioned
    poles = PoleSet((1.0, 1.0 + 5e-6, 3.0))
    f = eigen_factorize(GainSet.from_poles(poles, 0.02), poles)
    assert f.residual <= 1e-8
    assert f.conditioning > 1e6


def test_factorization_error_carries_residual():
    err = FactorizationError("factorization failed", residual=0.5)
    assert err.residual == 0.5
    assert "5.000e-01" in str(err)


def test_factorization_columns_are_eigenvectors():
    rng = np.random.default_rng(11)
    for _ in range(50):
        m = int(rng.integers(2, 7))
        poles = PoleSet(draw_poles(rng, m))
        g = GainSet.from_poles(poles, float(rng.uniform(0.1 * m, 0.9)))
        f = eigen_factorize(g, poles)
        a = build_observer_matrix(g).a
        for j, mu in enumerate(f.d):
            col = f.t_mat[:, j]
            err = np.linalg.norm(a @ col - mu * col)
            assert err <= 1e-8 * max(1.0, np.linalg.norm(mu * col))
        assert np.max(np.abs(f.t_mat @ f.t_inv - np.eye(m))) <= 1e-10


# ---------------------------------------------------------------------------
# delta bound
# ---------------------------------------------------------------------------

def test_delta_bound_values():
    assert delta_bound(0.1, 0.0, 1.0, 10.0) == 0.0
    assert delta_bound(0.1, 2.0, 1.0, 10.0) == 2.0


def test_delta_bound_composed_with_factorization():
    poles = PoleSet((1.0, 2.0, 3.0))
    g = GainSet.from_poles(poles, 0.05)
    cond = eigen_factorize(g, poles).conditioning
    assert delta_bound(0.05, 2.0, 1.0, cond) == 0.05 * 2.0 / 1.0 * cond


def test_delta_bound_rejections():
    with pytest.raises(ValidationError, match="lambda_min"):
        delta_bound(0.1, 1.0, 0.0, 10.0)
    with pytest.raises(ValidationError, match="lambda_min"):
        delta_bound(0.1, 1.0, -2.0, 10.0)
    with pytest.raises(ValidationError):
        delta_bound(0.1, -1.0, 1.0, 10.0)
    with pytest.raises(ValidationError):
        delta_bound(-0.1, 1.0, 1.0, 10.0)


def test_delta_bound_homogeneous_in_m():
    rng = np.random.default_rng(3)
    for _ in range(25):
        eps = float(rng.uniform(0.01, 0.99))
        m = float(rng.uniform(0.0, 50.0))
        lam = float(rng.uniform(0.1, 5.0))
        cond = float(rng.uniform(1.0, 1e6))
        assert delta_bound(eps, 2.0 * m, lam, cond) == \
            2.0 * delta_bound(eps, m, lam, cond)


# ---------------------------------------------------------------------------
# Hurwitz test
# ---------------------------------------------------------------------------

def test_hurwitz_basic_cases():
    assert hurwitz_check([1.0]) is True
    assert hurwitz_check([-1.0]) is False
    assert hurwitz_check([6.0, 11.0, 6.0]) is True


def test_hurwitz_zero_pivot_is_not_hurwitz():
    # s^2 + 1: marginally stable, zero pivot in the Routh array
    assert hurwitz_check([0.0, 1.0]) is False


def test_hurwitz_empty_rejected():
    with pytest.raises(ValidationError):
        hurwitz_check([])


def test_hurwitz_against_roots_oracle():
    rng = np.random.default_rng(21)
    for _ in range(200):
        deg = int(rng.integers(1, 7))
        if rng.random() < 0.5:
            roots = -rng.uniform(0.05, 4.0, deg)  # stable by construction
        else:
            roots = rng.uniform(-4.0, 2.0, deg)
            roots[np.abs(roots) < 0.05] = 0.5  # keep away from the axis
        coeffs = np.poly(roots)[1:]
        want = bool(np.all(roots < 0))
        assert hurwitz_check(list(coeffs)) is want


# ---------------------------------------------------------------------------
# Lyapunov solver
# ---------------------------------------------------------------------------

def test_lyapunov_scalar_cases():
    cert = solve_lyapunov(np.array([[-1.0]]), np.array([[2.0]]))
    assert cert.p[0, 0] == pytest.approx(1.0, rel=1e-14)
    cert = solve_lyapunov(np.array([[-1.0]]), np.array([[1.0]]))
    assert cert.p[0, 0] == pytest.approx(0.5, rel=1e-14)
    assert cert.residual == 0.0


def test_lyapunov_surface_matrix_case():
    # reduced error dynamics for a single surface coefficient a1 = 1
    cert = solve_lyapunov(np.array([[-1.0]]), np.array([[1.0]]))
    assert cert.p[0, 0] == pytest.approx(0.5)


def test_lyapunov_rejects_non_hurwitz():
    with pytest.raises(ValidationError, match="not Hurwitz"):
        solve_lyapunov(np.array([[1.0]]), np.array([[1.0]]))


def test_lyapunov_rejects_bad_q():
    a = np.array([[-1.0, 0.0], [0.0, -2.0]])
    with pytest.raises(ValidationError, match="symmetric"):
        solve_lyapunov(a, np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValidationError, match="positive-definite"):
        solve_lyapunov(a, np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_lyapunov_against_scipy_oracle():
    rng = np.random.default_rng(33)
    for _ in range(50):
        m = int(rng.integers(1, 7))
        a = random_hurwitz_matrix(rng, m)
        q = random_spd(rng, m)
        cert = solve_lyapunov(a, q)
        qn = np.linalg.norm(q)
        assert cert.residual <= 1e-8 * qn
        assert np.array_equal(cert.p, cert.p.T)
        ref = solve_continuous_lyapunov(a.T, -q)  # note scipy's convention
        assert np.allclose(cert.p, ref, rtol=1e-8, atol=1e-10 * qn)


def test_characteristic_coefficients():
    a = np.array([[0.0, 1.0], [-6.0, -5.0]])  # s^2 + 5 s + 6
    assert characteristic_coefficients(a) == pytest.approx([5.0, 6.0])
