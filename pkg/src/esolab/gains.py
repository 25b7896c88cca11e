"""
Observer gain synthesis.

Turns a set of distinct positive pole magnitudes into the coefficients of
the expanded characteristic polynomial, builds the high-gain observer
system matrix, factorizes it in closed form, and produces the
steady-state estimation-error bound together with dense Lyapunov
certificates for small stability checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FactorizationError, ValidationError

FACTORIZATION_TOL = 1e-8
LYAPUNOV_TOL = 1e-8
_NEAR_DUPLICATE = 1e-6


@dataclass(frozen=True)
class PoleSet:
    """Distinct positive pole magnitudes lambda_1..lambda_{n+1} (n >= 1)."""

    lambdas: tuple

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        if len(lam) < 2:
            raise ValidationError(
                f"need at least 2 poles (plant order >= 1), got {len(lam)}")
        for v in lam:
            if not v > 0.0:
                raise ValidationError(f"pole {v!r} is not strictly positive")
        gap = _NEAR_DUPLICATE * max(lam)
        for i in range(len(lam)):
            for j in range(i + 1, len(lam)):
                if abs(lam[i] - lam[j]) < gap:
                    raise ValidationError(
                        f"poles {lam[i]!r} and {lam[j]!r} are equal or too "
                        f"close (separation below {gap:.3e})")

    @property
    def lambda_min(self) -> float:
        return min(self.lambdas)


def expand_poles(poles: PoleSet) -> list:
    """Coefficients h_1..h_{n+1} of prod(s + lambda_i) after the leading 1."""
    coeffs = [1.0]
    for lam in poles.lambdas:
        nxt = [coeffs[0]]
        for k in range(1, len(coeffs)):
            nxt.append(coeffs[k] + lam * coeffs[k - 1])
        nxt.append(lam * coeffs[-1])
        coeffs = nxt
    return coeffs[1:]


@dataclass(frozen=True)
class GainSet:
    """Expanded coefficients plus the perturbation parameter epsilon.

    `scaled` holds h_k / epsilon^k for k = 1..n+1, the correction gains
    that appear in the observer equations.
    """

    n: int
    h: tuple
    epsilon: float
    lambda_min: float
    poles: PoleSet
    scaled: tuple = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(float(v) for v in self.h))
        if not 0.0 < self.epsilon < 1.0:
            raise ValidationError(
                f"epsilon must lie strictly in (0, 1), got {self.epsilon!r}")
        ref = expand_poles(self.poles)
        if len(ref) != len(self.h) or self.n != len(self.h) - 1:
            raise ValidationError("h length does not match the pole set")
        for got, want in zip(self.h, ref):
            if abs(got - want) > 1e-12 * max(1.0, abs(want)):
                raise ValidationError(
                    f"h = {self.h} does not re-expand from the stored poles")
        if self.lambda_min != self.poles.lambda_min:
            raise ValidationError("lambda_min does not match the pole set")
        # Divide once per order: repeated correctly-rounded division keeps
        # decade epsilons (0.1, 0.01, ...) on exact integer gains.
        scaled = []
        for k, hk in enumerate(self.h):
            v = hk
            for _ in range(k + 1):
                v /= self.epsilon
            scaled.append(v)
        object.__setattr__(self, "scaled", tuple(scaled))

    @classmethod
    def from_poles(cls, poles: PoleSet, epsilon: float) -> "GainSet":
        if not 0.0 < epsilon < 1.0:
            raise ValidationError(
                f"epsilon must lie strictly in (0, 1), got {epsilon!r}")
        h = expand_poles(poles)
        return cls(n=len(h) - 1, h=tuple(h), epsilon=float(epsilon),
                   lambda_min=poles.lambda_min, poles=poles)


@dataclass(frozen=True)
class ObserverMatrix:
    """Dense system matrix of the estimation-error dynamics and its input column."""

    a: np.ndarray
    b_col: np.ndarray


def build_observer_matrix(gains: GainSet) -> ObserverMatrix:
    """Matrix with -h_k/eps^k down the first column and ones above the diagonal."""
    m = gains.n + 1
    a = np.zeros((m, m))
    for k in range(m):
        a[k, 0] = -gains.scaled[k]
        if k < m - 1:
            a[k, k + 1] = 1.0
    b_col = np.zeros(m)
    b_col[-1] = 1.0
    a.flags.writeable = False
    b_col.flags.writeable = False
    return ObserverMatrix(a=a, b_col=b_col)


def companion_eigenvector(h, epsilon: float, mu: float) -> np.ndarray:
    """Closed-form eigenvector of the observer matrix for eigenvalue mu.

    v_1 = 1 and v_{k+1} = mu * v_k + h_k / epsilon^k; the final row of
    A v = mu v closes exactly when mu is a root of the scaled
    characteristic polynomial.
    """
    v = [1.0]
    scale = 1.0
    for k in range(len(h) - 1):
        scale *= epsilon
        v.append(mu * v[-1] + h[k] / scale)
    return np.array(v)


@dataclass(frozen=True)
class ModalFactorization:
    """Eigenvector matrix T, eigenvalues d, inverse, and quality figures."""

    t_mat: np.ndarray
    d: tuple
    t_inv: np.ndarray
    residual: float
    conditioning: float


def eigen_factorize(gains: GainSet, poles: PoleSet) -> ModalFactorization:
    """Diagonalize the observer matrix as T diag(-lambda_i/eps) T^-1.

    Eigenvectors come from the closed-form recurrence, the inverse from
    dense LU with partial pivoting.  Raises FactorizationError when the
    reconstruction residual exceeds FACTORIZATION_TOL (near-duplicate
    poles or extreme epsilon).
    """
    if poles != gains.poles:
        raise ValidationError("pole set does not match the gain set")
    m = gains.n + 1
    eps = gains.epsilon
    d = tuple(-lam / eps for lam in poles.lambdas)
    t_mat = np.empty((m, m))
    for j, mu in enumerate(d):
        t_mat[:, j] = companion_eigenvector(gains.h, eps, mu)
    try:
        t_inv = np.linalg.inv(t_mat)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"eigenvector matrix is singular: {exc}",
                                 residual=float("inf"))
    a = build_observer_matrix(gains).a
    recon = t_mat @ np.diag(d) @ t_inv
    residual = float(np.linalg.norm(a - recon) / np.linalg.norm(a))
    if residual > FACTORIZATION_TOL:
        raise FactorizationError(
            "modal factorization failed; poles may be nearly duplicate or "
            "epsilon extreme", residual=residual)
    conditioning = float(np.linalg.norm(t_mat) * np.linalg.norm(t_inv))
    t_mat.flags.writeable = False
    t_inv.flags.writeable = False
    return ModalFactorization(t_mat=t_mat, d=d, t_inv=t_inv,
                              residual=residual, conditioning=conditioning)


def delta_bound(epsilon: float, m_bound: float, lambda_min: float,
                conditioning: float) -> float:
    """Steady-state bound eps * M / lambda_min * conditioning on ||delta||."""
    if lambda_min <= 0.0:
        raise ValidationError(f"lambda_min must be positive, got {lambda_min!r}")
    if epsilon <= 0.0:
        raise ValidationError(f"epsilon must be positive, got {epsilon!r}")
    if conditioning <= 0.0:
        raise ValidationError(
            f"conditioning must be positive, got {conditioning!r}")
    if m_bound < 0.0:
        raise ValidationError(f"m_bound must be >= 0, got {m_bound!r}")
    return epsilon * m_bound / lambda_min * conditioning


def hurwitz_check(coeffs) -> bool:
    """Routh test for s^m + c_1 s^{m-1} + ... + c_m (leading 1 implied).

    A zero pivot anywhere in the first column counts as not Hurwitz.
    """
    coeffs = [float(c) for c in coeffs]
    if not coeffs:
        raise ValidationError("coefficient list must be non-empty")
    full = [1.0] + coeffs
    row_a = full[0::2]
    row_b = full[1::2]
    width = len(row_a)
    row_b = row_b + [0.0] * (width - len(row_b))
    first_col = [row_a[0]]
    for _ in range(len(coeffs)):
        pivot = row_b[0]
        if pivot == 0.0:
            return False
        first_col.append(pivot)
        nxt = [(pivot * row_a[j + 1] - row_a[0] * row_b[j + 1]) / pivot
               for j in range(width - 1)]
        nxt.append(0.0)
        row_a, row_b = row_b, nxt
    return all(v > 0.0 for v in first_col)


def characteristic_coefficients(a_mat: np.ndarray) -> list:
    """Char-poly coefficients [c_1..c_m] via the Faddeev-LeVerrier recurrence."""
    a = np.asarray(a_mat, dtype=float)
    m = a.shape[0]
    coeffs = []
    mat = np.eye(m)
    for k in range(1, m + 1):
        am = a @ mat
        c = -np.trace(am) / k
        coeffs.append(float(c))
        mat = am + c * np.eye(m)
    return coeffs


@dataclass(frozen=True)
class LyapunovCertificate:
    """Solution P of P A + A^T P = -Q with its reconstruction residual."""

    p: np.ndarray
    q: np.ndarray
    residual: float


def solve_lyapunov(a_mat, q_mat) -> LyapunovCertificate:
    """Solve P A + A^T P = -Q by vectorizing the Kronecker-sum system.

    Requires a Hurwitz A (checked through the Routh test on the
    characteristic polynomial) and a symmetric positive-definite Q.
    Dense Gaussian elimination is plenty at the sizes involved here.
    """
    a = np.asarray(a_mat, dtype=float)
    q = np.asarray(q_mat, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"A must be square, got shape {a.shape}")
    if q.shape != a.shape:
        raise ValidationError(f"Q shape {q.shape} does not match A {a.shape}")
    qnorm = float(np.linalg.norm(q))
    if np.linalg.norm(q - q.T) > 1e-10 * max(1.0, qnorm):
        raise ValidationError("Q must be symmetric")
    try:
        np.linalg.cholesky(q)
    except np.linalg.LinAlgError:
        raise ValidationError("Q must be positive-definite")
    coeffs = characteristic_coefficients(a)
    if not hurwitz_check(coeffs):
        roots = np.roots([1.0] + coeffs)
        worst = roots[np.argmax(roots.real)]
        estimate = f"{worst.real:.6g}{worst.imag:+.6g}j" if worst.imag else \
            f"{worst.real:.6g}"
        raise ValidationError(
            f"A is not Hurwitz (rightmost eigenvalue estimate {estimate})")
    m = a.shape[0]
    eye = np.eye(m)
    kron_sum = np.kron(eye, a.T) + np.kron(a.T, eye)
    try:
        p_vec = np.linalg.solve(kron_sum, -q.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise ValidationError(f"Lyapunov system is singular: {exc}")
    p = p_vec.reshape(m, m)
    p = (p + p.T) / 2.0
    residual = float(np.linalg.norm(p @ a + a.T @ p + q))
    if residual > LYAPUNOV_TOL * qnorm:
        raise FactorizationError("Lyapunov residual out of tolerance",
                                 residual=residual)
    try:
        np.linalg.cholesky(p)
    except np.linalg.LinAlgError:
        raise ValidationError("solved P is not positive-definite")
    p.flags.writeable = False
    return LyapunovCertificate(p=p, q=q, residual=residual)
