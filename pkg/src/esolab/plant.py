"""
Plant models in integrator-chain normal form and closed-form reference
signals whose derivatives of every order are exact.  Exact reference
derivatives are what make true tracking errors (and the uncertainty
bound M) computable alongside a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError
from .expr import Expression, evaluate, max_variable_index


@dataclass(frozen=True)
class PlantModel:
    """x^(n) = f(x_1..x_n, t) + b*u with measured output x_1."""

    n: int
    drift: Expression
    b: float
    initial_state: tuple

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"plant order must be >= 1, got {self.n!r}")
        if self.b == 0.0 or not math.isfinite(self.b):
            raise ValidationError(f"b must be a non-zero constant, got {self.b!r}")
        idx = max_variable_index(self.drift)
        if idx > self.n:
            raise ValidationError(
                f"drift references x{idx} but the plant order is {self.n}")
        state = tuple(float(v) for v in self.initial_state)
        object.__setattr__(self, "initial_state", state)
        if len(state) != self.n:
            raise ValidationError(
                f"initial state needs {self.n} entries, got {len(state)}")


def plant_rhs(x, t: float, u: float, model: PlantModel) -> list:
    """Chain-form derivative: shift the state, drive the last row by f + b*u."""
    if len(x) != model.n:
        raise ValidationError(
            f"state needs {model.n} entries, got {len(x)}")
    out = [x[k] for k in range(1, model.n)]
    out.append(evaluate(model.drift, t, x) + model.b * u)
    return out


# ---------------------------------------------------------------------------
# reference signals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sinusoid:
    """amplitude * sin(omega*t + phase); derivatives rotate the phase."""

    amplitude: float
    omega: float
    phase: float = 0.0

    def value(self, t: float, k: int) -> float:
        return (self.amplitude * self.omega ** k
                * math.sin(self.omega * t + self.phase + k * math.pi / 2.0))


@dataclass(frozen=True)
class Polynomial:
    """sum coeffs[i] * t^i; derivatives via falling factorials."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs",
                           tuple(float(c) for c in self.coeffs))

    def value(self, t: float, k: int) -> float:
        total = 0.0
        for i in range(k, len(self.coeffs)):
            factor = 1.0
            for j in range(i, i - k, -1):
                factor *= j
            total += self.coeffs[i] * factor * t ** (i - k)
        return total


@dataclass(frozen=True)
class Constant:
    value_const: float

    def value(self, t: float, k: int) -> float:
        return self.value_const if k == 0 else 0.0


@dataclass(frozen=True)
class ReferenceSignal:
    """Finite sum of sinusoid, polynomial and constant terms."""

    terms: tuple

    def __post_init__(self):
        if not self.terms:
            raise ValidationError("reference needs at least one term")
        for term in self.terms:
            if not isinstance(term, (Sinusoid, Polynomial, Constant)):
                raise ValidationError(f"unknown reference term {term!r}")

    def value(self, t: float, k: int = 0) -> float:
        if k < 0:
            raise ValidationError(f"derivative order must be >= 0, got {k!r}")
        return sum(term.value(t, k) for term in self.terms)


def reference_value(ref: ReferenceSignal, t: float, k: int) -> float:
    """Exact k-th derivative of the reference at time t."""
    return ref.value(t, k)
