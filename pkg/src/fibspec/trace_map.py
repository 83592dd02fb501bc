"""Trace map T(x, y, z) = (2xy - z, x, y), its invariant and escape test."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

OVERFLOW_LIMIT = 1e300


class TraceOverflow(ArithmeticError):
    """2xy - z left the finite range guarded by OVERFLOW_LIMIT."""


class TraceTriple(NamedTuple):
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class ModelParams:
    """Diagonal model (V) or off-diagonal hopping model (a, b), plus phase."""
    V: float | None = None
    a: float | None = None
    b: float | None = None
    omega: float = 0.0

    def __post_init__(self):
        diag = self.V is not None
        off = self.a is not None or self.b is not None
        if diag == off:
            raise ValueError("give either V or the pair (a, b)")
        if diag and self.V < 0:
            raise ValueError(f"V must be non-negative, got {self.V}")
        if off and (self.a is None or self.b is None or self.a <= 0 or self.b <= 0):
            raise ValueError(f"hoppings must be positive, got a={self.a}, b={self.b}")
        if not 0.0 <= self.omega < 1.0:
            raise ValueError(f"omega must lie in [0, 1), got {self.omega}")

    @classmethod
    def diagonal(cls, V: float, omega: float = 0.0) -> "ModelParams":
        return cls(V=float(V), omega=omega)

    @classmethod
    def offdiagonal(cls, a: float, b: float, omega: float = 0.0) -> "ModelParams":
        return cls(a=float(a), b=float(b), omega=omega)

    @property
    def is_diagonal(self) -> bool:
        return self.V is not None

    @property
    def hull(self) -> tuple[float, float]:
        """A-priori interval containing the spectrum (operator norm bound)."""
        if self.is_diagonal:
            return (-2.0 - self.V, 2.0 + self.V)
        r = 2.0 * max(self.a, self.b)
        return (-r, r)

    @property
    def invariant(self) -> float:
        """Value of the Fricke-Vogt invariant on this model's line."""
        if self.is_diagonal:
            return self.V**2 / 4.0
        a, b = self.a, self.b
        return (a * a - b * b) ** 2 / (4.0 * a * a * b * b)

    def line_point(self, E: float) -> TraceTriple:
        if self.is_diagonal:
            return line_point_diagonal(E, self.V)
        return line_point_offdiag(E, self.a, self.b)


@dataclass(frozen=True)
class EscapeResult:
    escaped: bool
    n: int  # escape step, or the number of steps survived
    final_triple: TraceTriple


def step(t: TraceTriple) -> TraceTriple:
    x, y, z = t
    new = 2.0 * x * y - z
    if not abs(new) <= OVERFLOW_LIMIT:
        raise TraceOverflow(f"trace map overflow at {t}")
    return TraceTriple(new, x, y)


def inverse_step(t: TraceTriple) -> TraceTriple:
    x, y, z = t
    new = 2.0 * y * z - x
    if not abs(new) <= OVERFLOW_LIMIT:
        raise TraceOverflow(f"inverse trace map overflow at {t}")
    return TraceTriple(y, z, new)


def fricke(t: TraceTriple) -> float:
    x, y, z = t
    return x * x + y * y + z * z - 2.0 * x * y * z - 1.0


def line_point_diagonal(E: float, V: float) -> TraceTriple:
    """(x_1, x_0, x_{-1}) for the diagonal model."""
    return TraceTriple((E - V) / 2.0, E / 2.0, 1.0)


def line_point_offdiag(E: float, a: float, b: float) -> TraceTriple:
    """(x_1, x_0, x_{-1}) for the hopping model with letter 1 -> a, 0 -> b."""
    if a <= 0 or b <= 0:
        raise ValueError("hoppings must be positive")
    return TraceTriple(E / (2.0 * a), E / (2.0 * b), (a * a + b * b) / (2.0 * a * b))


def escape_iterate(t0: TraceTriple, max_n: int) -> EscapeResult:
    """Iterate until min(|x|, |y|) > 1 or max_n steps have been taken.

    Escape is checked after each step, so step counts start at 1.
    """
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    t = TraceTriple(*map(float, t0))
    for k in range(1, max_n + 1):
        try:
            t = step(t)
        except TraceOverflow:
            return EscapeResult(True, k, t)
        if min(abs(t.x), abs(t.y)) > 1.0:
            return EscapeResult(True, k, t)
    return EscapeResult(False, max_n, t)


def trace_sequence(E: float, params: ModelParams, k_max: int) -> list[float]:
    """[x_{-1}, x_0, ..., x_{k_max}].

    On overflow the list stops early and its last entry is +-inf.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    x1, x0, xm1 = map(float, params.line_point(float(E)))
    out = [xm1, x0, x1]
    for _ in range(k_max - 1):
        new = 2.0 * out[-1] * out[-2] - out[-3]
        if not abs(new) <= OVERFLOW_LIMIT:
            out.append(math.copysign(math.inf, new) if not math.isnan(new) else math.inf)
            break
        out.append(new)
    return out


def traces(E, params: ModelParams, k: int) -> np.ndarray:
    """x_k(E) for an array of energies.

    Entries past the overflow guard become +-inf with sign
    sign(x_j) sign(x_{j-1}), since the product term dominates on escaped orbits.
    """
    return traces_upto(E, params, k)[-1]


def traces_upto(E, params: ModelParams, k: int) -> np.ndarray:
    """Stack of x_{-1}..x_k over an array of energies, shape (k + 2, len(E))."""
    E = np.atleast_1d(np.asarray(E, dtype=np.float64))
    if params.is_diagonal:
        x1 = (E - params.V) / 2.0
        x0 = E / 2.0
        xm1 = np.ones_like(E)
    else:
        a, b = params.a, params.b
        x1 = E / (2.0 * a)
        x0 = E / (2.0 * b)
        xm1 = np.full_like(E, (a * a + b * b) / (2.0 * a * b))
    rows = [xm1, x0, x1]
    if k <= 1:
        return np.array(rows[: k + 2])
    z, y, x = xm1, x0, x1
    for _ in range(k - 1):
        with np.errstate(over="ignore", invalid="ignore"):
            new = 2.0 * x * y - z
            bad = ~(np.abs(new) <= OVERFLOW_LIMIT)
            if bad.any():
                new = np.where(bad, np.sign(x) * np.sign(y) * np.inf, new)
        z, y, x = y, x, new
        rows.append(x)
    return np.array(rows)


def semiconjugacy(theta: float, phi: float) -> TraceTriple:
    """F(theta, phi) = (cos 2pi(theta + phi), cos 2pi theta, cos 2pi phi)."""
    return TraceTriple(math.cos(2 * math.pi * (theta + phi)),
                       math.cos(2 * math.pi * theta),
                       math.cos(2 * math.pi * phi))


def torus_automorphism(theta: float, phi: float) -> tuple[float, float]:
    return ((theta + phi) % 1.0, theta % 1.0)


TORUS_EIGENVALUE = (1.0 + math.sqrt(5.0)) / 2.0
