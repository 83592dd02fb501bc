"""Fibonacci numbers, the substitution word, potentials and Zeckendorf sums.

Conventions: F_0 = F_1 = 1, s_0 = "0", s_1 = "1", s_k = s_{k-1} s_{k-2}.
The letter 1 carries the potential value V.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

INT64_MAX = np.iinfo(np.int64).max

# alpha = (sqrt5 - 1)/2 as a fixed-point fraction with _FRAC_BITS bits
_FRAC_BITS = 140
_ONE = 1 << _FRAC_BITS
_ALPHA_FIXED = (math.isqrt(5 << (2 * _FRAC_BITS)) - _ONE) >> 1
# smallest fixed-point value of {n alpha + omega} that lies in [1 - alpha, 1)
_THRESHOLD = _ONE - _ALPHA_FIXED

OMEGA_EXACT_LIMIT = 10**9

ALPHA = (math.sqrt(5.0) - 1.0) / 2.0
PHI = (math.sqrt(5.0) + 1.0) / 2.0


@lru_cache(maxsize=None)
def _fib_table() -> tuple[int, ...]:
    table = [1, 1]
    while table[-1] + table[-2] <= INT64_MAX:
        table.append(table[-1] + table[-2])
    return tuple(table)


def fib(k: int) -> int:
    """Return F_k with F_0 = F_1 = 1.

    Raises OverflowError if F_k does not fit in a signed 64-bit integer.
    """
    if k < 0:
        raise ValueError(f"fib index must be non-negative, got {k}")
    table = _fib_table()
    if k >= len(table):
        raise OverflowError(f"F_{k} exceeds the int64 range")
    return table[k]


def fib_index_at_least(n: int) -> int:
    """Smallest k >= 1 with F_k >= n."""
    k = 1
    while fib(k) < n:
        k += 1
    return k


def substitution_prefix(k: int) -> str:
    """The word s_k as a string of '0'/'1' characters, length F_k."""
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if k == 0:
        return "0"
    prev, cur = "0", "1"
    for _ in range(k - 1):
        prev, cur = cur, cur + prev
    return cur


def word_array(k: int) -> np.ndarray:
    """s_k as a uint8 array (built by doubling, no string concatenation)."""
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if k == 0:
        return np.zeros(1, dtype=np.uint8)
    prev = np.zeros(1, dtype=np.uint8)
    cur = np.ones(1, dtype=np.uint8)
    for _ in range(k - 1):
        prev, cur = cur, np.concatenate([cur, prev])
    return cur


def word_letters(n: int) -> np.ndarray:
    """Letters u_1..u_n of the fixed point as a uint8 array."""
    if n < 1:
        return np.zeros(0, dtype=np.uint8)
    return word_array(fib_index_at_least(n))[:n]


def fib_word_letter(n: int) -> int:
    """The n-th letter (1-based) of u = 1011010110110..., by index descent."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    k = fib_index_at_least(n)
    # s_k = s_{k-1} s_{k-2}: walk into the half that holds position n
    while k >= 2:
        left = fib(k - 1)
        if n <= left:
            k -= 1
        else:
            n -= left
            k -= 2
    return 1 if k == 1 else 0


def _chi_fixed(n: int, omega: float) -> int:
    if abs(n) > OMEGA_EXACT_LIMIT:
        raise ValueError(f"|n| <= {OMEGA_EXACT_LIMIT} required for omega != 0")
    w = math.floor(omega * _ONE)  # exact: omega is a dyadic rational
    frac = (n * _ALPHA_FIXED + w) % _ONE
    return 1 if frac >= _THRESHOLD else 0


def potential(n: int, V: float, omega: float = 0.0) -> float:
    """V * chi_[1-alpha, 1)({n alpha + omega})."""
    if V < 0:
        raise ValueError(f"V must be non-negative, got {V}")
    if not 0.0 <= omega < 1.0:
        raise ValueError(f"omega must lie in [0, 1), got {omega}")
    if V == 0:
        return 0.0
    if omega == 0.0 and n >= 1:
        return V * fib_word_letter(n)
    return V * _chi_fixed(n, omega)


def letters(n: int, omega: float = 0.0, start: int = 1) -> np.ndarray:
    """chi values at sites start..start+n-1 as a uint8 array."""
    if omega == 0.0 and start >= 1:
        return word_letters(start + n - 1)[start - 1:]
    return np.fromiter((_chi_fixed(j, omega) for j in range(start, start + n)),
                       dtype=np.uint8, count=n)


def potential_array(n: int, V: float, omega: float = 0.0) -> np.ndarray:
    """v(1), ..., v(n) as float64."""
    return V * letters(n, omega).astype(np.float64)


@dataclass(frozen=True)
class Zeckendorf:
    """Greedy Fibonacci decomposition; indices strictly increasing."""
    indices: tuple[int, ...]

    @property
    def value(self) -> int:
        return sum(fib(i) for i in self.indices)

    @property
    def count(self) -> int:
        return len(self.indices)


def zeckendorf(n: int) -> Zeckendorf:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    table = _fib_table()
    out = []
    k = len(table) - 1
    while n > 0:
        while table[k] > n:
            k -= 1
        out.append(k)
        n -= table[k]
        k -= 2
    # F_0 = F_1, so the unit term always lands on index 1 here
    return Zeckendorf(tuple(reversed(out)))


def zeck_count(n: int) -> int:
    """Number of terms in the Zeckendorf representation of n."""
    return zeckendorf(n).count


def digit_word(length: int) -> np.ndarray:
    """First `length` symbols of the concatenated digit words 1, 1, 12, 122, ...

    Each word is the previous one followed by the one before it with all
    symbols raised by one.
    """
    words = [np.ones(1, dtype=np.int64), np.ones(1, dtype=np.int64)]
    total = 2
    while total < length:
        nxt = np.concatenate([words[-1], words[-2] + 1])
        words.append(nxt)
        total += nxt.size
    return np.concatenate(words)[:length]


def zeck_count_digits(n: int) -> int:
    """Term count read off as the n-th symbol of the digit word."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return int(digit_word(n)[n - 1])
