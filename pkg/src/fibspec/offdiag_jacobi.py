"""Hopping (off-diagonal) Fibonacci model: letter 1 -> a, letter 0 -> b."""
from __future__ import annotations

import numpy as np

from .fibonacci_word import fib
from .spectrum_bands import DEFAULT_EDGE_TOL, BandSet, spectrum_approx
from .trace_map import ModelParams, traces
from .transfer_transport import TransferState, _steps


def jacobi_transfer(n: int, E: float, a: float, b: float) -> TransferState:
    """(1/w_n) [[E, -1], [w_n^2, 0]]; maps (u_{n-1}, w_{n-1} u_{n-2}) forward one site."""
    if n < 1:
        raise ValueError("n must be >= 1")
    T = _steps(n, n - 1, E, ModelParams.offdiagonal(a, b))[0]
    return TransferState(T, n)


def offdiag_invariant(a: float, b: float) -> float:
    if a <= 0 or b <= 0:
        raise ValueError("hoppings must be positive")
    # (a^2 + b^2)^2 / (4 a^2 b^2) - 1, written without the cancellation
    return (a * a - b * b) ** 2 / (4.0 * a * a * b * b)


def trace_bound(a: float, b: float) -> float:
    """1 + sqrt(I): bound on |x_k| over the spectrum."""
    return 1.0 + float(np.sqrt(offdiag_invariant(a, b)))


def offdiag_spectrum_approx(a: float, b: float, n: int,
                            edge_tol: float = DEFAULT_EDGE_TOL) -> BandSet:
    """sigma_{n+1} u sigma_n for the hopping model."""
    return spectrum_approx(ModelParams.offdiagonal(a, b), n, edge_tol)


def cayley_hamilton_residual(E: float, a: float, b: float, k: int, u_init) -> float:
    """Relative size of U_{2F_k} - 2 x_k U_{F_k} + U_0 for the half-line sequence.

    U_n = M(n) U_0 with U_0 = u_init. The first 2F_k letters form the square of
    s_k only from k = 3 on (s_2 s_2 = 1010 while u starts 1011).
    """
    if k < 3:
        raise ValueError("the prefix of length 2F_k is a square only for k >= 3")
    U0 = np.asarray(u_init, dtype=np.float64)
    if not np.any(U0):
        raise ValueError("u_init must be nonzero")
    params = ModelParams.offdiagonal(a, b)
    p = fib(k)
    steps = _steps(2 * p, 0, E, params)
    U = U0.copy()
    U_p = None
    for i, T in enumerate(steps, start=1):
        U = T @ U
        if i == p:
            U_p = U.copy()
    x_k = float(traces(E, params, k)[0])
    res = U - 2.0 * x_k * U_p + U0
    return float(np.linalg.norm(res) / max(np.linalg.norm(U), 1.0))
