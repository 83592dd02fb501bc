"""Finite Jacobi blocks of both models and Sturm sign counts."""
from __future__ import annotations

import numpy as np

from .fibonacci_word import letters
from .trace_map import ModelParams

PIVOT_EPS = 1e-300


def hoppings(params: ModelParams, n: int, start: int = 1) -> np.ndarray:
    """omega_start .. omega_{start+n-1} for the hopping model (letter 1 -> a)."""
    chi = letters(n, params.omega, start)
    return np.where(chi == 1, params.a, params.b).astype(np.float64)


def jacobi_block(params: ModelParams, n_sites: int, start: int = 1):
    """Diagonal and off-diagonal of H restricted to sites start..start+n_sites-1."""
    if params.is_diagonal:
        diag = params.V * letters(n_sites, params.omega, start).astype(np.float64)
        off = np.ones(max(n_sites - 1, 0))
    else:
        diag = np.zeros(n_sites)
        # H_{j, j+1} = omega_{j+1}
        off = hoppings(params, n_sites - 1, start + 1) if n_sites > 1 else np.zeros(0)
    return diag, off


def sturm_count(diag: np.ndarray, off: np.ndarray, E) -> np.ndarray:
    """Number of eigenvalues <= E for each energy in E.

    LDL^T pivots of (H - E); an exactly zero pivot is replaced by -PIVOT_EPS,
    which is the limit from E + 0 and keeps the count non-decreasing in E.
    """
    E = np.atleast_1d(np.asarray(E, dtype=np.float64))
    count = np.zeros(E.shape, dtype=np.int64)
    off_sq = np.asarray(off, dtype=np.float64) ** 2
    d = diag[0] - E
    d[d == 0.0] = -PIVOT_EPS
    count += d < 0
    for i in range(1, len(diag)):
        d = (diag[i] - E) - off_sq[i - 1] / d
        d[d == 0.0] = -PIVOT_EPS
        count += d < 0
    return count
