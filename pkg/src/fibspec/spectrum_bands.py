"""Band approximants sigma_k = {|x_k| <= 1} and Sigma^(n) = sigma_{n+1} u sigma_n.

Every band of the period-F_k operator sits between two consecutive Dirichlet
eigenvalues of the (F_k - 1)-site block (one lies in each closed gap), so those
eigenvalues give one bracket per band. Inside a bracket the two edges are found
by bisection on the sign of x_k -+ 1. This avoids uniform scans, which miss the
very narrow bands that crowd the ends of the spectrum.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from ._tridiag import jacobi_block
from .fibonacci_word import fib
from .trace_map import ModelParams, traces

DEFAULT_EDGE_TOL = 1e-12
# gaps whose interior never gets this far past |x_k| = 1 count as closed
TANGENCY_TOL = 1e-10


class BracketError(ValueError):
    """Bisection endpoints do not straddle the target level."""


@dataclass
class BandSet:
    """Sorted disjoint closed intervals, stored as an (n, 2) array."""
    bands: np.ndarray
    level: int | None = None
    params: ModelParams | None = None
    edge_tol: float = DEFAULT_EDGE_TOL
    degenerate: int = 0  # near-tangent gaps merged away
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.bands = np.asarray(self.bands, dtype=np.float64).reshape(-1, 2)

    @classmethod
    def from_intervals(cls, intervals, **kw) -> "BandSet":
        return cls(merge_intervals(np.asarray(intervals, dtype=np.float64).reshape(-1, 2)), **kw)

    def __len__(self) -> int:
        return len(self.bands)

    @property
    def lo(self) -> np.ndarray:
        return self.bands[:, 0]

    @property
    def hi(self) -> np.ndarray:
        return self.bands[:, 1]

    @property
    def widths(self) -> np.ndarray:
        return self.bands[:, 1] - self.bands[:, 0]

    @property
    def measure(self) -> float:
        return float(self.widths.sum())

    @property
    def hull(self) -> tuple[float, float]:
        return float(self.bands[0, 0]), float(self.bands[-1, 1])

    def contains(self, E, slack: float = 0.0) -> np.ndarray:
        E = np.asarray(E, dtype=np.float64)
        i = np.searchsorted(self.bands[:, 0], E + slack, side="right") - 1
        ok = i >= 0
        ic = np.clip(i, 0, None)
        return ok & (E <= self.bands[ic, 1] + slack)

    def midpoints(self) -> np.ndarray:
        return self.bands.mean(axis=1)

    def clip(self, lo: float, hi: float) -> "BandSet":
        b = self.bands
        keep = (b[:, 1] >= lo) & (b[:, 0] <= hi)
        out = np.clip(b[keep], lo, hi)
        return BandSet(out, self.level, self.params, self.edge_tol, self.degenerate, dict(self.meta))


def merge_intervals(iv: np.ndarray, gap_tol: float = 0.0) -> np.ndarray:
    """Union of closed intervals; pieces closer than gap_tol are joined."""
    if len(iv) == 0:
        return iv.reshape(0, 2)
    iv = iv[np.lexsort((iv[:, 1], iv[:, 0]))]
    # running max of right ends decides where a new component starts
    run_hi = np.maximum.accumulate(iv[:, 1])
    starts = np.ones(len(iv), dtype=bool)
    starts[1:] = iv[1:, 0] > run_hi[:-1] + gap_tol
    idx = np.flatnonzero(starts)
    ends = np.append(idx[1:], len(iv)) - 1
    return np.column_stack([iv[idx, 0], run_hi[ends]])


def _bisect(pred, a: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray:
    """Vectorized bisection; pred is True at a and False at b."""
    a = a.copy()
    b = b.copy()
    for _ in range(200):
        live = np.abs(b - a) > tol
        if not live.any():
            break
        m = 0.5 * (a + b)
        live &= (m != a) & (m != b)
        if not live.any():
            break
        p = pred(m[live])
        ia = np.flatnonzero(live)
        a[ia[p]] = m[live][p]
        b[ia[~p]] = m[live][~p]
    return 0.5 * (a + b)


def _dirichlet_eigs(params: ModelParams, k: int, window=None) -> np.ndarray:
    p = fib(k)
    if p < 2:
        return np.zeros(0)
    diag, off = jacobi_block(params, p - 1)
    if len(diag) == 1:
        eigs = diag.copy()
    elif window is None:
        eigs = eigvalsh_tridiagonal(diag, off, lapack_driver="stev")
    else:
        eigs = _eigs_around(diag, off, window, params.hull)
    return np.sort(eigs)


def _eigs_around(diag, off, window, hull) -> np.ndarray:
    """Eigenvalues in the window plus the nearest one outside on each side."""
    lo, hi = window
    pad = max(0.02 * (hi - lo), 1e-12)
    while True:
        a, b = max(lo - pad, hull[0] - 1.0), min(hi + pad, hull[1] + 1.0)
        eigs = eigvalsh_tridiagonal(diag, off,
                                    select="v", select_range=(a, b))
        left_ok = (eigs < lo).any() or a <= hull[0] - 1.0
        right_ok = (eigs > hi).any() or b >= hull[1] + 1.0
        if left_ok and right_ok:
            below = eigs[eigs < lo]
            above = eigs[eigs > hi]
            inside = eigs[(eigs >= lo) & (eigs <= hi)]
            parts = [below[-1:], inside, above[:1]]
            return np.concatenate(parts)
        pad *= 4.0


def sigma_k_bands(params: ModelParams, k: int, edge_tol: float = DEFAULT_EDGE_TOL,
                  window: tuple[float, float] | None = None) -> BandSet:
    """{E : |x_k(E)| <= 1} as a BandSet, optionally restricted to a window.

    The band set does not depend on the phase omega.
    """
    if window is not None:
        window = (float(window[0]), float(window[1]))
    key = ModelParams(params.V, params.a, params.b)
    bands, merged = _sigma_cached(key, int(k), float(edge_tol), window)
    return BandSet(bands, k, params, edge_tol, merged)


@lru_cache(maxsize=256)
def _sigma_cached(params: ModelParams, k: int, edge_tol: float, window):
    out = _sigma(params, k, edge_tol, window)
    out.bands.flags.writeable = False
    return out.bands, out.degenerate


def _sigma(params: ModelParams, k: int, edge_tol: float, window) -> BandSet:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if edge_tol <= 0:
        raise ValueError("edge_tol must be positive")
    hull_lo, hull_hi = params.hull
    if window is not None:
        window = (max(window[0], hull_lo), min(window[1], hull_hi))
        if window[0] > window[1]:
            return BandSet(np.zeros((0, 2)), k, params, edge_tol)
    mu = _dirichlet_eigs(params, k, window)
    cuts = np.concatenate([[hull_lo], mu, [hull_hi]])
    lo, hi = cuts[:-1].copy(), cuts[1:].copy()
    if window is not None:
        # drop brackets lying wholly outside the window
        keep = (hi >= window[0]) & (lo <= window[1])
        lo, hi = lo[keep], hi[keep]

    def xk(E):
        return traces(E, params, k)

    # x_k changes sign exactly once per bracket, at the band's zero
    s_lo = np.where(xk(lo) >= 0, 1.0, -1.0)
    centre = _bisect_sign(lambda E, s: s * xk(E) > 0, s_lo, lo, hi, edge_tol)
    # walking outward from the zero, |x_k| <= 1 until the band edge
    ones = np.ones_like(lo)
    left = _bisect_sign(lambda E, s: np.abs(xk(E)) > s, ones, lo, centre, edge_tol)
    right = _bisect_sign(lambda E, s: np.abs(xk(E)) <= s, ones, centre, hi, edge_tol)

    bands = np.column_stack([left, right])
    bands, n_merged = _close_tangencies(bands, xk, edge_tol)
    out = BandSet(bands, k, params, edge_tol, n_merged)
    if window is not None:
        out = out.clip(*window)
    return out


def _bisect_sign(pred, s, a, b, tol) -> np.ndarray:
    """Bisection where pred(E, s) holds next to a and fails next to b.

    The endpoints themselves are never evaluated.
    """
    a = a.copy()
    b = b.copy()
    for _ in range(200):
        m = 0.5 * (a + b)
        live = (np.abs(b - a) > tol) & (m != a) & (m != b)
        if not live.any():
            break
        il = np.flatnonzero(live)
        p = pred(m[il], s[il])
        a[il[p]] = m[il[p]]
        b[il[~p]] = m[il[~p]]
    return 0.5 * (a + b)


def _close_tangencies(bands: np.ndarray, xk, edge_tol: float):
    """Join neighbours separated by a numerically closed gap."""
    if len(bands) < 2:
        return bands, 0
    g_lo, g_hi = bands[:-1, 1], bands[1:, 0]
    width = g_hi - g_lo
    mid = 0.5 * (g_lo + g_hi)
    excess = np.abs(xk(mid)) - 1.0
    closed = (width <= 2.0 * edge_tol) | (excess < TANGENCY_TOL)
    if not closed.any():
        return bands, 0
    starts = np.ones(len(bands), dtype=bool)
    starts[1:] = ~closed
    idx = np.flatnonzero(starts)
    ends = np.append(idx[1:], len(bands)) - 1
    merged = np.column_stack([bands[idx, 0], np.maximum.accumulate(bands[:, 1])[ends]])
    return merged, int(closed.sum())


def spectrum_approx(params: ModelParams, n: int, edge_tol: float = DEFAULT_EDGE_TOL,
                    window: tuple[float, float] | None = None) -> BandSet:
    """Sigma^(n) = sigma_{n+1} u sigma_n (trace indices)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    a = sigma_k_bands(params, n + 1, edge_tol, window)
    b = sigma_k_bands(params, n, edge_tol, window)
    both = np.concatenate([a.bands, b.bands])
    merged = merge_intervals(both, 2.0 * edge_tol)
    return BandSet(merged, n, params, edge_tol, a.degenerate + b.degenerate)


def refine_band_edge(E_lo: float, E_hi: float, k: int, target: float,
                     params: ModelParams, tol: float = DEFAULT_EDGE_TOL) -> float:
    """Bisection for x_k(E) = target on a bracket with a sign change."""
    if target not in (1, -1, 1.0, -1.0):
        raise ValueError("target must be +1 or -1")
    f_lo = float(traces(E_lo, params, k)[0]) - target
    f_hi = float(traces(E_hi, params, k)[0]) - target
    if f_lo == 0.0:
        return float(E_lo)
    if f_hi == 0.0:
        return float(E_hi)
    if (f_lo > 0) == (f_hi > 0):
        raise BracketError(f"x_{k} - {target} has no sign change on [{E_lo}, {E_hi}]")
    pos_lo = f_lo > 0

    def pred(E):
        return (traces(E, params, k) - target > 0) == pos_lo

    return float(_bisect(pred, np.array([float(E_lo)]), np.array([float(E_hi)]), tol)[0])
