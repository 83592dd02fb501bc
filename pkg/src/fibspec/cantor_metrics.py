"""Gaps, size-ordered thickness/denseness, box counting and Minkowski sums."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectrum_bands import BandSet, merge_intervals

LOG2 = math.log(2.0)


class UndefinedThickness(ValueError):
    """Thickness needs at least two bands (one gap)."""


class InsufficientRange(ValueError):
    """Too few scales in the requested box-counting range."""


@dataclass(frozen=True)
class GapList:
    hull: tuple[float, float]
    gaps: np.ndarray  # (m, 2) open intervals, sorted

    def __len__(self) -> int:
        return len(self.gaps)

    @property
    def lengths(self) -> np.ndarray:
        return self.gaps[:, 1] - self.gaps[:, 0]


@dataclass(frozen=True)
class ThicknessReport:
    """Size-ordered thickness (tau) and denseness (theta)."""
    tau: float
    theta: float
    dim_lo: float
    dim_hi: float
    witness_gap: tuple[float, float]
    witness_side: str
    n_gaps: int
    n_dropped: int = 0
    presentation: str = "size-ordered"


@dataclass(frozen=True)
class Certification:
    certified: bool
    tau1: float
    tau2: float
    product: float
    largest_gap1: float
    largest_gap2: float
    diam1: float
    diam2: float

    @property
    def status(self) -> str:
        return "interval-certified" if self.certified else "inconclusive"


def _positive_bands(b: BandSet):
    bands = np.asarray(b.bands, dtype=np.float64)
    keep = bands[:, 1] > bands[:, 0]
    return bands[keep], int((~keep).sum())


def gaps(b: BandSet) -> GapList:
    bands = np.asarray(b.bands, dtype=np.float64)
    if len(bands) == 0:
        raise ValueError("empty band set")
    g = np.column_stack([bands[:-1, 1], bands[1:, 0]])
    return GapList((float(bands[0, 0]), float(bands[-1, 1])), g[g[:, 1] > g[:, 0]])


def dim_from_thickness(t: float) -> float:
    """log 2 / log(2 + 1/t), with the limits 0 and 1 at t = 0 and t = inf."""
    if t <= 0:
        return 0.0
    if math.isinf(t):
        return 1.0
    return LOG2 / math.log(2.0 + 1.0 / t)


def _previous_smaller(rank: np.ndarray) -> np.ndarray:
    """Index of the nearest earlier position with smaller rank, or -1."""
    out = np.full(len(rank), -1, dtype=np.int64)
    stack: list[int] = []
    for i, r in enumerate(rank):
        while stack and rank[stack[-1]] > r:
            stack.pop()
        if stack:
            out[i] = stack[-1]
        stack.append(i)
    return out


def bridge_ratios(b: BandSet):
    """Per-gap left and right bridge/gap ratios under size ordering.

    Gaps are removed longest first (leftmost first among equal lengths); the
    bridge at an end of a gap runs to the nearest previously removed gap on
    that side, or to the hull.
    """
    bands, dropped = _positive_bands(b)
    if len(bands) < 2:
        raise UndefinedThickness("thickness needs at least two bands")
    g = np.column_stack([bands[:-1, 1], bands[1:, 0]])
    length = g[:, 1] - g[:, 0]
    order = np.lexsort((np.arange(len(g)), -length))
    rank = np.empty(len(g), dtype=np.int64)
    rank[order] = np.arange(len(g))
    left_j = _previous_smaller(rank)
    right_j = _previous_smaller(rank[::-1])[::-1]
    right_j = np.where(right_j >= 0, len(g) - 1 - right_j, -1)
    hull_lo, hull_hi = bands[0, 0], bands[-1, 1]
    left_end = np.where(left_j >= 0, g[np.clip(left_j, 0, None), 1], hull_lo)
    right_end = np.where(right_j >= 0, g[np.clip(right_j, 0, None), 0], hull_hi)
    left = (g[:, 0] - left_end) / length
    right = (right_end - g[:, 1]) / length
    return g, left, right, dropped


def thickness(b: BandSet) -> ThicknessReport:
    g, left, right, dropped = bridge_ratios(b)
    both = np.concatenate([left, right])
    i_min = int(np.argmin(both))
    tau = float(both[i_min])
    theta = float(both.max())
    gi = i_min % len(g)
    side = "left" if i_min < len(g) else "right"
    return ThicknessReport(tau, theta, dim_from_thickness(tau), dim_from_thickness(theta),
                           (float(g[gi, 0]), float(g[gi, 1])), side, len(g), dropped)


def box_count(b: BandSet, eps: float, origin: float | None = None) -> int:
    """Number of grid boxes [origin + i eps, origin + (i+1) eps) meeting the set."""
    bands = np.asarray(b.bands, dtype=np.float64)
    x0 = bands[0, 0] if origin is None else origin
    i_lo = np.floor((bands[:, 0] - x0) / eps).astype(np.int64)
    i_hi = np.floor((bands[:, 1] - x0) / eps).astype(np.int64)
    prev = np.concatenate([[i_lo[0] - 1], np.maximum.accumulate(i_hi)[:-1]])
    fresh = i_hi - np.maximum(i_lo - 1, prev)
    return int(np.clip(fresh, 0, None).sum())


def box_dimension(b: BandSet, eps_hi: float, eps_lo: float, return_fit: bool = False):
    """Least-squares slope of log N(eps) against log(1/eps), eps halving from eps_hi."""
    if not 0 < eps_lo < eps_hi:
        raise ValueError("need 0 < eps_lo < eps_hi")
    if len(b.bands) == 0:
        raise ValueError("empty band set")
    n_steps = int(math.floor(math.log2(eps_hi / eps_lo) + 1e-9)) + 1
    if n_steps < 4:
        raise InsufficientRange(f"only {n_steps} scales between {eps_lo} and {eps_hi}")
    eps = eps_hi * 0.5 ** np.arange(n_steps)
    counts = np.array([box_count(b, e) for e in eps])
    slope, icpt = np.polyfit(np.log(1.0 / eps), np.log(counts), 1)
    if return_fit:
        return float(slope), eps, counts
    return float(slope)


def minkowski_sum(b1: BandSet, b2: BandSet, chunk: int = 1 << 20) -> BandSet:
    """Union of [lo_i + lo_j, hi_i + hi_j] over all pairs, merged."""
    x = np.asarray(b1.bands, dtype=np.float64)
    y = np.asarray(b2.bands, dtype=np.float64)
    if len(x) == 0 or len(y) == 0:
        raise ValueError("empty band set")
    if len(x) < len(y):
        x, y = y, x
    rows = max(1, chunk // len(y))
    # slivers from rounding in the pairwise sums are not gaps
    scale = max(abs(x).max() + abs(y).max(), 1.0)
    tol = b1.edge_tol + b2.edge_tol + 8.0 * np.finfo(np.float64).eps * scale
    acc = np.zeros((0, 2))
    for s in range(0, len(x), rows):
        part = x[s:s + rows]
        lo = (part[:, None, 0] + y[None, :, 0]).ravel()
        hi = (part[:, None, 1] + y[None, :, 1]).ravel()
        piece = merge_intervals(np.column_stack([lo, hi]), tol)
        acc = merge_intervals(np.concatenate([acc, piece]), tol)
    return BandSet(acc, None, None, b1.edge_tol + b2.edge_tol)


def gap_lemma_certify(b1: BandSet, b2: BandSet) -> Certification:
    """Thickness product test plus the gap-versus-diameter conditions."""
    t1 = thickness(b1).tau
    t2 = thickness(b2).tau
    g1 = float(gaps(b1).lengths.max())
    g2 = float(gaps(b2).lengths.max())
    d1 = float(b1.bands[-1, 1] - b1.bands[0, 0])
    d2 = float(b2.bands[-1, 1] - b2.bands[0, 0])
    ok = t1 * t2 > 1.0 and g1 <= d2 and g2 <= d1
    return Certification(bool(ok), t1, t2, t1 * t2, g1, g2, d1, d2)


def middle_lambda_bands(lam: float, depth: int, lo: float = 0.0, hi: float = 1.0) -> BandSet:
    """Depth-d approximant of the middle-lambda Cantor set on [lo, hi]."""
    if not 0 < lam < 1:
        raise ValueError("lam must lie in (0, 1)")
    iv = np.array([[lo, hi]], dtype=np.float64)
    for _ in range(depth):
        w = (iv[:, 1] - iv[:, 0]) * (1.0 - lam) / 2.0
        left = np.column_stack([iv[:, 0], iv[:, 0] + w])
        right = np.column_stack([iv[:, 1] - w, iv[:, 1]])
        iv = np.stack([left, right], axis=1).reshape(-1, 2)
    return BandSet(iv, depth, None, 0.0)
