"""Integrated density of states by Sturm counting, gap labels {m alpha}."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._tridiag import jacobi_block, sturm_count
from .fibonacci_word import ALPHA
from .spectrum_bands import DEFAULT_EDGE_TOL, BandSet, spectrum_approx
from .trace_map import ModelParams

DEFAULT_N_SITES = 10_000
DEFAULT_M_MAX = 50


class AmbiguousGap(ValueError):
    """IDS varies across the interval, so it is not a resolved gap."""


class MissingGap(LookupError):
    """No gap with the requested label was found."""


@dataclass(frozen=True)
class GapRecord:
    gap: tuple[float, float]
    ids_value: float
    label_m: int | None
    label_residual: float

    @property
    def width(self) -> float:
        return self.gap[1] - self.gap[0]

    @property
    def centre(self) -> float:
        return 0.5 * (self.gap[0] + self.gap[1])


@dataclass(frozen=True)
class RateRow:
    V: float
    gap: tuple[float, float]
    width: float
    width_over_V: float
    m_times_width_over_V: float


@dataclass(frozen=True)
class RateReport:
    m: int
    depth: int
    rows: tuple[RateRow, ...]

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r.width_over_V for r in self.rows])

    @property
    def spread(self) -> float:
        """max/min of |U_m(V)|/V over the list."""
        r = self.ratios
        return float(r.max() / r.min())


def frac(x):
    return np.mod(x, 1.0)


def dirichlet_eigencount(E, params: ModelParams, n_sites: int):
    """Eigenvalues <= E of H restricted to [1, n_sites]; vectorized over E."""
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    diag, off = _block(params, n_sites)
    out = sturm_count(diag, off, E)
    return int(out[0]) if np.ndim(E) == 0 else out


_BLOCKS: dict = {}


def _block(params: ModelParams, n: int):
    key = (params, n)
    hit = _BLOCKS.get(key)
    if hit is None:
        if len(_BLOCKS) > 32:
            _BLOCKS.clear()
        hit = _BLOCKS[key] = jacobi_block(params, n)
    return hit


def ids(E, params: ModelParams, n_sites: int = DEFAULT_N_SITES):
    c = dirichlet_eigencount(E, params, n_sites)
    return c / n_sites


def ids_free(E):
    """Closed form for V = 0: arccos(-E/2)/pi, clamped to [0, 1]."""
    E = np.asarray(E, dtype=np.float64)
    out = np.arccos(np.clip(-E / 2.0, -1.0, 1.0)) / math.pi
    return float(out) if out.ndim == 0 else out


def nearest_label(value: float, m_max: int = DEFAULT_M_MAX) -> tuple[int, float]:
    """m in [-m_max, m_max] \\ {0} minimising |value - {m alpha}|."""
    m = np.arange(-m_max, m_max + 1)
    m = m[m != 0]
    f = frac(m * ALPHA)
    d = np.abs(f - value)
    # smallest |m| first, then positive m, among exact ties
    order = np.lexsort((-m, np.abs(m), d))
    i = order[0]
    return int(m[i]), float(d[i])


def label_tolerance(n_sites: int) -> float:
    return max(5e-3, 2.0 / n_sites)


def gap_labels(gaps_, params: ModelParams, n_sites: int = DEFAULT_N_SITES,
               m_max: int = DEFAULT_M_MAX, strict: bool = True) -> list[GapRecord]:
    """Label many gaps in one Sturm pass.

    With strict=False, gaps whose IDS is not constant come back unlabeled
    instead of raising.
    """
    g = np.asarray(gaps_, dtype=np.float64).reshape(-1, 2)
    if len(g) == 0:
        return []
    w = g[:, 1] - g[:, 0]
    probes = np.column_stack([g[:, 0] + 0.25 * w, g[:, 0] + 0.5 * w, g[:, 0] + 0.75 * w])
    vals = ids(probes.ravel(), params, n_sites).reshape(-1, 3)
    spread = vals.max(axis=1) - vals.min(axis=1)
    tol = label_tolerance(n_sites)
    out = []
    for i in range(len(g)):
        gap = (float(g[i, 0]), float(g[i, 1]))
        v = float(vals[i, 1])
        if spread[i] > 2.0 / n_sites + 1e-15:
            if strict:
                raise AmbiguousGap(f"IDS varies by {spread[i]:.3g} across {gap}")
            out.append(GapRecord(gap, v, None, math.nan))
            continue
        m, res = nearest_label(v, m_max)
        out.append(GapRecord(gap, v, m if res <= tol else None, res))
    return out


def gap_label(g, params: ModelParams, n_sites: int = DEFAULT_N_SITES,
              m_max: int = DEFAULT_M_MAX) -> GapRecord:
    return gap_labels([g], params, n_sites, m_max)[0]


def label_energy_at_zero(m: int) -> float:
    """Free-case energy with N(E, 0) = {m alpha}."""
    if m == 0:
        raise ValueError("m must be nonzero")
    return -2.0 * math.cos(math.pi * (m * ALPHA % 1.0))


def label_window(m: int, params: ModelParams) -> tuple[float, float]:
    """Interval that must contain the gap labeled m.

    For 0 <= v <= V, N(E - V, 0) <= N(E, V) <= N(E, 0), so the level set
    N = {m alpha} lies in [E_m(0), E_m(0) + V].
    """
    E0 = label_energy_at_zero(m)
    if params.is_diagonal:
        return (E0, E0 + params.V)
    return (E0, E0)


def find_labeled_gap(m: int, params: ModelParams, bands: BandSet,
                     n_sites: int = DEFAULT_N_SITES, m_max: int = DEFAULT_M_MAX) -> GapRecord:
    """Widest gap of `bands` carrying label m, searched outward from label_window.

    Taking the widest match guards against narrow gaps whose true label has
    |m| > m_max but whose IDS still falls within tolerance of {m alpha}.
    """
    b = np.asarray(bands.bands)
    g = np.column_stack([b[:-1, 1], b[1:, 0]])
    if len(g) == 0:
        raise MissingGap(f"no gaps at all for label {m}")
    w_lo, w_hi = label_window(m, params)
    lo, hi = bands.hull
    pad = 1e-3
    seen = np.zeros(len(g), dtype=bool)
    hits: list[GapRecord] = []
    while True:
        near = (g[:, 1] >= w_lo - pad) & (g[:, 0] <= w_hi + pad) & ~seen
        if near.any():
            idx = np.flatnonzero(near)
            seen[idx] = True
            recs = gap_labels(g[idx], params, n_sites, m_max, strict=False)
            hits += [r for r in recs if r.label_m == m]
        if hits:
            return max(hits, key=lambda r: r.width)
        if pad > hi - lo:
            raise MissingGap(f"no gap labeled {m}")
        pad *= 2.0


def gap_opening_rate(m: int, V_list, depth: int, n_sites: int = DEFAULT_N_SITES,
                     m_max: int = DEFAULT_M_MAX, edge_tol: float = DEFAULT_EDGE_TOL) -> RateReport:
    rows = []
    for V in V_list:
        params = ModelParams.diagonal(V)
        bands = spectrum_approx(params, depth, edge_tol)
        try:
            rec = find_labeled_gap(m, params, bands, n_sites, m_max)
        except MissingGap as exc:
            raise MissingGap(f"label {m} not found at V={V}") from exc
        rows.append(RateRow(float(V), rec.gap, rec.width, rec.width / V, abs(m) * rec.width / V))
    return RateReport(m, depth, tuple(rows))
