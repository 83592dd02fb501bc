"""Transfer matrices, Fibonacci-block norms and the closed-form exponent bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._tridiag import hoppings
from .fibonacci_word import PHI, fib, letters
from .spectrum_bands import DEFAULT_EDGE_TOL, spectrum_approx
from .trace_map import ModelParams

LOG_PHI = math.log(PHI)


@dataclass(frozen=True)
class TransferState:
    matrix: np.ndarray
    site: int

    @property
    def half_trace(self) -> float:
        return 0.5 * float(self.matrix[0, 0] + self.matrix[1, 1])

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


def one_step(n: int, E: float, params: ModelParams) -> np.ndarray:
    """T(n, E): maps (u(n), u(n-1)) to (u(n+1), u(n))."""
    chi = int(letters(1, params.omega, n)[0])
    if params.is_diagonal:
        return np.array([[E - params.V * chi, -1.0], [1.0, 0.0]])
    w = params.a if chi else params.b
    return np.array([[E / w, -1.0 / w], [w, 0.0]])


def _steps(n: int, m: int, E: float, params: ModelParams) -> np.ndarray:
    """Stack of one-step matrices for sites m+1..n, shape (n-m, 2, 2)."""
    cnt = n - m
    out = np.zeros((cnt, 2, 2))
    if params.is_diagonal:
        v = params.V * letters(cnt, params.omega, m + 1)
        out[:, 0, 0] = E - v
        out[:, 0, 1] = -1.0
        out[:, 1, 0] = 1.0
    else:
        w = hoppings(params, cnt, m + 1)
        out[:, 0, 0] = E / w
        out[:, 0, 1] = -1.0 / w
        out[:, 1, 0] = w
    return out


def transfer_product(n: int, m: int, E: float, params: ModelParams) -> TransferState:
    """M(n, m) = T(n) ... T(m+1); identity when n == m."""
    if n < m:
        raise ValueError("need n >= m")
    M = np.eye(2)
    for T in _steps(n, m, E, params):
        M = T @ M
    return TransferState(M, n)


def spectral_norm(M) -> np.ndarray:
    """Largest singular value of 2x2 matrices, via trace and determinant of M^T M.

    Accepts a single matrix or a stack (..., 2, 2).
    """
    M = np.asarray(M, dtype=np.float64)
    fro2 = np.sum(M * M, axis=(-2, -1))
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    disc = np.sqrt(np.maximum(fro2 * fro2 - 4.0 * det * det, 0.0))
    return np.sqrt(0.5 * (fro2 + disc))


def fib_blocks(E: float, params: ModelParams, k_max: int) -> dict[int, np.ndarray]:
    """M_k = M(F_k, 0) for 1 <= k <= k_max, built with M_{k+1} = M_{k-1} M_k."""
    M = {1: transfer_product(1, 0, E, params).matrix}
    if k_max >= 2:
        M[2] = transfer_product(2, 0, E, params).matrix
    for k in range(2, k_max):
        M[k + 1] = M[k - 1] @ M[k]
    return M


def block_log_norms(U0, E: float, params: ModelParams, k_max: int) -> dict[int, float]:
    """log ||U||_{F_k} for 1 <= k <= k_max, where U(n) = M(n, 0) U(0).

    Uses G_k = sum_{n <= F_k} M(n)^T M(n) and G_{k+1} = G_k + M_k^T G_{k-1} M_k,
    which holds because sites F_k + 1 .. F_{k+1} repeat the prefix of length
    F_{k-1}. Matrices carry a separate log scale so off-spectrum growth cannot
    overflow.
    """
    U0 = np.asarray(U0, dtype=np.float64)

    def norm(A, s):
        m = float(np.abs(A).max())
        return (A / m, s + math.log(m)) if m > 0 else (A, s)

    M = {1: norm(transfer_product(1, 0, E, params).matrix, 0.0)}
    if k_max >= 2:
        M[2] = norm(transfer_product(2, 0, E, params).matrix, 0.0)
    G = {1: norm(M[1][0].T @ M[1][0], 2 * M[1][1])}
    if k_max >= 2:
        G[2] = _add_scaled(G[1], (M[2][0].T @ M[2][0], 2 * M[2][1]), norm)
    for k in range(2, k_max):
        Mk, mk = M[k]
        Gp, gp = G[k - 1]
        G[k + 1] = _add_scaled(G[k], (Mk.T @ Gp @ Mk, gp + 2 * mk), norm)
        M[k + 1] = norm(M[k - 1][0] @ Mk, M[k - 1][1] + mk)
    return {k: 0.5 * (math.log(float(U0 @ g @ U0)) + s) for k, (g, s) in G.items()}


def _add_scaled(x, y, norm):
    (A, sa), (B, sb) = x, y
    if sa >= sb:
        return norm(A + B * math.exp(sb - sa), sa)
    return norm(A * math.exp(sa - sb) + B, sb)


def block_norms(U0, E: float, params: ModelParams, k_max: int) -> dict[int, float]:
    """||U||_{F_k}; inf when the value exceeds the float range."""
    out = {}
    for k, v in block_log_norms(U0, E, params, k_max).items():
        out[k] = math.exp(v) if v < 709.0 else math.inf
    return out


def solution_norm_direct(U0, E: float, params: ModelParams, L: int) -> float:
    """||U||_L for integer L by plain propagation (reference path)."""
    U = np.asarray(U0, dtype=np.float64)
    total = 0.0
    for T in _steps(L, 0, E, params):
        U = T @ U
        total += float(U @ U)
    return math.sqrt(total)


def local_norm(u_init, E: float, params: ModelParams, L: float) -> float:
    """||u||_L with the fractional last term (L - [L]) |u([L] + 1)|^2.

    u_init = (u(0), u(1)).
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    u0, u1 = map(float, u_init)
    n_int = int(math.floor(L))
    # u(1) .. u(n_int + 1)
    u = np.empty(n_int + 1)
    u[0] = u1
    prev, cur = u0, u1
    if params.is_diagonal:
        v = params.V * letters(n_int, params.omega).astype(np.float64)
        for i in range(n_int):
            prev, cur = cur, (E - v[i]) * cur - prev
            u[i + 1] = cur
    else:
        # omega_{n+1} u(n+1) = E u(n) - omega_n u(n-1); w[j] = omega_{j+1}
        w = hoppings(params, n_int + 1)
        for i in range(n_int):
            prev, cur = cur, (E * cur - w[i] * prev) / w[i + 1]
            u[i + 1] = cur
    total = float(np.sum(u[:n_int] ** 2)) + (L - n_int) * float(u[n_int] ** 2)
    return math.sqrt(total)


def a_V(V: float) -> float:
    """Largest root of x^3 - (2 + V) x - 1 (Newton from the right)."""
    if V < 0:
        raise ValueError("V must be >= 0")
    c = 2.0 + V
    x = math.sqrt(c) + 1.0
    for _ in range(100):
        f = x**3 - c * x - 1.0
        df = 3.0 * x * x - c
        step = f / df
        # from the right of the largest root the iteration decreases monotonically
        if step < 0:
            break
        x -= step
        if step <= 1e-14 * x:
            break
    return x


def _D(V: float) -> float:
    return math.log(math.sqrt(5.0 + 2.0 * V) * (3.0 + V) * a_V(V))


def zeta(V: float) -> float:
    return _D(V) / LOG_PHI


def _L(V: float) -> float:
    return math.log1p(1.0 / (2.0 + 2.0 * V) ** 2)


def gamma_bounds(V: float) -> tuple[float, float]:
    """(sup of admissible gamma_lower, inf of admissible gamma_upper).

    V = 0 returns the V -> 0 limit.
    """
    if V < 0:
        raise ValueError("V must be >= 0")
    return _L(V) / (16.0 * LOG_PHI), 1.0 + zeta(V)


def alpha_bound(V: float) -> float:
    if V < 0:
        raise ValueError("V must be >= 0")
    L = _L(V)
    return 2.0 * L / (L + 16.0 * LOG_PHI + 16.0 * _D(V))


def beta_bounds(V: float, p: float) -> tuple[float, float]:
    """(bound valid for any initial state, bound for delta_0); p may be inf."""
    if V < 0 or not p > 0:
        raise ValueError("need V >= 0 and p > 0")
    D = _D(V)
    raw = LOG_PHI / (LOG_PHI + D) - 3.0 * D / (p * (LOG_PHI + D))
    return alpha_bound(V), max(0.0, raw)


@dataclass(frozen=True)
class BoundSet:
    V: float
    a_V: float
    zeta: float
    gamma_lower: float
    gamma_upper: float
    alpha_bound: float
    beta_lower: float
    beta_p_lower: float
    p: float


def bound_set(V: float, p: float = math.inf) -> BoundSet:
    gl, gu = gamma_bounds(V)
    b_any, b_p = beta_bounds(V, p)
    return BoundSet(V, a_V(V), zeta(V), gl, gu, alpha_bound(V), b_any, b_p, p)


def running_max_log_norms(energies, params: ModelParams, n_max: int, sample_n) -> np.ndarray:
    """log max_{n' <= n} ||M(n', 0, E)|| at each sample n, shape (len(E), len(sample_n)).

    The product is rescaled whenever it gets large, so gap energies do not overflow.
    """
    E = np.atleast_1d(np.asarray(energies, dtype=np.float64))
    sample_n = np.asarray(sample_n, dtype=np.int64)
    chi = letters(n_max, params.omega)
    # M stored as four arrays over energies, times exp(logscale)
    a = np.ones_like(E); b = np.zeros_like(E)
    c = np.zeros_like(E); d = np.ones_like(E)
    logscale = np.zeros_like(E)
    best = np.zeros_like(E)
    out = np.zeros((len(E), len(sample_n)))
    j = 0
    if params.is_diagonal:
        diag_vals = E[None, :] - params.V * np.array([0.0, 1.0])[:, None]  # by letter
    for n in range(1, n_max + 1):
        if params.is_diagonal:
            t = diag_vals[chi[n - 1]]
            a, b, c, d = t * a - c, t * b - d, a, b
        else:
            w = params.a if chi[n - 1] else params.b
            a, b, c, d = (E * a - c) / w, (E * b - d) / w, w * a, w * b
        fro2 = a * a + b * b + c * c + d * d
        big = fro2 > 1e100
        if big.any():
            r = np.where(big, 1.0 / np.sqrt(fro2), 1.0)
            a, b, c, d = a * r, b * r, c * r, d * r
            logscale -= np.log(r)
            fro2 = a * a + b * b + c * c + d * d
        det = a * d - b * c
        nrm = np.sqrt(0.5 * (fro2 + np.sqrt(np.maximum(fro2 * fro2 - 4 * det * det, 0.0))))
        np.maximum(best, np.log(nrm) + logscale, out=best)
        while j < len(sample_n) and sample_n[j] == n:
            out[:, j] = best
            j += 1
    return out


@dataclass
class GrowthReport:
    V: float
    energies: np.ndarray
    slopes: np.ndarray
    bound: float
    n_max: int
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def growth_slopes(energies, params: ModelParams, n_max: int, n_samples: int = 64) -> np.ndarray:
    """Least-squares slope of log max-norm against log n per energy."""
    ns = np.unique(np.geomspace(1, n_max, n_samples).round().astype(np.int64))
    y = running_max_log_norms(energies, params, n_max, ns)
    x = np.log(ns.astype(np.float64))
    xc = x - x.mean()
    return (y - y.mean(axis=1, keepdims=True)) @ xc / (xc @ xc)


def pick_band_midpoints(bands, count: int) -> np.ndarray:
    """`count` band midpoints spread evenly over the band index range."""
    mids = bands.midpoints()
    if count >= len(mids):
        return mids
    idx = np.unique(np.linspace(0, len(mids) - 1, count).round().astype(int))
    return mids[idx]


def norm_growth_check(V: float, depth: int = 16, n_max: int | None = None,
                      energies=None, n_energies: int = 20, margin: float = 0.1,
                      edge_tol: float = DEFAULT_EDGE_TOL) -> GrowthReport:
    """Compare per-energy norm growth slopes with zeta(V) + margin."""
    if V < 0:
        raise ValueError("V must be >= 0")
    params = ModelParams.diagonal(V)
    if n_max is None:
        n_max = fib(depth + 2)
    if energies is None:
        energies = pick_band_midpoints(spectrum_approx(params, depth, edge_tol), n_energies)
    energies = np.atleast_1d(np.asarray(energies, dtype=np.float64))
    slopes = growth_slopes(energies, params, n_max)
    bound = zeta(V) + margin
    bad = [(float(e), float(s)) for e, s in zip(energies, slopes) if not s <= bound]
    return GrowthReport(V, energies, slopes, bound, n_max, bad)


def dkl_lower_bound(V: float, n: int) -> float:
    """(1 + 1/(2 + 2V)^2)^(n/2)."""
    return (1.0 + 1.0 / (2.0 + 2.0 * V) ** 2) ** (n / 2.0)


DIRICHLET = (1.0, 0.0)
NEUMANN = (math.sqrt(0.5), math.sqrt(0.5))


def dkl_margins(V: float, energies, u_init=DIRICHLET, n_max: int = 4) -> np.ndarray:
    """log ||U||_{F_{8n}} - log dkl_lower_bound(V, n), shape (len(E), n_max).

    U(0) = u_init = (u(1), u(0)); positive entries mean the bound holds.
    """
    params = ModelParams.diagonal(V)
    E = np.atleast_1d(np.asarray(energies, dtype=np.float64))
    out = np.empty((len(E), n_max))
    for i, e in enumerate(E):
        logs = block_log_norms(u_init, float(e), params, 8 * n_max)
        for n in range(1, n_max + 1):
            out[i, n - 1] = logs[8 * n] - math.log(dkl_lower_bound(V, n))
    return out


def interpolation_coefficients(x: dict, n: int, k: int) -> np.ndarray:
    """Coefficients P_k with M_n M_{n+k} = P1 M_{n+k} + P2 M_{n+k-1} + P3 M_{n+k-2} + P4 I.

    x maps trace index to half-trace and must cover n-1 .. n+k.
    """
    P = {0: np.array([2 * x[n], 0.0, 0.0, -1.0]),
         1: np.array([0.0, 2 * x[n + 1], 1.0, -2 * x[n - 1]])}
    for l in range(1, k):
        p = P[l - 1]
        P[l + 1] = np.array([p[0],
                             2 * x[n + l - 2] * p[1] + p[3],
                             -p[1] + 2 * x[n + l - 1] * p[2],
                             -p[2]])
    return P[k]


def interpolation_bound(V: float, k: int) -> float:
    return (5.0 + 2.0 * V) * (3.0 + V) ** (k // 2)


def diagonal_blocks(E: float, V: float, k_max: int) -> dict[int, np.ndarray]:
    """M_{-1}, M_0, M_1, ... with M_{-1} = [[1, -V], [0, 1]], M_0 = [[E, -1], [1, 0]]."""
    M = {-1: np.array([[1.0, -V], [0.0, 1.0]]), 0: np.array([[E, -1.0], [1.0, 0.0]])}
    for k in range(0, k_max):
        M[k + 1] = M[k - 1] @ M[k]
    return M
