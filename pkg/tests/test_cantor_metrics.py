import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fibspec.cantor_metrics import (InsufficientRange, UndefinedThickness, bridge_ratios,
                                    box_count, box_dimension, dim_from_thickness,
                                    gap_lemma_certify, gaps, middle_lambda_bands, minkowski_sum,
                                    thickness)
from fibspec.spectrum_bands import BandSet


def B(iv, tol=0.0):
    return BandSet(np.array(iv, dtype=float), None, None, tol)


def test_gaps_examples():
    g = gaps(B([[0, 1], [2, 3]]))
    assert g.hull == (0, 3) and np.array_equal(g.gaps, [[1, 2]])
    assert len(gaps(B([[-2, 2]]))) == 0
    g = gaps(middle_lambda_bands(1 / 3, 2))
    assert np.allclose(g.gaps, [[1 / 9, 2 / 9], [1 / 3, 2 / 3], [7 / 9, 8 / 9]])


def test_thickness_examples():
    r = thickness(B([[0, 0.45], [0.55, 1]]))
    assert abs(r.tau - 4.5) < 1e-12 and abs(r.theta - 4.5) < 1e-12
    assert r.presentation == "size-ordered"
    for d in range(1, 7):
        r = thickness(middle_lambda_bands(1 / 3, d))
        assert abs(r.tau - 1) < 1e-12 and abs(r.theta - 1) < 1e-12
        assert abs(r.dim_lo - math.log(2) / math.log(3)) < 1e-12
    assert abs(thickness(middle_lambda_bands(0.2, 3)).tau - 2) < 1e-12
    with pytest.raises(UndefinedThickness):
        thickness(B([[0, 1]]))


@pytest.mark.parametrize("lam", [1 / 3, 1 / 5, 1 / 7])
@pytest.mark.parametrize("depth", range(1, 7))
def test_middle_lambda_thickness(lam, depth):
    r = thickness(middle_lambda_bands(lam, depth))
    expected = (1 - lam) / (2 * lam)
    assert abs(r.tau - expected) <= 1e-12 * expected
    assert abs(r.theta - expected) <= 1e-12 * expected


def _brute_ratios(bands):
    """Bridge/gap ratios by direct definition: bridge = component of hull minus larger gaps."""
    g = np.column_stack([bands[:-1, 1], bands[1:, 0]])
    L = g[:, 1] - g[:, 0]
    out = []
    for i in range(len(g)):
        bigger = [j for j in range(len(g)) if L[j] > L[i] or (L[j] == L[i] and j < i)]
        left = max([g[j, 1] for j in bigger if g[j, 1] <= g[i, 0]], default=bands[0, 0])
        right = min([g[j, 0] for j in bigger if g[j, 0] >= g[i, 1]], default=bands[-1, 1])
        out += [(g[i, 0] - left) / L[i], (right - g[i, 1]) / L[i]]
    return np.array(out)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=25))
def test_thickness_matches_brute_force(widths):
    # alternate band and gap lengths
    x = np.concatenate([[0.0], np.cumsum(widths)])
    n = len(x) // 2
    bands = np.column_stack([x[0:2 * n:2], x[1:2 * n:2]])
    if len(bands) < 2:
        return
    ref = _brute_ratios(bands)
    r = thickness(B(bands))
    assert abs(r.tau - ref.min()) <= 1e-12 * max(1, ref.min())
    assert abs(r.theta - ref.max()) <= 1e-12 * max(1, ref.max())
    assert r.dim_lo <= r.dim_hi


def test_thickness_scale_invariant():
    b = middle_lambda_bands(0.27, 4)
    r = thickness(b)
    # power-of-two scalings and reflection leave every ratio bit-identical
    for c in (2.0, 0.125, 4.0):
        s = thickness(B(c * b.bands))
        assert s.tau == r.tau and s.theta == r.theta
    s = thickness(B(-b.bands[::-1, ::-1]))
    assert s.tau == r.tau and s.theta == r.theta
    # general affine maps only up to rounding of the shifted endpoints
    for c, d in ((0.125, 3.0), (3.7, -2.2), (-1.3, 0.4)):
        iv = c * b.bands + d
        s = thickness(B(np.sort(iv, axis=1)[::-1] if c < 0 else iv))
        assert abs(s.tau - r.tau) <= 1e-12 * r.tau
        assert abs(s.theta - r.theta) <= 1e-12 * r.theta


def test_zero_width_bands_dropped():
    r = thickness(B([[0, 1], [1.5, 1.5], [2, 3]]))
    assert r.n_dropped == 1
    assert abs(r.tau - 1.0) < 1e-12


def test_dim_from_thickness():
    assert dim_from_thickness(0) == 0 and dim_from_thickness(math.inf) == 1
    assert abs(dim_from_thickness(1) - math.log(2) / math.log(3)) < 1e-15


def test_box_count_simple():
    assert box_count(B([[0, 1]]), 0.25) == 5  # boxes [0,.25) ... [1, 1.25)
    assert box_count(B([[0, 0], [1, 1]]), 0.1) == 2
    assert box_count(B([[0, 0.05], [0.06, 0.07]]), 0.1) == 1


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 1)), min_size=1, max_size=15),
       st.floats(0.01, 2))
def test_box_count_brute(pairs, eps):
    from fibspec.spectrum_bands import merge_intervals
    iv = merge_intervals(np.array([[a, a + w] for a, w in pairs]))
    x0 = iv[0, 0]
    boxes = set()
    for lo, hi in iv:
        boxes.update(range(int(math.floor((lo - x0) / eps)), int(math.floor((hi - x0) / eps)) + 1))
    assert box_count(B(iv), eps) == len(boxes)


def test_box_dimension_examples():
    assert abs(box_dimension(B([[0, 1]]), 1e-2, 1e-5) - 1) < 0.01
    d = box_dimension(middle_lambda_bands(1 / 3, 10), 3.0**-2, 3.0**-9)
    assert abs(d - math.log(2) / math.log(3)) < 0.02
    assert abs(box_dimension(B([[0, 0], [1, 1]]), 0.1, 1e-4)) < 0.05
    with pytest.raises(InsufficientRange):
        box_dimension(B([[0, 1]]), 0.1, 0.02)
    with pytest.raises(ValueError):
        box_dimension(B([[0, 1]]), 0.1, 0.2)


@pytest.mark.parametrize("lam", [1 / 3, 1 / 5, 1 / 7])
def test_box_dimension_in_thickness_bracket(lam):
    b = middle_lambda_bands(lam, 9)
    r = thickness(b)
    lo = (1 - lam) / 2
    d = box_dimension(b, lo**2, lo**8)
    assert r.dim_lo - 0.05 <= d <= r.dim_hi + 0.05


def test_minkowski_examples():
    assert np.array_equal(minkowski_sum(B([[0, 1]]), B([[0, 1]])).bands, [[0, 2]])
    m = middle_lambda_bands(1 / 3, 1)
    assert np.allclose(minkowski_sum(m, m).bands, [[0, 2]])
    b = B([[0, 1], [2, 2.5], [4, 7]])
    assert np.array_equal(minkowski_sum(B([[0, 0]]), b).bands, b.bands)


def test_minkowski_brute_and_commutative():
    rng = np.random.default_rng(3)
    for _ in range(20):
        def rand_set():
            x = np.sort(rng.uniform(0, 10, 2 * rng.integers(1, 6)))
            return B(x.reshape(-1, 2))
        a, b = rand_set(), rand_set()
        s = minkowski_sum(a, b)
        assert np.array_equal(s.bands, minkowski_sum(b, a).bands)
        pairs = np.array([[p[0] + q[0], p[1] + q[1]] for p, q in itertools.product(a.bands, b.bands)])
        probe = np.linspace(-1, 21, 3001)
        raw = ((probe[:, None] >= pairs[:, 0]) & (probe[:, None] <= pairs[:, 1])).any(1)
        assert np.array_equal(raw, s.contains(probe))


def test_minkowski_chunking_invariant():
    a = middle_lambda_bands(0.3, 6)
    b = middle_lambda_bands(0.45, 5)
    assert np.array_equal(minkowski_sum(a, b).bands, minkowski_sum(a, b, chunk=7).bands)


def test_minkowski_monotone():
    a = middle_lambda_bands(0.4, 5)
    a_big = middle_lambda_bands(0.4, 3)  # coarser approximant contains a
    c = middle_lambda_bands(0.6, 3)
    s, S = minkowski_sum(a, c), minkowski_sum(a_big, c)
    assert S.contains(s.bands.ravel(), 1e-15).all()


def test_gap_lemma_examples():
    m5 = middle_lambda_bands(0.2, 8)
    c = gap_lemma_certify(m5, m5)
    assert c.certified and c.status == "interval-certified"
    assert len(minkowski_sum(m5, m5)) == 1
    m3 = middle_lambda_bands(1 / 3, 8)
    c = gap_lemma_certify(m3, m3)
    assert not c.certified and c.status == "inconclusive"
    # the sum is still the full interval; the test is only sufficient
    assert np.allclose(minkowski_sum(m3, m3).bands, [[0, 2]])


def test_gap_lemma_needs_diameter_condition():
    big_gap = B([[0, 1], [10, 11]])
    tiny = B([[0, 0.01], [0.011, 0.02]])
    c = gap_lemma_certify(big_gap, tiny)
    assert not c.certified


def test_bridge_ratios_order_ties_leftmost():
    b = B([[0, 1], [2, 3], [4, 5]])
    g, left, right, _ = bridge_ratios(b)
    # equal gaps: the left one goes first, so its right bridge reaches the hull
    assert np.allclose(left, [1, 1]) and np.allclose(right, [3, 1])
