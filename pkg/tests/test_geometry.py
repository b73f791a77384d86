from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smloc.errors import InvalidInputError
from smloc.geometry import (
    AnchorSet,
    centering_projector,
    d_score,
    e_score,
    is_degenerate,
    scatter_matrix,
    weighted_scores,
)

SQUARE = AnchorSet.from_points([[0, 0], [1, 0], [0, 1], [1, 1]])
TRIANGLE = AnchorSet.from_points([[-1, 0], [1, 0], [0, 1.2]])


def _projector_scatter(anchors):
    # A Q A^T with the explicit m x m projector
    A = anchors.coords
    return A @ centering_projector(anchors.count) @ A.T


def test_centering_projector_small_cases():
    assert np.array_equal(centering_projector(1), np.zeros((1, 1)))
    assert np.allclose(centering_projector(2), [[0.5, -0.5], [-0.5, 0.5]])
    Q3 = centering_projector(3)
    assert np.allclose(np.diag(Q3), 2 / 3)
    assert np.allclose(Q3[~np.eye(3, dtype=bool)], -1 / 3)
    assert np.allclose(Q3 @ Q3, Q3)
    assert np.allclose(Q3 @ np.ones(3), 0)


def test_centering_projector_rejects_zero():
    with pytest.raises(InvalidInputError):
        centering_projector(0)


@pytest.mark.parametrize("m", [1, 2, 5, 9])
def test_projector_spectrum(m):
    Q = centering_projector(m)
    assert np.allclose(Q, Q.T)
    ev = np.sort(np.linalg.eigvalsh(Q))
    assert ev[0] == pytest.approx(0, abs=1e-12)
    assert np.allclose(ev[1:], 1)


def test_scatter_triangle():
    sm = scatter_matrix(TRIANGLE)
    assert np.allclose(sm.S, np.diag([2.0, 0.96]), atol=1e-12, rtol=0)
    assert np.allclose(sm.centroid, [0, 0.4])
    assert sm.eigvals[0] <= sm.eigvals[1]


def test_scatter_equal_anchors_is_zero():
    sm = scatter_matrix(AnchorSet.from_points([[0.3, -1.0]] * 4))
    assert np.array_equal(sm.S, np.zeros((2, 2)))
    assert sm.singular


def test_scatter_flat_triangle_lambda_min():
    # y-deviations -0.08/3, -0.08/3, 0.16/3
    expected = float(2 * Fraction(8, 300) ** 2 + Fraction(16, 300) ** 2)
    sm = scatter_matrix(AnchorSet.from_points([[-1, 0], [1, 0], [0, 0.08]]))
    assert sm.lambda_min == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(4.267e-3, rel=1e-3)


def test_scores_examples():
    assert e_score(TRIANGLE) == pytest.approx(0.96, rel=1e-12)
    assert d_score(TRIANGLE) == pytest.approx(1.92, rel=1e-12)
    line = AnchorSet.from_points([[0, 0], [1, 1], [3, 3]])
    assert e_score(line) == 0.0 and d_score(line) == 0.0
    assert is_degenerate(line)
    assert e_score(SQUARE) == pytest.approx(1.0, rel=1e-12)
    assert d_score(SQUARE) == pytest.approx(1.0, rel=1e-12)


def test_weighted_scores():
    je, jd = weighted_scores(TRIANGLE, np.full(3, 0.1))
    assert je == pytest.approx(0.03 / 0.96, rel=1e-12)
    assert je == pytest.approx(0.03125, rel=1e-12)
    assert jd == pytest.approx(0.03 ** 2 / 1.92, rel=1e-12)
    assert weighted_scores(TRIANGLE, np.zeros(3)) == (0.0, 0.0)
    line = AnchorSet.from_points([[0, 0], [1, 0], [2, 0]])
    assert weighted_scores(line, np.ones(3)) == (np.inf, np.inf)
    with pytest.raises(InvalidInputError):
        weighted_scores(TRIANGLE, np.ones(4))


def test_anchor_set_validation():
    with pytest.raises(InvalidInputError):
        AnchorSet(np.array([[np.nan, 1.0]]))
    with pytest.raises(InvalidInputError):
        AnchorSet(np.zeros((0, 3)))
    a = AnchorSet.from_points([[1, 2], [3, 4], [5, 6]])
    assert (a.dim, a.count, len(a)) == (2, 3, 3)
    assert np.array_equal(a.omega, [5, 25, 61])
    with pytest.raises(ValueError):
        a.coords[0, 0] = 9.0


coords = arrays(np.float64, st.tuples(st.integers(2, 3), st.integers(2, 7)),
                elements=st.floats(-5, 5, allow_nan=False, width=64))


@settings(max_examples=200, deadline=None)
@given(coords, arrays(np.float64, 3, elements=st.floats(-100, 100)))
def test_translation_invariance(a, shift):
    anchors = AnchorSet(a)
    shifted = anchors.translated(shift[: anchors.dim])
    S0, S1 = scatter_matrix(anchors).S, scatter_matrix(shifted).S
    assert np.allclose(S1, S0, rtol=1e-12, atol=1e-12 * (1 + np.abs(shift).max()) ** 2 * 100)


@settings(max_examples=200, deadline=None)
@given(coords, st.floats(0.1, 10))
def test_scaling_covariance(a, s):
    anchors = AnchorSet(a)
    sm0, sm1 = scatter_matrix(anchors), scatter_matrix(anchors.scaled(s))
    assert np.allclose(sm1.S, s * s * sm0.S, rtol=1e-10, atol=1e-10)
    if not sm0.singular and sm0.lambda_min > 1e-6 * sm0.lambda_max:
        n = anchors.dim
        assert e_score(anchors.scaled(s)) == pytest.approx(s ** 2 * e_score(anchors), rel=1e-8)
        assert d_score(anchors.scaled(s)) == pytest.approx(s ** (2 * n) * d_score(anchors), rel=1e-8)


@settings(max_examples=200, deadline=None)
@given(coords, st.randoms(use_true_random=False))
def test_summation_matches_projector_and_permutation(a, rnd):
    anchors = AnchorSet(a)
    sm = scatter_matrix(anchors)
    assert np.allclose(sm.S, _projector_scatter(anchors), atol=1e-9)
    U, lam = sm.eigvecs, sm.eigvals
    assert np.allclose(U @ np.diag(lam) @ U.T, sm.S, atol=1e-9)
    assert np.all(np.diff(lam) >= 0)
    perm = list(range(anchors.count))
    rnd.shuffle(perm)
    p = anchors.subset(perm)
    assert np.allclose(scatter_matrix(p).S, sm.S, atol=1e-9)
    assert e_score(p) == pytest.approx(e_score(anchors), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 2, elements=st.floats(-3, 3)), st.floats(0, 2 * np.pi),
       arrays(np.float64, st.integers(2, 6), elements=st.floats(-4, 4)), st.floats(0.5, 3))
def test_positive_score_iff_affine_span(base, angle, ts, offset):
    d = np.array([np.cos(angle), np.sin(angle)])
    line = base + ts[:, None] * d
    assert e_score(AnchorSet.from_points(line)) == 0.0
    assert d_score(AnchorSet.from_points(line)) == 0.0
    if np.ptp(ts) > 0.1:
        # one anchor pushed off the line spans the plane
        off = np.vstack([line, base + offset * np.array([-d[1], d[0]])])
        assert e_score(AnchorSet.from_points(off)) > 0
