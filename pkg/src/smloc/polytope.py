"""The difference-of-measurements polyhedron and its geometry-only size bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import AnchorSet, _frozen, scatter_matrix
from .measurement import IntervalBounds, _check_point


@dataclass(frozen=True, eq=False)
class HalfspacePolytope:
    """``{x : normals @ x <= offsets}`` with the generating anchor pair per row."""

    normals: np.ndarray  # (K, n)
    offsets: np.ndarray  # (K,)
    pairs: np.ndarray  # (K, 2) ordered (i, j)

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.normals, dtype=float))
        h = np.asarray(self.offsets, dtype=float).ravel()
        pairs = np.asarray(self.pairs, dtype=int).reshape(-1, 2)
        if not (G.shape[0] == h.shape[0] == pairs.shape[0]):
            raise InvalidInputError("normals, offsets and pairs must have equal length")
        object.__setattr__(self, "normals", _frozen(G))
        object.__setattr__(self, "offsets", _frozen(h))
        pairs = pairs.copy()
        pairs.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def __len__(self):
        return self.offsets.shape[0]

    def residuals(self, x) -> np.ndarray:
        """``normals @ x - offsets``; nonpositive entries are satisfied rows."""
        return self.normals @ np.asarray(x, dtype=float) - self.offsets

    def contains(self, x, tol: float = 0.0) -> bool:
        return bool(np.all(self.residuals(x) <= tol))


def _centered_rows(anchors: AnchorSet) -> np.ndarray:
    # rows q_i of Q_m A^T, i.e. the anchors relative to their centroid
    pts = anchors.points
    return pts - pts.mean(axis=0)


def build_xd(anchors: AnchorSet, bounds: IntervalBounds) -> HalfspacePolytope:
    """All ``m(m-1)`` ordered-pair rows ``2(q_i - q_j) @ x <= beta_ij``.

    ``beta_ij = upper_j - lower_i - (Q omega)_j + (Q omega)_i``.  Redundant
    rows are kept.
    """
    m = anchors.count
    if m < 2:
        raise InvalidInputError("the difference polyhedron needs at least two anchors")
    if bounds.count != m:
        raise InvalidInputError("bounds and anchors disagree on m")
    q = _centered_rows(anchors)
    qw = bounds.omega - bounds.omega.mean()
    ii, jj = np.nonzero(~np.eye(m, dtype=bool))
    normals = 2.0 * (q[ii] - q[jj])
    offsets = bounds.upper[jj] - bounds.lower[ii] - qw[jj] + qw[ii]
    return HalfspacePolytope(normals, offsets, np.column_stack([ii, jj]))


def membership_xd_intervals(x, anchors: AnchorSet, bounds: IntervalBounds) -> bool:
    """Membership through the pairwise overlap of the shifted intervals.

    ``x`` belongs to the polyhedron iff a common shift exists, i.e. the
    largest lower endpoint does not exceed the smallest upper endpoint.
    """
    x = _check_point(x, anchors)
    q = _centered_rows(anchors)
    qw = bounds.omega - bounds.omega.mean()
    shift = 2.0 * (q @ x) - qw
    return bool(np.max(bounds.lower + shift) <= np.min(bounds.upper + shift))


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if not nrm > 0:
        raise InvalidInputError("direction vector must be nonzero")
    return v / nrm


def width_bound_xd(anchors: AnchorSet, widths, v) -> float:
    """``0.5 * w @ |Q A^T S^{-1} v|``; ``inf`` when S is singular."""
    v = _unit(v)
    w = np.asarray(widths, dtype=float)
    sm = scatter_matrix(anchors)
    if sm.singular:
        return np.inf
    coef = _centered_rows(anchors) @ sm.solve(v)
    return 0.5 * float(w @ np.abs(coef))


def cauchy_schwarz_bound_xd(anchors: AnchorSet, widths, v) -> float:
    """``0.5 * ||w|| * sqrt(v @ S^{-1} v)``, the looser directional bound."""
    v = _unit(v)
    sm = scatter_matrix(anchors)
    if sm.singular:
        return np.inf
    return 0.5 * float(np.linalg.norm(widths)) * float(np.sqrt(v @ sm.solve(v)))


def diam_bound_xd(anchors: AnchorSet, widths) -> float:
    """``||w|| / (2 sqrt(lambda_min))``; ``inf`` when S is singular."""
    sm = scatter_matrix(anchors)
    if sm.singular:
        return np.inf
    return float(np.linalg.norm(widths)) / (2.0 * np.sqrt(sm.lambda_min))


def det_vol_bound(anchors: AnchorSet, widths) -> float:
    """``(||w|| / 2)^n / sqrt(det S)``; ``inf`` when S is singular."""
    sm = scatter_matrix(anchors)
    if sm.singular:
        return np.inf
    half = 0.5 * float(np.linalg.norm(widths))
    return half ** anchors.dim / float(np.sqrt(np.prod(sm.eigvals)))
