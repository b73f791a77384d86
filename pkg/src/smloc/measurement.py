"""Squared-range interval measurements and the exact (nonconvex) feasible set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import AnchorSet, _frozen

# proposals drawn per requested batch before the sampler gives up
SAMPLER_BUDGET = 1_000_000
_CHUNK = 65_536


@dataclass(frozen=True, eq=False)
class IntervalBounds:
    """Per-anchor squared-range intervals ``[lower_i, upper_i]``.

    ``omega`` holds the squared anchor norms of the paired anchor set.
    Negative lower bounds are kept as given; they are simply inactive.
    """

    lower: np.ndarray
    upper: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        om = np.asarray(self.omega, dtype=float).ravel()
        if not (lo.shape == hi.shape == om.shape):
            raise InvalidInputError("lower, upper and omega must have equal length")
        if np.any(lo > hi):
            raise InvalidInputError("every interval needs lower <= upper")
        object.__setattr__(self, "lower", _frozen(lo))
        object.__setattr__(self, "upper", _frozen(hi))
        object.__setattr__(self, "omega", _frozen(om))

    @classmethod
    def from_arrays(cls, lower, upper, anchors: AnchorSet) -> IntervalBounds:
        b = cls(lower, upper, anchors.omega)
        if b.count != anchors.count:
            raise InvalidInputError(f"expected {anchors.count} intervals, got {b.count}")
        return b

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def count(self) -> int:
        return self.lower.shape[0]

    def subset(self, indices) -> IntervalBounds:
        idx = list(indices)
        return IntervalBounds(self.lower[idx], self.upper[idx], self.omega[idx])


def _check_point(x, anchors: AnchorSet) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (anchors.dim,):
        raise InvalidInputError(f"point must have shape ({anchors.dim},), got {x.shape}")
    return x


def make_intervals(target, anchors: AnchorSet, delta: float) -> IntervalBounds:
    """Intervals ``[d_i^2 - delta, d_i^2 + delta]`` around the true squared ranges."""
    x = _check_point(target, anchors)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("target must be finite")
    if delta < 0:
        raise InvalidInputError("delta must be nonnegative")
    d2 = np.sum((anchors.points - x) ** 2, axis=1)
    return IntervalBounds(d2 - delta, d2 + delta, anchors.omega)


def squared_ranges(points, anchors: AnchorSet) -> np.ndarray:
    """Squared distances, shape ``(k, m)`` for ``k`` query points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    diff = pts[:, None, :] - anchors.points[None, :, :]
    return np.einsum("kmn,kmn->km", diff, diff)


def membership_true(x, anchors: AnchorSet, bounds: IntervalBounds) -> bool:
    """Closed-annuli membership: ``lower_i <= ||x - a_i||^2 <= upper_i`` for all i."""
    x = _check_point(x, anchors)
    d2 = squared_ranges(x, anchors)[0]
    return bool(np.all(d2 >= bounds.lower) and np.all(d2 <= bounds.upper))


def upper_ball_box(anchors: AnchorSet, bounds: IntervalBounds):
    """Intersection of the bounding boxes of the upper balls, or None if empty."""
    if np.any(bounds.upper < 0):
        return None
    r = np.sqrt(bounds.upper)
    lo = np.max(anchors.points - r[:, None], axis=0)
    hi = np.min(anchors.points + r[:, None], axis=0)
    if np.any(lo > hi):
        return None
    return lo, hi


def sample_true_set(anchors: AnchorSet, bounds: IntervalBounds, count: int, seed: int) -> np.ndarray:
    """Rejection-sample up to ``count`` points of the annuli intersection.

    Proposals are uniform on the bounding box of the upper balls, drawn from
    ``numpy.random.default_rng(seed)``.  At most ``SAMPLER_BUDGET`` proposals
    are spent, so fewer than ``count`` points (possibly none) may come back.
    Returns an array of shape ``(k, n)``.
    """
    n = anchors.dim
    box = upper_ball_box(anchors, bounds)
    if box is None or count <= 0:
        return np.zeros((0, n))
    lo, hi = box
    rng = np.random.default_rng(seed)
    found = []
    have = 0
    spent = 0
    while have < count and spent < SAMPLER_BUDGET:
        size = min(_CHUNK, SAMPLER_BUDGET - spent)
        pts = lo + (hi - lo) * rng.random((size, n))
        spent += size
        d2 = squared_ranges(pts, anchors)
        ok = np.all((d2 >= bounds.lower) & (d2 <= bounds.upper), axis=1)
        hits = pts[ok]
        found.append(hits[: count - have])
        have += min(len(hits), count - have)
    if not found:
        return np.zeros((0, n))
    return np.concatenate(found, axis=0)
