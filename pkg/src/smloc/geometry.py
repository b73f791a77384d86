"""Anchor sets, the centered scatter matrix and geometry-only design scores."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import InvalidInputError

# S is singular when lambda_min <= DEGENERACY_RTOL * max(1, lambda_max).
DEGENERACY_RTOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AnchorSet:
    """Anchor coordinates stored column-wise as an ``n x m`` matrix."""

    coords: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.coords, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise InvalidInputError(f"anchor matrix must be n x m, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("anchor coordinates must be finite")
        object.__setattr__(self, "coords", _frozen(a))

    @classmethod
    def from_points(cls, points) -> AnchorSet:
        """Build from a sequence of points (one row per anchor)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(pts.T)

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    @property
    def count(self) -> int:
        return self.coords.shape[1]

    @property
    def points(self) -> np.ndarray:
        """Anchors as rows, shape ``(m, n)``."""
        return self.coords.T

    @cached_property
    def omega(self) -> np.ndarray:
        """Squared norms of the anchors."""
        return _frozen(np.einsum("ij,ij->j", self.coords, self.coords))

    def subset(self, indices) -> AnchorSet:
        return AnchorSet(self.coords[:, list(indices)])

    def translated(self, shift) -> AnchorSet:
        return AnchorSet(self.coords + np.asarray(shift, dtype=float)[:, None])

    def scaled(self, factor: float) -> AnchorSet:
        return AnchorSet(self.coords * factor)

    def __len__(self):
        return self.count


@dataclass(frozen=True, eq=False)
class ScatterMatrix:
    S: np.ndarray
    centroid: np.ndarray
    eigvals: np.ndarray  # ascending
    eigvecs: np.ndarray  # orthonormal columns matching eigvals

    @property
    def lambda_min(self) -> float:
        return float(self.eigvals[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigvals[-1])

    @property
    def singular(self) -> bool:
        return self.lambda_min <= DEGENERACY_RTOL * max(1.0, self.lambda_max)

    def solve(self, v) -> np.ndarray:
        """``S^{-1} v`` through a Cholesky factorisation."""
        return cho_solve(cho_factor(self.S), np.asarray(v, dtype=float))


def centering_projector(m: int) -> np.ndarray:
    """Return ``I_m - (1/m) 1 1^T``."""
    if m < 1:
        raise InvalidInputError("centering projector needs m >= 1")
    return np.eye(m) - np.full((m, m), 1.0 / m)


def scatter_matrix(anchors: AnchorSet) -> ScatterMatrix:
    a = anchors.coords
    centroid = a.mean(axis=1)
    dev = a - centroid[:, None]
    S = dev @ dev.T
    S = 0.5 * (S + S.T)
    eigvals, eigvecs = np.linalg.eigh(S)
    # PSD by construction; clip rounding noise
    eigvals = np.maximum(eigvals, 0.0)
    return ScatterMatrix(_frozen(S), _frozen(centroid), _frozen(eigvals), _frozen(eigvecs))


def is_degenerate(anchors: AnchorSet) -> bool:
    """True when the anchors lie in a proper affine subspace."""
    return scatter_matrix(anchors).singular


def e_score(anchors: AnchorSet) -> float:
    """Smallest eigenvalue of the scatter matrix; exactly 0 for degenerate sets."""
    sm = scatter_matrix(anchors)
    return 0.0 if sm.singular else sm.lambda_min


def d_score(anchors: AnchorSet) -> float:
    """Determinant of the scatter matrix; exactly 0 for degenerate sets."""
    sm = scatter_matrix(anchors)
    return 0.0 if sm.singular else float(np.prod(sm.eigvals))


def weighted_scores(anchors: AnchorSet, widths) -> tuple[float, float]:
    """Width-weighted scores ``(||w||^2 / lambda_min, ||w||^(2n) / det S)``.

    Smaller is better.  Singular geometry gives ``(inf, inf)``.
    """
    w = np.asarray(widths, dtype=float)
    if w.shape != (anchors.count,):
        raise InvalidInputError(f"expected {anchors.count} widths, got shape {w.shape}")
    sm = scatter_matrix(anchors)
    if sm.singular:
        return np.inf, np.inf
    w2 = float(w @ w)
    return w2 / sm.lambda_min, w2 ** anchors.dim / float(np.prod(sm.eigvals))
