"""Exact support function of intersections of halfspaces and Euclidean balls.

Every query solves ``max v@x`` over the set with the log-barrier method in
:mod:`smloc._conic` and returns the maximiser together with a dual
certificate (halfspace multipliers ``lam`` and ball multipliers
``(tau, zeta)`` with ``v = G.T@lam + sum(zeta)`` and ``||zeta_i|| <= tau_i``),
so every reported value can be checked independently with
:func:`check_certificate`.

Unbounded directions only occur when no ball is present.  They are detected
by solving with an auxiliary ball of radius ``AUX_RADIUS`` around the
working origin and flagging the result when that ball is active.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _conic
from .errors import InfeasibleError, InvalidInputError, SolverError
from .geometry import AnchorSet
from .measurement import IntervalBounds
from .polytope import HalfspacePolytope, build_xd

FEAS_TOL = 1e-8
DEFAULT_RTOL = 1e-9
DEGENERATE_RTOL = 1e-5
# interior depth (relative to the working scale) that counts as a nonempty interior
INTERIOR_TOL = 1e-10
AUX_RADIUS = 1e6


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    DEGENERATE = "degenerate-tolerance"


@dataclass(frozen=True, eq=False)
class ConvexSpec:
    """Halfspaces ``normals @ x <= offsets`` intersected with closed balls."""

    normals: np.ndarray
    offsets: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    # set when the set is empty by construction (negative squared radius)
    empty_reason: str | None = None

    def __post_init__(self):
        G = np.asarray(self.normals, dtype=float)
        h = np.asarray(self.offsets, dtype=float).ravel()
        P = np.asarray(self.centers, dtype=float)
        r = np.asarray(self.radii, dtype=float).ravel()
        n = G.shape[1] if G.size else (P.shape[1] if P.size else 0)
        G = G.reshape(-1, n) if n else G
        P = P.reshape(-1, n) if n else P
        if n == 0:
            raise InvalidInputError("a convex spec needs at least one halfspace or ball")
        if G.shape[0] != h.shape[0] or P.shape[0] != r.shape[0]:
            raise InvalidInputError("inconsistent halfspace or ball data")
        if np.any(r < 0):
            raise InvalidInputError("ball radii must be nonnegative")
        for name, val in (("normals", G), ("offsets", h), ("centers", P), ("radii", r)):
            val = np.array(val, dtype=float)
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def dim(self) -> int:
        return self.normals.shape[1] if self.normals.size else self.centers.shape[1]

    @classmethod
    def from_parts(cls, polytope: HalfspacePolytope | None = None, centers=None, radii=None):
        if polytope is not None:
            G, h = polytope.normals, polytope.offsets
            n = polytope.dim
        else:
            n = np.asarray(centers, dtype=float).reshape(len(radii), -1).shape[1]
            G, h = np.zeros((0, n)), np.zeros(0)
        if centers is None:
            centers, radii = np.zeros((0, n)), np.zeros(0)
        return cls(G, h, centers, radii)

    @cached_property
    def _prepared(self) -> _Prepared:
        return _prepare(self)


def _ball_data(anchors: AnchorSet, bounds: IntervalBounds):
    if bounds.count != anchors.count:
        raise InvalidInputError("bounds and anchors disagree on m")
    reason = None
    if np.any(bounds.upper < 0):
        reason = "negative upper squared range"
    return anchors.points, np.sqrt(np.maximum(bounds.upper, 0.0)), reason


def upper_balls(anchors: AnchorSet, bounds: IntervalBounds) -> ConvexSpec:
    """The intersection of upper-range balls."""
    P, r, reason = _ball_data(anchors, bounds)
    n = anchors.dim
    return ConvexSpec(np.zeros((0, n)), np.zeros(0), P, r, reason)


def difference_polytope(anchors: AnchorSet, bounds: IntervalBounds) -> ConvexSpec:
    """The difference-of-measurements polyhedron alone (no balls)."""
    xd = build_xd(anchors, bounds)
    n = anchors.dim
    return ConvexSpec(xd.normals, xd.offsets, np.zeros((0, n)), np.zeros(0))


def localization_set(anchors: AnchorSet, bounds: IntervalBounds) -> ConvexSpec:
    """Polyhedron intersected with the upper-range balls."""
    xd = build_xd(anchors, bounds)
    P, r, reason = _ball_data(anchors, bounds)
    return ConvexSpec(xd.normals, xd.offsets, P, r, reason)


@dataclass(frozen=True, eq=False)
class SupportResult:
    value: float
    maximizer: np.ndarray
    status: Status
    # certified upper bound on the support value and the multipliers proving it
    bound: float = np.nan
    lam: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tau: np.ndarray = field(default_factory=lambda: np.zeros(0))
    zeta: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    # constraints were loosened by this much (degenerate interiors only)
    relaxation: float = 0.0
    aux_ball: tuple | None = None

    @property
    def gap(self) -> float:
        return self.bound - self.value

    @property
    def ok(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.DEGENERATE)


class _Prepared:
    """Scaled copy of a spec plus a strictly feasible starting point."""

    __slots__ = ("x0", "L", "G", "h", "P", "r", "row_norms", "kind", "point", "aux", "relax")


def _prepare(spec: ConvexSpec) -> _Prepared:
    p = _Prepared()
    n = spec.dim
    if spec.radii.size:
        k = int(np.argmin(spec.radii))
        x0 = spec.centers[k].copy()
        L = float(spec.radii[k]) if spec.radii[k] > 0 else 1.0
    else:
        x0 = np.zeros(n)
        L = 1.0
    p.x0, p.L = x0, L
    G = spec.normals * L
    h = spec.offsets - spec.normals @ x0
    norms = np.linalg.norm(G, axis=1)
    keep = norms > 0
    p.kind = "interior"
    if np.any(h[~keep] < 0):
        p.kind = "infeasible"
    p.G = G[keep] / norms[keep, None]
    p.h = h[keep] / norms[keep]
    p.row_norms = np.linalg.norm(spec.normals[keep], axis=1)
    p.P = (spec.centers - x0) / L
    p.r = spec.radii / L
    p.aux = None
    if spec.radii.size == 0:
        p.aux = AUX_RADIUS / L
        p.P = np.zeros((1, n))
        p.r = np.array([p.aux])
    p.relax = 0.0
    p.point = np.zeros(n)
    if spec.empty_reason is not None or p.kind == "infeasible":
        p.kind = "infeasible"
        return p
    feas = FEAS_TOL / L
    ph1 = _conic.phase1(p.G, p.h, p.P, p.r, INTERIOR_TOL, feas)
    p.kind = ph1.kind
    p.point = ph1.point
    if ph1.kind == "degenerate":
        # solve a problem loosened by the feasibility tolerance instead
        p.relax = feas
        p.h = p.h + feas
        p.r = p.r + feas
        if p.aux is not None:
            p.r[-1] -= feas
    return p


def feasible(spec: ConvexSpec) -> bool:
    """True when the set is nonempty up to ``FEAS_TOL`` on every constraint."""
    return spec._prepared.kind != "infeasible"


def has_interior(spec: ConvexSpec) -> bool:
    return spec._prepared.kind == "interior"


def support(spec: ConvexSpec, v, rtol: float = DEFAULT_RTOL) -> SupportResult:
    """Maximise ``v @ x`` over the set.

    Infeasible and unbounded problems are reported through ``status``.
    ``rtol`` bounds the certified duality gap relative to ``max(1, |value|)``.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (spec.dim,):
        raise InvalidInputError(f"direction must have shape ({spec.dim},)")
    vn = float(np.linalg.norm(v))
    if not vn > 0:
        raise InvalidInputError("direction vector must be nonzero")
    p = spec._prepared
    nan_x = np.full(spec.dim, np.nan)
    if p.kind == "infeasible":
        return SupportResult(np.nan, nan_x, Status.INFEASIBLE)
    vhat = v / vn
    offset = float(v @ p.x0)
    scale = vn * p.L

    def gap_tol(val_s):
        return rtol * max(1.0, abs(offset + scale * val_s)) / scale

    res = _conic.phase2(p.point, vhat, p.G, p.h, p.P, p.r, gap_tol)
    x = p.x0 + p.L * res.point
    value = offset + scale * res.value
    bound = offset + scale * res.bound
    lam = vn * res.lam / p.row_norms if p.row_norms.size else res.lam
    tau = vn * res.tau
    zeta = vn * res.zeta
    aux = None
    if p.aux is not None:
        aux = (p.x0.copy(), p.aux * p.L)
        slack = p.aux - float(np.linalg.norm(res.point))
        if slack <= 1e-6 * p.aux:
            return SupportResult(np.inf, x, Status.UNBOUNDED, np.inf, lam, tau, zeta, p.relax * p.L, aux)
    gap = bound - value
    if gap <= rtol * max(1.0, abs(value)):
        status = Status.DEGENERATE if p.relax > 0 else Status.OPTIMAL
    elif gap <= DEGENERATE_RTOL * max(1.0, abs(value)):
        status = Status.DEGENERATE
    else:
        raise SolverError(f"duality gap stalled at {gap:.3e} (value {value:.6g})")
    return SupportResult(value, x, status, bound, lam, tau, zeta, p.relax * p.L, aux)


def check_certificate(spec: ConvexSpec, v, result: SupportResult, tol: float = 1e-7) -> float:
    """Verify a support result independently of the solver.

    Checks primal feasibility of the maximiser (within ``FEAS_TOL`` plus the
    reported relaxation), dual feasibility of the multipliers, and that the
    dual bound recomputed from the multipliers lies within ``tol`` (relative)
    of the reported value.  Returns the recomputed bound.
    """
    v = np.asarray(v, dtype=float)
    x = result.maximizer
    slack = FEAS_TOL + result.relaxation
    G, h = spec.normals, spec.offsets
    P, r = spec.centers, spec.radii
    if G.shape[0]:
        row_norms = np.linalg.norm(G, axis=1)
        keep = row_norms > 0
        G, h = G[keep], h[keep]
        row_norms = row_norms[keep]
        if np.any(G @ x - h > slack * row_norms):
            raise AssertionError("maximiser violates a halfspace")
        h = h + result.relaxation * row_norms
    if P.shape[0] and np.any(np.linalg.norm(x - P, axis=1) - r > slack):
        raise AssertionError("maximiser violates a ball")
    r = r + result.relaxation
    if result.aux_ball is not None:
        P = np.vstack([P, result.aux_ball[0][None, :]])
        r = np.append(r, result.aux_ball[1])
    if np.any(result.lam < 0):
        raise AssertionError("negative halfspace multiplier")
    if np.any(np.linalg.norm(result.zeta, axis=1) > result.tau * (1 + 1e-12) + 1e-300):
        raise AssertionError("ball multiplier outside the cone")
    resid = v - G.T @ result.lam - result.zeta.sum(axis=0)
    scale = max(1.0, float(np.linalg.norm(v)))
    if np.linalg.norm(resid) > 1e-8 * scale:
        raise AssertionError(f"dual stationarity residual {np.linalg.norm(resid):.3e}")
    bound = float(result.lam @ h + result.tau @ r + np.einsum("ij,ij->", result.zeta, P))
    if bound < float(v @ x) - tol * max(1.0, abs(result.value)):
        raise AssertionError("dual bound below a primal feasible value")
    if bound - result.value > tol * max(1.0, abs(result.value)):
        raise AssertionError(f"certified gap {bound - result.value:.3e} exceeds tolerance")
    return bound


def width(spec: ConvexSpec, v, rtol: float = DEFAULT_RTOL) -> float:
    """``h(v) + h(-v)``; ``inf`` when unbounded, InfeasibleError when empty."""
    v = np.asarray(v, dtype=float)
    hi = support(spec, v, rtol)
    if hi.status == Status.INFEASIBLE:
        raise InfeasibleError("set is empty")
    lo = support(spec, -v, rtol)
    if Status.UNBOUNDED in (hi.status, lo.status):
        return np.inf
    return hi.value + lo.value


@dataclass(frozen=True, eq=False)
class CoordBox:
    lo: np.ndarray
    hi: np.ndarray
    status: Status

    @property
    def sides(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def volume(self) -> float:
        if self.status == Status.INFEASIBLE:
            return np.nan
        return float(np.prod(self.sides))


def coord_box(spec: ConvexSpec, rtol: float = DEFAULT_RTOL) -> CoordBox:
    """Exact axis-aligned bounding box from ``2n`` support problems."""
    n = spec.dim
    lo = np.empty(n)
    hi = np.empty(n)
    worst = Status.OPTIMAL
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        up = support(spec, e, rtol)
        if up.status == Status.INFEASIBLE:
            return CoordBox(np.full(n, np.nan), np.full(n, np.nan), Status.INFEASIBLE)
        down = support(spec, -e, rtol)
        hi[j] = up.value
        lo[j] = -down.value
        for st in (up.status, down.status):
            if st == Status.UNBOUNDED:
                worst = Status.UNBOUNDED
            elif st == Status.DEGENERATE and worst == Status.OPTIMAL:
                worst = Status.DEGENERATE
    return CoordBox(lo, hi, worst)


def boundary_points(spec: ConvexSpec, count: int = 64, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Support maximisers along ``count`` evenly spaced planar directions.

    Traversed in angle order they trace the boundary of a bounded 2-D set.
    """
    if spec.dim != 2:
        raise InvalidInputError("boundary tracing is only defined in the plane")
    pts = []
    for ang in np.linspace(0.0, 2.0 * np.pi, count, endpoint=False):
        res = support(spec, np.array([np.cos(ang), np.sin(ang)]), rtol)
        if res.status == Status.INFEASIBLE:
            raise InfeasibleError("set is empty")
        if res.status == Status.UNBOUNDED:
            continue
        pts.append(res.maximizer)
    return np.array(pts).reshape(-1, 2)
