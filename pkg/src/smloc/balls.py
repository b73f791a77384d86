"""Certificates built from the upper-range balls.

Simplex-weighted aggregation of the ball inequalities gives one enclosing
ball per weight ``p``: center ``A p`` and squared radius
``p @ (upper - omega) + ||A p||^2``.  Minimising over the simplex gives the
smallest such radius; its sign also decides whether the balls intersect at
all.  Directional widths of the ball intersection come from its exact
support function, and are combined with the polyhedral bounds into hybrid
width and box certificates.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import exact
from .errors import DegenerateInteriorWarning, InfeasibleError, InvalidInputError, SolverError
from .geometry import DEGENERACY_RTOL, AnchorSet, _frozen, scatter_matrix
from .measurement import IntervalBounds
from .polytope import _unit, width_bound_xd

# |rho_star^2| below this (relative to the data scale) counts as a point-like set
DEGENERATE_RHO2_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class SimplexWeight:
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).ravel()
        if p.size == 0 or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-10:
            raise InvalidInputError(f"not a simplex weight: {p}")
        object.__setattr__(self, "p", _frozen(np.maximum(p, 0.0)))

    @classmethod
    def uniform(cls, m: int) -> SimplexWeight:
        return cls(np.full(m, 1.0 / m))

    @classmethod
    def vertex(cls, m: int, i: int) -> SimplexWeight:
        p = np.zeros(m)
        p[i] = 1.0
        return cls(p)


@dataclass(frozen=True, eq=False)
class BallCertificate:
    """Enclosing ball ``||x - center|| <= radius`` for one simplex weight.

    A negative ``radius_sq`` certifies that the balls have no common point;
    ``radius`` is then ``None`` and the certificate is marked empty.
    """

    center: np.ndarray
    radius_sq: float
    weight: SimplexWeight

    @property
    def empty(self) -> bool:
        return self.radius_sq < 0

    @property
    def radius(self) -> float | None:
        return None if self.empty else float(np.sqrt(self.radius_sq))

    @property
    def diameter(self) -> float | None:
        r = self.radius
        return None if r is None else 2.0 * r


@dataclass(frozen=True, eq=False)
class HybridBox:
    axes: np.ndarray  # columns u_j
    sides: np.ndarray  # b_j
    center: np.ndarray
    diam_bound: float
    vol_bound: float

    def contains(self, x, tol: float = 0.0) -> bool:
        t = self.axes.T @ (np.asarray(x, dtype=float) - self.center)
        return bool(np.all(np.abs(t) <= 0.5 * self.sides + tol))


def _check(anchors: AnchorSet, bounds: IntervalBounds):
    if bounds.count != anchors.count:
        raise InvalidInputError("bounds and anchors disagree on m")


def _radius_sq(p: np.ndarray, anchors: AnchorSet, upper: np.ndarray) -> tuple[np.ndarray, float]:
    # weighted-variance form: translation invariant and free of the ||a||^2 cancellation
    c = anchors.coords @ p
    dev = anchors.points - c
    return c, float(p @ upper - p @ np.einsum("ij,ij->i", dev, dev))


def rho(p: SimplexWeight, anchors: AnchorSet, bounds: IntervalBounds) -> BallCertificate:
    _check(anchors, bounds)
    w = p.p
    if w.shape != (anchors.count,):
        raise InvalidInputError("weight length must match the anchor count")
    c, r2 = _radius_sq(w, anchors, bounds.upper)
    # the two textbook forms must agree
    form_omega = float(w @ (bounds.upper - bounds.omega) + c @ c)
    pts = anchors.points
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
    form_pairs = float(w @ bounds.upper - 0.5 * w @ d2 @ w)
    scale = 1.0 + float(w @ np.abs(bounds.upper)) + float(w @ bounds.omega)
    if abs(form_omega - r2) > 1e-9 * scale or abs(form_pairs - r2) > 1e-9 * scale:
        raise SolverError("inconsistent aggregated radius evaluations")
    return BallCertificate(_frozen(c), r2, p)


def rho_uniform(anchors: AnchorSet, bounds: IntervalBounds) -> BallCertificate:
    """Uniform weight: squared radius ``mean(upper) - trace(S)/m``."""
    _check(anchors, bounds)
    m = anchors.count
    sm = scatter_matrix(anchors)
    r2 = float(bounds.upper.mean() - np.trace(sm.S) / m)
    return BallCertificate(_frozen(sm.centroid), r2, SimplexWeight.uniform(m))


def rho_pair(i: int, j: int, anchors: AnchorSet, bounds: IntervalBounds) -> BallCertificate:
    """Two-anchor lens: ``(upper_i + upper_j)/2 - ||a_i - a_j||^2 / 4``."""
    _check(anchors, bounds)
    if i == j:
        raise InvalidInputError("pair weights need two distinct anchors")
    m = anchors.count
    ai, aj = anchors.points[i], anchors.points[j]
    r2 = float(0.5 * (bounds.upper[i] + bounds.upper[j]) - 0.25 * np.sum((ai - aj) ** 2))
    p = np.zeros(m)
    p[i] = p[j] = 0.5
    return BallCertificate(_frozen(0.5 * (ai + aj)), r2, SimplexWeight(p))


def _rho2_data(anchors: AnchorSet, bounds: IntervalBounds):
    # objective p @ lin + p @ Q p with the anchors centred at their centroid
    a = anchors.coords - anchors.coords.mean(axis=1, keepdims=True)
    lin = bounds.upper - np.einsum("ij,ij->j", a, a)
    Q = a.T @ a
    return lin, Q


def rho_star(anchors: AnchorSet, bounds: IntervalBounds) -> tuple[BallCertificate, SimplexWeight]:
    """Smallest aggregated radius over the simplex.

    The objective is a convex quadratic, so any KKT point is optimal.  Faces
    of the simplex are visited by increasing size, then lexicographically;
    for each face the equality-constrained KKT system is solved exactly and
    the first face whose solution is nonnegative and whose multipliers are
    dual feasible is returned.  A Frank-Wolfe gap certifies the result.
    """
    _check(anchors, bounds)
    m = anchors.count
    lin, Q = _rho2_data(anchors, bounds)
    scale = 1.0 + float(np.max(np.abs(lin))) + float(np.max(np.abs(Q)))
    kkt_tol = 1e-12 * scale
    best = None
    for size in range(1, m + 1):
        for face in itertools.combinations(range(m), size):
            F = list(face)
            K = np.zeros((size + 1, size + 1))
            K[:size, :size] = 2.0 * Q[np.ix_(F, F)]
            K[:size, size] = 1.0
            K[size, :size] = 1.0
            rhs = np.append(-lin[F], 1.0)
            if np.linalg.cond(K) > 1e12:
                continue
            sol = np.linalg.solve(K, rhs)
            pf, nu = sol[:size], sol[size]
            if np.any(pf < -1e-12):
                continue
            p = np.zeros(m)
            p[F] = np.maximum(pf, 0.0)
            p /= p.sum()
            g = lin + 2.0 * Q @ p
            if np.any(g + nu < -kkt_tol):
                continue
            fw_gap = float(g @ p - g.min())
            if fw_gap > 1e-10 * scale:
                continue
            best = p
            break
        if best is not None:
            break
    if best is None:
        raise SolverError("no KKT face found for the aggregated radius problem")
    weight = SimplexWeight(best)
    c, r2 = _radius_sq(weight.p, anchors, bounds.upper)
    return BallCertificate(_frozen(c), r2, weight), weight


def _balls_spec(anchors: AnchorSet, bounds: IntervalBounds) -> exact.ConvexSpec:
    """Upper-ball intersection after the emptiness/degeneracy screen."""
    _check(anchors, bounds)
    if np.any(bounds.upper < 0):
        raise InfeasibleError("an upper squared range is negative")
    cert, _ = rho_star(anchors, bounds)
    scale = 1.0 + float(np.max(np.abs(bounds.upper)))
    if cert.radius_sq < -DEGENERATE_RHO2_RTOL * scale:
        raise InfeasibleError(f"upper balls do not intersect (rho_star^2 = {cert.radius_sq:.3e})")
    if cert.radius_sq <= DEGENERATE_RHO2_RTOL * scale:
        warnings.warn("upper-ball intersection has empty interior", DegenerateInteriorWarning, stacklevel=3)
    return exact.upper_balls(anchors, bounds)


def support_H_simplex(v, anchors: AnchorSet, bounds: IntervalBounds) -> tuple[float, SimplexWeight]:
    """Support of the ball intersection through its simplex-weighted dual.

    Minimises the convex function
    ``mu @ (upper - omega) + ||v + 2 A mu||^2 / (4 sum(mu))`` over
    ``mu >= 0`` and reports ``v @ A p + ||v|| rho(p)`` at ``p = mu/sum(mu)``.
    Independent of the primal solver; used as a cross-check.
    """
    _check(anchors, bounds)
    v = np.asarray(v, dtype=float)
    vn = float(np.linalg.norm(v))
    if not vn > 0:
        raise InvalidInputError("direction vector must be nonzero")
    centroid = anchors.coords.mean(axis=1)
    a = anchors.coords - centroid[:, None]
    lin = bounds.upper - np.einsum("ij,ij->j", a, a)
    m = anchors.count

    def fun(mu):
        T = mu.sum()
        if not T > 1e-300:
            # the objective blows up at mu = 0; steer the line search back
            return 1e300, -np.ones(m)
        q = v + 2.0 * a @ mu
        f = mu @ lin + q @ q / (4.0 * T)
        grad = lin + a.T @ q / T - (q @ q) / (4.0 * T * T)
        return f, grad

    r0 = rho_uniform(anchors, bounds).radius_sq
    t0 = vn / (2.0 * np.sqrt(r0)) if r0 > 0 else 1.0
    x = np.full(m, t0 / m)
    for _ in range(3):
        res = minimize(fun, x, jac=True, method="L-BFGS-B", bounds=[(0.0, None)] * m,
                       options={"ftol": 1e-16, "gtol": 1e-13, "maxiter": 20000, "maxcor": 30})
        x = np.maximum(res.x, 0.0)
    weight = SimplexWeight(x / x.sum())
    _, r2 = _radius_sq(weight.p, AnchorSet(a), bounds.upper)
    value = float(v @ (a @ weight.p)) + vn * np.sqrt(max(r2, 0.0)) + float(v @ centroid)
    return value, weight


def support_H(v, anchors: AnchorSet, bounds: IntervalBounds, cross_check: bool = False) -> float:
    """Exact support of the upper-ball intersection in direction ``v``.

    Solved as the primal cone program.  With ``cross_check`` the simplex
    dual form is also evaluated and must agree to ``1e-7 (1 + |h|)``.
    Raises InfeasibleError when the balls do not intersect.
    """
    spec = _balls_spec(anchors, bounds)
    return _support_value(spec, v, anchors, bounds, cross_check)


def _support_value(spec, v, anchors, bounds, cross_check=False) -> float:
    res = exact.support(spec, np.asarray(v, dtype=float))
    if res.status == exact.Status.INFEASIBLE:
        raise InfeasibleError("upper balls do not intersect")
    if res.status == exact.Status.DEGENERATE:
        warnings.warn("support solved on a degenerate ball intersection", DegenerateInteriorWarning, stacklevel=3)
    if cross_check:
        dual, _ = support_H_simplex(v, anchors, bounds)
        if abs(dual - res.value) > 1e-7 * (1.0 + abs(res.value)):
            raise SolverError(f"primal {res.value!r} and simplex-dual {dual!r} supports disagree")
    return res.value


def psi_H(v, anchors: AnchorSet, bounds: IntervalBounds) -> float:
    """Exact width of the ball intersection along ``v``: ``h(v) + h(-v)``."""
    v = np.asarray(v, dtype=float)
    spec = _balls_spec(anchors, bounds)
    return _support_value(spec, v, anchors, bounds) + _support_value(spec, -v, anchors, bounds)


def beta_H(v, anchors: AnchorSet, bounds: IntervalBounds) -> float:
    """Closed-form width surrogate from individual balls; never below psi_H."""
    _check(anchors, bounds)
    v = _unit(v)
    if np.any(bounds.upper < 0):
        raise InfeasibleError("an upper squared range is negative")
    proj = anchors.points @ v
    r = np.sqrt(bounds.upper)
    return float(np.min(proj + r) - np.max(proj - r))


def hybrid_width(v, anchors: AnchorSet, bounds: IntervalBounds) -> float:
    """Minimum of the polyhedral directional bound and psi_H along ``v``."""
    v = _unit(v)
    poly = width_bound_xd(anchors, bounds.widths, v) if anchors.count >= 2 else np.inf
    try:
        ball = psi_H(v, anchors, bounds)
    except InfeasibleError:
        ball = np.inf
        if not np.isfinite(poly):
            raise
    return float(min(poly, ball))


def hybrid_box(anchors: AnchorSet, bounds: IntervalBounds) -> HybridBox:
    """Box aligned with the scatter eigenvectors, sides ``min(poly_j, psi_H(u_j))``.

    Directions whose eigenvalue falls under the degeneracy threshold use the
    ball branch only.  The box is positioned at the midpoint of the exact
    supports of the localization set along each axis, or at the aggregated
    ball center when that set is empty.
    """
    _check(anchors, bounds)
    sm = scatter_matrix(anchors)
    U = np.array(sm.eigvecs)
    wn = float(np.linalg.norm(bounds.widths))
    floor = DEGENERACY_RTOL * max(1.0, sm.lambda_max)
    spec = _balls_spec(anchors, bounds)
    sides = np.empty(anchors.dim)
    for j in range(anchors.dim):
        lam = sm.eigvals[j]
        poly = wn / (2.0 * np.sqrt(lam)) if lam > floor else np.inf
        u = U[:, j]
        ball = _support_value(spec, u, anchors, bounds) + _support_value(spec, -u, anchors, bounds)
        sides[j] = min(poly, ball)
    center = rho_star(anchors, bounds)[0].center
    if anchors.count >= 2:
        X = exact.localization_set(anchors, bounds)
        if exact.feasible(X):
            mids = []
            for j in range(anchors.dim):
                u = U[:, j]
                hi = exact.support(X, u).value
                lo = -exact.support(X, -u).value
                mids.append(0.5 * (hi + lo))
            center = U @ np.array(mids)
    return HybridBox(_frozen(U), _frozen(sides), _frozen(center),
                     float(np.sqrt(np.sum(sides ** 2))), float(np.prod(sides)))


def hybrid_coord_box_bound(anchors: AnchorSet, bounds: IntervalBounds) -> float:
    """Product over coordinate axes of ``min(width_bound_xd(e_j), psi_H(e_j))``."""
    _check(anchors, bounds)
    spec = _balls_spec(anchors, bounds)
    total = 1.0
    for j in range(anchors.dim):
        e = np.zeros(anchors.dim)
        e[j] = 1.0
        poly = width_bound_xd(anchors, bounds.widths, e)
        ball = _support_value(spec, e, anchors, bounds) + _support_value(spec, -e, anchors, bounds)
        total *= min(poly, ball)
    return float(total)
