"""Dense log-barrier interior-point method for tiny second-order cone programs.

Problems have the generic form

    minimize    c @ z
    subject to  G @ z <= h                          (linear rows)
                ||C @ z - P[i]|| <= r[i] + b @ z    (one cone per ball)

with ``z`` of dimension at most four.  The barrier for each cone is the
standard ``-log(u**2 - ||w||**2)``; Newton steps are dense ``d x d`` solves.
The inner loops are compiled with numba because a Monte Carlo run issues a
few hundred thousand of these solves.
"""

import math

import numpy as np
from numba import njit

# Armijo sufficient-decrease fraction and backtracking factor.
_ALPHA = 0.25
_BETA = 0.5


@njit(cache=True)
def _grad_hess(z, t, c, G, h, C, b, P, r):
    d = z.shape[0]
    n = C.shape[0]
    g = t * c.copy()
    H = np.zeros((d, d))
    for k in range(G.shape[0]):
        s = h[k]
        for j in range(d):
            s -= G[k, j] * z[j]
        for j in range(d):
            g[j] += G[k, j] / s
            for l in range(d):
                H[j, l] += G[k, j] * G[k, l] / (s * s)
    if P.shape[0] == 0:
        return g, H
    Cz = C @ z
    bz = 0.0
    for j in range(d):
        bz += b[j] * z[j]
    gs = np.zeros(n + 1)
    Hs = np.zeros((n + 1, n + 1))
    w = np.zeros(n)
    for i in range(P.shape[0]):
        u = r[i] + bz
        ww = 0.0
        for j in range(n):
            w[j] = Cz[j] - P[i, j]
            ww += w[j] * w[j]
        D = u * u - ww
        D2 = D * D
        gs[0] += -2.0 * u / D
        Hs[0, 0] += -2.0 / D + 4.0 * u * u / D2
        for j in range(n):
            gs[j + 1] += 2.0 * w[j] / D
            Hs[0, j + 1] += -4.0 * u * w[j] / D2
            Hs[j + 1, 0] += -4.0 * u * w[j] / D2
            Hs[j + 1, j + 1] += 2.0 / D
            for l in range(n):
                Hs[j + 1, l + 1] += 4.0 * w[j] * w[l] / D2
    J = np.zeros((n + 1, d))
    J[0, :] = b
    J[1:, :] = C
    g += J.T @ gs
    H += J.T @ Hs @ J
    return g, H


@njit(cache=True)
def _delta_f(z, dz, a, t, c, G, h, C, b, P, r):
    """Change of the barrier objective along ``z + a*dz``; inf if infeasible.

    Evaluated through log1p of relative slack changes so that decreases far
    below the objective's magnitude are still resolved at large ``t``.
    """
    d = z.shape[0]
    n = C.shape[0]
    df = 0.0
    for j in range(d):
        df += t * a * c[j] * dz[j]
    for k in range(G.shape[0]):
        s = h[k]
        ds = 0.0
        for j in range(d):
            s -= G[k, j] * z[j]
            ds -= G[k, j] * dz[j]
        rel = a * ds / s
        if rel <= -1.0:
            return np.inf
        df -= math.log1p(rel)
    if P.shape[0] == 0:
        return df
    Cz = C @ z
    Cdz = C @ dz
    bz = 0.0
    bdz = 0.0
    for j in range(d):
        bz += b[j] * z[j]
        bdz += b[j] * dz[j]
    for i in range(P.shape[0]):
        u = r[i] + bz
        if u + a * bdz <= 0.0:
            return np.inf
        ww = 0.0
        wdw = 0.0
        dwdw = 0.0
        for j in range(n):
            wj = Cz[j] - P[i, j]
            ww += wj * wj
            wdw += wj * Cdz[j]
            dwdw += Cdz[j] * Cdz[j]
        D = u * u - ww
        dD = 2.0 * a * (u * bdz - wdw) + a * a * (bdz * bdz - dwdw)
        rel = dD / D
        if rel <= -1.0:
            return np.inf
        df -= math.log1p(rel)
    return df


@njit(cache=True)
def _strictly_feasible(z, G, h, C, b, P, r):
    d = z.shape[0]
    n = C.shape[0]
    for k in range(G.shape[0]):
        s = h[k]
        for j in range(d):
            s -= G[k, j] * z[j]
        if not s > 0.0:
            return False
    Cz = C @ z
    bz = 0.0
    for j in range(d):
        bz += b[j] * z[j]
    for i in range(P.shape[0]):
        u = r[i] + bz
        ww = 0.0
        for j in range(n):
            wj = Cz[j] - P[i, j]
            ww += wj * wj
        if not (u > 0.0 and u * u - ww > 0.0):
            return False
    return True


@njit(cache=True)
def _center(z, t, c, G, h, C, b, P, r, tol, maxiter):
    """Damped Newton centering.  Returns (z, converged, newton_decrement_sq)."""
    lam2 = np.inf
    for _ in range(maxiter):
        g, H = _grad_hess(z, t, c, G, h, C, b, P, r)
        dz = -np.linalg.solve(H, g)
        lam2 = 0.0
        for j in range(z.shape[0]):
            lam2 -= g[j] * dz[j]
        if lam2 * 0.5 <= tol:
            return z, True, lam2
        a = 1.0
        while True:
            df = _delta_f(z, dz, a, t, c, G, h, C, b, P, r)
            if df <= -_ALPHA * a * lam2 and _strictly_feasible(z + a * dz, G, h, C, b, P, r):
                break
            a *= _BETA
            if a < 1e-16:
                # no representable decrease left: centred to machine precision
                return z, lam2 < 1e-8, lam2
        z = z + a * dz
    return z, False, lam2


def warmup():
    """Trigger compilation on a trivial problem (one ball, one row)."""
    z = np.zeros(2)
    G = np.array([[1.0, 0.0]])
    h = np.array([0.5])
    P = np.zeros((1, 2))
    r = np.ones(1)
    C = np.eye(2)
    b = np.zeros(2)
    _center(z, 1.0, np.array([1.0, 0.0]), G, h, C, b, P, r, 1e-10, 50)


class Phase1Result:
    __slots__ = ("point", "depth", "kind")

    def __init__(self, point, depth, kind):
        self.point = point
        # depth > 0: the point clears every constraint by that margin
        self.depth = depth
        # "interior", "degenerate" or "infeasible"
        self.kind = kind


def phase1(G, h, P, r, interior_tol, feas_tol, mu=20.0, t_max=1e15):
    """Minimise the largest constraint violation ``s`` over (y, s).

    Stops as soon as a point clearing every constraint by ``interior_tol``
    is found; otherwise classifies the set as degenerate (optimal ``s`` in
    ``[-interior_tol, feas_tol/2]``) or infeasible.
    """
    n = P.shape[1] if P.shape[0] else G.shape[1]
    y0 = np.zeros(n)
    viol = -np.inf
    if G.shape[0]:
        viol = max(viol, float(np.max(G @ y0 - h)))
    if P.shape[0]:
        viol = max(viol, float(np.max(np.linalg.norm(y0 - P, axis=1) - r)))
    if viol < -interior_tol:
        return Phase1Result(y0, -viol, "interior")
    z = np.append(y0, viol + 1.0)
    c = np.zeros(n + 1)
    c[n] = 1.0
    G1 = np.hstack([G, -np.ones((G.shape[0], 1))]) if G.shape[0] else np.zeros((0, n + 1))
    C1 = np.hstack([np.eye(n), np.zeros((n, 1))])
    b1 = c.copy()
    theta = G.shape[0] + 2 * P.shape[0]
    t = 1.0
    while True:
        z, _, _ = _center(z, t, c, G1, h, C1, b1, P, r, 1e-10, 200)
        s = z[n]
        if s < -interior_tol:
            return Phase1Result(z[:n].copy(), -s, "interior")
        gap = theta / t
        if s - gap > 0.5 * feas_tol:
            return Phase1Result(z[:n].copy(), -s, "infeasible")
        if gap < 0.1 * interior_tol or t > t_max:
            kind = "degenerate" if s <= 0.5 * feas_tol else "infeasible"
            return Phase1Result(z[:n].copy(), -s, kind)
        t *= mu


class Phase2Result:
    __slots__ = ("point", "value", "bound", "lam", "tau", "zeta", "converged")

    def __init__(self, point, value, bound, lam, tau, zeta, converged):
        self.point = point
        self.value = value
        self.bound = bound
        self.lam = lam
        self.tau = tau
        self.zeta = zeta
        self.converged = converged


def dual_bound(y, t, v, G, h, P, r):
    """Dual-feasible multipliers recovered from a central point.

    The barrier gradient gives multipliers ``1/(t s_k)`` for the rows and
    ``2 (y - P_i) / (t D_i)`` for the balls.  Rounding in the small slacks
    leaves them off the stationarity condition, so they are corrected by the
    smallest multiplier-relative change that restores
    ``v = G.T@lam + sum(zeta)``; any remainder is pushed into the largest
    ball multiplier.  The result is dual feasible for ``max v@y`` with
    ``||zeta_i|| <= tau_i`` and bound ``lam@h + sum(tau*r + zeta_i@P_i)``.
    """
    K = G.shape[0]
    s = h - G @ y
    lam = 1.0 / (t * s)
    W = y - P
    wn = np.sqrt(np.einsum("ij,ij->i", W, W))
    D = r * r - wn * wn
    tau = 2.0 * r / (t * D)
    mu = 2.0 * wn / (t * D)
    normals = np.divide(W, wn[:, None], out=np.zeros_like(W), where=wn[:, None] > 0)
    B = np.vstack([G, normals])  # one row per multiplier
    m = np.concatenate([lam, mu])
    resid = v - B.T @ m
    m2 = m * m
    M = (B.T * m2) @ B
    # least squares: M is singular when every normal lies in a subspace
    delta = m2 * (B @ np.linalg.lstsq(M, resid, rcond=None)[0])
    if np.all(m + delta >= 0):
        m = m + delta
        tau = tau + delta[K:]
    lam = m[:K]
    mu = m[K:]
    tau = np.maximum(tau, mu)
    zeta = mu[:, None] * normals
    resid = v - G.T @ lam - zeta.sum(axis=0)
    j = int(np.argmax(tau))
    zeta[j] += resid
    tau[j] = max(tau[j], float(np.linalg.norm(zeta[j])))
    bound = float(lam @ h + tau @ r + np.einsum("ij,ij->", zeta, P))
    return bound, lam, tau, zeta


def phase2(y0, v, G, h, P, r, gap_tol, mu=30.0, t_max=1e16):
    """Maximise ``v @ y`` from the strictly feasible ``y0``.

    Requires at least one ball (callers add an auxiliary one when needed);
    returns the last iterate together with its certified dual bound.
    """
    n = y0.shape[0]
    c = -v
    C = np.eye(n)
    b = np.zeros(n)
    theta = G.shape[0] + 2 * P.shape[0]
    t = float(theta)
    y = y0.copy()
    best = None
    while True:
        y, ok, _ = _center(y, t, c, G, h, C, b, P, r, 1e-13, 200)
        value = float(v @ y)
        bound, lam, tau, zeta = dual_bound(y, t, v, G, h, P, r)
        if best is None or bound - value < best.bound - best.value:
            best = Phase2Result(y.copy(), value, bound, lam, tau, zeta, ok)
        if bound - value <= gap_tol(value) or t > t_max:
            return best
        t *= mu
