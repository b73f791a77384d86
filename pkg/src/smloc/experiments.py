"""Experiment drivers: certification report, height sweep, Monte Carlo, figure data."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import balls, exact
from .errors import BoundViolationError, DegenerateInteriorWarning, InfeasibleError, InvalidInputError
from .geometry import AnchorSet, scatter_matrix, weighted_scores
from .measurement import IntervalBounds, make_intervals, membership_true, upper_ball_box
from .polytope import build_xd, cauchy_schwarz_bound_xd, det_vol_bound, diam_bound_xd, width_bound_xd
from .selection import SCORES, evaluate_policies

SWEEP_TARGET = (0.15, 0.35)
SWEEP_DELTA = 0.05
SWEEP_RANGE = (0.08, 1.2)
SWEEP_POINTS = 12

MC_TRIALS = 60
MC_POOL = 8
MC_K = 4
MC_DELTA = 0.05
MC_ANNULUS = (1.0, 2.0)
MC_SEED = 20240601

DEMO_DELTA = 0.3
DEMO_HEIGHT = 1.2
DEMO_GRID = 101

BOUND_TOL = 1e-6


def sweep_anchors(h: float) -> AnchorSet:
    """Two base anchors at (-1, 0) and (1, 0) plus an apex at (0, h)."""
    return AnchorSet.from_points([[-1.0, 0.0], [1.0, 0.0], [0.0, float(h)]])


# ---------------------------------------------------------------- certify


@dataclass
class CertificateReport:
    scores: dict
    xd_bounds: dict
    ball_bounds: dict
    hybrid: dict
    exact: dict
    statuses: dict
    directions: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "directions": self.directions,
            "scores": self.scores,
            "xd_bounds": self.xd_bounds,
            "ball_bounds": self.ball_bounds,
            "hybrid": self.hybrid,
            "exact": self.exact,
            "statuses": self.statuses,
        }


def default_directions(anchors: AnchorSet) -> np.ndarray:
    """Coordinate axes followed by the scatter eigenvectors, as rows."""
    n = anchors.dim
    return np.vstack([np.eye(n), scatter_matrix(anchors).eigvecs.T])


def _unit_rows(directions) -> np.ndarray:
    d = np.atleast_2d(np.asarray(directions, dtype=float))
    nrm = np.linalg.norm(d, axis=1)
    if np.any(nrm == 0):
        raise InvalidInputError("directions must be nonzero")
    return d / nrm[:, None]


def _safe(fn, *args):
    try:
        return fn(*args)
    except InfeasibleError:
        return None


def certify(anchors: AnchorSet, bounds: IntervalBounds, directions=None, tol: float = BOUND_TOL) -> CertificateReport:
    """Every score, bound and exact size for one measurement set.

    Each exact width is checked against the bounds that apply to it; a
    violation beyond ``tol * (1 + |bound|)`` raises BoundViolationError.
    """
    n = anchors.dim
    dirs = _unit_rows(default_directions(anchors) if directions is None else directions)
    if dirs.shape[1] != n:
        raise InvalidInputError(f"directions must have {n} components")
    w = bounds.widths
    sm = scatter_matrix(anchors)
    j_e, j_d = weighted_scores(anchors, w)
    scores = {"lambda_min": sm.lambda_min, "det_S": float(np.prod(sm.eigvals)), "J_E": j_e, "J_D": j_d,
              "eigenvalues": sm.eigvals, "singular": sm.singular}

    poly_ok = anchors.count >= 2
    xd_bounds = {
        "width": [width_bound_xd(anchors, w, v) if poly_ok else math.inf for v in dirs],
        "cauchy_schwarz": [cauchy_schwarz_bound_xd(anchors, w, v) if poly_ok else math.inf for v in dirs],
        "diameter": diam_bound_xd(anchors, w) if poly_ok else math.inf,
        "det_volume": det_vol_bound(anchors, w) if poly_ok else math.inf,
    }

    statuses = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateInteriorWarning)
        try:
            cert, p_star = balls.rho_star(anchors, bounds)
        except InfeasibleError:
            cert, p_star = None, None
        scale = 1.0 + float(np.max(np.abs(bounds.upper)))
        h_tol = balls.DEGENERATE_RHO2_RTOL * scale
        h_empty = cert is None or cert.radius_sq < -h_tol
        ball_bounds = {"two_rho_star": None if h_empty else 2.0 * math.sqrt(max(cert.radius_sq, 0.0)),
                       "rho_star_sq": None if cert is None else cert.radius_sq,
                       "p_star": None if p_star is None else p_star.p,
                       "psi_H": [], "beta_H": []}
        for v in dirs:
            ball_bounds["psi_H"].append(None if h_empty else _safe(balls.psi_H, v, anchors, bounds))
            ball_bounds["beta_H"].append(_safe(balls.beta_H, v, anchors, bounds))

        hybrid = {"width": [], "box_axes": None, "box_sides": None, "B_hyb": None, "coord_B_hyb": None}
        for k, v in enumerate(dirs):
            psi = ball_bounds["psi_H"][k]
            hybrid["width"].append(min(xd_bounds["width"][k], math.inf if psi is None else psi))
        if not h_empty:
            hb = _safe(balls.hybrid_box, anchors, bounds)
            if hb is not None:
                hybrid.update(box_axes=hb.axes.T, box_sides=hb.sides, box_center=hb.center, B_hyb=hb.vol_bound,
                              diameter=hb.diam_bound)
            hybrid["coord_B_hyb"] = _safe(balls.hybrid_coord_box_bound, anchors, bounds)

        spec = exact.localization_set(anchors, bounds) if poly_ok else exact.upper_balls(anchors, bounds)
        ex = {"width": [], "box_lo": None, "box_hi": None, "box_area": None}
        x_status = exact.Status.OPTIMAL
        for v in dirs:
            hi = exact.support(spec, v)
            if hi.status == exact.Status.INFEASIBLE:
                x_status = exact.Status.INFEASIBLE
                break
            lo = exact.support(spec, -v)
            for st in (hi.status, lo.status):
                if st != exact.Status.OPTIMAL and x_status == exact.Status.OPTIMAL:
                    x_status = st
            unb = exact.Status.UNBOUNDED in (hi.status, lo.status)
            ex["width"].append(math.inf if unb else hi.value + lo.value)
        if x_status != exact.Status.INFEASIBLE:
            box = exact.coord_box(spec)
            ex.update(box_lo=box.lo, box_hi=box.hi, box_area=box.volume)
        else:
            ex["width"] = [None] * len(dirs)
    statuses["X"] = x_status.value
    statuses["H"] = "infeasible" if h_empty else ("degenerate" if cert.radius_sq <= h_tol else "interior")
    statuses["S"] = "singular" if sm.singular else "nonsingular"
    statuses["warnings"] = sorted({str(c.message) for c in caught})

    report = CertificateReport(scores, xd_bounds, ball_bounds, hybrid, ex, statuses, dirs)
    if x_status != exact.Status.INFEASIBLE:
        check_report(report, tol)
    return report


def _violations(report: CertificateReport, tol: float) -> list[str]:
    out = []

    def check(name, value, bound):
        if value is None or bound is None or not math.isfinite(value):
            return
        if value > bound + tol * (1.0 + abs(bound)):
            out.append(f"{name}: exact {value!r} exceeds bound {bound!r}")

    for k, wx in enumerate(report.exact["width"]):
        check(f"width[{k}] vs xd", wx, report.xd_bounds["width"][k])
        check(f"width[{k}] vs Cauchy-Schwarz", wx, report.xd_bounds["cauchy_schwarz"][k])
        check(f"width[{k}] vs diameter", wx, report.xd_bounds["diameter"])
        check(f"width[{k}] vs psi_H", wx, report.ball_bounds["psi_H"][k])
        check(f"width[{k}] vs beta_H", wx, report.ball_bounds["beta_H"][k])
        check(f"width[{k}] vs 2 rho_star", wx, report.ball_bounds["two_rho_star"])
        check(f"width[{k}] vs hybrid", wx, report.hybrid["width"][k])
        check(f"width[{k}] vs hybrid diameter", wx, report.hybrid.get("diameter"))
    check("box area vs coordinate B_hyb", report.exact["box_area"], report.hybrid["coord_B_hyb"])
    return out


def check_report(report: CertificateReport, tol: float = BOUND_TOL) -> None:
    bad = _violations(report, tol)
    if bad:
        raise BoundViolationError("; ".join(bad))


# ---------------------------------------------------------------- sweep

SWEEP_COLUMNS = ("h", "exact_width", "xd_width_bound", "psi_H", "hybrid", "diam_xd", "two_rho_star")


def default_heights(count: int = SWEEP_POINTS) -> np.ndarray:
    """Log-spaced from the tallest to the flattest triangle, endpoints exact."""
    lo, hi = SWEEP_RANGE
    h = np.geomspace(hi, lo, count)
    h[0], h[-1] = hi, lo
    return h


def sweep_row(h: float, delta: float = SWEEP_DELTA, target=SWEEP_TARGET) -> dict:
    if not h > 0:
        raise InvalidInputError("heights must be positive")
    anchors = sweep_anchors(h)
    bounds = make_intervals(np.asarray(target, dtype=float), anchors, delta)
    e2 = np.array([0.0, 1.0])
    xd = width_bound_xd(anchors, bounds.widths, e2)
    psi = balls.psi_H(e2, anchors, bounds)
    cert, _ = balls.rho_star(anchors, bounds)
    return {
        "h": float(h),
        "exact_width": exact.width(exact.localization_set(anchors, bounds), e2),
        "xd_width_bound": xd,
        "psi_H": psi,
        "hybrid": min(xd, psi),
        "diam_xd": diam_bound_xd(anchors, bounds.widths),
        "two_rho_star": cert.diameter,
    }


def run_sweep(heights=None, delta: float = SWEEP_DELTA) -> list[dict]:
    hs = default_heights() if heights is None else [float(h) for h in heights]
    return [sweep_row(h, delta) for h in hs]


# ---------------------------------------------------------------- Monte Carlo


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Substream for one trial: the trial index is the SeedSequence spawn key.

    Equivalent to ``SeedSequence(master_seed).spawn(...)[trial]``, so each
    trial can be regenerated alone and parallel order does not matter.
    """
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(int(trial),)))


def sample_annulus(rng: np.random.Generator, count: int, r_inner: float, r_outer: float, center=(0.0, 0.0)) -> np.ndarray:
    """Points uniform in area on a planar annulus."""
    if not 0 <= r_inner < r_outer:
        raise InvalidInputError("annulus needs 0 <= r_inner < r_outer")
    u = rng.random(count)
    theta = rng.random(count) * 2.0 * np.pi
    r = np.sqrt(r_inner ** 2 + u * (r_outer ** 2 - r_inner ** 2))
    return np.asarray(center, dtype=float) + np.column_stack([r * np.cos(theta), r * np.sin(theta)])


@dataclass
class MonteCarloResult:
    summary: dict
    scatter: list[tuple]
    cdf: list[tuple]


SCATTER_COLUMNS = ("trial", "subset_lex_id", "indices", "e_score", "d_score", "box_area", "B_hyb")
CDF_COLUMNS = ("trial", "oracle_area", "d_ratio", "e_ratio", "average_ratio", "d_hit", "e_hit", "excluded")


def _run_trial(args):
    master_seed, trial, N, k, delta, annulus = args
    rng = trial_rng(master_seed, trial)
    pool = AnchorSet.from_points(sample_annulus(rng, N, *annulus))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateInteriorWarning)
        tr = evaluate_policies(pool, k, np.zeros(2), delta)
    return trial, tr


def _pearson_loglog(x, y) -> float:
    x, y = np.log(np.asarray(x)), np.log(np.asarray(y))
    if x.size < 2:
        return math.nan
    return float(np.corrcoef(x, y)[0, 1])


def run_montecarlo(trials: int = MC_TRIALS, N: int = MC_POOL, k: int = MC_K, delta: float = MC_DELTA,
                   annulus=MC_ANNULUS, seed: int = MC_SEED, workers: int = 1) -> MonteCarloResult:
    """Random annulus pools around a target at the origin; every k-subset scored and measured."""
    if trials < 1 or N < 1 or not 1 <= k <= N or not delta >= 0:
        raise InvalidInputError("need trials >= 1, 1 <= k <= N and delta >= 0")
    annulus = (float(annulus[0]), float(annulus[1]))
    if not 0 <= annulus[0] < annulus[1]:
        raise InvalidInputError("annulus needs 0 <= r_inner < r_outer")
    jobs = [(int(seed), t, int(N), int(k), float(delta), annulus) for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_trial, jobs))
    else:
        results = [_run_trial(j) for j in jobs]
    results.sort(key=lambda r: r[0])

    scatter, cdf = [], []
    oracle_a, d_a, e_a, avg_a = [], [], [], []
    d_hits = e_hits = excluded = 0
    for t, tr in results:
        for lex_id, ev in enumerate(tr.subsets):
            idx = " ".join(str(i) for i in ev.indices)
            scatter.append((t, lex_id, idx, ev.e_score, ev.d_score, ev.box_area, ev.hybrid_bound))
        o = tr.oracle.box_area
        dh = tr.d_pick.indices == tr.oracle.indices
        eh = tr.e_pick.indices == tr.oracle.indices
        d_hits += dh
        e_hits += eh
        excluded += tr.excluded
        oracle_a.append(o)
        d_a.append(tr.d_pick.box_area)
        e_a.append(tr.e_pick.box_area)
        avg_a.append(tr.average_area)
        cdf.append((t, o, tr.d_pick.box_area / o, tr.e_pick.box_area / o, tr.average_area / o, dh, eh, tr.excluded))

    means = {name: float(np.mean(v)) for name, v in
             (("oracle", oracle_a), ("D", d_a), ("E", e_a), ("average", avg_a))}
    good = [(r[5], r[6]) for r in scatter
            if math.isfinite(r[5]) and math.isfinite(r[6]) and r[5] > 0 and r[6] > 0]
    area = np.array([g[0] for g in good])
    bhyb = np.array([g[1] for g in good])
    ratio = bhyb / area
    summary = {
        "params": {"trials": trials, "N": N, "k": k, "delta": delta, "annulus": list(annulus), "seed": int(seed),
                   "target": [0.0, 0.0], "annulus_sampling": "uniform-in-area"},
        "metric": "exact coordinate-box area of X",
        "mean_area": means,
        "ratio_of_means": {p: means[p] / means["oracle"] for p in ("D", "E", "average")},
        "mean_of_ratios": {
            "D": float(np.mean([c[2] for c in cdf])),
            "E": float(np.mean([c[3] for c in cdf])),
            "average": float(np.mean([c[4] for c in cdf])),
        },
        "oracle_hits": {"D": int(d_hits), "E": int(e_hits)},
        "excluded_subsets": int(excluded),
        "scatter": {
            "rows": len(scatter),
            "used": int(area.size),
            "loglog_pearson": _pearson_loglog(area, bhyb),
            "ratio_mean": float(np.mean(ratio)) if ratio.size else math.nan,
            "ratio_median": float(np.median(ratio)) if ratio.size else math.nan,
            "ratio_min": float(np.min(ratio)) if ratio.size else math.nan,
        },
    }
    return MonteCarloResult(summary, scatter, cdf)


def table1_text(summary: dict) -> str:
    """Mean box areas and ratios to the oracle at three significant digits."""
    m = summary["mean_area"]
    r = summary["ratio_of_means"]
    lines = [f"{'policy':<16}{'mean box area':>15}{'ratio':>8}",
             f"{'oracle':<16}{m['oracle']:>15.3g}{1.0:>8.3g}"]
    for key, label in (("D", "D-score"), ("E", "E-score"), ("average", "average subset")):
        lines.append(f"{label:<16}{m[key]:>15.3g}{r[key]:>8.3g}")
    t = summary["params"]["trials"]
    hits = summary["oracle_hits"]
    sc = summary["scatter"]
    lines.append(f"oracle recovered: D {hits['D']}/{t}, E {hits['E']}/{t}")
    lines.append(f"B_hyb vs box area over {sc['used']} subsets: log-log r = {sc['loglog_pearson']:.3g}, "
                 f"ratio mean {sc['ratio_mean']:.3g}, median {sc['ratio_median']:.3g}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- figure data


def _polygon_from_halfspaces(G: np.ndarray, h: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Vertices of a bounded planar polygon, counter-clockwise."""
    verts = []
    scale = 1.0 + np.max(np.abs(h))
    for i in range(len(h)):
        for j in range(i + 1, len(h)):
            M = G[[i, j]]
            if abs(np.linalg.det(M)) < 1e-12 * (1.0 + np.abs(M).max() ** 2):
                continue
            x = np.linalg.solve(M, h[[i, j]])
            if np.all(G @ x <= h + tol * scale):
                verts.append(x)
    if not verts:
        return np.zeros((0, 2))
    V = np.unique(np.round(np.array(verts), 12), axis=0)
    c = V.mean(axis=0)
    order = np.argsort(np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0]))
    return V[order]


def demo_scenario():
    """Sweep triangle at its tallest with wide intervals so the sets separate visually."""
    anchors = sweep_anchors(DEMO_HEIGHT)
    return anchors, make_intervals(np.asarray(SWEEP_TARGET), anchors, DEMO_DELTA), np.asarray(SWEEP_TARGET)


def figure_data(anchors: AnchorSet, bounds: IntervalBounds, grid: int = DEMO_GRID, boundary: int = 128,
                target=None) -> dict:
    """Geometry of the nested sets for external plotting."""
    if anchors.dim != 2:
        raise InvalidInputError("figure data needs a 2-D scenario")
    if grid < 2:
        raise InvalidInputError("grid needs at least 2 points per axis")
    xd = build_xd(anchors, bounds)
    spec = exact.localization_set(anchors, bounds)
    if not exact.feasible(spec):
        raise InfeasibleError("the localization set is empty")
    box = upper_ball_box(anchors, bounds)
    lo, hi = box
    xs = np.linspace(lo[0], hi[0], grid)
    ys = np.linspace(lo[1], hi[1], grid)
    inside = [[membership_true(np.array([x, y]), anchors, bounds) for x in xs] for y in ys]
    circles = []
    for i, a in enumerate(anchors.points):
        circles.append({"anchor": i, "center": a, "r_upper": math.sqrt(max(bounds.upper[i], 0.0)),
                        "r_lower": math.sqrt(max(bounds.lower[i], 0.0))})
    return {
        "kind": "method-demo",
        "anchors": anchors.points,
        "target": None if target is None else np.asarray(target, dtype=float),
        "circles": circles,
        "xd_halfspaces": {"normals": xd.normals, "offsets": xd.offsets, "pairs": xd.pairs},
        "xd_polygon": _polygon_from_halfspaces(xd.normals, xd.offsets),
        "x_boundary": exact.boundary_points(spec, boundary),
        "x_true_grid": {"x": xs, "y": ys, "resolution": grid, "inside": inside},
    }
