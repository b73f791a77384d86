"""Anchor-subset selection from a candidate pool.

Offline policies rank subsets by the geometry-only E/D scores.  The online
oracle needs measurements: it picks the subset whose localization set has
the smallest exact coordinate-box area.  All policies break ties toward the
lexicographically smallest index list.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import balls, exact
from .errors import InfeasibleError, InvalidInputError
from .geometry import AnchorSet, d_score, e_score
from .measurement import IntervalBounds, make_intervals

SCORES = ("E", "D")
# relative score difference under which two subsets count as tied
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class SubsetEvaluation:
    indices: tuple[int, ...]
    e_score: float
    d_score: float
    box_area: float | None = None
    hybrid_bound: float | None = None
    # greedy runs record the score after each addition
    trace: tuple[float, ...] = field(default=(), compare=False)

    def score(self, kind: str) -> float:
        return self.e_score if kind == "E" else self.d_score


def enumerate_subsets(N: int, k: int):
    """All k-subsets of ``range(N)`` in lexicographic order."""
    if not 1 <= k <= N:
        raise InvalidInputError(f"need 1 <= k <= N, got k={k}, N={N}")
    for c in itertools.combinations(range(N), k):
        yield list(c)


def _check_score(score: str) -> str:
    s = str(score).upper()
    if s not in SCORES:
        raise InvalidInputError(f"score must be one of {SCORES}, got {score!r}")
    return s


def evaluate_subset(pool: AnchorSet, indices) -> SubsetEvaluation:
    sub = pool.subset(indices)
    return SubsetEvaluation(tuple(int(i) for i in indices), e_score(sub), d_score(sub))


def _better(new: float, best: float) -> bool:
    return new > best + TIE_RTOL * max(1.0, abs(best))


def rank_offline(pool: AnchorSet, k: int, score: str) -> list[SubsetEvaluation]:
    """All k-subsets by decreasing score; near-equal scores stay in lexicographic order."""
    score = _check_score(score)
    evals = [evaluate_subset(pool, idx) for idx in enumerate_subsets(pool.count, k)]
    # enumeration is lexicographic and sort is stable
    return sorted(evals, key=lambda ev: -float(f"{ev.score(score):.12g}"))


def select_offline(pool: AnchorSet, k: int, score: str = "D") -> SubsetEvaluation:
    """Exhaustive maximisation of the E or D score over all k-subsets."""
    score = _check_score(score)
    best = None
    for idx in enumerate_subsets(pool.count, k):
        ev = evaluate_subset(pool, idx)
        if best is None or _better(ev.score(score), best.score(score)):
            best = ev
    return best


def select_greedy(pool: AnchorSet, k: int, score: str = "D") -> SubsetEvaluation:
    """Best (n+1)-subset by exhaustive search, then greedy single additions."""
    score = _check_score(score)
    seed_k = min(pool.dim + 1, k)
    current = select_offline(pool, seed_k, score)
    chosen = list(current.indices)
    trace = [current.score(score)]
    while len(chosen) < k:
        best = None
        for cand in range(pool.count):
            if cand in chosen:
                continue
            ev = evaluate_subset(pool, sorted(chosen + [cand]))
            if best is None or _better(ev.score(score), best.score(score)):
                best = ev
        chosen = list(best.indices)
        current = best
        trace.append(best.score(score))
    return SubsetEvaluation(current.indices, current.e_score, current.d_score, trace=tuple(trace))


@dataclass
class TrialResult:
    """One Monte Carlo trial: every subset plus the per-policy picks."""

    subsets: list[SubsetEvaluation]
    oracle: SubsetEvaluation
    d_pick: SubsetEvaluation
    e_pick: SubsetEvaluation
    average_area: float
    excluded: int = 0

    @property
    def metric(self) -> str:
        return "exact coordinate-box area"


def online_evaluation(pool: AnchorSet, bounds: IntervalBounds, indices) -> SubsetEvaluation:
    """Scores plus exact box area and hybrid coordinate-box bound of one subset.

    Empty or unbounded localization sets get a NaN area.
    """
    ev = evaluate_subset(pool, indices)
    sub = pool.subset(indices)
    sb = bounds.subset(indices)
    box = exact.coord_box(exact.localization_set(sub, sb))
    area = box.volume if box.status in (exact.Status.OPTIMAL, exact.Status.DEGENERATE) else np.nan
    try:
        hyb = balls.hybrid_coord_box_bound(sub, sb)
    except InfeasibleError:
        hyb = np.nan
    return SubsetEvaluation(ev.indices, ev.e_score, ev.d_score, float(area), float(hyb))


def evaluate_policies(pool: AnchorSet, k: int, target, delta: float) -> TrialResult:
    """Oracle, D-score and E-score picks plus the all-subset mean area."""
    bounds = make_intervals(np.asarray(target, dtype=float), pool, delta)
    subsets = [online_evaluation(pool, bounds, idx) for idx in enumerate_subsets(pool.count, k)]
    valid = [ev for ev in subsets if math.isfinite(ev.box_area)]
    if not valid:
        raise InfeasibleError("no subset produced a bounded localization set")
    oracle = valid[0]
    for ev in valid[1:]:
        if ev.box_area < oracle.box_area * (1.0 - TIE_RTOL):
            oracle = ev
    picks = {}
    for s in SCORES:
        best = subsets[0]
        for ev in subsets[1:]:
            if _better(ev.score(s), best.score(s)):
                best = ev
        picks[s] = best
    avg = float(np.mean([ev.box_area for ev in valid]))
    return TrialResult(subsets, oracle, picks["D"], picks["E"], avg, len(subsets) - len(valid))
