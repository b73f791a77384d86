"""Guaranteed set-membership localization from interval squared-range measurements."""

from .balls import (
    BallCertificate,
    HybridBox,
    SimplexWeight,
    beta_H,
    hybrid_box,
    hybrid_coord_box_bound,
    hybrid_width,
    psi_H,
    rho,
    rho_pair,
    rho_star,
    rho_uniform,
    support_H,
    support_H_simplex,
)
from .errors import (
    BoundViolationError,
    DegenerateInteriorWarning,
    InfeasibleError,
    InvalidInputError,
    SmlocError,
    SolverError,
)
from .exact import ConvexSpec, CoordBox, Status, SupportResult, coord_box, localization_set, support, width
from .experiments import CertificateReport, certify, run_montecarlo, run_sweep
from .geometry import AnchorSet, ScatterMatrix, d_score, e_score, is_degenerate, scatter_matrix, weighted_scores
from .measurement import IntervalBounds, make_intervals, membership_true, sample_true_set
from .polytope import (
    HalfspacePolytope,
    build_xd,
    cauchy_schwarz_bound_xd,
    det_vol_bound,
    diam_bound_xd,
    membership_xd_intervals,
    width_bound_xd,
)
from .scenario import Scenario, parse_scenario, read_scenario, write_scenario
from .selection import SubsetEvaluation, enumerate_subsets, evaluate_policies, select_greedy, select_offline

__version__ = "0.1.0"
