"""Caching placement for D2D-assisted two-tier wireless caching networks."""

from .baselines import even_cache, non_joint, popular_cache
from .dc_solver import DcSettings, DcTrace, NonMonotoneDescentError, convexifier_h, dc_optimize
from .extreme import UserTierSolution, WaterfillSolution, usertier_solve, waterfill
from .model import (
    InfeasiblePlacementError,
    OffloadReport,
    Placement,
    Popularity,
    ScenarioConfig,
    make_zipf,
    objective_and_gradient,
    offload_per_content,
    total_offload,
)
from .projection import CappedSimplex, bisect, project
from .simulator import SimSettings, assign_caches, run_trials, sample_ppp, simulate_offloading

__version__ = "0.1.0"
