"""
Joint placement by DC programming
=================================

Users and helpers share the load. The joint problem is nonconvex, so it is
written as a convex function minus a convex quadratic and solved by
linearizing the quadratic at each step.
"""

import numpy as np

from d2dcache import ScenarioConfig, dc_optimize, even_cache, make_zipf, non_joint, popular_cache, total_offload

cfg = ScenarioConfig.table1()
q = make_zipf(cfg.n_contents, cfg.gamma)

pl, trace = dc_optimize(cfg, q)
print(f"converged={trace.converged} ({trace.reason}) after {trace.outer_iterations} outer iterations")
print("objective went", trace.objective_values[0], "->", trace.objective_values[-1])

np.set_printoptions(precision=3, suppress=True)
print("p_ue[:10] =", pl.p_ue[:10])
print("p_h[:12]  =", pl.p_h[:12])

schemes = {
    "dc": pl,
    "popular": popular_cache(cfg),
    "even": even_cache(cfg),
    "nonjoint": non_joint(cfg, q),
}
for name, placement in schemes.items():
    print(f"{name:>8}: {total_offload(cfg, q, placement).total:.5f}")

# users and helpers tend to avoid duplicating each other: where the user tier
# caches heavily, the helper tier can afford to back off
overlap = np.minimum(pl.p_ue, pl.p_h)
print("coordinates cached heavily by both tiers:", np.flatnonzero(overlap > 0.5) + 1)
