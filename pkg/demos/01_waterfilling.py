"""
Helper-only caching by water-filling
====================================

With no cache-enabled users the best helper placement has a closed form:
raise a common water level over ``ln q_i / c`` and clip to ``[0, 1]``.
"""

import math

import numpy as np

from d2dcache import ScenarioConfig, make_zipf, total_offload, waterfill, popular_cache, even_cache

# twenty contents, four slots per helper, twenty helpers per 500 m disk
cfg = ScenarioConfig(n_contents=20, gamma=1.0, m_h=4, lambda_h=20 / (math.pi * 500**2), alpha=0.0)
q = make_zipf(cfg.n_contents, cfg.gamma)

sol = waterfill(cfg, q)
np.set_printoptions(precision=4, suppress=True)
print("p_h  =", sol.p_h)
print("beta =", round(sol.beta, 5), " saturated:", sol.saturated + 1, " dry from:", sol.dry[0] + 1)

# the interior coordinates share one marginal value q_i exp(-c p_i)
free = (sol.p_h > 0) & (sol.p_h < 1)
print("marginal on the free set:", q.q[free] * np.exp(-cfg.helper_coef * sol.p_h[free]))

for name, pl in [("waterfill", sol.placement), ("popular", popular_cache(cfg)), ("even", even_cache(cfg))]:
    print(f"{name:>9}: {total_offload(cfg, q, pl).total:.4f}")

# denser helpers flatten the allocation, sparser ones push it to the head
for lh in (2, 20, 200, 2000):
    p = waterfill(cfg.replace(lambda_h=lh / (math.pi * 500**2)), q).p_h
    print(f"{lh:>5} helpers/disk:", p[:8])
