"""
Offloading versus user density
==============================

Sweep the user density and compare the four schemes. The same table can
be produced from the shell with::

    d2dcache sweep --config configs/table1.cfg --param lambda_ue --grid 0:0.3e-2:6 --out -
"""

import numpy as np

from d2dcache import ScenarioConfig, dc_optimize, even_cache, make_zipf, non_joint, popular_cache, total_offload
from d2dcache.projection import bisect

cfg0 = ScenarioConfig.table1()
q = make_zipf(cfg0.n_contents, cfg0.gamma)

print(f"{'lambda_ue':>10} {'dc':>8} {'popular':>8} {'even':>8} {'nonjoint':>8}")
for lue in np.arange(6) * 0.3e-2:
    cfg = cfg0.replace(lambda_ue=float(lue))
    dc, _ = dc_optimize(cfg, q)
    row = [total_offload(cfg, q, p).total for p in (dc, popular_cache(cfg), even_cache(cfg), non_joint(cfg, q))]
    print(f"{lue:10.4f} " + " ".join(f"{v:8.4f}" for v in row))

# where does even caching overtake popular caching?
gap = lambda lue: (total_offload(cfg0.replace(lambda_ue=lue), q, even_cache(cfg0)).total
                   - total_offload(cfg0.replace(lambda_ue=lue), q, popular_cache(cfg0)).total)
print("even overtakes popular at lambda_ue ~", f"{bisect(gap, 1e-3, 5e-2):.4g}")
