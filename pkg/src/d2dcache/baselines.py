"""Reference placements the optimized one is compared against."""

from __future__ import annotations

import numpy as np

from .extreme import usertier_solve, waterfill
from .model import Placement, Popularity, ScenarioConfig

__all__ = ["popular_cache", "even_cache", "non_joint", "SCHEMES"]


def popular_cache(cfg: ScenarioConfig) -> Placement:
    """Every node caches the ``m`` most popular contents of its tier."""
    n = cfg.n_contents
    return Placement(
        p_h=(np.arange(n) < cfg.m_h).astype(float),
        p_ue=(np.arange(n) < cfg.m_ue).astype(float),
    )


def even_cache(cfg: ScenarioConfig) -> Placement:
    n = cfg.n_contents
    return Placement(p_h=np.full(n, cfg.m_h / n), p_ue=np.full(n, cfg.m_ue / n))


def non_joint(cfg: ScenarioConfig, q: Popularity) -> Placement:
    """Helper tier from water-filling, user tier from the user-only problem, solved separately.

    A tier that cannot contribute (no helpers in range, or no cache-enabled
    users) gets the even placement, as its values do not affect the offload.
    """
    n = cfg.n_contents
    if cfg.helper_coef > 0 and cfg.m_h > 0:
        p_h = waterfill(cfg, q).p_h
    else:
        p_h = np.full(n, cfg.m_h / n)
    p_ue = usertier_solve(cfg, q).p_ue
    return Placement(p_h=p_h, p_ue=p_ue)


SCHEMES = ("dc", "popular", "even", "nonjoint")
