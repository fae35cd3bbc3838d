"""Optimal placements for the two one-tier extremes.

* ``alpha = 0``: only helpers cache. The problem is separable and convex and
  its solution is a water-filling allocation over ``ln q_i``.
* ``lambda_h * m_h = 0``: only users cache. Still separable and convex; solved
  here by bisection on the budget multiplier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Placement, Popularity, ScenarioConfig
from .projection import bisect

__all__ = ["WaterfillSolution", "UserTierSolution", "waterfill", "usertier_solve", "marginal_gain_ue"]


def _as_q(q) -> np.ndarray:
    return np.asarray(q.q if isinstance(q, Popularity) else q, dtype=float)


@dataclass(frozen=True)
class WaterfillSolution:
    p_h: np.ndarray
    beta: float
    saturated: np.ndarray
    dry: np.ndarray

    @property
    def placement(self) -> Placement:
        return Placement(p_h=self.p_h, p_ue=np.zeros_like(self.p_h))


def _fill(beta: float, offsets: np.ndarray) -> np.ndarray:
    return np.minimum(np.maximum(beta + offsets, 0.0), 1.0)


def waterfill(cfg: ScenarioConfig, q) -> WaterfillSolution:
    """Helper-tier placement ``p_i = min((beta + ln(q_i)/c)^+, 1)`` with ``sum(p) = m_h``.

    ``c = pi * lambda_h * r_h**2``. Contents with ``q_i = 0`` get ``p_i = 0``.
    """
    q = _as_q(q)
    n, m = q.size, cfg.m_h
    if n != cfg.n_contents:
        raise ValueError(f"popularity has {n} entries, scenario has {cfg.n_contents}")
    c = cfg.helper_coef
    if c <= 0:
        raise ValueError("water-filling needs lambda_h > 0 and r_h > 0")
    if not 1 <= m <= n:
        raise ValueError(f"water-filling needs 1 <= m_h <= n_contents, got m_h={m}")

    live = q > 0
    offsets = np.full(n, -np.inf)
    offsets[live] = np.log(q[live]) / c

    if live.sum() <= m:
        p = live.astype(float)
        beta = float(1.0 - offsets[live].min())
    else:
        lo = float(-offsets[live].max())
        hi = float(1.0 - offsets[live].min())
        beta = bisect(lambda b: _fill(b, offsets).sum() - m, lo, hi, tol=0.0)
        # the sum is linear in beta on the free set; solve it exactly there
        p = _fill(beta, offsets)
        free = (p > 0) & (p < 1)
        if free.any():
            n_sat = np.count_nonzero(p >= 1)
            exact = (m - n_sat - offsets[free].sum()) / free.sum()
            p_exact = _fill(exact, offsets)
            same_sets = np.array_equal((p_exact > 0) & (p_exact < 1), free) and np.count_nonzero(p_exact >= 1) == n_sat
            if same_sets and abs(p_exact.sum() - m) <= abs(p.sum() - m):
                beta, p = float(exact), p_exact
    return WaterfillSolution(
        p_h=p,
        beta=float(beta),
        saturated=np.flatnonzero(p >= 1.0),
        dry=np.flatnonzero(p <= 0.0),
    )


def marginal_gain_ue(cfg: ScenarioConfig, q, p_ue) -> np.ndarray:
    """``d/dp_i [q_i P_i]`` at the user tier with no helpers: ``q_i e^{-b p_i} (alpha + b (1 - alpha p_i))``."""
    q = _as_q(q)
    b, alpha = cfg.d2d_coef, cfg.alpha
    p_ue = np.asarray(p_ue, dtype=float)
    return q * np.exp(-b * p_ue) * (alpha + b * (1.0 - alpha * p_ue))


@dataclass(frozen=True)
class UserTierSolution:
    p_ue: np.ndarray
    mu: float
    degenerate: bool = False

    @property
    def placement(self) -> Placement:
        return Placement(p_h=np.zeros_like(self.p_ue), p_ue=self.p_ue)


def _even_over_ties(q: np.ndarray, m: float) -> np.ndarray:
    """Maximize ``sum q_i p_i`` over the capped simplex, splitting ties evenly."""
    p = np.zeros_like(q)
    left = float(m)
    for level in np.unique(q)[::-1]:
        if left <= 0:
            break
        group = q == level
        k = group.sum()
        share = min(1.0, left / k)
        p[group] = share
        left -= share * k
    return p


def _invert_gain(cfg: ScenarioConfig, q: np.ndarray, mu: float, iters: int = 80) -> np.ndarray:
    """Per-coordinate ``p_i(mu)``: the root of ``gain_i(p) = mu`` clipped to ``[0, 1]``."""
    g0 = marginal_gain_ue(cfg, q, np.zeros_like(q))
    g1 = marginal_gain_ue(cfg, q, np.ones_like(q))
    lo = np.zeros_like(q)
    hi = np.ones_like(q)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        above = marginal_gain_ue(cfg, q, mid) > mu
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    p = 0.5 * (lo + hi)
    p[g0 <= mu] = 0.0
    p[g1 >= mu] = 1.0
    return p


def usertier_solve(cfg: ScenarioConfig, q) -> UserTierSolution:
    """User-tier placement maximizing ``sum q_i (1 - (1 - alpha p_i) e^{-b p_i})``.

    ``b = pi * alpha * lambda_ue * r_ue**2``. For a budget multiplier ``mu`` each
    coordinate solves ``gain_i(p_i) = mu`` (``gain_i`` strictly decreasing);
    ``mu`` is then bisected so the budget binds.

    With ``alpha = 0`` the objective is constant: the even placement is
    returned with ``degenerate=True``. With ``b = 0`` but ``alpha > 0`` only
    self-offloading remains, which is linear in ``p``.
    """
    q = _as_q(q)
    n, m = q.size, cfg.m_ue
    if n != cfg.n_contents:
        raise ValueError(f"popularity has {n} entries, scenario has {cfg.n_contents}")
    if cfg.alpha == 0:
        return UserTierSolution(np.full(n, m / n), mu=0.0, degenerate=True)
    if m >= n:
        return UserTierSolution(np.ones(n), mu=0.0)
    if m == 0:
        return UserTierSolution(np.zeros(n), mu=float(marginal_gain_ue(cfg, q, np.zeros(n)).max()))
    if cfg.d2d_coef == 0:
        p = _even_over_ties(q, m)
        return UserTierSolution(p, mu=float(cfg.alpha * q[p < 1].max(initial=0.0)))

    if _invert_gain(cfg, q, 0.0).sum() <= m:
        return UserTierSolution(_invert_gain(cfg, q, 0.0), mu=0.0)
    mu_hi = float(marginal_gain_ue(cfg, q, np.zeros(n)).max())
    mu = bisect(lambda mu: _invert_gain(cfg, q, mu).sum() - m, 0.0, mu_hi, tol=0.0)
    p = _invert_gain(cfg, q, mu)
    # ties in q make the sum jump; spread any excess or shortfall over the interior
    gap = m - p.sum()
    free = (p > 0) & (p < 1)
    if abs(gap) > 1e-12 and free.any():
        p[free] = np.clip(p[free] + gap / free.sum(), 0.0, 1.0)
    return UserTierSolution(p, mu=float(mu))
