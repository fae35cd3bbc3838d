"""Monte Carlo check of the analytical offload model.

Each trial drops a helper PPP and a user PPP on a disk of radius
``region_radius`` around a reference user at the origin, realizes every
relevant node's cache from a placement, draws one request from the
popularity law and resolves it in protocol order: own cache, then any
cache-enabled user within ``r_ue``, then any helper within ``r_h``, else the
cellular network.

Only nodes inside a window of twice the service radius are given positions
and caches. The count of region points falling in the window is drawn as a
binomial thinning of the region count, so the window process has exactly
the law of the region process restricted to it, and nodes outside the
window can never serve the origin.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import OffloadReport, Placement, Popularity, ScenarioConfig

__all__ = [
    "SimSettings",
    "TrialOutcomes",
    "SELF",
    "D2D",
    "HELPER",
    "CELLULAR",
    "RESOLUTIONS",
    "CACHE_MODES",
    "sample_ppp",
    "assign_caches",
    "run_trials",
    "simulate_offloading",
]

SELF, D2D, HELPER, CELLULAR = 0, 1, 2, 3
RESOLUTIONS = ("self", "d2d", "helper", "cellular")
CACHE_MODES = ("independent", "capacity-exact")
Z95 = 1.959963984540054


@dataclass(frozen=True)
class SimSettings:
    region_radius: float = 500.0
    n_trials: int = 100_000
    rng_seed: int = 0
    cache_mode: str = "independent"
    block_size: int = 10_000

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be positive")
        if self.cache_mode not in CACHE_MODES:
            raise ValueError(f"cache_mode must be one of {CACHE_MODES}, got {self.cache_mode!r}")
        if self.block_size < 1:
            raise ValueError("block_size must be positive")

    def check(self, cfg: ScenarioConfig) -> None:
        if self.region_radius < max(cfg.r_h, cfg.r_ue):
            raise ValueError(
                f"region_radius={self.region_radius} must cover both service radii "
                f"(r_h={cfg.r_h}, r_ue={cfg.r_ue})"
            )


def sample_ppp(density: float, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous PPP on the disk of ``radius`` around the origin, as an ``(n, 2)`` array."""
    if density < 0:
        raise ValueError("density must be nonnegative")
    n = rng.poisson(density * math.pi * radius**2)
    return _uniform_disk(n, radius, rng)


def _uniform_disk(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    theta = rng.uniform(0.0, 2 * math.pi, n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def assign_caches(n_nodes: int, p, slots: int, mode: str, rng: np.random.Generator) -> np.ndarray:
    """Realize node caches as an ``(n_nodes, N)`` boolean membership matrix.

    ``independent``: content ``i`` is cached with probability ``p[i]``
    independently of everything else, so cache sizes vary around ``sum(p)``.
    ``capacity-exact``: systematic (Madow) sampling with inclusion
    probabilities ``p``, padded by a slack pseudo-content to an integer
    total; every node holds at most ``ceil(sum(p)) <= slots`` contents.
    """
    p = np.asarray(p, dtype=float)
    if mode == "independent":
        return rng.random((n_nodes, p.size)) < p
    if mode != "capacity-exact":
        raise ValueError(f"unknown cache mode {mode!r}")
    return _madow(n_nodes, p, slots, rng.random(n_nodes))


def _madow(n_nodes: int, p: np.ndarray, slots: int, u: np.ndarray) -> np.ndarray:
    total = math.fsum(p)
    if total > slots + 1e-9:
        raise ValueError(f"placement sums to {total:.12g}, more than the {slots} cache slots")
    edges = np.concatenate([[0.0], np.cumsum(p)])
    # item i holds the systematic points u, u+1, ... that fall in [edges[i], edges[i+1])
    upper = np.ceil(edges[None, 1:] - u[:, None])
    lower = np.ceil(edges[None, :-1] - u[:, None])
    sets = upper > lower
    sets[:, p >= 1.0] = True
    sets[:, p <= 0.0] = False
    return sets


def _member(n_nodes: int, p: np.ndarray, slots: int, mode: str, wanted: np.ndarray, rng) -> np.ndarray:
    """Whether each node's realized cache holds its ``wanted`` content."""
    if n_nodes == 0:
        return np.zeros(0, dtype=bool)
    sets = assign_caches(n_nodes, p, slots, mode, rng)
    return sets[np.arange(n_nodes), wanted]


def _any_holder(cfg_radius, density, p, slots, mode, region, wanted, rng) -> np.ndarray:
    """Per trial: does any node of this tier within ``cfg_radius`` hold the wanted content?"""
    b = wanted.size
    if density <= 0 or cfg_radius <= 0:
        return np.zeros(b, dtype=bool)
    window = min(region, 2.0 * cfg_radius)
    in_region = rng.poisson(density * math.pi * region**2, size=b)
    counts = rng.binomial(in_region, (window / region) ** 2)
    owner = np.repeat(np.arange(b), counts)
    pos = _uniform_disk(owner.size, window, rng)
    near = np.hypot(pos[:, 0], pos[:, 1]) <= cfg_radius
    hit = _member(owner.size, p, slots, mode, wanted[owner], rng) & near
    return np.bincount(owner, weights=hit, minlength=b) > 0


class TrialOutcomes(NamedTuple):
    content: np.ndarray
    resolution: np.ndarray
    cache_enabled: np.ndarray


def _block(cfg, q, pl, sim, rng, size):
    n = cfg.n_contents
    wanted = rng.choice(n, size=size, p=q.q)
    enabled = rng.random(size) < cfg.alpha
    own = np.zeros(size, dtype=bool)
    idx = np.flatnonzero(enabled)
    own[idx] = _member(idx.size, pl.p_ue, cfg.m_ue, sim.cache_mode, wanted[idx], rng)
    # other cache-enabled users form a PPP of density alpha * lambda_ue
    d2d = _any_holder(cfg.r_ue, cfg.alpha * cfg.lambda_ue, pl.p_ue, cfg.m_ue, sim.cache_mode, sim.region_radius, wanted, rng)
    helper = _any_holder(cfg.r_h, cfg.lambda_h, pl.p_h, cfg.m_h, sim.cache_mode, sim.region_radius, wanted, rng)
    resolution = np.select([own, d2d, helper], [SELF, D2D, HELPER], default=CELLULAR).astype(np.int8)
    return wanted, resolution, enabled


def run_trials(cfg: ScenarioConfig, q: Popularity, pl: Placement, sim: SimSettings) -> TrialOutcomes:
    """Simulate ``sim.n_trials`` requests; block ``k`` draws from the stream keyed by ``(rng_seed, k)``."""
    sim.check(cfg)
    if len(q) != cfg.n_contents or len(pl) != cfg.n_contents:
        raise ValueError("popularity and placement must match n_contents")
    pl.check_feasible(cfg)
    parts = []
    done, k = 0, 0
    while done < sim.n_trials:
        size = min(sim.block_size, sim.n_trials - done)
        rng = np.random.default_rng(np.random.SeedSequence(sim.rng_seed, spawn_key=(k,)))
        parts.append(_block(cfg, q, pl, sim, rng, size))
        done += size
        k += 1
    return TrialOutcomes(*(np.concatenate(col) for col in zip(*parts)))


def simulate_offloading(cfg: ScenarioConfig, q: Popularity, pl: Placement, sim: SimSettings) -> OffloadReport:
    """Empirical offload probabilities with a 95% normal-approximation half-width."""
    if sim.n_trials < 1000:
        warnings.warn("fewer than 1000 trials; the normal-approximation interval is unreliable", stacklevel=2)
    out = run_trials(cfg, q, pl, sim)
    n = sim.n_trials
    offloaded = out.resolution != CELLULAR
    requests = np.bincount(out.content, minlength=cfg.n_contents)
    hits = np.bincount(out.content, weights=offloaded, minlength=cfg.n_contents)
    per = np.divide(hits, requests, out=np.zeros(cfg.n_contents), where=requests > 0)
    total = float(offloaded.mean())
    half = Z95 * math.sqrt(total * (1 - total) / n) + 0.5 / n
    counts = {name: int(np.count_nonzero(out.resolution == code)) for code, name in enumerate(RESOLUTIONS)}
    return OffloadReport(per_content=per, total=total, kind="empirical", ci_halfwidth=half, n_trials=n, counts=counts)
