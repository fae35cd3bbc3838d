"""Network/content domain types and the analytical offloading model.

A reference user at the origin requests content ``i``. The request is
offloaded if the user holds ``i`` itself, if some cache-enabled user within
``r_ue`` holds it, or if some helper within ``r_h`` holds it. Under PPP
thinning the per-content offload probability is::

    P_i = 1 - (1 - alpha * p_ue[i]) * exp(-(a * p_ue[i] + c * p_h[i]))

with ``a = pi * alpha * lambda_ue * r_ue**2`` and ``c = pi * lambda_h * r_h**2``.
Those two constants are the only way the network parameters enter any
formula in this package.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

__all__ = [
    "ScenarioConfig",
    "Popularity",
    "Placement",
    "OffloadReport",
    "InfeasiblePlacementError",
    "make_zipf",
    "d2d_offload",
    "helper_offload",
    "uncached_user_offload",
    "cached_user_offload",
    "offload_per_content",
    "total_offload",
    "objective",
    "objective_and_gradient",
]

FEAS_TOL = 1e-9


class InfeasiblePlacementError(ValueError):
    """Placement violates the box or budget constraints of a scenario."""


@dataclass(frozen=True)
class ScenarioConfig:
    """All network and content parameters of one scenario.

    Densities are per square meter and radii in meters. ``m_ue`` and ``m_h``
    are cache slots per cache-enabled user and per helper.
    """

    n_contents: int = 30
    gamma: float = 1.0
    lambda_ue: float = 5000 / (math.pi * 500**2)
    lambda_h: float = 50 / (math.pi * 500**2)
    r_ue: float = 15.0
    r_h: float = 100.0
    alpha: float = 0.5
    m_ue: int = 2
    m_h: int = 8

    def __post_init__(self):
        if int(self.n_contents) != self.n_contents or self.n_contents < 1:
            raise ValueError(f"n_contents must be a positive integer, got {self.n_contents!r}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        for name in ("lambda_ue", "lambda_h", "r_ue", "r_h"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")
        for name in ("m_ue", "m_h"):
            m = getattr(self, name)
            if int(m) != m or m < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {m!r}")
            if m > self.n_contents:
                raise ValueError(f"{name}={m} exceeds n_contents={self.n_contents}")
        if self.r_ue >= self.r_h > 0:
            warnings.warn(
                f"r_ue={self.r_ue} is not smaller than r_h={self.r_h}; "
                "the model still applies but this is an unusual regime",
                stacklevel=3,
            )

    @classmethod
    def table1(cls, **overrides) -> "ScenarioConfig":
        """Default parameter set (N=30, gamma=1, alpha=0.5, M_UE=2, M_H=8, ...)."""
        return cls(**overrides)

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    @cached_property
    def d2d_coef(self) -> float:
        """``a = pi * alpha * lambda_ue * r_ue**2``: mean cache-enabled neighbours in D2D range."""
        return math.pi * self.alpha * self.lambda_ue * self.r_ue**2

    @cached_property
    def helper_coef(self) -> float:
        """``c = pi * lambda_h * r_h**2``: mean helpers in range."""
        return math.pi * self.lambda_h * self.r_h**2


@dataclass(frozen=True)
class Popularity:
    """Request probabilities ``q`` over contents ranked by popularity."""

    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.ndim != 1 or q.size == 0:
            raise ValueError("popularity must be a nonempty 1-D vector")
        if np.any(q <= 0):
            raise ValueError("popularity entries must be strictly positive")
        if abs(math.fsum(q) - 1.0) > 1e-12:
            raise ValueError(f"popularity must sum to 1, got {math.fsum(q)!r}")
        if np.any(np.diff(q) > 0):
            raise ValueError("popularity must be nonincreasing")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    def __len__(self):
        return self.q.size


def make_zipf(n_contents: int, gamma: float) -> Popularity:
    """Zipf popularity ``q_i = i**-gamma / sum_j j**-gamma`` for ``i = 1..n_contents``."""
    if int(n_contents) != n_contents or n_contents < 1:
        raise ValueError(f"n_contents must be a positive integer, got {n_contents!r}")
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    weights = np.arange(1, int(n_contents) + 1, dtype=float) ** -float(gamma)
    q = weights / math.fsum(weights)
    # one more compensated pass so the sum is 1 to the last ulp
    q = q / math.fsum(q)
    return Popularity(q)


@dataclass(frozen=True)
class Placement:
    """Per-content caching probabilities at the helper and user tiers."""

    p_h: np.ndarray
    p_ue: np.ndarray

    def __post_init__(self):
        p_h = np.array(self.p_h, dtype=float)
        p_ue = np.array(self.p_ue, dtype=float)
        if p_h.ndim != 1 or p_h.shape != p_ue.shape:
            raise ValueError(f"p_h and p_ue must be 1-D of equal length, got {p_h.shape} and {p_ue.shape}")
        p_h.setflags(write=False)
        p_ue.setflags(write=False)
        object.__setattr__(self, "p_h", p_h)
        object.__setattr__(self, "p_ue", p_ue)

    def __len__(self):
        return self.p_h.size

    @classmethod
    def zeros(cls, n: int) -> "Placement":
        return cls(np.zeros(n), np.zeros(n))

    def stacked(self) -> np.ndarray:
        """``[p_ue, p_h]`` as one vector of length ``2N``."""
        return np.concatenate([self.p_ue, self.p_h])

    @classmethod
    def from_stacked(cls, x) -> "Placement":
        x = np.asarray(x, dtype=float)
        n = x.size // 2
        return cls(p_h=x[n:], p_ue=x[:n])

    def violations(self, cfg: ScenarioConfig, tol: float = FEAS_TOL) -> list[str]:
        out = []
        if len(self) != cfg.n_contents:
            return [f"placement has {len(self)} entries, scenario has {cfg.n_contents} contents"]
        for name, p, m in (("p_h", self.p_h, cfg.m_h), ("p_ue", self.p_ue, cfg.m_ue)):
            if np.any(p < -tol) or np.any(p > 1 + tol):
                out.append(f"{name} leaves [0, 1]")
            if math.fsum(p) > m + tol:
                out.append(f"sum({name}) = {math.fsum(p):.12g} exceeds budget {m}")
        return out

    def is_feasible(self, cfg: ScenarioConfig, tol: float = FEAS_TOL) -> bool:
        return not self.violations(cfg, tol)

    def check_feasible(self, cfg: ScenarioConfig, tol: float = FEAS_TOL) -> "Placement":
        bad = self.violations(cfg, tol)
        if bad:
            raise InfeasiblePlacementError("; ".join(bad))
        return self


@dataclass(frozen=True)
class OffloadReport:
    per_content: np.ndarray
    total: float
    kind: str = "analytic"
    ci_halfwidth: float | None = None
    n_trials: int | None = None
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("analytic", "empirical"):
            raise ValueError(f"unknown report kind {self.kind!r}")
        per = np.array(self.per_content, dtype=float)
        per.setflags(write=False)
        object.__setattr__(self, "per_content", per)


def _pick(values: np.ndarray, i):
    if i is None:
        return values
    n = values.size
    if not (isinstance(i, (int, np.integer)) and 0 <= i < n):
        raise IndexError(f"content index {i!r} out of range for {n} contents")
    return float(values[i])


def _exponent(cfg: ScenarioConfig, pl: Placement) -> np.ndarray:
    return cfg.d2d_coef * pl.p_ue + cfg.helper_coef * pl.p_h


def d2d_offload(cfg: ScenarioConfig, pl: Placement, i: int | None = None):
    """Probability that another cache-enabled user within ``r_ue`` holds content ``i``.

    Indices are 0-based; ``i=None`` returns the whole vector.
    """
    return _pick(-np.expm1(-cfg.d2d_coef * pl.p_ue), i)


def helper_offload(cfg: ScenarioConfig, pl: Placement, i: int | None = None):
    """Probability that a helper within ``r_h`` holds content ``i``."""
    return _pick(-np.expm1(-cfg.helper_coef * pl.p_h), i)


def uncached_user_offload(cfg: ScenarioConfig, pl: Placement, i: int | None = None):
    """Offload probability for a user without a cache (D2D or helper hit)."""
    return _pick(-np.expm1(-_exponent(cfg, pl)), i)


def cached_user_offload(cfg: ScenarioConfig, pl: Placement, i: int | None = None):
    """Offload probability for a cache-enabled user (own cache, then D2D or helper)."""
    nc = -np.expm1(-_exponent(cfg, pl))
    return _pick(pl.p_ue + (1.0 - pl.p_ue) * nc, i)


def offload_per_content(cfg: ScenarioConfig, pl: Placement, i: int | None = None):
    """Offload probability of content ``i`` averaged over cache-enabled and plain users."""
    return _pick(1.0 - (1.0 - cfg.alpha * pl.p_ue) * np.exp(-_exponent(cfg, pl)), i)


def _check_dims(cfg: ScenarioConfig, q: Popularity, pl: Placement):
    if not (len(q) == len(pl) == cfg.n_contents):
        raise ValueError(
            f"dimension mismatch: n_contents={cfg.n_contents}, len(q)={len(q)}, len(placement)={len(pl)}"
        )


def total_offload(cfg: ScenarioConfig, q: Popularity, pl: Placement) -> OffloadReport:
    _check_dims(cfg, q, pl)
    per = offload_per_content(cfg, pl)
    total = math.fsum(q.q * per)
    return OffloadReport(per_content=np.clip(per, 0.0, 1.0), total=min(max(total, 0.0), 1.0))


def objective(cfg: ScenarioConfig, q: Popularity, pl: Placement) -> float:
    """``F(P) = -sum_i q_i P_i``, unclamped."""
    _check_dims(cfg, q, pl)
    return -float(np.dot(q.q, offload_per_content(cfg, pl)))


def objective_and_gradient(cfg: ScenarioConfig, q: Popularity, pl: Placement):
    """Return ``(F, (dF/dp_ue, dF/dp_h))``.

    With ``w = 1 - alpha*p_ue`` and ``E = exp(-(a*p_ue + c*p_h))``,
    ``F = sum_i q_i (w_i E_i - 1)``, so ``dF/dp_ue = -q E (alpha + a w)`` and
    ``dF/dp_h = -q c w E``.
    """
    _check_dims(cfg, q, pl)
    a, c, alpha = cfg.d2d_coef, cfg.helper_coef, cfg.alpha
    e = np.exp(-_exponent(cfg, pl))
    w = 1.0 - alpha * pl.p_ue
    f = float(np.dot(q.q, w * e - 1.0))
    g_ue = -q.q * e * (alpha + a * w)
    g_h = -q.q * c * w * e
    return f, (g_ue, g_h)
