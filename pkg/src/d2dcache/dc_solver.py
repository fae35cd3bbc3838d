"""DC programming for the joint helper/user placement.

The objective ``F(P) = -sum_i q_i P_i`` is split as ``F = G - H`` with

    H(P) = s * sum_i q_i * alpha * c * (p_ue[i]**2 + p_h[i]**2)

(``c = pi * lambda_h * r_h**2``, ``s`` the convexifier scale, 1 by default)
and ``G = F + H`` convex. Each outer step linearizes ``H`` at the current
iterate and minimizes the convex surrogate ``G(P) - <grad H(P_k), P>`` over
the product of two capped simplices, which never increases ``F``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .model import Placement, Popularity, ScenarioConfig, objective_and_gradient
from .projection import CappedSimplex, project

__all__ = [
    "DcSettings",
    "DcTrace",
    "NonMonotoneDescentError",
    "convexifier_h",
    "surrogate_hessian_min_eig",
    "projected_gradient_norm",
    "dc_optimize",
]

log = logging.getLogger(__name__)

DESCENT_SLACK = 1e-9


class NonMonotoneDescentError(RuntimeError):
    """The outer DC loop increased F even at the largest convexifier scale."""


@dataclass(frozen=True)
class DcSettings:
    epsilon: float = 1e-6
    max_outer_iters: int = 500
    inner_tol: float = 1e-10
    inner_max_iters: int = 5000
    convexifier_scale: float = 1.0
    max_convexifier_scale: float = 16.0
    # "diagonal" scales the projected step by the surrogate's Hessian diagonal
    inner_metric: str = "diagonal"
    armijo: float = 1e-4
    # extrapolate along each DC step when that lowers F further
    boost: bool = True

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.convexifier_scale < 1:
            raise ValueError("convexifier_scale must be >= 1")
        if self.inner_metric not in ("diagonal", "euclidean"):
            raise ValueError(f"unknown inner_metric {self.inner_metric!r}")


@dataclass
class DcTrace:
    iterates: list = field(default_factory=list)
    converged: bool = False
    reason: str = "max-iters"
    convexifier_scale: float = 1.0
    inner_iterations: list = field(default_factory=list)
    restarts: int = 0

    @property
    def objective_values(self) -> np.ndarray:
        return np.array([f for _, f in self.iterates])

    @property
    def outer_iterations(self) -> int:
        return max(len(self.iterates) - 1, 0)

    def is_monotone(self, slack: float = DESCENT_SLACK) -> bool:
        f = self.objective_values
        return bool(np.all(np.diff(f) <= slack))


def convexifier_h(cfg: ScenarioConfig, q: Popularity, pl: Placement, scale: float = 1.0):
    """Return ``(H, (dH/dp_ue, dH/dp_h))``."""
    k = scale * cfg.alpha * cfg.helper_coef * q.q
    h = float(np.dot(k, pl.p_ue**2 + pl.p_h**2))
    return h, (2 * k * pl.p_ue, 2 * k * pl.p_h)


def _hessian_blocks(cfg, q, u, h, scale):
    """Per-content 2x2 Hessian ``[[A, B], [B, C]]`` of ``G = F + H`` (times 1/q_i)."""
    a, c, alpha = cfg.d2d_coef, cfg.helper_coef, cfg.alpha
    e = np.exp(-(a * u + c * h))
    w = 1.0 - alpha * u
    k2 = 2 * scale * alpha * c
    A = e * (2 * alpha * a + a * a * w) + k2
    C = e * c * c * w + k2
    B = e * c * (alpha + a * w)
    return A, B, C


def surrogate_hessian_min_eig(cfg: ScenarioConfig, q: Popularity, pl: Placement, scale: float = 1.0) -> float:
    """Smallest eigenvalue of the Hessian of ``G`` at ``pl`` (block diagonal, closed form)."""
    A, B, C = _hessian_blocks(cfg, q, pl.p_ue, pl.p_h, scale)
    eig = 0.5 * (A + C) - np.sqrt(0.25 * (A - C) ** 2 + B * B)
    return float(np.min(q.q * eig))


def projected_gradient_norm(cfg: ScenarioConfig, q: Popularity, pl: Placement) -> float:
    """``||P - proj(P - grad F(P))||`` over the feasible set."""
    _, (g_ue, g_h) = objective_and_gradient(cfg, q, pl)
    n = cfg.n_contents
    r_ue = pl.p_ue - project(CappedSimplex(n, cfg.m_ue), pl.p_ue - g_ue)
    r_h = pl.p_h - project(CappedSimplex(n, cfg.m_h), pl.p_h - g_h)
    return float(math.hypot(np.linalg.norm(r_ue), np.linalg.norm(r_h)))


class _Surrogate:
    """``phi(P) = G(P) - <grad H(P_k), P>`` on stacked ``x = [p_ue, p_h]``."""

    def __init__(self, cfg, q, scale, lin_ue, lin_h):
        self.cfg, self.q, self.scale = cfg, q.q, scale
        self.lin_ue, self.lin_h = lin_ue, lin_h
        self.k = scale * cfg.alpha * cfg.helper_coef * q.q

    def value_grad(self, u, h):
        cfg, q = self.cfg, self.q
        a, c, alpha = cfg.d2d_coef, cfg.helper_coef, cfg.alpha
        e = np.exp(-(a * u + c * h))
        w = 1.0 - alpha * u
        val = float(np.dot(q, w * e - 1.0) + np.dot(self.k, u * u + h * h) - np.dot(self.lin_ue, u) - np.dot(self.lin_h, h))
        g_u = -q * e * (alpha + a * w) + 2 * self.k * u - self.lin_ue
        g_h = -q * c * w * e + 2 * self.k * h - self.lin_h
        return val, g_u, g_h

    def value(self, u, h):
        cfg = self.cfg
        e = np.exp(-(cfg.d2d_coef * u + cfg.helper_coef * h))
        w = 1.0 - cfg.alpha * u
        return float(np.dot(self.q, w * e - 1.0) + np.dot(self.k, u * u + h * h) - np.dot(self.lin_ue, u) - np.dot(self.lin_h, h))

    def diag_hessian(self, u, h):
        A, _, C = _hessian_blocks(self.cfg, None, u, h, self.scale)
        d_u, d_h = self.q * A, self.q * C
        floor = 1e-12 * max(d_u.max(), d_h.max(), 1e-300)
        return np.maximum(d_u, floor), np.maximum(d_h, floor)


def _solve_surrogate(sur: _Surrogate, cs_ue, cs_h, u, h, settings: DcSettings, tol: float):
    """Projected gradient with Armijo backtracking (halving from step 1.0).

    Stops when the unit-step projected displacement is below ``tol``.
    """
    val, g_u, g_h = sur.value_grad(u, h)
    it = 0
    for it in range(1, settings.inner_max_iters + 1):
        if settings.inner_metric == "diagonal":
            d_u, d_h = sur.diag_hessian(u, h)
        else:
            d_u, d_h = np.ones_like(u), np.ones_like(h)

        def trial(step):
            return (
                project(cs_ue, u - step * g_u / d_u, weights=d_u),
                project(cs_h, h - step * g_h / d_h, weights=d_h),
            )

        nu, nh = trial(1.0)
        du, dh = nu - u, nh - h
        if math.hypot(np.linalg.norm(du), np.linalg.norm(dh)) <= tol:
            return u, h, it - 1, True
        step = 1.0
        for _ in range(60):
            slope = float(np.dot(g_u, du) + np.dot(g_h, dh))
            if slope >= -1e-15 * max(abs(val), 1.0):
                # descent below double precision resolution
                return u, h, it - 1, True
            new = sur.value(nu, nh)
            if new <= val + settings.armijo * slope:
                break
            step *= 0.5
            nu, nh = trial(step)
            du, dh = nu - u, nh - h
        else:
            return u, h, it - 1, True
        u, h = nu, nh
        val, g_u, g_h = sur.value_grad(u, h)
    return u, h, it, False


def _boost(cfg, q, cs_ue, cs_h, prev: Placement, new: Placement, f_new: float, lam: float):
    """Extrapolate along ``new - prev``; keep the point only if F drops by ``rho * ||z - new||^2``."""
    d_u, d_h = new.p_ue - prev.p_ue, new.p_h - prev.p_h
    rho = 1e-4
    while lam > 1e-3:
        z = Placement(
            p_h=project(cs_h, new.p_h + lam * d_h),
            p_ue=project(cs_ue, new.p_ue + lam * d_u),
        )
        move = np.sum((z.p_ue - new.p_ue) ** 2) + np.sum((z.p_h - new.p_h) ** 2)
        if move == 0:
            break
        f_z, _ = objective_and_gradient(cfg, q, z)
        if f_z <= f_new - rho * move:
            return z, f_z, lam
        lam *= 0.5
    return new, f_new, 0.0


def _even_start(cfg: ScenarioConfig) -> Placement:
    n = cfg.n_contents
    return Placement(p_h=np.full(n, cfg.m_h / n), p_ue=np.full(n, cfg.m_ue / n))


def _run(cfg, q, settings, init, scale):
    n = cfg.n_contents
    cs_ue, cs_h = CappedSimplex(n, cfg.m_ue), CappedSimplex(n, cfg.m_h)
    trace = DcTrace(convexifier_scale=scale)
    pl = init
    f, _ = objective_and_gradient(cfg, q, pl)
    trace.iterates.append((pl, f))
    last_step, lam = 1.0, 1.0
    for _ in range(settings.max_outer_iters):
        if surrogate_hessian_min_eig(cfg, q, pl, scale) < -1e-12:
            return None, trace
        _, (lin_ue, lin_h) = convexifier_h(cfg, q, pl, scale)
        sur = _Surrogate(cfg, q, scale, lin_ue, lin_h)
        # inexact early solves are fine: any surrogate decrease from pl lowers F
        tol = max(settings.inner_tol, min(1e-4, 1e-2 * last_step))
        u, h, inner_its, _ = _solve_surrogate(sur, cs_ue, cs_h, pl.p_ue.copy(), pl.p_h.copy(), settings, tol)
        new = Placement(p_h=h, p_ue=u)
        f_new, _ = objective_and_gradient(cfg, q, new)
        trace.inner_iterations.append(inner_its)
        if f_new > f + DESCENT_SLACK:
            return None, trace
        if settings.boost:
            new, f_new, used = _boost(cfg, q, cs_ue, cs_h, pl, new, f_new, 2 * lam if lam else 1.0)
            lam = used
        step = math.hypot(np.linalg.norm(new.p_ue - pl.p_ue), np.linalg.norm(new.p_h - pl.p_h))
        trace.iterates.append((new, f_new))
        done_f, done_x = abs(f - f_new) <= settings.epsilon, step <= settings.epsilon
        pl, f, last_step = new, f_new, step
        if done_f or done_x:
            trace.converged = True
            trace.reason = "objective-delta" if done_f else "iterate-delta"
            break
    return pl, trace


def dc_optimize(cfg: ScenarioConfig, q: Popularity, settings: DcSettings | None = None, init: Placement | None = None):
    """Run DC programming from ``init`` (even placement by default).

    Returns ``(placement, trace)``. The loop stops when the objective or the
    iterate moves by at most ``settings.epsilon``; otherwise ``trace.converged``
    is False with ``reason="max-iters"``. If the surrogate loses convexity or
    the objective goes up, the convexifier scale is doubled and the run
    restarted; past ``max_convexifier_scale`` this raises
    :class:`NonMonotoneDescentError`.
    """
    settings = settings or DcSettings()
    if len(q) != cfg.n_contents:
        raise ValueError(f"popularity has {len(q)} entries, scenario has {cfg.n_contents}")
    init = (init or _even_start(cfg)).check_feasible(cfg)
    scale = settings.convexifier_scale
    restarts = 0
    while True:
        pl, trace = _run(cfg, q, settings, init, scale)
        if pl is not None:
            trace.restarts = restarts
            return pl, trace
        if scale * 2 > settings.max_convexifier_scale:
            raise NonMonotoneDescentError(
                f"DC descent failed at convexifier scale {scale} after {trace.outer_iterations} outer iterations"
            )
        log.warning("surrogate not convex or F increased at scale %g; restarting at %g", scale, 2 * scale)
        scale *= 2
        restarts += 1
