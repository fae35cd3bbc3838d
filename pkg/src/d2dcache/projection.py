"""Capped-simplex projection and scalar bisection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

__all__ = ["CappedSimplex", "NoBracketError", "BisectResult", "project", "bisect"]


class NoBracketError(ValueError):
    pass


@dataclass(frozen=True)
class CappedSimplex:
    """The set ``{p : 0 <= p_i <= 1, sum(p) <= budget}`` in ``dim`` dimensions."""

    dim: int
    budget: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if not 0 <= self.budget <= self.dim:
            raise ValueError(f"budget must lie in [0, dim={self.dim}], got {self.budget}")

    def contains(self, p, tol: float = 1e-9) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= -tol) and np.all(p <= 1 + tol) and p.sum() <= self.budget + tol)


def _shift(v: np.ndarray, inv_w: np.ndarray, budget: float) -> float:
    """Smallest ``tau >= 0`` with ``sum(clip(v - tau*inv_w, 0, 1)) <= budget``.

    The sum is piecewise linear and nonincreasing in ``tau``; coordinate ``i``
    is free on ``((v_i - 1)/inv_w_i, v_i/inv_w_i)`` with slope ``-inv_w_i``.
    Walk the sorted breakpoints and interpolate on the crossing segment.
    """
    s0 = np.clip(v, 0.0, 1.0).sum()
    if s0 <= budget:
        return 0.0
    w = 1.0 / inv_w
    times = np.maximum(np.concatenate([w * (v - 1.0), w * v]), 0.0)
    dslope = np.concatenate([-inv_w, inv_w])
    order = np.argsort(times, kind="stable")
    times, dslope = times[order], dslope[order]
    slope = np.cumsum(dslope)
    # s at each breakpoint: s0 plus the area under the slope up to it
    s = s0 + np.concatenate([[0.0], np.cumsum(slope[:-1] * np.diff(times))])
    k = int(np.argmax(s <= budget))
    if s[k] > budget:
        return float(times[-1])
    if k == 0:
        return float(times[0])
    return float(times[k - 1] + (s[k - 1] - budget) / -slope[k - 1])


def project(cs: CappedSimplex, v, weights=None) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``cs``.

    With ``weights`` the projection is in the metric ``sum_i w_i (p_i - v_i)**2``,
    which gives ``p_i = clip(v_i - tau / w_i, 0, 1)``.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (cs.dim,):
        raise ValueError(f"vector of shape {v.shape} does not match dim {cs.dim}")
    inv_w = np.ones_like(v) if weights is None else 1.0 / np.asarray(weights, dtype=float)
    tau = _shift(v, inv_w, cs.budget)
    return np.clip(v - tau * inv_w, 0.0, 1.0)


class BisectResult(NamedTuple):
    root: float
    converged: bool
    iterations: int


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    max_iter: int = 200,
    max_expand: int = 60,
    full_output: bool = False,
):
    """Root of a monotone scalar function by bisection.

    Stops when ``|f(x)| <= tol`` or the bracket is narrower than ``tol``.
    With ``tol=0`` it runs until the bracket cannot shrink further in
    floating point. If ``f(lo)`` and ``f(hi)`` share a sign, the bracket is
    grown by doubling its width toward the side the root must lie on.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return BisectResult(lo, True, 0) if full_output else lo
    if fhi == 0:
        return BisectResult(hi, True, 0) if full_output else hi

    expansions = 0
    while np.sign(flo) == np.sign(fhi):
        if expansions >= max_expand:
            raise NoBracketError(f"no sign change on [{lo}, {hi}] after {max_expand} expansions")
        width = hi - lo if hi > lo else 1.0
        increasing = fhi > flo
        if flo == fhi:
            lo, hi = lo - width, hi + width
        elif increasing == (flo < 0):
            lo, hi = hi, hi + 2 * width
        else:
            lo, hi = lo - 2 * width, lo
        flo, fhi = f(lo), f(hi)
        expansions += 1
        if flo == 0:
            return BisectResult(lo, True, 0) if full_output else lo
        if fhi == 0:
            return BisectResult(hi, True, 0) if full_output else hi

    converged = False
    it = 0
    mid = 0.5 * (lo + hi)
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if abs(fmid) <= tol or fmid == 0:
            converged = True
            break
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi = mid
        if hi - lo <= tol or not lo < 0.5 * (lo + hi) < hi:
            mid = 0.5 * (lo + hi)
            converged = True
            break
    return BisectResult(mid, converged, it) if full_output else mid
