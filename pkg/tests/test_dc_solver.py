import math

import numpy as np
import pytest

from d2dcache import (
    DcSettings,
    NonMonotoneDescentError,
    Placement,
    ScenarioConfig,
    convexifier_h,
    dc_optimize,
    even_cache,
    make_zipf,
    non_joint,
    objective_and_gradient,
    popular_cache,
    total_offload,
    usertier_solve,
    waterfill,
)
from d2dcache import dc_solver
from d2dcache.dc_solver import projected_gradient_norm

from conftest import random_placement


def test_convexifier_examples(table1, zipf30):
    h, (gu, gh) = convexifier_h(table1, zipf30, Placement.zeros(30))
    assert h == 0 and not gu.any() and not gh.any()
    rng = np.random.default_rng(0)
    cfg0 = table1.replace(alpha=0.0)
    assert convexifier_h(cfg0, zipf30, random_placement(rng, table1))[0] == 0
    pl = Placement(p_h=np.r_[1.0, np.zeros(29)], p_ue=np.r_[1.0, np.zeros(29)])
    assert convexifier_h(table1, zipf30, pl)[0] == pytest.approx(2 * zipf30.q[0], rel=1e-14)


def test_convexifier_gradient_fd(table1, zipf30):
    rng = np.random.default_rng(1)
    for _ in range(10):
        pl = random_placement(rng, table1)
        _, (gu, gh) = convexifier_h(table1, zipf30, pl, scale=1.5)
        g = np.concatenate([gu, gh])
        x = pl.stacked()
        fd = np.empty_like(x)
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = 1e-6
            fd[k] = (
                convexifier_h(table1, zipf30, Placement.from_stacked(x + e), 1.5)[0]
                - convexifier_h(table1, zipf30, Placement.from_stacked(x - e), 1.5)[0]
            ) / 2e-6
        assert np.max(np.abs(g - fd)) <= 1e-5 * np.max(np.abs(g))


def _g_gradient(cfg, q, x):
    pl = Placement.from_stacked(x)
    _, (fu, fh) = objective_and_gradient(cfg, q, pl)
    _, (hu, hh) = convexifier_h(cfg, q, pl)
    return np.concatenate([fu + hu, fh + hh])


def test_surrogate_numerically_convex(table1, zipf30):
    rng = np.random.default_rng(5)
    step = 1e-5
    for _ in range(50):
        x = random_placement(rng, table1).stacked()
        hess = np.empty((x.size, x.size))
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = step
            hess[:, k] = (_g_gradient(table1, zipf30, x + e) - _g_gradient(table1, zipf30, x - e)) / (2 * step)
        hess = 0.5 * (hess + hess.T)
        assert np.linalg.eigvalsh(hess).min() >= -1e-6
        pl = Placement.from_stacked(x)
        assert dc_solver.surrogate_hessian_min_eig(table1, zipf30, pl) >= 0


def test_all_budgets_slack_goes_to_corner(zipf30):
    cfg = ScenarioConfig(alpha=1.0, m_ue=30, m_h=30)
    pl, trace = dc_optimize(cfg, zipf30)
    assert trace.converged
    np.testing.assert_allclose(pl.p_ue, 1, atol=1e-6)
    np.testing.assert_allclose(pl.p_h, 1, atol=1e-6)


def test_alpha_zero_matches_waterfill(table1, zipf30):
    cfg = table1.replace(alpha=0.0)
    pl, trace = dc_optimize(cfg, zipf30)
    assert trace.converged
    np.testing.assert_allclose(pl.p_h, waterfill(cfg, zipf30).p_h, atol=1e-4)


def test_no_helpers_matches_usertier(table1, zipf30):
    cfg = table1.replace(lambda_h=0.0)
    pl, trace = dc_optimize(cfg, zipf30)
    assert trace.converged
    np.testing.assert_allclose(pl.p_ue, usertier_solve(cfg, zipf30).p_ue, atol=1e-4)


@pytest.mark.parametrize("boost", [True, False])
def test_descent_feasibility_and_dominance(table1, zipf30, boost):
    pl, trace = dc_optimize(table1, zipf30, DcSettings(boost=boost))
    assert trace.converged and trace.reason in ("objective-delta", "iterate-delta")
    assert trace.is_monotone(1e-9)
    assert all(p.is_feasible(table1) for p, _ in trace.iterates)
    best = total_offload(table1, zipf30, pl).total
    for base in (popular_cache(table1), even_cache(table1), non_joint(table1, zipf30)):
        assert best >= total_offload(table1, zipf30, base).total - 1e-9


@pytest.mark.parametrize("eps", [1e-6, 1e-10])
def test_stationary_at_exit(table1, zipf30, eps):
    pl, trace = dc_optimize(table1, zipf30, DcSettings(epsilon=eps, max_outer_iters=5000))
    assert trace.converged
    # the stop rule is on |dF|, so stationarity is only controlled to order sqrt(eps)
    assert projected_gradient_norm(table1, zipf30, pl) <= 10 * math.sqrt(eps)


def test_starts_from_even_placement(table1, zipf30):
    _, trace = dc_optimize(table1, zipf30)
    first = trace.iterates[0][0]
    np.testing.assert_allclose(first.p_ue, 2 / 30)
    np.testing.assert_allclose(first.p_h, 8 / 30)


def test_custom_init_and_infeasible_init(table1, zipf30):
    pl, trace = dc_optimize(table1, zipf30, init=popular_cache(table1))
    assert trace.iterates[0][0] is not None and trace.is_monotone()
    with pytest.raises(ValueError):
        dc_optimize(table1, zipf30, init=Placement(p_h=np.ones(30), p_ue=np.zeros(30)))


def test_max_iters_is_flagged(table1, zipf30):
    _, trace = dc_optimize(table1, zipf30, DcSettings(max_outer_iters=2, boost=False))
    assert not trace.converged and trace.reason == "max-iters"
    assert trace.outer_iterations == 2


def test_convexifier_escalation(monkeypatch, table1, zipf30):
    calls = {"n": 0}
    real = dc_solver.surrogate_hessian_min_eig

    def flaky(cfg, q, pl, scale=1.0):
        calls["n"] += 1
        return -1.0 if scale < 2 else real(cfg, q, pl, scale)

    monkeypatch.setattr(dc_solver, "surrogate_hessian_min_eig", flaky)
    pl, trace = dc_optimize(table1, zipf30)
    assert trace.convexifier_scale == 2 and trace.restarts == 1 and trace.converged

    monkeypatch.setattr(dc_solver, "surrogate_hessian_min_eig", lambda *a, **k: -1.0)
    with pytest.raises(NonMonotoneDescentError):
        dc_optimize(table1, zipf30)


def test_settings_validation():
    with pytest.raises(ValueError):
        DcSettings(epsilon=0)
    with pytest.raises(ValueError):
        DcSettings(convexifier_scale=0.5)
