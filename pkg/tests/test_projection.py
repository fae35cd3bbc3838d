import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from d2dcache.projection import CappedSimplex, NoBracketError, bisect, project


def grid_argmin(v, budget, step=1e-3):
    """Coarse-to-fine exhaustive search of min ||p - v||^2 over the capped simplex."""
    v = np.asarray(v, dtype=float)
    d = v.size
    center = np.full(d, 0.5)
    half, h = 0.5, 0.05
    while True:
        axes = [np.clip(np.arange(c - half, c + half + h / 2, h), 0, 1) for c in center]
        pts = np.array(list(itertools.product(*axes)))
        pts = pts[pts.sum(axis=1) <= budget + 1e-12]
        best = pts[np.argmin(((pts - v) ** 2).sum(axis=1))]
        if h <= step:
            return best
        center, half = best, 2 * h
        h = max(h / 5, step)


def test_feasible_point_unchanged():
    v = np.array([0.2, 0.5, 0.1])
    np.testing.assert_array_equal(project(CappedSimplex(3, 1), v), v)


def test_symmetric_split():
    np.testing.assert_allclose(project(CappedSimplex(2, 1), [2, 2]), [0.5, 0.5], atol=1e-12)
    assert np.allclose(grid_argmin([2, 2], 1), [0.5, 0.5], atol=2e-3)


def test_three_dim_example():
    expect = grid_argmin([0.9, 0.1, 0.1], 1)
    got = project(CappedSimplex(3, 1), [0.9, 0.1, 0.1])
    np.testing.assert_allclose(got, expect, atol=2e-3)
    np.testing.assert_allclose(got, [0.8667, 0.0667, 0.0667], atol=1e-4)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        project(CappedSimplex(3, 1), [0.1, 0.2])
    with pytest.raises(ValueError):
        CappedSimplex(2, 3)


@pytest.mark.parametrize("seed", range(12))
def test_matches_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    budget = float(rng.uniform(0, d))
    v = rng.uniform(-0.5, 1.5, d)
    np.testing.assert_allclose(project(CappedSimplex(d, budget), v), grid_argmin(v, budget), atol=2e-3)


vecs = arrays(np.float64, st.integers(1, 12), elements=st.floats(-3, 3))


@given(vecs, st.floats(0, 1))
@settings(max_examples=300, deadline=None)
def test_feasible_and_idempotent(v, frac):
    cs = CappedSimplex(v.size, frac * v.size)
    p = project(cs, v)
    assert cs.contains(p, tol=1e-9)
    np.testing.assert_allclose(project(cs, p), p, atol=1e-9)


@given(st.integers(1, 12), st.floats(0, 1), st.integers(0, 2**32 - 1))
@settings(max_examples=300, deadline=None)
def test_nonexpansive(d, frac, seed):
    rng = np.random.default_rng(seed)
    cs = CappedSimplex(d, frac * d)
    u, v = rng.normal(0, 2, d), rng.normal(0, 2, d)
    assert np.linalg.norm(project(cs, u) - project(cs, v)) <= np.linalg.norm(u - v) + 1e-9


def test_weighted_projection_is_metric_minimizer():
    rng = np.random.default_rng(5)
    for _ in range(20):
        v = rng.uniform(-0.5, 1.5, 3)
        w = rng.uniform(0.2, 5, 3)
        p = project(CappedSimplex(3, 1.2), v, weights=w)
        # any feasible perturbation along the budget face does not lower the weighted distance
        base = np.sum(w * (p - v) ** 2)
        for _ in range(200):
            z = project(CappedSimplex(3, 1.2), p + rng.normal(0, 0.05, 3))
            assert np.sum(w * (z - v) ** 2) >= base - 1e-12


def test_bisect_examples():
    assert bisect(lambda x: x - 0.5, 0, 1) == pytest.approx(0.5, abs=1e-10)
    assert bisect(lambda x: math.exp(-x) - 0.5, 0, 2) == pytest.approx(math.log(2), abs=1e-9)
    assert bisect(lambda x: 0.0, 0, 1) == 0


def test_bisect_expands_bracket_and_flags():
    assert bisect(lambda x: x - 37.0, 0, 1) == pytest.approx(37.0, abs=1e-9)
    assert bisect(lambda x: 5.0 - x, 0, 1) == pytest.approx(5.0, abs=1e-9)
    r = bisect(lambda x: x - 0.3, 0, 1, tol=0.0, max_iter=5, full_output=True)
    assert not r.converged and r.iterations == 5
    with pytest.raises(NoBracketError):
        bisect(lambda x: 1.0 + x * x, -1, 1)
