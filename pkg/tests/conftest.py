import math

import numpy as np
import pytest

from d2dcache import ScenarioConfig, make_zipf


@pytest.fixture
def table1():
    return ScenarioConfig()


@pytest.fixture
def zipf30():
    return make_zipf(30, 1.0)


def random_placement(rng, cfg):
    """Uniform-ish random feasible placement: random box point, scaled under each budget."""
    from d2dcache import Placement

    n = cfg.n_contents
    out = []
    for m in (cfg.m_ue, cfg.m_h):
        p = rng.uniform(0, 1, n)
        s = p.sum()
        if s > m:
            p *= m / s * rng.uniform(0.5, 1.0)
        out.append(p)
    return Placement(p_ue=out[0], p_h=out[1])


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {line}")
