import numpy as np
import pytest
from conftest import random_space
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import bl_grid, prohorov_exact

from lglab.core import ActionSpace
from lglab.errors import CapabilityError, DomainError
from lglab.metrics import bl_distance, bl_lp, metric_report, prohorov

UNIT = ActionSpace.two_point(1.0)


def test_two_point_values():
    assert prohorov([1, 0], [0, 1], UNIT) == pytest.approx(1.0, abs=1e-9)
    assert bl_distance([1, 0], [0, 1], UNIT) == pytest.approx(2 / 3, abs=1e-12)
    assert prohorov([0.6, 0.4], [0.4, 0.6], UNIT) == pytest.approx(0.2, abs=1e-9)
    assert bl_distance([0.6, 0.4], [0.4, 0.6], UNIT) == pytest.approx(0.2 * 2 / 3, abs=1e-12)
    assert prohorov([0.3, 0.7], [0.3, 0.7], UNIT) < 1e-9
    assert bl_distance([0.3, 0.7], [0.3, 0.7], UNIT) == 0.0


def test_report_dict():
    assert metric_report([1, 0], [0, 1], UNIT).to_dict() == pytest.approx({"prohorov": 1.0, "bl": 2 / 3}, abs=1e-9)


@pytest.mark.parametrize("d", [0.1, 0.5, 1.0, 2.0, 7.0])
def test_closed_form_agrees_with_lp(d, rng):
    space = ActionSpace.two_point(d)
    for _ in range(20):
        t1, t2 = rng.dirichlet([1, 1]), rng.dirichlet([1, 1])
        assert bl_distance(t1, t2, space) == pytest.approx(bl_lp(t1, t2, space), abs=1e-9)
        assert bl_distance(t1, t2, space) == pytest.approx(bl_grid(t1, t2, space.dist), abs=1e-7)


def test_prohorov_matches_interval_oracle(rng):
    for k in (2, 3, 4, 5):
        for _ in range(15):
            space = random_space(rng, k)
            t1, t2 = rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k))
            assert prohorov(t1, t2, space) == pytest.approx(prohorov_exact(t1, t2, space.dist), abs=1e-9)


def test_prohorov_strict_enlargement():
    # at eps = d the neighbour is not yet inside B^eps, so the answer sits at the mass gap
    space = ActionSpace.two_point(0.3)
    assert prohorov([1, 0], [0, 1], space) == pytest.approx(0.3, abs=1e-9)
    assert prohorov([0.9, 0.1], [0.1, 0.9], space) == pytest.approx(0.3, abs=1e-9)
    assert prohorov([0.6, 0.4], [0.4, 0.6], space) == pytest.approx(0.2, abs=1e-9)


def test_bl_matches_grid_on_three_points(rng):
    for _ in range(10):
        space = random_space(rng, 3)
        t1, t2 = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        assert bl_distance(t1, t2, space) == pytest.approx(bl_grid(t1, t2, space.dist), abs=1e-6)


def test_errors():
    with pytest.raises(DomainError):
        prohorov([1, 0, 0], [0, 1], UNIT)
    with pytest.raises(DomainError):
        bl_distance([0.5, 0.6], [0, 1], UNIT)
    big = ActionSpace.discrete([str(j) for j in range(16)])
    assert prohorov(np.eye(16)[0], np.eye(16)[1], big) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(CapabilityError):
        prohorov([1.0], [1.0], _OversizeSpace())


class _OversizeSpace:
    size = 17


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_metric_axioms(k, seed):
    rng = np.random.default_rng(seed)
    space = random_space(rng, k)
    a, b, c = rng.dirichlet(np.ones(k), size=3)
    for dist in (prohorov, bl_distance):
        dab, dba = dist(a, b, space), dist(b, a, space)
        assert dab == pytest.approx(dba, abs=1e-9)
        assert dist(a, a, space) < 1e-9
        assert dab <= dist(a, c, space) + dist(c, b, space) + 1e-9
    assert 0 <= prohorov(a, b, space) <= 1 + 1e-12
    assert 0 <= bl_distance(a, b, space) <= 2


def test_both_metrics_vanish_together(rng):
    space = random_space(rng, 4)
    tau = rng.dirichlet(np.ones(4))
    other = rng.dirichlet(np.ones(4))
    rhos, bls = [], []
    for j in range(12):
        t = tau + 2.0**-j * (other - tau)
        rhos.append(prohorov(t, tau, space))
        bls.append(bl_distance(t, tau, space))
    assert np.all(np.diff(rhos) <= 1e-12) and np.all(np.diff(bls) <= 1e-12)
    assert rhos[-1] < 1e-3 and bls[-1] < 1e-3
