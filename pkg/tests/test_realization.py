import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import expost_gains_brute, omega_exact_enumeration, routing_omega_exact

from lglab.core import ActionSpace, Characteristic, FiniteGameInstance, StrategyProfile
from lglab.direct import InstantiationScheme, build_direct_profile, instantiate
from lglab.errors import ConfigurationError, DomainError
from lglab.experiments import example1
from lglab.realization import (
    chebyshev_bound,
    concentration_check,
    estimate_omega,
    expost_gain,
    expost_gains,
    is_pure_eps_equilibrium,
    sample_realization,
    wilson_interval,
    witness_scale,
)

ROUTE = Characteristic("routing_congestion", (2.0, 1.0))
TWO = ActionSpace.two_point()


def routing_instance(n):
    return FiniteGameInstance(TWO, (ROUTE,) * n), StrategyProfile([[1 / 3, 2 / 3]] * n)


def test_point_masses_realize_themselves():
    gn = FiniteGameInstance(TWO, (ROUTE,) * 4)
    prof = StrategyProfile([[1, 0], [0, 1], [0, 1], [1, 0]])
    for seed in range(5):
        assert list(sample_realization(gn, prof, seed, 0)) == [0, 1, 1, 0]


def test_sampling_frequency_and_determinism():
    gn, prof = routing_instance(30000)
    x = sample_realization(gn, prof, 2024, 0)
    assert abs(np.mean(x == 0) - 1 / 3) <= 0.02
    assert np.array_equal(x, sample_realization(gn, prof, 2024, 0))
    assert not np.array_equal(x, sample_realization(gn, prof, 2024, 1))


def test_routing_hand_gains():
    gn = FiniteGameInstance(TWO, (ROUTE,) * 3)
    assert np.allclose(expost_gains(gn, [0, 1, 1]), 0.0, atol=1e-15)
    assert np.allclose(expost_gains(gn, [0, 0, 0]), 5 / 3, atol=1e-15)
    assert expost_gain(gn, [0, 0, 0], 2) == pytest.approx(5 / 3)
    with pytest.raises(DomainError):
        expost_gain(gn, [0, 0, 0], 3)
    with pytest.raises(DomainError):
        expost_gains(gn, [0, 2, 0])


def test_single_player_constant_payoff():
    c = Characteristic("affine", (0.4, 0.4, 0, 0, 0, 0))
    assert expost_gains(FiniteGameInstance(TWO, (c,)), [1])[0] == 0.0


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 7), st.integers(2, 3), st.integers(0, 2**32 - 1))
def test_gains_match_brute_force_and_are_nonnegative(n, k, seed):
    rng = np.random.default_rng(seed)
    chars = tuple(Characteristic("quadratic_summary", tuple(rng.normal(size=k + 2 * k * k))) for _ in range(n))
    gn = FiniteGameInstance(ActionSpace.discrete([str(j) for j in range(k)]), chars)
    x = rng.integers(0, k, size=n)
    g = expost_gains(gn, x)
    assert np.all(g >= 0.0)
    assert np.allclose(g, expost_gains_brute(chars, x, k), atol=1e-12)


def test_pure_eps_test():
    assert is_pure_eps_equilibrium([0, 0, 0, 1.0], 0.25)
    assert not is_pure_eps_equilibrium([0, 0, 1.0, 1.0], 0.25)
    assert is_pure_eps_equilibrium([0.1] * 5, 0.1)


def test_wilson():
    lo, hi = wilson_interval(814, 1000)
    assert lo < 0.814 < hi and isinstance(lo, float)
    assert wilson_interval(0, 50)[0] == 0.0 and wilson_interval(50, 50)[1] == 1.0


def test_pure_ne_profile_has_p_one():
    gn = FiniteGameInstance(TWO, (ROUTE,) * 3)
    batch = estimate_omega(gn, StrategyProfile([[1, 0], [0, 1], [0, 1]]), 0.01, 30, seed=0)
    assert batch.p_hat == 1.0 and batch.pass_count == 30


def test_example1_all_ones_never_passes():
    game = example1()
    gn = instantiate(game, 10, InstantiationScheme("quantile"))
    prof = build_direct_profile(gn, {}, game.population)
    batch = estimate_omega(gn, prof, 0.5, 50, seed=1)
    assert batch.p_hat == 0.0


@pytest.mark.parametrize("n", [4, 7, 10])
def test_omega_against_enumeration(n):
    # eps off the grid of attainable gains, so float ties cannot flip the count
    gn, prof = routing_instance(n)
    exact = omega_exact_enumeration(gn.players, prof.rows, 2, 0.23)
    assert exact == pytest.approx(routing_omega_exact(n, 0.23), abs=1e-12)
    batch = estimate_omega(gn, prof, 0.23, 4000, seed=n)
    se = np.sqrt(exact * (1 - exact) / 4000)
    assert abs(batch.p_hat - exact) <= 4 * se + 1e-12


def test_omega_heterogeneous_enumeration(rng):
    k, n = 3, 6
    chars = tuple(Characteristic("affine", tuple(rng.normal(size=k + k * k))) for _ in range(n))
    gn = FiniteGameInstance(ActionSpace.discrete("xyz"), chars)
    prof = StrategyProfile(rng.dirichlet(np.ones(k), size=n))
    exact = omega_exact_enumeration(chars, prof.rows, k, 0.3)
    batch = estimate_omega(gn, prof, 0.3, 4000, seed=2)
    assert abs(batch.p_hat - exact) <= 4 * np.sqrt(exact * (1 - exact) / 4000) + 1e-12


def test_omega_routing_300_matches_binomial_oracle():
    gn, prof = routing_instance(300)
    batch = estimate_omega(gn, prof, 0.1, 1000, seed=12345)
    exact = routing_omega_exact(300, 0.1)
    assert abs(batch.p_hat - exact) <= 4 * np.sqrt(exact * (1 - exact) / 1000)
    assert batch.wilson_lo <= batch.p_hat <= batch.wilson_hi


def test_omega_approaches_one():
    gn, prof = routing_instance(3000)
    batch = estimate_omega(gn, prof, 0.1, 300, seed=7)
    assert batch.p_hat >= 0.99
    assert routing_omega_exact(3000, 0.1) > routing_omega_exact(1000, 0.1) > routing_omega_exact(300, 0.1)


def test_omega_threads_and_validation():
    gn, prof = routing_instance(120)
    a = estimate_omega(gn, prof, 0.1, 200, seed=3)
    assert a == estimate_omega(gn, prof, 0.1, 200, seed=3, threads=4)
    assert a.csv_row().startswith("120,0.1,")
    with pytest.raises(ConfigurationError):
        estimate_omega(gn, prof, 0.1, 29, seed=3)
    with pytest.raises(ConfigurationError):
        estimate_omega(gn, prof, 0.0, 100, seed=3)


def test_chebyshev_and_witness():
    assert chebyshev_bound(100, 0.5) == pytest.approx(0.96)
    assert chebyshev_bound(2, 0.1) == 0.0
    assert witness_scale(TWO.dist) == pytest.approx(0.5)
    assert witness_scale(ActionSpace.two_point(0.5).dist) == pytest.approx(1 / 3)


def test_concentration_point_masses():
    gn = FiniteGameInstance(TWO, (ROUTE,) * 20)
    rep = concentration_check(gn, StrategyProfile(np.eye(2)[np.arange(20) % 2]), 0.1, 10, seed=0)
    assert rep.empirical_freq == 1.0
    assert all(r < 1e-9 and b == 0.0 for _, r, b in rep.metric_samples)


def test_concentration_shrinks_with_n():
    medians = []
    for n in (10, 1000):
        gn, prof = routing_instance(n)
        rep = concentration_check(gn, prof, 0.5, 200, seed=4)
        assert rep.holds and rep.empirical_freq >= rep.chebyshev_bound - 3 * rep.stderr
        medians.append(rep.median_bl)
    assert medians[1] < medians[0]


def test_concentration_threads():
    gn, prof = routing_instance(50)
    a = concentration_check(gn, prof, 0.3, 40, seed=9)
    b = concentration_check(gn, prof, 0.3, 40, seed=9, threads=3)
    assert a == b
