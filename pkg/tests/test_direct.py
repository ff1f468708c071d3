import numpy as np
import pytest

from lglab.core import ActionSpace, Characteristic, FiniteGameInstance, FiniteTypes, LargeGameSpec, ParamContinuum
from lglab.direct import (
    InstantiationScheme,
    build_direct_profile,
    characteristic_distance,
    continuity_probe,
    gbar_rule,
    instantiate,
    is_rational,
    largest_remainder,
    type_frequencies,
)
from lglab.errors import ConfigurationError, InvalidInputError
from lglab.experiments import example1, routing, two_type_congestion
from lglab.metrics import bl_distance
from lglab.solver import solve_equilibrium

TWO = ActionSpace.two_point()


def test_routing_replicate():
    gn = instantiate(routing(), 5, InstantiationScheme("replicate"))
    assert gn.n == 5 and len(set(gn.players)) == 1


def test_largest_remainder_prefers_lower_index():
    assert list(largest_remainder([0.5, 0.5], 3)) == [2, 1]
    assert list(largest_remainder([0.2, 0.3, 0.5], 7)) == [1, 2, 4]
    gn = instantiate(two_type_congestion(), 3, InstantiationScheme("replicate_types"))
    cars, trucks = two_type_congestion().population.types
    assert gn.players.count(cars) == 2 and gn.players.count(trucks) == 1


def test_quantile_grid():
    gn = instantiate(example1(), 4, InstantiationScheme("quantile"))
    assert [c.params[0] for c in gn.players] == [0.125, 0.375, 0.625, 0.875]


def test_scheme_population_mismatch():
    with pytest.raises(ConfigurationError):
        instantiate(routing(), 4, InstantiationScheme("quantile_grid"))
    with pytest.raises(ConfigurationError):
        instantiate(example1(), 4, InstantiationScheme("replicate_types"))
    with pytest.raises(ConfigurationError):
        InstantiationScheme("bogus")
    with pytest.raises(ConfigurationError):
        InstantiationScheme("iid", seed=2**64)


def test_iid_is_a_function_of_seed_and_n():
    g = two_type_congestion()
    a = instantiate(g, 50, InstantiationScheme("iid", 9))
    b = instantiate(g, 50, InstantiationScheme("iid", 9))
    c = instantiate(g, 50, InstantiationScheme("iid", 10))
    assert a.players == b.players and a.players != c.players
    pc = instantiate(example1(), 20, InstantiationScheme("iid", 3))
    assert pc.players == instantiate(example1(), 20, InstantiationScheme("iid", 3)).players
    assert all(example1().population.contains(c) for c in pc.players)


@pytest.mark.parametrize("n", [10, 100, 1000])
def test_type_frequencies_converge(n):
    weights = [0.17, 0.41, 0.42]
    chars = tuple(Characteristic("routing_congestion", (float(j + 1), 1.0)) for j in range(3))
    game = LargeGameSpec(TWO, FiniteTypes(chars, weights))
    freq = type_frequencies(instantiate(game, n, InstantiationScheme()), game.population)
    assert np.max(np.abs(freq - weights)) <= 3 / n
    assert freq.sum() == pytest.approx(1.0)


def test_direct_profile_routing():
    game = routing()
    gbar = solve_equilibrium(game).per_type_strategy
    for n in (1, 7, 40):
        prof = build_direct_profile(instantiate(game, n, InstantiationScheme()), gbar)
        assert np.allclose(prof.rows, [1 / 3, 2 / 3], atol=1e-8)
        assert prof.symmetric and prof.is_symmetric_for(instantiate(game, n, InstantiationScheme()).players)


def test_direct_profile_example1_all_rational():
    game = example1()
    gn = instantiate(game, 4, InstantiationScheme("quantile"))
    prof = build_direct_profile(gn, {}, game.population)
    assert np.array_equal(prof.rows, np.tile([0.0, 1.0], (4, 1)))
    assert prof.pure


def test_direct_profile_missing_entries():
    game = two_type_congestion()
    gn = instantiate(game, 4, InstantiationScheme())
    cars = game.population.types[0]
    with pytest.raises(InvalidInputError, match="players 2, 3"):
        build_direct_profile(gn, {cars: [1.0, 0.0]})
    pc = ParamContinuum("example1", (0.0,), (1.0,))
    with pytest.raises(InvalidInputError):
        build_direct_profile(instantiate(LargeGameSpec(TWO, pc), 3, InstantiationScheme("quantile")), {}, pc)


def test_direct_profile_fallback_rule_for_iid_types():
    game = example1()
    gn = instantiate(game, 30, InstantiationScheme("iid", 5))
    prof = build_direct_profile(gn, {}, game.population)
    for c, row in zip(gn.players, prof.rows):
        th = c.params[0]
        assert np.allclose(row, [0, 1] if is_rational(th) else [th, 1 - th])


def test_rules():
    assert np.allclose(gbar_rule("constant", (1 / 3, 2 / 3))(0.4), [1 / 3, 2 / 3])
    assert np.allclose(gbar_rule("linear")(0.25), [0.25, 0.75])
    ex = gbar_rule("example1_rational")
    assert np.array_equal(ex(0.375), [0.0, 1.0])
    assert np.allclose(ex(1 / np.sqrt(2)), [1 / np.sqrt(2), 1 - 1 / np.sqrt(2)])
    with pytest.raises(ConfigurationError):
        gbar_rule("nope")


def test_is_rational():
    assert is_rational(0.125) and is_rational(1 / 3) and is_rational(7 / 9000)
    assert not is_rational(np.sqrt(2) - 1) and not is_rational(np.pi / 4)


def test_characteristic_distance():
    a, b = Characteristic("example1", (0.2,)), Characteristic("example1", (0.45,))
    assert characteristic_distance(a, b) == pytest.approx(0.25)
    assert characteristic_distance(a, Characteristic("affine", (0.0,) * 6)) is None


def test_continuity_probe():
    game = LargeGameSpec(TWO, ParamContinuum("example1", (0.0,), (1.0,)))
    const = continuity_probe(game, "constant", 5, (1 / 3, 2 / 3))
    assert const.max_gap == (0.0, 0.0, 0.0) and const.mixed_max_gap == (0.0, 0.0, 0.0)
    lin = continuity_probe(game, "linear", 10)
    assert lin.max_gap[0] == pytest.approx(0.1 * 2 / 3, abs=1e-12)
    assert lin.max_gap[1] == pytest.approx(0.05 * 2 / 3, abs=1e-12)
    ex = continuity_probe(game, "example1_rational", 10)
    assert ex.max_gap == (0.0, 0.0, 0.0)
    for g, gap in zip(ex.grids, ex.mixed_max_gap):
        th = np.arange(g) / g + 1 / (g * np.sqrt(2))
        floor = max(bl_distance([0, 1], [t, 1 - t], TWO) for t in th)
        assert gap >= floor - 1e-12
    assert min(ex.mixed_max_gap) > 0.5
    with pytest.raises(ConfigurationError):
        continuity_probe(game, "linear", 1)
    with pytest.raises(ConfigurationError):
        continuity_probe(routing(), "linear", 4)


def test_summary_of_direct_profile_is_exact_for_routing():
    game = routing()
    gbar = solve_equilibrium(game).per_type_strategy
    for n in (3, 10, 99):
        prof = build_direct_profile(instantiate(game, n, InstantiationScheme()), gbar)
        assert np.allclose(prof.rows.mean(axis=0), [1 / 3, 2 / 3], atol=1e-8)


def test_instance_characteristics_in_support():
    for game, kind in ((routing(), "replicate"), (two_type_congestion(), "iid"), (example1(), "quantile")):
        gn = instantiate(game, 25, InstantiationScheme(kind, 1))
        assert isinstance(gn, FiniteGameInstance)
        assert all(game.population.contains(c) for c in gn.players)
