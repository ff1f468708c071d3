"""Finite games converging to a continuum game, and direct strategy profiles on them."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from .core import (
    Characteristic,
    FiniteGameInstance,
    FiniteTypes,
    LargeGameSpec,
    ParamContinuum,
    StrategyProfile,
    as_mixed,
)
from .errors import ConfigurationError, DomainError, InvalidInputError
from .metrics import bl_distance

SCHEMES = ("replicate_types", "iid_sample", "quantile_grid")
_SCHEME_ALIASES = {"replicate": "replicate_types", "iid": "iid_sample", "quantile": "quantile_grid"}


@dataclass(frozen=True)
class InstantiationScheme:
    kind: str = "replicate_types"
    seed: int = 0

    def __post_init__(self):
        kind = _SCHEME_ALIASES.get(self.kind, self.kind)
        if kind not in SCHEMES:
            raise ConfigurationError(f"scheme.kind: unknown scheme {self.kind!r}; expected one of {SCHEMES}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError(f"scheme.seed: must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "seed", int(self.seed))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed}


def largest_remainder(weights, n: int) -> np.ndarray:
    """Integer counts summing to ``n`` proportional to ``weights``; ties go to lower indices."""
    quotas = np.asarray(weights, dtype=float) * n
    counts = np.floor(quotas).astype(int)
    rest = n - counts.sum()
    remainders = quotas - counts
    order = sorted(range(len(counts)), key=lambda t: (-remainders[t], t))
    for t in order[:rest]:
        counts[t] += 1
    return counts


def instantiate(game: LargeGameSpec, n: int, scheme: InstantiationScheme) -> FiniteGameInstance:
    """An n-player game whose characteristics all lie in the support of ``game``."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    pop = game.population
    if scheme.kind == "replicate_types":
        if not isinstance(pop, FiniteTypes):
            raise ConfigurationError("scheme.kind: replicate_types needs a finite_types population")
        counts = largest_remainder(pop.weights, n)
        players = [c for c, m in zip(pop.types, counts) for _ in range(m)]
    elif scheme.kind == "quantile_grid":
        if not isinstance(pop, ParamContinuum):
            raise ConfigurationError("scheme.kind: quantile_grid needs a param_continuum population")
        players = [pop.characteristic((2 * i - 1) / (2 * n)) for i in range(1, n + 1)]
    else:
        rng = np.random.default_rng([scheme.seed, n])
        if isinstance(pop, FiniteTypes):
            idx = rng.choice(len(pop.types), size=n, p=pop.weights)
            players = [pop.types[t] for t in idx]
        else:
            players = [pop.characteristic(float(th)) for th in rng.random(n)]
    return FiniteGameInstance(game.action_space, tuple(players))


def type_frequencies(gn: FiniteGameInstance, pop: FiniteTypes) -> np.ndarray:
    """Empirical weight of each listed type among the players of ``gn``."""
    index = {c: t for t, c in enumerate(pop.types)}
    counts = np.zeros(len(pop.types))
    for c in gn.players:
        if c not in index:
            raise InvalidInputError("player characteristic outside the listed types")
        counts[index[c]] += 1
    return counts / gn.n


def characteristic_distance(c1: Characteristic, c2: Characteristic) -> float | None:
    """Largest parameter difference within a family; None ("incomparable") across families."""
    if c1.family != c2.family or len(c1.params) != len(c2.params):
        return None
    if not c1.params:
        return 0.0
    return float(np.max(np.abs(np.subtract(c1.params, c2.params))))


# ---------------------------------------------------------------------------
# Auxiliary-mapping rules on parametric families, keyed by theta
# ---------------------------------------------------------------------------


def is_rational(theta: float, max_denominator: int = 10**6) -> bool:
    """Treat ``theta`` as rational when a fraction with small denominator reproduces it to a few ulps."""
    f = Fraction(theta).limit_denominator(max_denominator)
    return abs(float(f) - theta) <= 4 * np.spacing(max(abs(theta), 1e-300))


def _rule_constant(theta, args):
    return as_mixed(args)


def _rule_linear(theta, args):
    return np.array([theta, 1.0 - theta])


def _rule_example1(theta, args):
    # point mass on action 1 at rational theta, theta*delta_0 + (1-theta)*delta_1 elsewhere
    if is_rational(theta):
        return np.array([0.0, 1.0])
    return np.array([theta, 1.0 - theta])


RULES: dict[str, Callable] = {
    "constant": _rule_constant,
    "linear": _rule_linear,
    "example1_rational": _rule_example1,
}


def gbar_rule(name: str, args=()) -> Callable[[float], np.ndarray]:
    """Look up an auxiliary-mapping rule theta -> mixed strategy."""
    if name not in RULES:
        raise ConfigurationError(f"rule: unknown auxiliary rule {name!r}; expected one of {sorted(RULES)}")
    fn = RULES[name]
    args = tuple(args)
    return lambda theta: fn(float(theta), args)


def build_direct_profile(
    gn: FiniteGameInstance,
    gbar: Mapping[Characteristic, np.ndarray] | None,
    fallback: ParamContinuum | None = None,
) -> StrategyProfile:
    """Every player plays the auxiliary mapping at her own characteristic.

    Characteristics missing from ``gbar`` are resolved through the named rule
    of the ``fallback`` population, if any.
    """
    k = gn.action_space.size
    table = dict(gbar or {})
    rule = None
    if fallback is not None and fallback.rule is not None:
        rule = gbar_rule(fallback.rule, fallback.rule_args)
    cache: dict[Characteristic, np.ndarray] = {}
    missing = []
    rows = np.empty((gn.n, k))
    for i, c in enumerate(gn.players):
        if c not in cache:
            if c in table:
                cache[c] = as_mixed(table[c], k)
            else:
                theta = fallback.theta_of(c) if rule is not None else None
                if theta is None:
                    missing.append(i)
                    continue
                cache[c] = as_mixed(rule(theta), k)
        rows[i] = cache[c]
    if missing:
        shown = ", ".join(map(str, missing[:20])) + (" ..." if len(missing) > 20 else "")
        raise InvalidInputError(f"no auxiliary strategy for players {shown}")
    return StrategyProfile(rows, symmetric=True)


@dataclass(frozen=True)
class ContinuityReport:
    rule: str
    grids: tuple
    max_gap: tuple
    mixed_max_gap: tuple

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "grids": list(self.grids),
            "max_adjacent_bl": list(self.max_gap),
            "mixed_max_adjacent_bl": list(self.mixed_max_gap),
        }


def continuity_probe(game: LargeGameSpec, rule: str, grid: int, args=()) -> ContinuityReport:
    """Largest bounded-Lipschitz jump of a rule between neighbouring theta on refining grids.

    The mixed probe also visits the irrational points theta_j + 1/(grid*sqrt(2)).
    A jump that does not shrink under refinement suggests a discontinuity.
    """
    if not isinstance(game.population, ParamContinuum):
        raise ConfigurationError("population: continuity_probe needs a param_continuum population")
    if grid < 2:
        raise ConfigurationError(f"grid: need at least 2, got {grid}")
    fn = gbar_rule(rule, args)
    space = game.action_space
    grids, plain, mixed = [], [], []
    for g in (grid, 2 * grid, 4 * grid):
        thetas = np.arange(g + 1) / g
        vals = [fn(th) for th in thetas]
        plain.append(float(max(bl_distance(vals[j], vals[j + 1], space) for j in range(g))))
        shifted = thetas[:-1] + 1.0 / (g * np.sqrt(2.0))
        pts = np.sort(np.concatenate([thetas, shifted]))
        vals = [fn(th) for th in pts]
        mixed.append(float(max(bl_distance(vals[j], vals[j + 1], space) for j in range(len(pts) - 1))))
        grids.append(g)
    return ContinuityReport(rule, tuple(grids), tuple(plain), tuple(mixed))
