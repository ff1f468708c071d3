"""Domain types: action spaces, characteristics, games and strategy profiles.

Mixed strategies and societal summaries are plain 1-D float arrays over the
actions of an :class:`ActionSpace`; :func:`as_mixed` validates them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

NORM_TOL = 1e-12
MAX_ACTIONS = 16


def _fail(path, msg):
    raise ConfigurationError(f"{path}: {msg}" if path else msg)


# ---------------------------------------------------------------------------
# Actions and mixed strategies
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ActionSpace:
    """A finite set of labelled actions with a metric given as a distance matrix."""

    labels: tuple
    dist: np.ndarray

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        dist = np.array(self.dist, dtype=float)
        k = len(labels)
        if not 1 <= k <= MAX_ACTIONS:
            _fail("actions.labels", f"need between 1 and {MAX_ACTIONS} actions, got {k}")
        if len(set(labels)) != k:
            _fail("actions.labels", "labels must be distinct")
        if dist.shape != (k, k):
            _fail("actions.dist", f"expected a {k}x{k} matrix, got shape {dist.shape}")
        if not np.all(np.isfinite(dist)):
            _fail("actions.dist", "entries must be finite")
        for a in range(k):
            if dist[a, a] != 0.0:
                _fail(f"actions.dist[{a}][{a}]", "diagonal must be 0")
            for b in range(a + 1, k):
                if dist[a, b] != dist[b, a]:
                    _fail(f"actions.dist[{a}][{b}]", "matrix must be symmetric")
                if dist[a, b] <= 0.0:
                    _fail(f"actions.dist[{a}][{b}]", "off-diagonal distances must be positive")
        slack = 1e-12 * max(1.0, float(dist.max()))
        for a in range(k):
            for b in range(k):
                for c in range(k):
                    if dist[a, c] > dist[a, b] + dist[b, c] + slack:
                        _fail(
                            "actions.dist",
                            f"triangle inequality fails for triple ({labels[a]}, {labels[b]}, {labels[c]}): "
                            f"d({labels[a]},{labels[c]})={dist[a, c]} > "
                            f"d({labels[a]},{labels[b]})+d({labels[b]},{labels[c]})={dist[a, b] + dist[b, c]}",
                        )
        dist.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dist", dist)

    @property
    def size(self) -> int:
        return len(self.labels)

    @classmethod
    def discrete(cls, labels) -> "ActionSpace":
        """Actions at unit distance from each other."""
        k = len(labels)
        return cls(tuple(labels), 1.0 - np.eye(k))

    @classmethod
    def two_point(cls, d: float = 1.0, labels=("a", "b")) -> "ActionSpace":
        return cls(tuple(labels), np.array([[0.0, d], [d, 0.0]]))

    def index(self, action) -> int:
        if isinstance(action, (int, np.integer)):
            if not 0 <= action < self.size:
                raise DomainError(f"action index {action} out of range for {self.size} actions")
            return int(action)
        try:
            return self.labels.index(str(action))
        except ValueError:
            raise DomainError(f"unknown action {action!r}") from None

    def __eq__(self, other):
        if not isinstance(other, ActionSpace):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.dist, other.dist)

    def __hash__(self):
        return hash((self.labels, self.dist.tobytes()))

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "dist": self.dist.tolist()}

    @classmethod
    def from_dict(cls, d, path="actions") -> "ActionSpace":
        if not isinstance(d, dict):
            _fail(path, "expected an object with 'labels' and 'dist'")
        if "labels" not in d:
            _fail(f"{path}.labels", "missing")
        if "dist" not in d:
            _fail(f"{path}.dist", "missing")
        return cls(tuple(d["labels"]), d["dist"])


def as_mixed(probs, size: int | None = None) -> np.ndarray:
    """Validate ``probs`` as a probability vector and return it as a float array."""
    p = np.array(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DomainError(f"a mixed strategy must be a non-empty vector, got shape {p.shape}")
    if size is not None and p.size != size:
        raise DomainError(f"mixed strategy has {p.size} entries, expected {size}")
    if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
        raise DomainError(f"probabilities must lie in [0, 1]: {p.tolist()}")
    total = p.sum()
    if abs(total - 1.0) > NORM_TOL:
        raise DomainError(f"probabilities sum to {total!r}, not 1")
    return p


def point_mass(a: int, size: int) -> np.ndarray:
    p = np.zeros(size)
    p[a] = 1.0
    return p


# ---------------------------------------------------------------------------
# Payoff families
# ---------------------------------------------------------------------------
#
# Each family maps a params array of shape (..., n_params) and summaries of
# shape (..., k) to payoffs of every own action, shape (..., k).  Payoffs are
# maximised; costs enter negated.


def _split_affine(params, k):
    c = params[..., :k]
    M = params[..., k : k + k * k].reshape(params.shape[:-1] + (k, k))
    return c, M


def _affine(params, taus):
    k = taus.shape[-1]
    c, M = _split_affine(params, k)
    return c + (M @ taus[..., None])[..., 0]


def _quadratic(params, taus):
    k = taus.shape[-1]
    Q = params[..., k + k * k :].reshape(params.shape[:-1] + (k, k))
    return _affine(params[..., : k + k * k], taus) + (Q @ (taus**2)[..., None])[..., 0]


def _routing(params, taus):
    return -params * taus


def _example1(params, taus):
    return params[..., :1] + (np.array([0.0, 1.0]) - taus[..., 1:2]) ** 2


FAMILIES = {
    "affine": (lambda k: k + k * k, _affine),
    "quadratic_summary": (lambda k: k + 2 * k * k, _quadratic),
    "routing_congestion": (lambda k: k, _routing),
    "example1": (lambda k: 1, _example1),
}


def n_params(family: str, k: int) -> int:
    if family not in FAMILIES:
        raise ConfigurationError(f"unknown payoff family {family!r}; expected one of {sorted(FAMILIES)}")
    if family == "example1" and k != 2:
        raise ConfigurationError(f"family 'example1' needs exactly 2 actions, got {k}")
    return FAMILIES[family][0](k)


@dataclass(frozen=True)
class Characteristic:
    """A payoff function u(a, tau) from one of the built-in families.

    Two characteristics are the same iff family and params are equal.
    """

    family: str
    params: tuple = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown payoff family {self.family!r}; expected one of {sorted(FAMILIES)}")
        params = tuple(float(x) for x in np.asarray(self.params, dtype=float).ravel())
        if not all(np.isfinite(params)):
            raise ConfigurationError(f"params of {self.family} must be finite")
        object.__setattr__(self, "params", params)

    def check(self, k: int):
        """Raise ConfigurationError unless params fit an action space of size ``k``."""
        want = n_params(self.family, k)
        if len(self.params) != want:
            raise ConfigurationError(
                f"family {self.family!r} on {k} actions takes {want} params, got {len(self.params)}"
            )

    def table(self, taus) -> np.ndarray:
        """Payoffs of every own action against each summary in ``taus``."""
        taus = np.asarray(taus, dtype=float)
        self.check(taus.shape[-1])
        return FAMILIES[self.family][1](np.asarray(self.params), taus)

    def payoff(self, a: int, tau) -> float:
        return float(self.table(tau)[a])

    def to_dict(self) -> dict:
        return {"family": self.family, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d, path="characteristic") -> "Characteristic":
        if not isinstance(d, dict) or "family" not in d:
            _fail(path, "expected an object with 'family' and 'params'")
        try:
            return cls(d["family"], tuple(d.get("params", ())))
        except ConfigurationError as exc:
            _fail(path, str(exc))
        except (TypeError, ValueError) as exc:
            _fail(f"{path}.params", f"not a list of numbers ({exc})")


def eval_payoff(c: Characteristic, a: int, tau) -> float:
    """u_c(a, tau)."""
    tau = as_mixed(tau)
    if not 0 <= a < tau.size:
        raise DomainError(f"action index {a} out of range for {tau.size} actions")
    return c.payoff(a, tau)


class PayoffBatch:
    """Vectorised payoffs for a fixed list of characteristics.

    Calling the batch with ``taus`` of shape (len(chars), ..., k), or (k,) for
    a shared summary, returns u_j(a, taus[j, ...]) for every own action a in
    the last axis.
    """

    def __init__(self, chars: Sequence[Characteristic], k: int):
        self.size = len(chars)
        self.k = k
        groups: dict[str, list[int]] = {}
        for j, c in enumerate(chars):
            groups.setdefault(c.family, []).append(j)
        for c in set(chars):
            c.check(k)
        self._groups = [
            (FAMILIES[fam][1], np.array(idx), np.array([chars[j].params for j in idx], dtype=float))
            for fam, idx in groups.items()
        ]

    def __call__(self, taus) -> np.ndarray:
        taus = np.asarray(taus, dtype=float)
        if taus.ndim == 1:
            taus = np.broadcast_to(taus, (self.size, taus.size))
        if taus.shape[-1] != self.k:
            raise DomainError(f"summaries have {taus.shape[-1]} entries, expected {self.k}")
        out = np.empty(taus.shape)
        extra = taus.ndim - 2
        for fn, idx, params in self._groups:
            p = params.reshape((len(idx),) + (1,) * extra + (params.shape[-1],))
            out[idx] = fn(p, taus[idx])
        return out


def payoff_tables(chars: Sequence[Characteristic], taus) -> np.ndarray:
    """One-shot :class:`PayoffBatch` evaluation."""
    taus = np.asarray(taus, dtype=float)
    return PayoffBatch(chars, taus.shape[-1])(taus)


# ---------------------------------------------------------------------------
# Games
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiniteTypes:
    """Finitely many characteristics with positive weights summing to one."""

    types: tuple
    weights: np.ndarray
    names: tuple | None = None

    def __post_init__(self):
        types = tuple(self.types)
        w = np.array(self.weights, dtype=float)
        if not types:
            _fail("population.types", "need at least one type")
        if w.shape != (len(types),):
            _fail("population.types", "one weight per type required")
        for t, wt in enumerate(w):
            if not np.isfinite(wt) or wt <= 0.0:
                _fail(f"population.types[{t}].weight", f"weights must be positive, got {wt}")
        total = w.sum()
        if abs(total - 1.0) > NORM_TOL:
            _fail("population.types", f"weights sum {total:.12g}, expected 1 within {NORM_TOL}")
        w = w / total
        w.setflags(write=False)
        if len(set(types)) != len(types):
            _fail("population.types", "duplicate characteristics; merge their weights")
        object.__setattr__(self, "types", types)
        object.__setattr__(self, "weights", w)
        if self.names is not None:
            object.__setattr__(self, "names", tuple(str(x) for x in self.names))

    kind = "finite_types"

    def __eq__(self, other):
        if not isinstance(other, FiniteTypes):
            return NotImplemented
        return self.types == other.types and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash((self.types, self.weights.tobytes()))

    def contains(self, c: Characteristic) -> bool:
        return c in self.types

    def to_dict(self) -> dict:
        out = []
        for j, (c, w) in enumerate(zip(self.types, self.weights)):
            row = c.to_dict()
            row["weight"] = float(w)
            if self.names is not None:
                row["name"] = self.names[j]
            out.append(row)
        return {"kind": self.kind, "types": out}


@dataclass(frozen=True)
class ParamContinuum:
    """Types theta ~ Uniform[0, 1] with params(theta) = base + theta * direction.

    ``rule`` optionally names an auxiliary-mapping rule (see
    :mod:`lglab.direct`) used for characteristics outside any finite table.
    """

    family: str
    base: tuple
    direction: tuple
    rule: str | None = None
    rule_args: tuple = ()

    kind = "param_continuum"

    def __post_init__(self):
        if self.family not in FAMILIES:
            _fail("population.family", f"unknown payoff family {self.family!r}")
        base = tuple(float(x) for x in self.base)
        direction = tuple(float(x) for x in self.direction)
        if len(base) != len(direction):
            _fail("population.direction", "must have the same length as base")
        if not any(direction):
            _fail("population.direction", "must be nonzero")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "rule_args", tuple(float(x) for x in self.rule_args))

    def characteristic(self, theta: float) -> Characteristic:
        if not 0.0 <= theta <= 1.0:
            raise DomainError(f"theta must lie in [0, 1], got {theta}")
        b, d = np.asarray(self.base), np.asarray(self.direction)
        return Characteristic(self.family, tuple(b + theta * d))

    def theta_of(self, c: Characteristic) -> float | None:
        """The theta realising ``c``, or None when ``c`` is not in the family's image."""
        if c.family != self.family or len(c.params) != len(self.base):
            return None
        b, d = np.asarray(self.base), np.asarray(self.direction)
        j = int(np.argmax(np.abs(d)))
        theta = (c.params[j] - b[j]) / d[j]
        if not -1e-12 <= theta <= 1.0 + 1e-12:
            return None
        if not np.allclose(b + theta * d, c.params, rtol=0.0, atol=1e-12):
            return None
        return min(1.0, max(0.0, theta))

    def contains(self, c: Characteristic) -> bool:
        return self.theta_of(c) is not None

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "family": self.family, "base": list(self.base), "direction": list(self.direction)}
        if self.rule is not None:
            d["rule"] = {"name": self.rule, "args": list(self.rule_args)}
        return d


def population_from_dict(d, path="population"):
    if not isinstance(d, dict) or "kind" not in d:
        _fail(path, "expected an object with a 'kind' field")
    kind = d["kind"]
    if kind == "finite_types":
        rows = d.get("types")
        if not isinstance(rows, list) or not rows:
            _fail(f"{path}.types", "expected a non-empty list")
        chars, weights, names = [], [], []
        for t, row in enumerate(rows):
            chars.append(Characteristic.from_dict(row, f"{path}.types[{t}]"))
            if "weight" not in row:
                _fail(f"{path}.types[{t}].weight", "missing")
            try:
                weights.append(float(row["weight"]))
            except (TypeError, ValueError):
                _fail(f"{path}.types[{t}].weight", "not a number")
            names.append(str(row.get("name", f"type{t}")))
        return FiniteTypes(tuple(chars), np.array(weights), tuple(names))
    if kind == "param_continuum":
        for key in ("family", "base", "direction"):
            if key not in d:
                _fail(f"{path}.{key}", "missing")
        rule = d.get("rule")
        name, args = None, ()
        if rule is not None:
            if isinstance(rule, str):
                name = rule
            elif isinstance(rule, dict) and "name" in rule:
                name, args = rule["name"], tuple(rule.get("args", ()))
            else:
                _fail(f"{path}.rule", "expected a rule name or {name, args}")
        return ParamContinuum(d["family"], tuple(d["base"]), tuple(d["direction"]), name, args)
    _fail(f"{path}.kind", f"unknown population kind {kind!r}; expected finite_types or param_continuum")


@dataclass(frozen=True)
class LargeGameSpec:
    """A continuum game: a common action space and a law of characteristics."""

    action_space: ActionSpace
    population: FiniteTypes | ParamContinuum
    name: str | None = None

    def __post_init__(self):
        k = self.action_space.size
        pop = self.population
        if isinstance(pop, FiniteTypes):
            for t, c in enumerate(pop.types):
                try:
                    c.check(k)
                except ConfigurationError as exc:
                    _fail(f"population.types[{t}]", str(exc))
        else:
            try:
                want = n_params(pop.family, k)
            except ConfigurationError as exc:
                _fail("population.family", str(exc))
            if len(pop.base) != want:
                _fail("population.base", f"family {pop.family!r} on {k} actions takes {want} params")

    @property
    def is_finite(self) -> bool:
        return isinstance(self.population, FiniteTypes)

    def to_dict(self) -> dict:
        d = {"actions": self.action_space.to_dict(), "population": self.population.to_dict()}
        if self.name is not None:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, d) -> "LargeGameSpec":
        if not isinstance(d, dict):
            _fail("game", "expected a JSON object")
        if "actions" not in d:
            _fail("actions", "missing")
        if "population" not in d:
            _fail("population", "missing")
        space = ActionSpace.from_dict(d["actions"])
        pop = population_from_dict(d["population"])
        return cls(space, pop, d.get("name"))


@dataclass(frozen=True)
class FiniteGameInstance:
    """An n-player game; every player has weight 1/n."""

    action_space: ActionSpace
    players: tuple

    def __post_init__(self):
        players = tuple(self.players)
        if not players:
            raise DomainError("a finite game needs at least one player")
        k = self.action_space.size
        for c in set(players):
            c.check(k)
        object.__setattr__(self, "players", players)

    @property
    def n(self) -> int:
        return len(self.players)

    def to_dict(self) -> dict:
        return {"actions": self.action_space.to_dict(), "players": [c.to_dict() for c in self.players]}

    @classmethod
    def from_dict(cls, d) -> "FiniteGameInstance":
        if not isinstance(d, dict) or "actions" not in d or "players" not in d:
            _fail("instance", "expected an object with 'actions' and 'players'")
        space = ActionSpace.from_dict(d["actions"])
        players = tuple(Characteristic.from_dict(p, f"players[{i}]") for i, p in enumerate(d["players"]))
        return cls(space, players)


@dataclass(frozen=True, eq=False)
class StrategyProfile:
    """Per-player mixed strategies, one row per player."""

    rows: np.ndarray
    symmetric: bool = False
    _pure: bool = field(init=False, repr=False)

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise DomainError(f"a strategy profile needs shape (n, k) with n >= 1, got {rows.shape}")
        for i, r in enumerate(rows):
            try:
                as_mixed(r)
            except DomainError as exc:
                raise DomainError(f"player {i}: {exc}") from None
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "_pure", bool(np.all((rows == 0.0) | (rows == 1.0))))

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def pure(self) -> bool:
        """True when every row is a point mass."""
        return self._pure

    def pure_actions(self) -> np.ndarray:
        if not self.pure:
            raise DomainError("profile is not pure")
        return self.rows.argmax(axis=1)

    def is_symmetric_for(self, players: Sequence[Characteristic]) -> bool:
        seen = {}
        for c, r in zip(players, self.rows):
            key = r.tobytes()
            if seen.setdefault(c, key) != key:
                return False
        return True

    def __eq__(self, other):
        if not isinstance(other, StrategyProfile):
            return NotImplemented
        return self.symmetric == other.symmetric and np.array_equal(self.rows, other.rows)

    def to_dict(self) -> dict:
        return {"rows": self.rows.tolist(), "symmetric": self.symmetric, "pure": self.pure}

    @classmethod
    def from_dict(cls, d) -> "StrategyProfile":
        return cls(np.asarray(d["rows"], dtype=float), bool(d.get("symmetric", False)))


def societal_summary(profile) -> np.ndarray:
    """Uniform average of the players' mixed strategies."""
    rows = profile.rows if isinstance(profile, StrategyProfile) else np.asarray(profile, dtype=float)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise DomainError("societal summary of an empty profile is undefined")
    return rows.mean(axis=0)


def empirical_summary(actions, k: int) -> np.ndarray:
    """Action frequencies of a pure action profile."""
    actions = np.asarray(actions)
    if actions.size == 0:
        raise DomainError("societal summary of an empty profile is undefined")
    return np.bincount(actions, minlength=k) / actions.size
