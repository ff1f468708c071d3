"""Builtin games and experiment configuration files."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .core import ActionSpace, Characteristic, FiniteTypes, LargeGameSpec, ParamContinuum
from .direct import InstantiationScheme
from .errors import ConfigurationError, LGLabError


def routing() -> LargeGameSpec:
    """Two paths; path a costs 2 tau(a), path b costs tau(b). Payoffs are negated costs."""
    pop = FiniteTypes((Characteristic("routing_congestion", (2.0, 1.0)),), [1.0], names=("driver",))
    return LargeGameSpec(ActionSpace.two_point(1.0, ("a", "b")), pop, name="routing")


def example1() -> LargeGameSpec:
    """Types theta in [0, 1] with u(a, tau) = theta + (a - tau(1))^2 and the rational-indicator rule."""
    pop = ParamContinuum("example1", (0.0,), (1.0,), rule="example1_rational")
    return LargeGameSpec(ActionSpace.two_point(1.0, ("0", "1")), pop, name="example1")


def two_type_congestion() -> LargeGameSpec:
    """Cars and trucks sharing the two routing paths, half the population each.

    Cars pay 2 tau(a) on a and tau(b) on b. Trucks pay 0.5 + tau(a) on a and
    tau(b) on b. In equilibrium trucks all take b and cars split (2/3, 1/3),
    giving tau* = (1/3, 2/3).
    """
    cars = Characteristic("affine", (0.0, 0.0, -2.0, 0.0, 0.0, -1.0))
    trucks = Characteristic("affine", (-0.5, 0.0, -1.0, 0.0, 0.0, -1.0))
    pop = FiniteTypes((cars, trucks), [0.5, 0.5], names=("car", "truck"))
    return LargeGameSpec(ActionSpace.two_point(1.0, ("a", "b")), pop, name="two_type_congestion")


BUILTINS = {"routing": routing, "example1": example1, "two_type_congestion": two_type_congestion}
DEFAULT_SCHEME = {"routing": "replicate_types", "example1": "quantile_grid", "two_type_congestion": "replicate_types"}


def builtin(name: str) -> LargeGameSpec:
    if name not in BUILTINS:
        raise ConfigurationError(f"game: unknown builtin {name!r}; expected one of {sorted(BUILTINS)}")
    return BUILTINS[name]()


def load_game(ref: str) -> LargeGameSpec:
    """A builtin name or the path of a game JSON file."""
    if ref in BUILTINS:
        return builtin(ref)
    try:
        with open(ref, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"game: cannot read {ref!r} ({exc.strerror})") from None
    return LargeGameSpec.from_dict(_parse(text, ref))


def _parse(text: str, source: str = "<config>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    game: LargeGameSpec
    game_ref: str | None = None
    scheme: InstantiationScheme = field(default_factory=InstantiationScheme)
    ns: tuple = (3, 30, 300)
    eps: float = 0.1
    reps: int = 1000
    seed: int = 0
    mode: str = "exact"
    out: str | None = None

    def to_dict(self) -> dict:
        return {
            "game": self.game_ref if self.game_ref is not None else self.game.to_dict(),
            "scheme": self.scheme.to_dict(),
            "ns": list(self.ns),
            "eps": self.eps,
            "reps": self.reps,
            "seed": self.seed,
            "mode": self.mode,
            "out": self.out,
        }


_KEYS = {"game", "scheme", "ns", "eps", "reps", "seed", "mode", "out"}


def _int(raw, path, lo=None, hi=None):
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigurationError(f"{path}: expected an integer, got {raw!r}")
    if (lo is not None and raw < lo) or (hi is not None and raw > hi):
        raise ConfigurationError(f"{path}: {raw} out of range")
    return raw


def validate(text: str) -> ExperimentConfig:
    """Parse and check an experiment config; errors name the line or field."""
    raw = _parse(text)
    if not isinstance(raw, dict):
        raise ConfigurationError("<config>: top level must be a JSON object")
    unknown = sorted(set(raw) - _KEYS)
    if unknown:
        raise ConfigurationError(f"{unknown[0]}: unknown field")
    if "game" not in raw:
        raise ConfigurationError("game: missing")
    g = raw["game"]
    ref = None
    if isinstance(g, str):
        game, ref = builtin(g), g
    elif isinstance(g, dict):
        try:
            game = LargeGameSpec.from_dict(g)
        except LGLabError as exc:
            raise ConfigurationError(f"game.{exc}") from None
    else:
        raise ConfigurationError("game: expected a builtin name or a game object")
    sch = raw.get("scheme", {})
    if isinstance(sch, str):
        sch = {"kind": sch}
    if not isinstance(sch, dict):
        raise ConfigurationError("scheme: expected a string or an object")
    default_kind = DEFAULT_SCHEME.get(ref, "replicate_types" if game.is_finite else "quantile_grid")
    scheme = InstantiationScheme(sch.get("kind", default_kind), _int(sch.get("seed", 0), "scheme.seed", 0, 2**64 - 1))
    if scheme.kind == "replicate_types" and not game.is_finite:
        raise ConfigurationError("scheme.kind: replicate_types needs a finite_types population")
    if scheme.kind == "quantile_grid" and game.is_finite:
        raise ConfigurationError("scheme.kind: quantile_grid needs a param_continuum population")
    ns = raw.get("ns", [3, 30, 300])
    if not isinstance(ns, list) or not ns:
        raise ConfigurationError("ns: expected a non-empty list of integers")
    ns = tuple(_int(x, f"ns[{j}]", 1) for j, x in enumerate(ns))
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigurationError(f"ns: must be strictly increasing, got {list(ns)}")
    eps = raw.get("eps", 0.1)
    if isinstance(eps, bool) or not isinstance(eps, (int, float)) or not eps > 0:
        raise ConfigurationError(f"eps: expected a positive number, got {eps!r}")
    reps = _int(raw.get("reps", 1000), "reps", 0)
    seed = _int(raw.get("seed", 0), "seed", 0, 2**64 - 1)
    mode = raw.get("mode", "exact")
    if mode not in ("exact", "mc"):
        raise ConfigurationError(f"mode: expected 'exact' or 'mc', got {mode!r}")
    if mode == "mc" and reps < 100:
        raise ConfigurationError(f"reps: Monte Carlo needs at least 100 replicates, got {reps}")
    out = raw.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigurationError("out: expected a path string")
    return ExperimentConfig(game, ref, scheme, ns, float(eps), reps, seed, mode, out)
