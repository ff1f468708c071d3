"""Expected payoffs in finite games and the ex-ante epsilon audit.

Exact expectations run a dynamic program over the opponents' action-count
vectors (a Poisson-multinomial convolution).  Count vectors live in a dense
array indexed by the counts of the first k-1 actions; the count of the last
action is implied by the number of opponents.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import signal, stats

from .core import FiniteGameInstance, LargeGameSpec, StrategyProfile, payoff_tables
from .errors import CapabilityError, ConfigurationError, DomainError

MAX_EXACT_ACTIONS = 4
MAX_DP_STATES = 10**7
MIN_MC_REPS = 100
_MC_CHUNK = 4096


# ---------------------------------------------------------------------------
# Opponent count distributions
# ---------------------------------------------------------------------------


def dp_states(m: int, k: int) -> int:
    return (m + 1) ** (k - 1)


def check_exact_capability(m: int, k: int):
    if k > MAX_EXACT_ACTIONS:
        raise CapabilityError(
            f"exact expectation supports at most {MAX_EXACT_ACTIONS} actions (got {k}); use Monte Carlo"
        )
    if dp_states(m, k) > MAX_DP_STATES:
        raise CapabilityError(
            f"exact expectation needs {dp_states(m, k)} count states (> {MAX_DP_STATES}); use Monte Carlo"
        )


def _sequential_pmf(rows, k):
    m = len(rows)
    pmf = np.zeros((m + 1,) * (k - 1))
    pmf[(0,) * (k - 1)] = 1.0
    for p in rows:
        new = p[k - 1] * pmf
        for j in range(k - 1):
            if p[j] == 0.0:
                continue
            dst = [slice(None)] * (k - 1)
            src = [slice(None)] * (k - 1)
            dst[j], src[j] = slice(1, None), slice(None, -1)
            new[tuple(dst)] += p[j] * pmf[tuple(src)]
        pmf = new
    return pmf


def multinomial_pmf_grid(m: int, p, k: int) -> np.ndarray:
    """Multinomial(m, p) on the dense count layout."""
    p = np.asarray(p, dtype=float)
    if k == 1:
        return np.ones(())
    if k == 2:
        return stats.binom.pmf(np.arange(m + 1), m, p[0])
    idx = np.indices((m + 1,) * (k - 1)).reshape(k - 1, -1).T
    last = m - idx.sum(axis=1)
    ok = last >= 0
    full = np.column_stack([idx[ok], last[ok]])
    out = np.zeros(idx.shape[0])
    out[ok] = stats.multinomial.pmf(full, m, p)
    return np.nan_to_num(out).reshape((m + 1,) * (k - 1))


def _grouped_pmf(rows, k):
    uniq, counts = np.unique(rows, axis=0, return_counts=True)
    pmf = np.ones((1,) * (k - 1))
    for p, m in zip(uniq, counts):
        g = multinomial_pmf_grid(int(m), p, k)
        pmf = np.convolve(pmf, g) if k == 2 else signal.convolve(pmf, g, method="direct")
    return pmf


def opponent_count_pmf(rows, k: int, strategy: str = "auto") -> np.ndarray:
    """Law of the action-count vector of independent opponents with mixed strategies ``rows``.

    ``strategy``: "sequential" adds one opponent at a time; "grouped" convolves
    one multinomial per distinct strategy; "auto" uses the multinomial when all
    opponents share a strategy and the sequential DP otherwise.
    """
    rows = np.asarray(rows, dtype=float).reshape(-1, k)
    check_exact_capability(len(rows), k)
    if k == 1:
        return np.ones(())
    if strategy == "auto":
        strategy = "grouped" if len(rows) and np.all(rows == rows[0]) else "sequential"
    if strategy == "sequential":
        return _sequential_pmf(rows, k)
    if strategy == "grouped":
        if len(rows) == 0:
            return np.ones((1,) * (k - 1))
        return _grouped_pmf(rows, k)
    raise ConfigurationError(f"unknown DP strategy {strategy!r}")


def _support(pmf, m, k):
    """Count vectors (S, k) and probabilities (S,) of the nonzero states of a count pmf."""
    if k == 1:
        return np.array([[m]], dtype=float), np.ones(1)
    nz = np.nonzero(pmf)
    probs = pmf[nz]
    head = np.column_stack(nz).astype(float) if k > 2 else nz[0][:, None].astype(float)
    counts = np.column_stack([head, m - head.sum(axis=1)])
    return counts, probs


def _expected_tables(char, pmf, m, k, n):
    """E[u(a, (delta_a + counts)/n)] for every own action a."""
    counts, probs = _support(pmf, m, k)
    taus = np.broadcast_to(counts / n, (k,) + counts.shape).copy()
    taus[np.arange(k), :, np.arange(k)] += 1.0 / n
    U = payoff_tables([char] * k, taus)  # (k, S, k)
    return np.array([probs @ U[a, :, a] for a in range(k)])


def _opponent_rows(profile: StrategyProfile, i: int):
    return np.delete(profile.rows, i, axis=0)


def _check_player(gn, profile, i):
    if profile.n != gn.n or profile.rows.shape[1] != gn.action_space.size:
        raise DomainError(f"profile shape {profile.rows.shape} does not match a {gn.n}-player game on {gn.action_space.size} actions")
    if not 0 <= i < gn.n:
        raise DomainError(f"player index {i} out of range for {gn.n} players")


def deviation_payoffs_exact(gn: FiniteGameInstance, profile: StrategyProfile, i: int, strategy: str = "auto") -> np.ndarray:
    """U_i(delta_a, g_{-i}) for every action a."""
    _check_player(gn, profile, i)
    k = gn.action_space.size
    pmf = opponent_count_pmf(_opponent_rows(profile, i), k, strategy)
    return _expected_tables(gn.players[i], pmf, gn.n - 1, k, gn.n)


def expected_payoff_exact(gn: FiniteGameInstance, profile: StrategyProfile, i: int, a: int, strategy: str = "auto") -> float:
    """Exact expected payoff of player ``i`` deviating to the pure action ``a``."""
    k = gn.action_space.size
    if not 0 <= a < k:
        raise DomainError(f"action index {a} out of range for {k} actions")
    return float(deviation_payoffs_exact(gn, profile, i, strategy)[a])


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def _stream(*key) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(x) for x in key])))


def sample_actions(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws: ``u`` has shape (..., n) for players with cumulative rows ``cdf`` (n, k)."""
    return (u[..., None] >= cdf[:, :-1]).sum(axis=-1)


def _cdf(rows):
    cdf = np.cumsum(rows, axis=1)
    cdf[:, -1] = 1.0
    return cdf


def _mc_deviation(gn, profile, i, a, reps, seed):
    k, n = gn.action_space.size, gn.n
    cdf = _cdf(_opponent_rows(profile, i))
    gen = _stream(seed, i, a)
    vals = np.empty(reps)
    char = gn.players[i]
    for start in range(0, reps, _MC_CHUNK):
        stop = min(reps, start + _MC_CHUNK)
        # replicate r consumes the r-th block of n-1 uniforms of the (seed, i, a) stream
        u = gen.random((stop - start, n - 1))
        acts = sample_actions(cdf, u)
        counts = np.stack([(acts == b).sum(axis=1) for b in range(k)], axis=1).astype(float)
        counts[:, a] += 1.0
        vals[start:stop] = payoff_tables([char], (counts / n)[None])[0, :, a]
    return vals


def expected_payoff_mc(
    gn: FiniteGameInstance, profile: StrategyProfile, i: int, a: int, reps: int, seed: int
) -> tuple[float, float]:
    """Sample mean and standard error of player ``i``'s payoff from deviating to ``a``."""
    if reps < MIN_MC_REPS:
        raise ConfigurationError(f"reps: Monte Carlo needs at least {MIN_MC_REPS} replicates, got {reps}")
    _check_player(gn, profile, i)
    if not 0 <= a < gn.action_space.size:
        raise DomainError(f"action index {a} out of range for {gn.action_space.size} actions")
    vals = _mc_deviation(gn, profile, i, a, reps, seed)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(reps))


# ---------------------------------------------------------------------------
# Audit
# ---------------------------------------------------------------------------


def eps_star(gains, n: int | None = None) -> float:
    """Smallest eps such that at most eps*n players gain more than eps by deviating.

    min over k of max(g_(k+1), k/n) with gains sorted in decreasing order and
    g_(n+1) = 0.
    """
    g = np.sort(np.clip(np.asarray(gains, dtype=float), 0.0, None))[::-1]
    n = len(g) if n is None else n
    if n == 0:
        return 0.0
    tail = np.append(g, 0.0)
    ks = np.arange(n + 1)
    return float(np.min(np.maximum(tail[ks], ks / n)))


@dataclass(frozen=True)
class AuditConfig:
    method: str = "exact"
    reps: int = 10_000
    seed: int = 0
    inflate: bool = True
    threads: int = 1
    dp_strategy: str = "grouped"

    def __post_init__(self):
        if self.method not in ("exact", "mc", "auto"):
            raise ConfigurationError(f"mode: expected exact, mc or auto, got {self.method!r}")
        if self.method != "exact" and self.reps < MIN_MC_REPS:
            raise ConfigurationError(f"reps: Monte Carlo needs at least {MIN_MC_REPS} replicates, got {self.reps}")
        if self.threads < 1:
            raise ConfigurationError("threads: must be >= 1")


@dataclass(frozen=True, eq=False)
class GainReport:
    gains: np.ndarray
    eps_star: float
    method: str
    n: int
    mc_stderr: float | None = None
    eps_star_raw: float | None = None
    deviation_payoffs: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "method": self.method,
            "eps_star": self.eps_star,
            "eps_star_raw": self.eps_star_raw,
            "mc_stderr": self.mc_stderr,
            "gains": self.gains.tolist(),
        }


def _classes(gn, profile):
    """Players grouped by (characteristic, strategy); gains are equal within a class."""
    classes: dict = {}
    for i, (c, r) in enumerate(zip(gn.players, profile.rows)):
        classes.setdefault((c, r.tobytes()), []).append(i)
    return list(classes.values())


def _pmap(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def audit(gn: FiniteGameInstance, profile: StrategyProfile, cfg: AuditConfig | None = None) -> GainReport:
    """Per-player deviation gains and the smallest certifying eps."""
    cfg = cfg or AuditConfig()
    k, n = gn.action_space.size, gn.n
    _check_player(gn, profile, 0)
    method = cfg.method
    if method == "auto":
        method = "exact" if k <= MAX_EXACT_ACTIONS and dp_states(n - 1, k) <= MAX_DP_STATES else "mc"
    classes = _classes(gn, profile)
    stderr = None
    if method == "exact":
        check_exact_capability(n - 1, k)
        reps_by_row: dict[bytes, int] = {}
        for members in classes:
            reps_by_row.setdefault(profile.rows[members[0]].tobytes(), members[0])
        keys = list(reps_by_row)

        def pmf_for(key):
            return opponent_count_pmf(_opponent_rows(profile, reps_by_row[key]), k, cfg.dp_strategy)

        pmfs = dict(zip(keys, _pmap(pmf_for, keys, cfg.threads)))

        def dev(members):
            i = members[0]
            return _expected_tables(gn.players[i], pmfs[profile.rows[i].tobytes()], n - 1, k, n)

        devs = _pmap(dev, classes, cfg.threads)
        errs = None
    else:

        def dev(members):
            i = members[0]
            out = [_mc_deviation(gn, profile, i, a, cfg.reps, cfg.seed) for a in range(k)]
            return (
                np.array([v.mean() for v in out]),
                np.array([v.std(ddof=1) / np.sqrt(cfg.reps) for v in out]),
            )

        res = _pmap(dev, classes, cfg.threads)
        devs = [r[0] for r in res]
        errs = [r[1] for r in res]
        stderr = float(max(e.max() for e in errs))
    U = np.empty((n, k))
    for members, d in zip(classes, devs):
        U[members] = d
    gains = U.max(axis=1) - np.einsum("ia,ia->i", profile.rows, U)
    raw = eps_star(gains, n)
    eps = raw
    if method == "mc" and cfg.inflate:
        eps = raw + 4.0 * stderr
    return GainReport(gains, eps, "exact_dp" if method == "exact" else "monte_carlo", n, stderr, raw, U)


# ---------------------------------------------------------------------------
# Theorem-1 curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurveRow:
    n: int
    eps_star: float
    method: str
    stderr: float | None
    runtime_ms: float | None

    def csv_fields(self, timing: bool = True) -> list[str]:
        return [
            str(self.n),
            repr(self.eps_star),
            self.method,
            "" if self.stderr is None else repr(self.stderr),
            "" if (self.runtime_ms is None or not timing) else f"{self.runtime_ms:.3f}",
        ]


CURVE_HEADER = "n,eps_star,method,stderr,runtime_ms"


def auxiliary_mapping(game: LargeGameSpec, solver_cfg=None) -> dict:
    """The solver's auxiliary mapping for a finite-type game; empty for parametric games."""
    from .solver import solve_equilibrium

    if not game.is_finite:
        return {}
    return dict(solve_equilibrium(game, solver_cfg).per_type_strategy)


def theorem1_curve(game: LargeGameSpec, scheme, ns, cfg: AuditConfig | None = None, gbar: dict | None = None) -> list[CurveRow]:
    """eps_star of the direct profile along a sequence of instance sizes."""
    from .direct import build_direct_profile, instantiate

    cfg = cfg or AuditConfig()
    ns = [int(x) for x in ns]
    if not ns:
        raise ConfigurationError("ns: need at least one instance size")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigurationError(f"ns: must be strictly increasing, got {ns}")
    if gbar is None:
        gbar = auxiliary_mapping(game)
    fallback = None if game.is_finite else game.population
    inner = AuditConfig(cfg.method, cfg.reps, cfg.seed, cfg.inflate, 1, cfg.dp_strategy)

    def one(n):
        t0 = time.perf_counter()
        gn = instantiate(game, n, scheme)
        profile = build_direct_profile(gn, gbar, fallback)
        rep = audit(gn, profile, inner)
        return CurveRow(n, rep.eps_star, rep.method, rep.mc_stderr, 1000.0 * (time.perf_counter() - t0))

    return _pmap(one, ns, cfg.threads)
