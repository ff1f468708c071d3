"""Pure realizations of randomized profiles: ex-post gains and concentration."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import FiniteGameInstance, PayoffBatch, StrategyProfile, empirical_summary, societal_summary
from .errors import ConfigurationError, DomainError
from .metrics import bl_distance, prohorov
from .payoffs import _cdf, _stream, sample_actions

WILSON_Z = 1.96


def _check(gn, profile):
    if profile.n != gn.n or profile.rows.shape[1] != gn.action_space.size:
        raise DomainError(
            f"profile shape {profile.rows.shape} does not match a {gn.n}-player game on {gn.action_space.size} actions"
        )


def sample_realization(gn: FiniteGameInstance, profile: StrategyProfile, seed: int, rep: int) -> np.ndarray:
    """One pure action profile, players drawn independently by inverse CDF.

    Player i uses the i-th uniform of the counter-based stream keyed by
    (seed, rep), so the draw is fixed by (seed, rep, i).
    """
    _check(gn, profile)
    u = _stream(seed, rep).random(gn.n)
    return sample_actions(_cdf(np.array(profile.rows)), u)


def _check_actions(gn, x):
    x = np.asarray(x)
    if x.shape != (gn.n,):
        raise DomainError(f"realization has shape {x.shape}, expected ({gn.n},)")
    if x.size and (x.min() < 0 or x.max() >= gn.action_space.size):
        raise DomainError("realization contains an invalid action index")
    return x.astype(int)


def expost_gains(gn: FiniteGameInstance, x, batch: PayoffBatch | None = None) -> np.ndarray:
    """For every player: best payoff after moving her own atom, minus her realized payoff."""
    x = _check_actions(gn, x)
    k, n = gn.action_space.size, gn.n
    batch = batch or PayoffBatch(gn.players, k)
    counts = np.bincount(x, minlength=k).astype(float)
    taus = np.broadcast_to(counts, (n, k, k)).copy()
    taus[np.arange(n), :, x] -= 1.0
    taus[:, np.arange(k), np.arange(k)] += 1.0
    U = batch(taus / n)
    dev = U[:, np.arange(k), np.arange(k)]
    return dev.max(axis=1) - dev[np.arange(n), x]


def expost_gain(gn: FiniteGameInstance, x, i: int) -> float:
    if not 0 <= i < gn.n:
        raise DomainError(f"player index {i} out of range for {gn.n} players")
    return float(expost_gains(gn, x)[i])


def is_pure_eps_equilibrium(gains, eps: float) -> bool:
    """At least (1 - eps) n players gain at most eps."""
    gains = np.asarray(gains)
    return int(np.sum(gains > eps)) <= eps * len(gains) + 1e-9


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return float(max(0.0, centre - half)), float(min(1.0, centre + half))


@dataclass(frozen=True)
class RealizationBatch:
    n: int
    reps: int
    eps: float
    pass_count: int
    p_hat: float
    wilson_lo: float
    wilson_hi: float
    seed: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    CSV_HEADER = "n,eps,p_hat,wilson_lo,wilson_hi,reps,seed"

    def csv_row(self) -> str:
        return ",".join(
            [str(self.n), repr(self.eps), repr(self.p_hat), repr(self.wilson_lo), repr(self.wilson_hi), str(self.reps), str(self.seed)]
        )


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


def estimate_omega(
    gn: FiniteGameInstance, profile: StrategyProfile, eps: float, reps: int, seed: int, threads: int = 1
) -> RealizationBatch:
    """Monte Carlo probability that a realization is a pure eps-equilibrium."""
    if not eps > 0:
        raise ConfigurationError(f"eps: must be positive, got {eps}")
    if reps < 30:
        raise ConfigurationError(f"reps: need at least 30 replicates, got {reps}")
    _check(gn, profile)
    batch = PayoffBatch(gn.players, gn.action_space.size)

    def one(rep):
        x = sample_realization(gn, profile, seed, rep)
        return is_pure_eps_equilibrium(expost_gains(gn, x, batch), eps)

    passes = int(sum(_map(one, list(range(reps)), threads)))
    lo, hi = wilson_interval(passes, reps)
    return RealizationBatch(gn.n, reps, float(eps), passes, passes / reps, lo, hi, int(seed))


@dataclass(frozen=True)
class ConcentrationReport:
    n: int
    reps: int
    seed: int
    eps: float
    empirical_freq: float
    chebyshev_bound: float
    stderr: float
    holds: bool
    metric_samples: tuple

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["metric_samples"] = [{"rep": r, "rho": a, "bl": b} for r, a, b in self.metric_samples]
        return d

    @property
    def median_bl(self) -> float:
        return float(np.median([s[2] for s in self.metric_samples]))

    @property
    def median_rho(self) -> float:
        return float(np.median([s[1] for s in self.metric_samples]))


def chebyshev_bound(n: int, eps: float) -> float:
    """1 - max_j weight_j / eps^2 with uniform weights 1/n, clamped to [0, 1]."""
    return float(min(1.0, max(0.0, 1.0 - 1.0 / (n * eps * eps))))


def witness_scale(dist) -> float:
    """Factor making the indicator of action 0 a function of bounded-Lipschitz norm 1."""
    dist = np.asarray(dist)
    if dist.shape[0] < 2:
        return 1.0
    d_min = dist[~np.eye(dist.shape[0], dtype=bool)].min()
    return 1.0 / (1.0 + 1.0 / d_min)


def concentration_check(
    gn: FiniteGameInstance, profile: StrategyProfile, eps: float, reps: int, seed: int, threads: int = 1
) -> ConcentrationReport:
    """Distances between realized and mean summaries, and the Chebyshev bound on one witness."""
    if not eps > 0:
        raise ConfigurationError(f"eps: must be positive, got {eps}")
    if reps < 2:
        raise ConfigurationError(f"reps: need at least 2 replicates, got {reps}")
    _check(gn, profile)
    space = gn.action_space
    k, n = space.size, gn.n
    mean = societal_summary(profile)
    h0 = witness_scale(space.dist)
    expected = h0 * profile.rows[:, 0].mean()

    def one(rep):
        x = sample_realization(gn, profile, seed, rep)
        emp = empirical_summary(x, k)
        dev = abs(h0 * emp[0] - expected)
        return dev <= eps, (rep, prohorov(emp, mean, space), bl_distance(emp, mean, space))

    out = _map(one, list(range(reps)), threads)
    freq = sum(ok for ok, _ in out) / reps
    stderr = float(np.sqrt(freq * (1 - freq) / reps))
    bound = chebyshev_bound(n, eps)
    return ConcentrationReport(
        n, reps, int(seed), float(eps), freq, bound, stderr, bool(freq >= bound - 2 * stderr), tuple(s for _, s in out)
    )
