"""Equilibria of finite-type continuum games and their symmetrization.

The solver runs damped fictitious play on the aggregate action distribution
and periodically tries to finish the job with a Newton-type solve of the
indifference equations on the current best-response supports.  The auxiliary
mapping is then read off a max-flow on the bipartite (type, action) graph.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.optimize import least_squares, linprog, root
from scipy.special import softmax

from .core import FiniteTypes, LargeGameSpec, ParamContinuum, PayoffBatch, as_mixed, payoff_tables
from .errors import ConfigurationError, InvalidInputError, SolverError

TOL_BR = 1e-8
_FLOW_SCALE = 2**40


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 200_000
    tol_br: float = TOL_BR
    tol_exploit: float = 1e-8
    polish: bool = True
    grid_fallback: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigurationError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tol_br > 0 or not self.tol_exploit > 0:
            raise ConfigurationError("tolerances must be positive")


@dataclass(frozen=True, eq=False)
class ContinuumEquilibrium:
    """Equilibrium aggregate ``tau_star`` plus the auxiliary mapping on the support."""

    tau_star: np.ndarray
    per_type_strategy: dict
    exploitability: float
    iterations: int = 0
    method: str = "audit"
    weights: dict = field(default_factory=dict)

    def strategy(self, c):
        return self.per_type_strategy[c]

    def to_dict(self) -> dict:
        return {
            "tau_star": self.tau_star.tolist(),
            "exploitability": self.exploitability,
            "iterations": self.iterations,
            "method": self.method,
            "per_type_strategy": [
                {**c.to_dict(), "weight": self.weights.get(c), "strategy": s.tolist()}
                for c, s in self.per_type_strategy.items()
            ],
        }


def _finite(game: LargeGameSpec) -> FiniteTypes:
    pop = game.population
    if isinstance(pop, ParamContinuum):
        raise ConfigurationError(
            "population: parametric continuum games must be discretized first (see discretize_population)"
        )
    if len(pop.types) > 64:
        raise ConfigurationError(f"population.types: at most 64 types supported, got {len(pop.types)}")
    return pop


def _gaps(U, sigma):
    return U.max(axis=1) - np.einsum("ta,ta->t", sigma, U)


def exploitability(game: LargeGameSpec, gbar: dict, tau) -> float:
    """max over types of the best-response payoff minus the played payoff against ``tau``."""
    pop = _finite(game)
    tau = as_mixed(tau, game.action_space.size)
    U = payoff_tables(pop.types, tau)
    sigma = np.array([gbar[c] for c in pop.types])
    return float(max(0.0, _gaps(U, sigma).max()))


def aggregate_gap(game: LargeGameSpec, tau) -> tuple[float, np.ndarray]:
    """Smallest weighted regret over all type assignments aggregating to ``tau``.

    Solves the min-cost transportation problem from type weights to action
    masses with arc costs equal to each type's regret for each action.  Zero
    exactly when ``tau`` is an equilibrium distribution.  Returns the value and
    the per-type strategies of the optimal assignment.
    """
    pop = _finite(game)
    tau = np.asarray(tau, dtype=float)
    T, k = len(pop.types), tau.size
    U = payoff_tables(pop.types, tau)
    cost = (U.max(axis=1, keepdims=True) - U) * 1.0
    A_eq = np.zeros((T + k, T * k))
    for t in range(T):
        A_eq[t, t * k : (t + 1) * k] = 1.0
    for a in range(k):
        A_eq[T + a, a::k] = 1.0
    b_eq = np.concatenate([pop.weights, tau / tau.sum()])
    res = linprog(cost.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        return np.inf, np.tile(tau, (T, 1))
    z = np.clip(res.x.reshape(T, k), 0.0, None)
    sigma = z / np.maximum(z.sum(axis=1, keepdims=True), 1e-300)
    return float(res.fun), sigma


def _polish(pay, w, sigma, tol):
    """Solve the indifference system on candidate supports; None on failure."""
    T, k = sigma.shape
    tau = w @ sigma
    U = pay(tau)
    gap = U.max(axis=1, keepdims=True) - U
    scale = max(1.0, float(np.abs(U).max()))
    supports = []
    for delta in (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4, 1e-5, 1e-6):
        supports.append(tuple(tuple(np.flatnonzero(gap[t] <= delta * scale)) for t in range(T)))
    supports.append(
        tuple(tuple(sorted(set(np.flatnonzero(sigma[t] > 1e-2)) | {int(gap[t].argmin())})) for t in range(T))
    )
    tried = set()
    for S in supports:
        if S in tried:
            continue
        tried.add(S)
        out = _solve_support(pay, w, sigma, S, tol)
        if out is not None:
            return out
    return None


def _solve_support(pay, w, sigma, S, tol):
    T, k = sigma.shape
    pairs = [(t, a) for t in range(T) for a in S[t]]
    ti = np.array([p[0] for p in pairs])
    ai = np.array([p[1] for p in pairs])
    x0 = np.empty(len(pairs))
    for t in range(T):
        m = ti == t
        s = sigma[t, ai[m]]
        x0[m] = w[t] * (s / s.sum() if s.sum() > 0 else np.full(m.sum(), 1.0 / m.sum()))
    ub = w[ti]
    lead = {t: S[t][0] for t in range(T)}
    others = [(t, a) for t, a in pairs if a != lead[t]]

    def residual(x):
        z = np.zeros((T, k))
        z[ti, ai] = x
        tau = z.sum(axis=0)
        U = pay(tau)
        r = [z.sum(axis=1) - w]
        if others:
            r.append(np.array([U[t, a] - U[t, lead[t]] for t, a in others]))
        return np.concatenate(r)

    try:
        res = least_squares(
            residual, np.clip(x0, 0.0, ub), bounds=(np.zeros_like(ub), ub + 1e-300), xtol=1e-15, ftol=1e-15, gtol=1e-15
        )
    except ValueError:
        return None
    x = res.x
    if len(x) <= len(residual(x)):
        # unconstrained Levenberg-Marquardt sharpens the bounded solution
        fine = least_squares(residual, x, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if fine.x.min() >= -1e-14 and np.abs(fine.fun).max() <= np.abs(res.fun).max():
            x = fine.x
    z = np.zeros((T, k))
    z[ti, ai] = np.clip(x, 0.0, None)
    rows = z.sum(axis=1, keepdims=True)
    if np.any(rows <= 0):
        return None
    new_sigma = z / rows
    return new_sigma if _support_ok(pay, w, new_sigma, tol) else None


def _support_ok(pay, w, sigma, tol):
    # every action carrying mass must be a best response with room to spare
    U = pay(w @ sigma)
    regret = U.max(axis=1, keepdims=True) - U
    return bool(np.all(regret[sigma > 1e-12] <= 0.01 * tol))


def _simplex_grid(k, steps):
    for cut in itertools.combinations(range(steps + k - 1), k - 1):
        parts = np.diff((-1,) + cut + (steps + k - 1,)) - 1
        yield parts / steps


def _grid_refine(game, start, max_points=5000):
    """Coarse simplex grid then local hill climbing with the step halved down to 1/1024."""
    k = game.action_space.size
    n_points = len(list(itertools.islice(_simplex_grid(k, 8), max_points + 1))) if k <= 8 else max_points + 1
    best, best_val = start, aggregate_gap(game, start)[0]
    if n_points <= max_points:
        for p in _simplex_grid(k, 8):
            v = aggregate_gap(game, p)[0]
            if v < best_val:
                best, best_val = p, v
    step = 1.0 / 8
    while step >= 1.0 / 1024:
        improved = True
        while improved and best_val > 0.0:
            improved = False
            for i, j in itertools.permutations(range(k), 2):
                cand = best.copy()
                move = min(step, cand[j])
                if move <= 0:
                    continue
                cand[i] += move
                cand[j] -= move
                v = aggregate_gap(game, cand)[0]
                if v < best_val - 1e-15:
                    best, best_val, improved = cand, v, True
        step /= 2
    return best


def _logit_path(pay, w, k, tol):
    """Follow logit fixed points tau = sum_t w_t softmax(lam * u_t(tau)) as lam grows."""
    tau = np.full(k, 1.0 / k)
    scale = max(1.0, float(np.abs(pay(tau)).max()))
    lam, factor = 0.1 / scale, 1.5
    while lam < 1e7 / scale:
        nxt = lam * factor

        def fixed_point(x, nxt=nxt):
            return x - w @ softmax(nxt * pay(x), axis=1)

        r = root(fixed_point, tau, method="hybr", options={"xtol": 1e-13})
        if not r.success or np.abs(fixed_point(r.x)).max() > 1e-9:
            factor = 1.0 + (factor - 1.0) / 2
            if factor < 1.0 + 1e-6:
                return None
            continue
        tau, lam, factor = r.x, nxt, min(2.0, 1.0 + (factor - 1.0) * 1.2)
        out = _polish(pay, w, softmax(lam * pay(tau), axis=1), tol)
        if out is not None:
            return out
    return None


def solve_equilibrium(game: LargeGameSpec, cfg: SolverConfig | None = None) -> ContinuumEquilibrium:
    """One Nash equilibrium aggregate of a finite-type continuum game, with its auxiliary mapping."""
    cfg = cfg or SolverConfig()
    pop = _finite(game)
    types, w = pop.types, np.asarray(pop.weights)
    T, k = len(types), game.action_space.size
    pay = PayoffBatch(types, k)
    sigma = np.full((T, k), 1.0 / k)
    rows = np.arange(T)
    history = []
    checkpoint = 8
    done = None
    grid_used = False
    it = 0
    last = np.inf
    for it in range(1, cfg.max_iters + 1):
        U = pay(w @ sigma)
        br = U.argmax(axis=1)
        alpha = 1.0 / (it + 1)
        sigma *= 1.0 - alpha
        sigma[rows, br] += alpha
        if it == checkpoint or it == cfg.max_iters:
            checkpoint *= 2
            last = float(_gaps(pay(w @ sigma), sigma).max())
            if last <= cfg.tol_exploit and _support_ok(pay, w, sigma, cfg.tol_exploit):
                done = sigma.copy()
                break
            if cfg.polish:
                done = _polish(pay, w, sigma, cfg.tol_exploit)
                if done is not None:
                    break
            history.append(last)
            stalled = len(history) > 3 and history[-1] >= 0.9 * history[-4]
            if cfg.grid_fallback and stalled and not grid_used:
                grid_used = True
                tau0 = _grid_refine(game, w @ sigma)
                _, sigma_grid = aggregate_gap(game, tau0)
                done = _polish(pay, w, sigma_grid, cfg.tol_exploit)
                if done is None:
                    done = _logit_path(pay, w, k, cfg.tol_exploit)
                if done is not None:
                    break
    if done is None and cfg.grid_fallback and not grid_used:
        tau0 = _grid_refine(game, w @ sigma)
        done = _polish(pay, w, aggregate_gap(game, tau0)[1], cfg.tol_exploit)
        if done is None:
            done = _logit_path(pay, w, k, cfg.tol_exploit)
    if done is None:
        raise SolverError(
            f"no equilibrium within {cfg.max_iters} iterations (last exploitability {last:.3g})", last
        )
    tau_star = w @ done
    tau_star = tau_star / tau_star.sum()
    eq = equilibrium_from_tau(game, tau_star, cfg)
    return ContinuumEquilibrium(eq.tau_star, eq.per_type_strategy, eq.exploitability, it, "fictitious_play", eq.weights)


def symmetrize(game: LargeGameSpec, tau_star, tol_br: float = TOL_BR) -> dict:
    """Auxiliary mapping for ``tau_star``: each type mixes over its best responses.

    Raises InvalidInputError when no such assignment aggregates to ``tau_star``,
    i.e. when ``tau_star`` is not an equilibrium distribution of the game.
    """
    pop = _finite(game)
    k = game.action_space.size
    tau = as_mixed(tau_star, k)
    types, w = pop.types, np.asarray(pop.weights)
    U = payoff_tables(types, tau)
    best = U >= U.max(axis=1, keepdims=True) - tol_br

    wi = np.rint(w * _FLOW_SCALE).astype(np.int64)
    ti = np.rint(tau * _FLOW_SCALE).astype(np.int64)
    G = nx.DiGraph()
    for t in range(len(types)):
        G.add_edge("source", ("t", t), capacity=int(wi[t]))
        for a in range(k):
            if best[t, a] and ti[a] > 0:
                G.add_edge(("t", t), ("a", a))
    for a in range(k):
        if ti[a] > 0:
            G.add_edge(("a", a), "sink", capacity=int(ti[a]))
    if "sink" not in G:
        raise InvalidInputError("tau_star is not an equilibrium distribution of this game")
    value, flow = nx.maximum_flow(G, "source", "sink")
    slack = 1e-10 * _FLOW_SCALE + len(types) + k
    if max(wi.sum(), ti.sum()) - value > slack:
        missing = (max(wi.sum(), ti.sum()) - value) / _FLOW_SCALE
        raise InvalidInputError(
            f"tau_star is not an equilibrium distribution of this game (unassignable mass {missing:.3g})"
        )
    gbar = {}
    for t, c in enumerate(types):
        z = np.array([flow[("t", t)].get(("a", a), 0) for a in range(k)], dtype=float)
        if z.sum() <= 0:
            z = best[t].astype(float) * tau
            if z.sum() <= 0:
                raise InvalidInputError("tau_star is not an equilibrium distribution of this game")
        gbar[c] = z / z.sum()
    agg = sum(w[t] * gbar[c] for t, c in enumerate(types))
    if np.max(np.abs(agg - tau)) > 1e-8:
        raise InvalidInputError(
            f"tau_star is not an equilibrium distribution of this game (aggregation error {np.max(np.abs(agg - tau)):.3g})"
        )
    return gbar


def equilibrium_from_tau(game: LargeGameSpec, tau, cfg: SolverConfig | None = None) -> ContinuumEquilibrium:
    """Audit a user-supplied aggregate: symmetrize it and report exploitability."""
    cfg = cfg or SolverConfig()
    pop = _finite(game)
    tau = as_mixed(tau, game.action_space.size)
    gbar = symmetrize(game, tau, cfg.tol_br)
    weights = {c: float(wt) for c, wt in zip(pop.types, pop.weights)}
    return ContinuumEquilibrium(tau, gbar, exploitability(game, gbar, tau), 0, "audit", weights)


def discretize_population(game: LargeGameSpec, m: int) -> LargeGameSpec:
    """Midpoint quantization of a parametric population into ``m`` equally weighted types."""
    pop = game.population
    if not isinstance(pop, ParamContinuum):
        raise ConfigurationError("population: discretize_population needs a param_continuum population")
    if m < 1:
        raise ConfigurationError(f"m: need at least one type, got {m}")
    thetas = (2 * np.arange(1, m + 1) - 1) / (2 * m)
    types = tuple(pop.characteristic(th) for th in thetas)
    names = tuple(f"theta={th:g}" for th in thetas)
    return LargeGameSpec(game.action_space, FiniteTypes(types, np.full(m, 1.0 / m), names), game.name)
