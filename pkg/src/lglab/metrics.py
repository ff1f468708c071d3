"""Prohorov and dual-bounded-Lipschitz distances on a finite metric space."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog

from .core import MAX_ACTIONS, ActionSpace, as_mixed
from .errors import CapabilityError, DomainError, InternalError


@dataclass(frozen=True)
class MetricReport:
    prohorov: float
    bl: float
    space: ActionSpace

    def to_dict(self) -> dict:
        return {"prohorov": self.prohorov, "bl": self.bl}


def _pair(tau, tau2, space):
    k = space.size
    try:
        return as_mixed(tau, k), as_mixed(tau2, k)
    except DomainError as exc:
        raise DomainError(f"measures must live on the {k}-point space: {exc}") from None


@lru_cache(maxsize=MAX_ACTIONS)
def _subset_masks(k: int) -> np.ndarray:
    bits = np.arange(1, 2**k, dtype=np.int64)
    return ((bits[:, None] >> np.arange(k)) & 1).astype(float)


def _prohorov_feasible(eps, tau, tau2, dist, masks):
    # a belongs to B^eps iff d(a, b) < eps for some b in B
    near = (dist < eps).astype(float)
    grown = (masks @ near) > 0
    lhs = masks @ tau
    lhs2 = masks @ tau2
    return np.all(lhs <= eps + grown @ tau2) and np.all(lhs2 <= eps + grown @ tau)


def prohorov(tau, tau2, space: ActionSpace, tol: float = 1e-12) -> float:
    """Prohorov distance, by bisection on eps with subset enumeration.

    The returned value is the midpoint of a final bracket of width ``tol``.
    """
    if space.size > MAX_ACTIONS:
        raise CapabilityError(f"prohorov enumerates subsets; at most {MAX_ACTIONS} actions supported")
    tau, tau2 = _pair(tau, tau2, space)
    masks = _subset_masks(space.size)
    dist = np.asarray(space.dist)
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _prohorov_feasible(mid, tau, tau2, dist, masks):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _bl_two_point(tau, tau2, d):
    # h = (x, -x): maximise 2x subject to x <= m, 2x <= l*d, m + l <= 1
    return abs(tau[0] - tau2[0]) * 2.0 * d / (2.0 + d)


def bl_lp(tau, tau2, space: ActionSpace) -> float:
    """Dual-bounded-Lipschitz distance as a linear program (always the LP path)."""
    tau, tau2 = _pair(tau, tau2, space)
    k = space.size
    diff = tau - tau2
    if not np.any(diff):
        return 0.0
    # variables: h_0..h_{k-1}, m, l
    nv = k + 2
    rows, rhs = [], []
    for a in range(k):
        for sign in (1.0, -1.0):
            r = np.zeros(nv)
            r[a], r[k] = sign, -1.0
            rows.append(r)
            rhs.append(0.0)
    for a in range(k):
        for b in range(k):
            if a != b:
                r = np.zeros(nv)
                r[a], r[b], r[k + 1] = 1.0, -1.0, -space.dist[a, b]
                rows.append(r)
                rhs.append(0.0)
    r = np.zeros(nv)
    r[k] = r[k + 1] = 1.0
    rows.append(r)
    rhs.append(1.0)
    c = np.concatenate([-diff, [0.0, 0.0]])
    bounds = [(None, None)] * k + [(0, None), (0, None)]
    res = linprog(
        c,
        A_ub=np.array(rows),
        b_ub=np.array(rhs),
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise InternalError(f"bounded-Lipschitz LP failed: {res.message}")
    return max(0.0, float(-res.fun))


def bl_distance(tau, tau2, space: ActionSpace) -> float:
    """Dual-bounded-Lipschitz distance; closed form on two points, LP otherwise."""
    if space.size == 2:
        tau, tau2 = _pair(tau, tau2, space)
        return _bl_two_point(tau, tau2, float(space.dist[0, 1]))
    if space.size == 1:
        _pair(tau, tau2, space)
        return 0.0
    return bl_lp(tau, tau2, space)


def metric_report(tau, tau2, space: ActionSpace) -> MetricReport:
    return MetricReport(prohorov(tau, tau2, space), bl_distance(tau, tau2, space), space)
