"""A game where copying the continuum equilibrium fails, because the auxiliary mapping jumps.

Players are indexed by theta in [0, 1] with u(a, tau) = theta + (a - tau(1))^2.
The mapping below sends rational theta to action 1 and mixes elsewhere. It is a
continuum equilibrium (rationals have measure zero) but every quantile grid is
made of rationals, so the finite games see all players on action 1.
"""
import numpy as np

from lglab import InstantiationScheme, audit, build_direct_profile, instantiate
from lglab.direct import continuity_probe
from lglab.experiments import example1
from lglab.realization import estimate_omega
from lglab.solver import discretize_population, exploitability

game = example1()

# half-half aggregate makes every type indifferent
disc = discretize_population(game, 16)
half = {c: np.array([0.5, 0.5]) for c in disc.population.types}
print("exploitability at (1/2, 1/2):", exploitability(disc, half, [0.5, 0.5]))

for n in (4, 40, 400):
    gn = instantiate(game, n, InstantiationScheme("quantile_grid"))
    prof = build_direct_profile(gn, {}, game.population)
    rep = audit(gn, prof)
    print(f"n={n:3d}  all on action 1: {prof.pure}  eps*={rep.eps_star:.6f}  (1-1/n)^2={(1 - 1 / n) ** 2:.6f}")

gn = instantiate(game, 10, InstantiationScheme("quantile_grid"))
batch = estimate_omega(gn, build_direct_profile(gn, {}, game.population), eps=0.5, reps=100, seed=0)
print("P(Omega) at n=10, eps=0.5:", batch.p_hat)

# the rule looks continuous on rational grids and jumps once irrational points are added
probe = continuity_probe(game, "example1_rational", 10)
print(probe.to_dict())
print(continuity_probe(game, "linear", 10).to_dict())
