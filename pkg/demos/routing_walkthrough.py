"""Two roads, one narrow: the continuum equilibrium, the direct profile, and how good it is for finite n.

Run with ``python demos/routing_walkthrough.py``.
"""
import numpy as np

from lglab import InstantiationScheme, audit, build_direct_profile, instantiate, solve_equilibrium, symmetrize
from lglab.experiments import routing
from lglab.payoffs import theorem1_curve
from lglab.realization import estimate_omega

game = routing()

# %% equilibrium of the continuum game
eq = solve_equilibrium(game)
print("tau* =", np.round(eq.tau_star, 12), " exploitability =", eq.exploitability)

gbar = symmetrize(game, eq.tau_star)
driver = game.population.types[0]
print("every driver mixes", gbar[driver])

# %% n drivers copy the continuum strategy
for n in (3, 30, 300):
    gn = instantiate(game, n, InstantiationScheme("replicate_types"))
    prof = build_direct_profile(gn, gbar)
    rep = audit(gn, prof)
    print(f"n={n:4d}  gain={rep.gains[0]:.6f}  1/(3n)={1 / (3 * n):.6f}  eps*={rep.eps_star:.6f}")

# %% the same thing as a curve
for row in theorem1_curve(game, InstantiationScheme(), [3, 30, 300, 3000]):
    print(row.n, row.eps_star)

# %% after the coins are tossed: how often is the realized profile a pure eps-equilibrium?
for n in (300, 1000, 3000):
    gn = instantiate(game, n, InstantiationScheme())
    batch = estimate_omega(gn, build_direct_profile(gn, gbar), eps=0.1, reps=400, seed=1)
    print(f"n={n:5d}  P(Omega) ~ {batch.p_hat:.3f}  [{batch.wilson_lo:.3f}, {batch.wilson_hi:.3f}]")
