"""Prohorov and bounded-Lipschitz distances, and how realized summaries concentrate."""
import numpy as np

from lglab import ActionSpace, InstantiationScheme, build_direct_profile, instantiate, solve_equilibrium
from lglab.experiments import routing
from lglab.metrics import bl_distance, prohorov
from lglab.realization import concentration_check

unit = ActionSpace.two_point(1.0)
print(prohorov([1, 0], [0, 1], unit), bl_distance([1, 0], [0, 1], unit))
print(prohorov([0.6, 0.4], [0.4, 0.6], unit), bl_distance([0.6, 0.4], [0.4, 0.6], unit))

line = ActionSpace(("left", "mid", "right"), [[0, 0.5, 1], [0.5, 0, 0.5], [1, 0.5, 0]])
p, q = np.array([0.5, 0.5, 0.0]), np.array([0.0, 0.5, 0.5])
print("line:", prohorov(p, q, line), bl_distance(p, q, line))

game = routing()
gbar = solve_equilibrium(game).per_type_strategy
for n in (10, 100, 1000, 10000):
    gn = instantiate(game, n, InstantiationScheme())
    rep = concentration_check(gn, build_direct_profile(gn, gbar), eps=0.5, reps=200, seed=3)
    print(
        f"n={n:5d}  freq={rep.empirical_freq:.3f}  chebyshev={rep.chebyshev_bound:.4f}  "
        f"median rho={rep.median_rho:.4f}  median bl={rep.median_bl:.5f}"
    )
