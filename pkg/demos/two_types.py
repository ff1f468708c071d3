"""Cars and trucks on the same two roads.

Trucks pay a fixed 0.5 extra on road a and feel congestion there less than
cars do. In equilibrium all trucks take b and cars split 2/3 : 1/3.
"""
from lglab import InstantiationScheme, audit, build_direct_profile, instantiate, solve_equilibrium
from lglab.experiments import two_type_congestion
from lglab.payoffs import AuditConfig

game = two_type_congestion()
eq = solve_equilibrium(game)
for name, c in zip(game.population.names, game.population.types):
    print(name, eq.per_type_strategy[c].round(6))
print("tau* =", eq.tau_star.round(6))

for n in (3, 5, 30, 301):
    gn = instantiate(game, n, InstantiationScheme("replicate_types"))
    prof = build_direct_profile(gn, eq.per_type_strategy)
    exact = audit(gn, prof)
    mc = audit(gn, prof, AuditConfig(method="mc", reps=4000, seed=2))
    print(f"n={n:3d}  exact eps*={exact.eps_star:.3e}  mc eps*={mc.eps_star:.3e} (+-{mc.mc_stderr:.1e})")
