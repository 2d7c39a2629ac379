"""Optimality gap of S-1C and S-Max1C on the newsvendor problem as the horizon grows.

The optimum of the pinball loss under Gaussian demand is known in closed form,
so the gap of the averaged iterate can be computed exactly. Run with

    python3 demos/newsvendor_convergence.py
"""

import numpy as np

from multicut_sa import NewsvendorOracle, NewsvendorProblem, StepsizeRule, run_smax1c, stepsize

problem = NewsvendorProblem(tau=0.9, mu=0.0, sigma=1.0, lower=-5.0, upper=5.0)
oracle = NewsvendorOracle(problem)
D = 5.0 + abs(problem.x_star)
M = max(problem.tau, 1.0 - problem.tau)

print(f"x_* = {problem.x_star:.4f}, phi_* = {problem.phi_star:.4f}")
print(f"{'I':>6} {'S-1C gap':>10} {'S-Max1C gap':>12}")
for I in (50, 200, 1000):
    lam = stepsize(StepsizeRule("theoretical_single", D, M), I)
    gaps = {}
    for B in ("single", "powers"):
        vals = [problem.expected_loss(run_smax1c(oracle, None, lam, I, B, rng_seed=s)
                                      .averaged_iterate[0]) for s in range(20)]
        gaps[B] = float(np.mean(vals)) - problem.phi_star
    print(f"{I:>6} {gaps['single']:>10.4f} {gaps['powers']:>12.4f}")
