"""Over-estimation of the objective by a model that keeps every cut, versus max-one-cut.

A model that keeps every raw stochastic cut takes a maximum over noisy affine
functions, so at a fixed point its expected value drifts above the true
objective as cuts accumulate. Max-one-cut averages cuts before taking the
maximum and stays close. Run with

    python3 demos/model_noise.py
"""

import numpy as np

from multicut_sa import NewsvendorOracle, NewsvendorProblem, StepsizeRule, stepsize
from multicut_sa.verify import NoiseConfig, model_noise_hat

problem = NewsvendorProblem(tau=0.9, mu=0.0, sigma=10.0, lower=-50.0, upper=50.0)
oracle = NewsvendorOracle(problem)
xs = np.array([problem.x_star])

print(f"phi(x_*) = {problem.phi_star:.3f}")
print(f"{'I':>5} {'all cuts':>14} {'max-one-cut':>14}")
for I in (16, 64, 128):
    lam = stepsize(StepsizeRule("theoretical_single", 50 + problem.x_star, 0.9), I)
    row = []
    for scheme in ("multicut", "max_one_cut"):
        est = model_noise_hat(NoiseConfig(oracle, lam, I, scheme, "powers"), xs, 40,
                              phi_u=problem.phi_star)
        row.append(f"{est.noise_hat:7.3f} +- {est.std_error:.2f}")
    print(f"{I:>5} {row[0]:>14} {row[1]:>14}")
