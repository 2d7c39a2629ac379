"""Stochastic cutting-plane methods with max-of-one-cut bundle models."""

from .algos import (RunResult, StepsizeRule, estimate_m, run_da, run_mmax1c, run_rsa,
                    run_scp, run_smax1c, stepsize)
from .composite import INF, BallIndicator, BoxIndicator, Zero, prox_h
from .model import (AggregateCut, BetaSchedule, Cut, MaxOneCutModel, StartSet,
                    aggregate_weights, beta_for_horizon, build_multicut_model,
                    powers_of_two_start_set, single_start_set)
from .problems import (NewsvendorOracle, NewsvendorProblem, TwoStageQpInstance,
                       TwoStageQpOracle, generate_instance, newsvendor_phi_star)
from .prox import ProxNotConverged, ProxSolution, kkt_residual, prox_point

__version__ = "0.1.0"

__all__ = [
    "aggregate_weights", "AggregateCut", "BallIndicator", "beta_for_horizon",
    "BetaSchedule", "BoxIndicator", "build_multicut_model", "Cut", "estimate_m",
    "generate_instance", "INF", "kkt_residual", "MaxOneCutModel", "newsvendor_phi_star",
    "NewsvendorOracle", "NewsvendorProblem", "powers_of_two_start_set", "prox_h",
    "prox_point", "ProxNotConverged", "ProxSolution", "run_da", "run_mmax1c", "run_rsa",
    "run_scp", "run_smax1c", "RunResult", "single_start_set", "StartSet", "stepsize",
    "StepsizeRule", "TwoStageQpInstance", "TwoStageQpOracle", "Zero",
]

