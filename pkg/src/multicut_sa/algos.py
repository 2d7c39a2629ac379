"""Stochastic cutting-plane drivers (S-CP, S-Max1C, M-Max1C) and SA baselines.

All drivers take a stochastic oracle (see :mod:`multicut_sa.oracle`), a
composite term ``h`` and a seed, and return a :class:`RunResult`.

Sample bookkeeping of the cutting-plane driver: iteration j draws xi_{j-1},
linearizes at z_{j-1} and solves the prox subproblem for z_j. The observed
value Phi(z_j; xi_j) entering u_j uses the draw of iteration j + 1, so u_j is
completed one iteration late and one extra sample xi_I is drawn after the loop.
z_j never depends on xi_j.
"""

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .composite import INF
from .model import (Cut, MaxOneCutModel, MultiCutModel, StartSet, beta_for_horizon,
                    powers_of_two_start_set, single_start_set)
from .prox import prox_point
from .rng import make_rng


class OracleError(FloatingPointError):
    """Raised when an oracle returns a non-finite value or subgradient."""


class IterationRecord(NamedTuple):
    stage: int
    j: int
    model_size: int
    prox_gap: float
    prox_iterations: int
    step_norm: float


@dataclass
class RunResult:
    """Outputs of one run.

    For the cutting-plane methods ``averaged_iterate`` is z_I^a (y_N^a for the
    multi-stage method) and ``averaged_value`` is u_I (w_N^a). The baselines
    report the uniform average of their iterates and leave ``averaged_value``
    as NaN.
    """

    last_iterate: np.ndarray
    averaged_iterate: np.ndarray
    averaged_value: float
    trace: list
    seed: int
    wall_time: float
    model: object = None
    stages: list = field(default_factory=list)
    draws: int = 0
    start: np.ndarray = None
    iterates: list = None


# --------------------------------------------------------------------------
# stepsizes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StepsizeRule:
    """``variant`` is 'theoretical_single', 'theoretical_multi' or 'practical'."""

    variant: str
    D: float
    M: float
    C: float = 10.0

    def __post_init__(self):
        if self.variant not in ("theoretical_single", "theoretical_multi", "practical"):
            raise ValueError(f"unknown stepsize variant {self.variant!r}")
        if not (self.D > 0 and self.M > 0 and self.C > 0):
            raise ValueError("D, M and C must be positive")


def stepsize(rule, I, N=1):
    """Prox stepsize lambda for horizon I and N stages."""
    if I < 1 or N < 1:
        raise ValueError("I and N must be positive")
    D, M = rule.D, rule.M
    if rule.variant == "practical":
        return rule.C * math.sqrt(I) * D / (math.sqrt(N) * M)
    if rule.variant == "theoretical_single":
        N = 1
    return D * math.sqrt(I + 1) / (2.0 * M * math.sqrt(22.0 * N * math.log(I + 1)))


def rsa_gamma(D, M, N, C=0.1):
    """Constant RSA step C D / (M sqrt(N))."""
    if not (D > 0 and M > 0 and N >= 1 and C > 0):
        raise ValueError("D, M, C must be positive and N >= 1")
    return C * D / (M * math.sqrt(N))


def da_alphas(N):
    """alpha_0 .. alpha_{N-1} with alpha_0 = alpha_1 = 1, alpha_k = alpha_{k-1} + 1/alpha_{k-1}."""
    a = np.ones(max(int(N), 2))
    for k in range(2, a.size):
        a[k] = a[k - 1] + 1.0 / a[k - 1]
    return a[:int(N)]


def estimate_m(oracle, sampler=None, count=10_000, rng_seed=0):
    """Largest stochastic subgradient norm over ``count`` random (point, sample) pairs.

    ``sampler(rng, size)`` returns feasible points; defaults to ``oracle.h.sample``.
    """
    rng = make_rng(rng_seed, "estimate_m")
    sampler = sampler if sampler is not None else oracle.h.sample
    pts = np.asarray(sampler(rng, count), dtype=float).reshape(count, -1)
    xis = oracle.draw(rng, count)
    best = 0.0
    for x, xi in zip(pts, xis):
        best = max(best, float(np.linalg.norm(oracle.evaluate(x, xi).subgradient)))
    return best


# --------------------------------------------------------------------------
# cutting-plane drivers
# --------------------------------------------------------------------------

def _checked(sample, x):
    if not np.isfinite(sample.value) or not np.all(np.isfinite(sample.subgradient)):
        raise OracleError(f"non-finite oracle output at x with |x| = {np.linalg.norm(x):.6g}: "
                          f"value={sample.value!r}")
    return sample


def _start(oracle, h, z0):
    h = h if h is not None else oracle.h
    z0 = h.start_point(oracle.dim) if z0 is None else np.asarray(z0, dtype=float).copy()
    if h.value(z0) == INF:
        raise ValueError("z0 must lie in the domain of h")
    return h, z0


def _warm_theta(theta, size):
    if theta is None:
        return None
    if theta.size < size:
        theta = np.concatenate([theta, np.zeros(size - theta.size)])
    return theta / theta.sum()


def max_one_cut_builder(B):
    """Model factory ``(h, beta) -> empty model`` for the max-one-cut bundle."""
    return lambda h, beta: MaxOneCutModel.empty(h, beta, B)


def multicut_builder():
    return lambda h, beta: MultiCutModel.empty(h)


def run_scp(oracle, h, lam, I, model_builder, z0=None, rng_seed=0, tol=None, rng=None,
            stage=1, warm_start=True, keep_iterates=False):
    """Generic S-CP loop with prox center fixed at z0.

    ``model_builder(h, beta)`` returns an empty model whose ``update(cut, j)``
    produces the next model. ``rng`` overrides the stream derived from the seed.
    With ``keep_iterates`` the points z_1..z_I are stored in ``iterates``.
    """
    if I < 1:
        raise ValueError("I must be positive")
    if not lam >= 1e-12:
        raise ValueError("lambda must be at least 1e-12")
    h, z0 = _start(oracle, h, z0)
    rng = make_rng(rng_seed, "noise") if rng is None else rng
    beta = beta_for_horizon(I)
    model = model_builder(h, beta)
    t0 = time.perf_counter()

    z = z0
    za = None
    u = None
    theta = None
    trace = []
    iterates = [] if keep_iterates else None
    for j in range(1, I + 1):
        xi = oracle.draw(rng)
        sample = _checked(oracle.evaluate(z, xi), z)
        if j >= 2:
            # Phi(z_{j-1}; xi_{j-1}) completes u_{j-1}
            phi = sample.value + h.value(z)
            u = phi if j == 2 else (1.0 - beta) * phi + beta * u
        model = model.update(Cut.from_oracle(z, sample.value, sample.subgradient), j)
        sol = prox_point(model, z0, lam, tol=tol,
                         theta0=_warm_theta(theta, model.size) if warm_start else None)
        theta = sol.dual_weights
        z_new = sol.point
        za = z_new.copy() if j == 1 else (1.0 - beta) * z_new + beta * za
        trace.append(IterationRecord(stage, j, model.size, sol.gap, sol.iterations,
                                     float(np.linalg.norm(z_new - z))))
        z = z_new
        if keep_iterates:
            iterates.append(z.copy())

    xi = oracle.draw(rng)
    phi = _checked(oracle.evaluate(z, xi), z).value + h.value(z)
    u = phi if I == 1 else (1.0 - beta) * phi + beta * u
    return RunResult(z, za, float(u), trace, rng_seed, time.perf_counter() - t0,
                     model=model, draws=I + 1, start=z0, iterates=iterates)


def as_start_set(B, I):
    """Accept a StartSet, 'single' / 'powers', or an iterable of indices."""
    if isinstance(B, StartSet):
        return B
    if B in ("single", "1", None):
        return single_start_set(I)
    if B in ("powers", "powers_of_two", "2^i"):
        return powers_of_two_start_set(I)
    return StartSet(tuple(B), int(I))


def run_smax1c(oracle, h, lam, I, B, z0=None, rng_seed=0, tol=None, rng=None,
               keep_iterates=False):
    """S-Max1C; ``B = 'single'`` gives the one-cut method S-1C."""
    if I < 2:
        raise ValueError("S-Max1C needs I >= 2")
    B = as_start_set(B, I)
    return run_scp(oracle, h, lam, I, max_one_cut_builder(B), z0, rng_seed, tol, rng,
                   keep_iterates=keep_iterates)


def run_mmax1c(oracle, h, lam, I, N, B, z0=None, rng_seed=0, tol=None):
    """N warm-started S-Max1C stages sharing one noise stream.

    Stage l starts from the last iterate of stage l - 1; the outputs are the
    plain averages of the stage averaged iterates and averaged values.
    """
    if N < 1:
        raise ValueError("N must be positive")
    h, x = _start(oracle, h, z0)
    start = x
    rng = make_rng(rng_seed, "noise")
    t0 = time.perf_counter()
    stages, trace = [], []
    for stage in range(1, N + 1):
        B_l = as_start_set(B, I)
        res = run_scp(oracle, h, lam, I, max_one_cut_builder(B_l), x, rng_seed, tol,
                      rng=rng, stage=stage)
        stages.append(res)
        trace.extend(res.trace)
        x = res.last_iterate
    y = np.mean([s.averaged_iterate for s in stages], axis=0)
    w = float(np.mean([s.averaged_value for s in stages]))
    return RunResult(x, y, w, trace, rng_seed, time.perf_counter() - t0,
                     model=stages[-1].model, stages=stages, draws=N * (I + 1), start=start)


# --------------------------------------------------------------------------
# baselines
# --------------------------------------------------------------------------

def run_rsa(oracle, projection, gamma, N, z0=None, rng_seed=0):
    """Projected stochastic subgradient with constant step; reports the mean of x_1..x_N."""
    if not gamma > 0 or N < 1:
        raise ValueError("gamma must be positive and N >= 1")
    h, x = _start(oracle, projection, z0)
    start = x
    rng = make_rng(rng_seed, "noise")
    t0 = time.perf_counter()
    total = np.zeros_like(x)
    trace = []
    for t in range(1, N + 1):
        g = _checked(oracle.evaluate(x, oracle.draw(rng)), x).subgradient
        x_new = h.prox(x - gamma * g)
        total += x_new
        trace.append(IterationRecord(1, t, 0, 0.0, 0, float(np.linalg.norm(x_new - x))))
        x = x_new
    return RunResult(x, total / N, math.nan, trace, rng_seed, time.perf_counter() - t0,
                     draws=N, start=start)


def run_da(oracle, h_indicator, C, D, M, N, x0=None, rng_seed=0):
    """Dual averaging: x_{k+1} = P_X(x0 - (1/gamma_k) sum_{i<=k} g_i), gamma_k = M alpha_k/(C sqrt(D)).

    Reports the mean of x_1..x_N; the last iterate is kept in ``last_iterate``.
    """
    if not (C > 0 and D > 0 and M > 0) or N < 1:
        raise ValueError("C, D, M must be positive and N >= 1")
    h, x0 = _start(oracle, h_indicator, x0)
    rng = make_rng(rng_seed, "noise")
    t0 = time.perf_counter()
    gammas = M * da_alphas(N) / (C * math.sqrt(D))
    gsum = np.zeros_like(x0)
    total = np.zeros_like(x0)
    x = x0
    trace = []
    for k in range(N):
        gsum += _checked(oracle.evaluate(x, oracle.draw(rng)), x).subgradient
        x_new = h.prox(x0 - gsum / gammas[k])
        total += x_new
        trace.append(IterationRecord(1, k + 1, 0, 0.0, 0, float(np.linalg.norm(x_new - x))))
        x = x_new
    return RunResult(x, total / N, math.nan, trace, rng_seed, time.perf_counter() - t0,
                     draws=N, start=x0)
