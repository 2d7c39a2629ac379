"""Monte Carlo checks of the expectation and noise bounds behind the methods.

Every check is one-sided: an estimated left-hand side is compared against a
right-hand side plus an additive slack of 3 standard errors, and reports
(lhs, rhs, se, seed) so that failures can be reproduced.
"""

import math
import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .algos import (StepsizeRule, as_start_set, estimate_m, max_one_cut_builder,
                    multicut_builder, run_scp, run_smax1c, stepsize)
from .model import aggregate_weights, beta_for_horizon
from .problems import NewsvendorOracle, NewsvendorProblem
from .rng import derive_seed, make_rng

SLACK_SE = 3.0


class EmpiricalMean(NamedTuple):
    mean: float
    std: float
    T: int


class SigmaEstimate(NamedTuple):
    point: np.ndarray
    sigma_hat: float
    samples: int


class NoiseEstimate(NamedTuple):
    point: np.ndarray
    mean_model_value: float
    phi_u: float
    noise_hat: float
    std_error: float
    runs: int


class MaxLemmaResult(NamedTuple):
    lhs_hat: float
    rhs: float
    std_error: float


class QVarianceResult(NamedTuple):
    var_hat: float
    bound: float
    std_error: float
    mean_hat: float
    phi_hat: float
    mean_std_error: float


class CheckResult(NamedTuple):
    name: str
    passed: bool
    lhs: float
    rhs: float
    se: float
    seed: int
    runtime: float


# --------------------------------------------------------------------------
# estimators
# --------------------------------------------------------------------------

def empirical_mean(oracle, x, T=10_000, rng_seed=0):
    """F_hat_T(x), the mean of F(x, xi_t) over T fresh samples, with their sample std."""
    rng = make_rng(rng_seed, "empirical_mean")
    vals = np.asarray(oracle.values(x, oracle.draw(rng, T)), dtype=float)
    std = float(vals.std(ddof=1)) if T > 1 else 0.0
    return EmpiricalMean(float(vals.mean()), std, int(T))


def sigma_hat(oracle, h, u, samples, rng_seed=0):
    """Sample standard deviation of Phi(u; xi) = F(u, xi) + h(u)."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    h = h if h is not None else oracle.h
    rng = make_rng(rng_seed, "sigma_hat")
    vals = np.asarray(oracle.values(u, oracle.draw(rng, samples)), dtype=float) + h.value(u)
    return SigmaEstimate(np.asarray(u, dtype=float), float(vals.std(ddof=1)), int(samples))


# --------------------------------------------------------------------------
# bounds
# --------------------------------------------------------------------------

def rate_bound_rhs(M, D, I, B_size, sigma_star, N=1):
    """2 sqrt(log(I+1)/(I+1)) [sqrt(22) M D / sqrt(N) + 2 sigma sqrt(|B| - 1)]."""
    if M <= 0 or D <= 0 or I < 1 or B_size < 1 or N < 1 or sigma_star < 0:
        raise ValueError("invalid inputs to rate bound")
    rate = 2.0 * math.sqrt(math.log(I + 1) / (I + 1))
    return rate * (math.sqrt(22.0) * M * D / math.sqrt(N)
                   + 2.0 * sigma_star * math.sqrt(B_size - 1))


def max_one_cut_noise_bound(sigma, B_size, I):
    """4 sigma sqrt(|B| - 1) sqrt(log(I+1)/(I+1))."""
    return 4.0 * sigma * math.sqrt(B_size - 1) * math.sqrt(math.log(I + 1) / (I + 1))


def multicut_noise_bound(sigma, j):
    """2 sigma sqrt(j - 1) for the model that keeps every raw cut."""
    return 2.0 * sigma * math.sqrt(j - 1)


# --------------------------------------------------------------------------
# model noise
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseConfig:
    """Algorithm whose final model Gamma_I is probed.

    ``scheme`` is 'max_one_cut' (with start set ``B``) or 'multicut'.
    """

    oracle: object
    lam: float
    I: int
    scheme: str = "max_one_cut"
    B: object = "powers"
    h: object = None
    z0: object = None

    def builder(self):
        if self.scheme == "max_one_cut":
            return max_one_cut_builder(as_start_set(self.B, self.I))
        if self.scheme == "multicut":
            return multicut_builder()
        raise ValueError(f"unknown scheme {self.scheme!r}")

    def bound(self, sigma):
        if self.scheme == "multicut":
            return multicut_noise_bound(sigma, self.I)
        return max_one_cut_noise_bound(sigma, len(as_start_set(self.B, self.I)), self.I)


def model_noise_hat(config, u, runs, rng_seed=0, phi_u=None, T_phi=100_000):
    """Estimate max{0, E[Gamma_I(u)] - phi(u)} over ``runs`` independent runs.

    ``phi_u`` defaults to an empirical mean with ``T_phi`` samples.
    """
    u = np.asarray(u, dtype=float)
    h = config.h if config.h is not None else config.oracle.h
    builder = config.builder()
    vals = np.empty(runs)
    for r in range(runs):
        res = run_scp(config.oracle, h, config.lam, config.I, builder, config.z0,
                      rng_seed=derive_seed(rng_seed, "noise_run", r))
        vals[r] = res.model.evaluate(u)
    if phi_u is None:
        phi_u = empirical_mean(config.oracle, u, T_phi, derive_seed(rng_seed, "phi")).mean
        phi_u += h.value(u)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0
    return NoiseEstimate(u, mean, float(phi_u), max(0.0, mean - phi_u), se, int(runs))


# --------------------------------------------------------------------------
# lemmas
# --------------------------------------------------------------------------

def max_lemma_check(sigma_x, B_size, trials, rng_seed=0, chunk=200_000):
    """Monte Carlo E[max_k Y_k] for iid N(0, sigma_x^2) and the bound 2 sigma_x sqrt(|B| - 1)."""
    if B_size < 2:
        raise ValueError("B_size must be at least 2")
    rng = make_rng(rng_seed, "max_lemma")
    total = total_sq = 0.0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        mx = (sigma_x * rng.standard_normal((m, B_size))).max(axis=1)
        total += float(mx.sum())
        total_sq += float(mx @ mx)
        done += m
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
    return MaxLemmaResult(mean, 2.0 * sigma_x * math.sqrt(B_size - 1), math.sqrt(var / trials))


def q_variance_check(oracle, h, u, k, I, trials, rng_seed=0, sigma_samples=100_000,
                     phi_u=None):
    """Monte Carlo second moment of Q_k^I(u) - phi(u) against 4 log(I+1)/(I+1) sigma(u)^2.

    Q_k^I(u) is the beta-weighted average of Phi(u; xi_{i-1}) for i = k..I.
    ``phi_u`` (exact value if known) defaults to a large-sample estimate.
    """
    if k < 1 or k > I // 2:
        raise ValueError(f"need 1 <= k <= floor(I/2), got k={k}, I={I}")
    h = h if h is not None else oracle.h
    u = np.asarray(u, dtype=float)
    w = aggregate_weights(k, I, beta_for_horizon(I))
    rng = make_rng(rng_seed, "q_variance")
    hv = h.value(u)
    vals = np.asarray(oracle.values(u, oracle.draw(rng, trials * w.size)), dtype=float) + hv
    Q = vals.reshape(trials, w.size) @ w
    sig = sigma_hat(oracle, h, u, sigma_samples, derive_seed(rng_seed, "sigma"))
    if phi_u is None:
        phi_u = empirical_mean(oracle, u, sigma_samples, derive_seed(rng_seed, "phi")).mean + hv
    sq = (Q - phi_u) ** 2
    bound = 4.0 * math.log(I + 1) / (I + 1) * sig.sigma_hat ** 2
    return QVarianceResult(float(sq.mean()), bound, float(sq.std(ddof=1) / math.sqrt(trials)),
                           float(Q.mean()), float(phi_u),
                           float(Q.std(ddof=1) / math.sqrt(trials)))


def schedule_lemma_violations(I_max=10_000):
    """Horizons I in 1..I_max with beta < 1/3 or beta^(I+1) > 1/(I+1)."""
    bad = []
    for I in range(1, I_max + 1):
        b = beta_for_horizon(I)
        if b < 1.0 / 3.0 or b ** (I + 1) > 1.0 / (I + 1):
            bad.append(I)
    return bad


# --------------------------------------------------------------------------
# newsvendor convergence check
# --------------------------------------------------------------------------

class ConvergenceCheck(NamedTuple):
    u_gap: float
    u_se: float
    f_gap: float
    f_se: float
    rhs: float
    M_hat: float
    sigma_star: float
    lam: float


def newsvendor_convergence(problem, I, runs, B="powers", rng_seed=0, T=10_000):
    """S-Max1C on the newsvendor with the theoretical single-stage stepsize.

    Returns the mean gaps u_I - phi_* and F_hat_T(z_I^a) - phi_* with their
    standard errors and the rate bound evaluated at M_hat and sigma_hat(x_*).
    D is taken as the largest distance from the box midpoint to x_*, plus the half-width.
    """
    oracle = NewsvendorOracle(problem)
    xs = problem.x_star
    mid = 0.5 * (problem.lower + problem.upper)
    D = 0.5 * (problem.upper - problem.lower) + abs(xs - mid)
    M = estimate_m(oracle, rng_seed=derive_seed(rng_seed, "M"))
    lam = stepsize(StepsizeRule("theoretical_single", D, M), I)
    Bset = as_start_set(B, I)
    us = np.empty(runs)
    fs = np.empty(runs)
    for r in range(runs):
        seed = derive_seed(rng_seed, "run", r)
        res = run_smax1c(oracle, None, lam, I, Bset, rng_seed=seed)
        us[r] = res.averaged_value
        fs[r] = empirical_mean(oracle, res.averaged_iterate, T, seed).mean
    sig = sigma_hat(oracle, None, np.array([xs]), 100_000, derive_seed(rng_seed, "sigma"))
    rhs = rate_bound_rhs(M, D, I, len(Bset), sig.sigma_hat)
    phi = problem.phi_star
    se = lambda v: float(v.std(ddof=1) / math.sqrt(v.size))  # noqa: E731
    return ConvergenceCheck(float(us.mean() - phi), se(us), float(fs.mean() - phi), se(fs),
                            rhs, M, sig.sigma_hat, lam)


# --------------------------------------------------------------------------
# verify-all runner
# --------------------------------------------------------------------------

def _timed(name, seed, fn):
    t0 = time.perf_counter()
    passed, lhs, rhs, se = fn()
    return CheckResult(name, bool(passed), float(lhs), float(rhs), float(se), int(seed),
                       time.perf_counter() - t0)


def run_all_checks(seed=0, quick=False):
    """Run the standard battery of bound checks; returns a list of CheckResult."""
    nv = NewsvendorProblem(0.9, 0.0, 1.0, -5.0, 5.0)
    oracle = NewsvendorOracle(nv)
    xs = np.array([nv.x_star])
    out = []

    def schedule():
        bad = schedule_lemma_violations(10_000)
        return not bad, len(bad), 0, 0.0

    out.append(_timed("schedule beta>=1/3, beta^(I+1)<=1/(I+1)", seed, schedule))

    for B_size, trials in ((2, 10**5 if quick else 10**6), (7, 10**5 if quick else 10**6)):
        def max_lemma(B_size=B_size, trials=trials):
            r = max_lemma_check(1.0, B_size, trials, seed)
            return r.lhs_hat <= r.rhs + SLACK_SE * r.std_error, r.lhs_hat, r.rhs, r.std_error
        out.append(_timed(f"max lemma |B|={B_size}", seed, max_lemma))

    qres = {}

    def q_var():
        r = q_variance_check(oracle, None, np.zeros(1), 1, 100, 2000 if quick else 10_000, seed,
                             phi_u=float(nv.expected_loss(0.0)))
        qres["r"] = r
        return r.var_hat <= r.bound + SLACK_SE * r.std_error, r.var_hat, r.bound, r.std_error
    out.append(_timed("Q_1^100 second moment", seed, q_var))

    def q_mean():
        r = qres["r"]
        ok = abs(r.mean_hat - r.phi_hat) <= SLACK_SE * r.mean_std_error
        return ok, r.mean_hat, r.phi_hat, r.mean_std_error
    out.append(_timed("Q_1^100 unbiased", seed, q_mean))

    I = 64 if quick else 200
    runs = 30 if quick else 100
    M = estimate_m(oracle, rng_seed=seed)
    lam = stepsize(StepsizeRule("theoretical_single", 5.0 + abs(nv.x_star), M), I)
    sig = sigma_hat(oracle, None, xs, 100_000, seed).sigma_hat
    phi = nv.phi_star
    for label, B in (("B={1}", "single"), ("B=powers", "powers")):
        def noise(B=B):
            cfg = NoiseConfig(oracle, lam, I, "max_one_cut", B)
            est = model_noise_hat(cfg, xs, runs, seed, phi_u=phi)
            rhs = cfg.bound(sig)
            return est.noise_hat <= rhs + SLACK_SE * est.std_error, est.noise_hat, rhs, est.std_error
        out.append(_timed(f"model noise {label} I={I}", seed, noise))

    conv = {}

    def convergence_lower():
        c = newsvendor_convergence(nv, I, 30, "powers", seed, T=10_000)
        conv["c"] = c
        return c.u_gap >= -SLACK_SE * c.u_se, c.u_gap, 0.0, c.u_se
    out.append(_timed(f"E[u_I] >= phi_* (I={I})", seed, convergence_lower))

    def convergence_upper():
        c = conv["c"]
        ok = c.u_gap <= c.rhs + SLACK_SE * c.u_se and c.f_gap <= c.rhs + SLACK_SE * c.f_se
        return ok, max(c.u_gap, c.f_gap), c.rhs, max(c.u_se, c.f_se)
    out.append(_timed(f"rate bound (I={I})", seed, convergence_upper))
    return out


def format_checks(results):
    """Markdown table of check results."""
    lines = ["| check | status | lhs | rhs | se | seed | runtime_s |",
             "|---|---|---|---|---|---|---|"]
    for r in results:
        lines.append(f"| {r.name} | {'PASS' if r.passed else 'FAIL'} | {r.lhs:.6g} | {r.rhs:.6g} "
                     f"| {r.se:.3g} | {r.seed} | {r.runtime:.2f} |")
    return "\n".join(lines) + "\n"


def checks_csv(results):
    lines = ["check,passed,lhs,rhs,se,seed,runtime_s"]
    for r in results:
        lines.append(f"\"{r.name}\",{int(r.passed)},{r.lhs!r},{r.rhs!r},{r.se!r},{r.seed},"
                     f"{r.runtime:.3f}")
    return "\n".join(lines) + "\n"
