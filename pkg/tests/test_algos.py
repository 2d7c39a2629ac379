import math

import numpy as np
import pytest

from multicut_sa.algos import (OracleError, StepsizeRule, as_start_set, da_alphas,
                               estimate_m, max_one_cut_builder, multicut_builder, run_da,
                               run_mmax1c, run_rsa, run_scp, run_smax1c, rsa_gamma, stepsize)
from multicut_sa.composite import BallIndicator, BoxIndicator, Zero
from multicut_sa.model import beta_for_horizon, single_start_set
from multicut_sa.oracle import (FunctionOracle, OracleSample, StochasticOracle, abs_oracle,
                                linear_oracle)
from multicut_sa.problems import NEWSVENDOR, NewsvendorOracle, make_oracle
from multicut_sa.rng import make_rng


def reference_one_cut(oracle, h, lam, I, z0, rng):
    """Plain re-implementation of S-1C: one aggregate cut, so each prox is a projection."""
    beta = beta_for_horizon(I)
    z = np.asarray(z0, float)
    b = g = za = u = None
    for j in range(1, I + 1):
        s = oracle.evaluate(z, oracle.draw(rng))
        if j >= 2:
            u = s.value if j == 2 else (1 - beta) * s.value + beta * u
        cb, cg = s.value - s.subgradient @ z, s.subgradient
        b, g = (cb, cg) if j == 1 else ((1 - beta) * cb + beta * b, (1 - beta) * cg + beta * g)
        z = h.prox(z0 - lam * g)
        za = z if j == 1 else (1 - beta) * z + beta * za
    last = oracle.evaluate(z, oracle.draw(rng)).value
    u = last if I == 1 else (1 - beta) * last + beta * u
    return z, za, u, (b, g)


class ListOracle(StochasticOracle):
    """Squared loss (x - xi)^2 / 2 with samples read from a fixed list; counts draws."""

    dim = 1

    def __init__(self, samples):
        self.samples = list(samples)
        self.count = 0
        self.h = BoxIndicator([-5.0], [5.0])

    def draw(self, rng, size=None):
        xi = self.samples[self.count]
        self.count += 1
        return xi

    def evaluate(self, x, xi):
        d = np.asarray(x, float) - xi
        return OracleSample(0.5 * float(d @ d), d)


# --------------------------------------------------------------------------
# stepsizes
# --------------------------------------------------------------------------

def test_stepsize_examples():
    lam = stepsize(StepsizeRule("theoretical_single", 1.0, 1.0), 3)
    assert lam == pytest.approx(2 / (2 * math.sqrt(22 * math.log(4))), rel=1e-15)
    assert lam == pytest.approx(0.1810760162, abs=1e-10)
    assert stepsize(StepsizeRule("practical", 2.0, 5.0, C=10.0), 100) == pytest.approx(40.0)
    for I in (3, 50, 1000):
        single = stepsize(StepsizeRule("theoretical_single", 3.0, 7.0), I)
        multi = stepsize(StepsizeRule("theoretical_multi", 3.0, 7.0), I, N=1)
        assert multi == single
    multi2 = stepsize(StepsizeRule("theoretical_multi", 3.0, 7.0), 50, N=4)
    assert multi2 == pytest.approx(stepsize(StepsizeRule("theoretical_single", 3.0, 7.0), 50) / 2)
    with pytest.raises(ValueError):
        StepsizeRule("practical", 0.0, 1.0)
    with pytest.raises(ValueError):
        StepsizeRule("other", 1.0, 1.0)
    with pytest.raises(ValueError):
        stepsize(StepsizeRule("practical", 1.0, 1.0), 0)


def test_rsa_gamma_and_da_alphas():
    assert rsa_gamma(1.0, 1.0, 100) == pytest.approx(0.01, rel=1e-15)
    np.testing.assert_allclose(da_alphas(5), [1.0, 1.0, 2.0, 2.5, 2.9], rtol=1e-15)
    assert np.all(np.diff(da_alphas(50)[1:]) > 0)
    assert da_alphas(1).tolist() == [1.0]
    with pytest.raises(ValueError):
        rsa_gamma(1.0, 0.0, 10)


# --------------------------------------------------------------------------
# cutting-plane driver
# --------------------------------------------------------------------------

def test_single_step_linear():
    g = np.array([1.0, -2.0])
    oracle = linear_oracle(g, c=0.5)
    z0 = np.array([0.3, 0.1])
    res = run_scp(oracle, Zero(), 0.25, 1, max_one_cut_builder(single_start_set(1)), z0=z0)
    np.testing.assert_allclose(res.last_iterate, z0 - 0.25 * g, rtol=1e-15)
    np.testing.assert_array_equal(res.averaged_iterate, res.last_iterate)
    assert res.averaged_value == pytest.approx(0.5 + g @ (z0 - 0.25 * g), rel=1e-15)
    assert res.draws == 2 and len(res.trace) == 1


def test_abs_hand_simulation():
    lam, I = 10.0, 3
    beta = beta_for_horizon(I)
    # cut 1 at z0 = 1: slope +1; z1 = 1 - 10 = -9; cut 2 at -9: slope -1
    g2 = (1 - beta) * -1 + beta * 1
    z2 = 1 - lam * g2
    g3 = (1 - beta) * np.sign(z2) + beta * g2
    z3 = 1 - lam * g3
    za = (1 - beta) * z3 + beta * ((1 - beta) * z2 + beta * -9.0)
    u = (1 - beta) * abs(z3) + beta * ((1 - beta) * abs(z2) + beta * 9.0)
    res = run_smax1c(abs_oracle(), Zero(), lam, I, "single", z0=[1.0], keep_iterates=True)
    np.testing.assert_allclose(np.ravel(res.iterates), [-9.0, z2, z3], rtol=1e-13)
    assert res.averaged_iterate[0] == pytest.approx(za, rel=1e-13)
    assert res.averaged_value == pytest.approx(u, rel=1e-13)
    assert res.averaged_value >= 0.0


def test_averaging_identity():
    oracle = NewsvendorOracle()
    I = 30
    res = run_smax1c(oracle, None, 2.0, I, "powers", rng_seed=4, keep_iterates=True)
    beta = beta_for_horizon(I)
    w = (1 - beta) * beta ** (I - np.arange(1, I + 1, dtype=float))
    w[0] = beta ** (I - 1)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(res.averaged_iterate, w @ np.array(res.iterates), rtol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_one_cut_matches_reference(seed):
    oracle = NewsvendorOracle()
    I, lam = 40, 3.0
    res = run_smax1c(oracle, None, lam, I, "single", rng_seed=seed)
    z, za, u, (b, g) = reference_one_cut(oracle, oracle.h, lam, I, np.zeros(1),
                                         make_rng(seed, "noise"))
    np.testing.assert_allclose(res.last_iterate, z, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(res.averaged_iterate, za, rtol=1e-12, atol=1e-14)
    assert res.averaged_value == pytest.approx(u, rel=1e-12)
    assert res.model.size == 1
    assert res.model.intercepts[0] == pytest.approx(b, rel=1e-12, abs=1e-14)
    np.testing.assert_allclose(res.model.gradients[0], g, rtol=1e-12, atol=1e-14)


def test_one_cut_matches_reference_on_ball():
    oracle = make_oracle("C1", 0)
    res = run_smax1c(oracle, None, 0.05, 10, "single", rng_seed=3)
    z, za, u, _ = reference_one_cut(oracle, oracle.h, 0.05, 10, np.zeros(oracle.dim),
                                    make_rng(3, "noise"))
    np.testing.assert_allclose(res.averaged_iterate, za, rtol=1e-10, atol=1e-12)
    assert res.averaged_value == pytest.approx(u, rel=1e-10)


def test_model_sizes_follow_start_set():
    res = run_smax1c(NewsvendorOracle(), None, 1.0, 4, [1, 2], rng_seed=0)
    assert [r.model_size for r in res.trace] == [1, 2, 2, 2]
    res = run_smax1c(NewsvendorOracle(), None, 1.0, 64, "powers", rng_seed=0)
    sizes = [r.model_size for r in res.trace]
    assert sizes[0] == 1 and sizes[1] == 2 and sizes[3] == 3 and max(sizes) == 6
    res = run_scp(NewsvendorOracle(), None, 1.0, 12, multicut_builder(), rng_seed=0)
    assert [r.model_size for r in res.trace] == list(range(1, 13))


def test_max_of_two_lines_contracts():
    oracle = FunctionOracle(1, lambda x, xi: max(x[0], -x[0]),
                            lambda x, xi: np.array([1.0 if x[0] >= -x[0] else -1.0]))
    I = 4
    lam = stepsize(StepsizeRule("theoretical_single", 2.0, 1.0), I)
    res = run_smax1c(oracle, None, lam, I, [1, 2], z0=[2.0], keep_iterates=True)
    zs = np.abs(np.ravel(res.iterates))
    assert np.all(np.diff(zs) <= 1e-12)
    assert abs(res.averaged_iterate[0]) <= 2.0
    assert zs[-1] < 2.0


def test_requirements_are_enforced():
    oracle = NewsvendorOracle()
    with pytest.raises(ValueError):
        run_smax1c(oracle, None, 1.0, 1, "single")
    with pytest.raises(ValueError):
        run_smax1c(oracle, None, 1e-13, 10, "single")
    with pytest.raises(ValueError):
        run_smax1c(oracle, None, 1.0, 10, "single", z0=[7.0])
    with pytest.raises(ValueError):
        as_start_set([1, 9], 10)
    bad = FunctionOracle(1, lambda x, xi: math.nan, lambda x, xi: np.array([1.0]))
    with pytest.raises(OracleError):
        run_smax1c(bad, None, 1.0, 4, "single", z0=[0.0])
    inf_grad = FunctionOracle(1, lambda x, xi: 0.0, lambda x, xi: np.array([math.inf]))
    with pytest.raises(OracleError):
        run_rsa(inf_grad, Zero(), 0.1, 3, z0=[0.0])


def test_sample_independence_and_draw_count():
    I = 12
    base = list(np.random.default_rng(0).normal(size=I + 1))
    ref = ListOracle(base)
    a = run_smax1c(ref, None, 2.0, I, "powers", keep_iterates=True)
    assert ref.count == I + 1 and a.draws == I + 1
    for j in range(1, I):
        changed = list(base)
        changed[j] += 3.0  # xi_j, first used by the cut at z_j
        b = run_smax1c(ListOracle(changed), None, 2.0, I, "powers", keep_iterates=True)
        np.testing.assert_array_equal(np.array(a.iterates[:j]), np.array(b.iterates[:j]))
        assert not np.array_equal(a.iterates[j], b.iterates[j])


def test_determinism():
    oracle = make_oracle("C1", 1)
    a = run_smax1c(oracle, None, 0.1, 20, "powers", rng_seed=9)
    b = run_smax1c(oracle, None, 0.1, 20, "powers", rng_seed=9)
    assert a.trace == b.trace
    np.testing.assert_array_equal(a.averaged_iterate, b.averaged_iterate)
    assert a.averaged_value == b.averaged_value
    c = run_smax1c(oracle, None, 0.1, 20, "powers", rng_seed=10)
    assert not np.array_equal(a.averaged_iterate, c.averaged_iterate)


def test_value_lower_bound_in_expectation():
    oracle = NewsvendorOracle()
    I = 10
    D = 5 + abs(NEWSVENDOR.x_star)
    lam = stepsize(StepsizeRule("theoretical_single", D, 0.9), I)
    u, phi = [], []
    for seed in range(1000):
        res = run_smax1c(oracle, None, lam, I, "single", rng_seed=seed)
        u.append(res.averaged_value)
        phi.append(float(NEWSVENDOR.expected_loss(res.averaged_iterate[0])))
    u, phi = np.array(u), np.array(phi)
    se_u = u.std(ddof=1) / math.sqrt(u.size)
    se_d = (u - phi).std(ddof=1) / math.sqrt(u.size)
    assert u.mean() >= phi.mean() - 2 * se_d
    assert u.mean() >= NEWSVENDOR.phi_star - 2 * se_u


# --------------------------------------------------------------------------
# multi-stage
# --------------------------------------------------------------------------

def test_mmax1c_single_stage_equals_smax1c():
    oracle = make_oracle("C1", 0)
    a = run_mmax1c(oracle, None, 0.1, 16, 1, "powers", rng_seed=5)
    b = run_smax1c(oracle, None, 0.1, 16, "powers", rng_seed=5)
    np.testing.assert_array_equal(a.averaged_iterate, b.averaged_iterate)
    np.testing.assert_array_equal(a.last_iterate, b.last_iterate)
    assert a.averaged_value == b.averaged_value
    assert a.trace == b.trace


def test_mmax1c_stages():
    oracle = NewsvendorOracle()
    res = run_mmax1c(oracle, None, 1.0, 10, 3, "powers", rng_seed=2)
    assert len(res.stages) == 3 and len(res.trace) == 30
    assert [r.stage for r in res.trace] == [1] * 10 + [2] * 10 + [3] * 10
    np.testing.assert_array_equal(res.stages[0].start, res.start)
    for prev, cur in zip(res.stages, res.stages[1:]):
        np.testing.assert_array_equal(cur.start, prev.last_iterate)
    np.testing.assert_allclose(
        res.averaged_iterate, np.mean([s.averaged_iterate for s in res.stages], axis=0))
    two = run_mmax1c(oracle, None, 1.0, 10, 2, "powers", rng_seed=2)
    np.testing.assert_allclose(
        two.averaged_iterate,
        (two.stages[0].averaged_iterate + two.stages[1].averaged_iterate) / 2, rtol=1e-15)
    assert two.averaged_value == pytest.approx(
        (two.stages[0].averaged_value + two.stages[1].averaged_value) / 2, rel=1e-15)
    assert res.draws == 33


# --------------------------------------------------------------------------
# baselines
# --------------------------------------------------------------------------

def test_rsa_examples():
    g = np.array([2.0, -1.0])
    res = run_rsa(linear_oracle(g), Zero(), 0.1, 1, z0=[1.0, 1.0])
    np.testing.assert_allclose(res.last_iterate, [0.8, 1.1], rtol=1e-15)
    box = BoxIndicator([-1.0], [1.0])
    res = run_rsa(abs_oracle(), box, 0.3, 5, z0=[1.0])
    # 1 -> 0.7 -> 0.4 -> 0.1 -> -0.2 -> 0.1
    assert res.last_iterate[0] == pytest.approx(0.1)
    assert res.averaged_iterate[0] == pytest.approx((0.7 + 0.4 + 0.1 - 0.2 + 0.1) / 5)
    assert math.isnan(res.averaged_value)
    # the path reaches 0 after about 1/gamma steps, then oscillates within gamma
    for N in (10, 100, 10_000):
        gamma = rsa_gamma(1.0, 1.0, N, C=1.0)
        avg = abs(run_rsa(abs_oracle(), box, gamma, N, z0=[1.0]).averaged_iterate[0])
        assert avg <= 1.0 / (gamma * N) + gamma


def test_da_examples():
    zero = linear_oracle([0.0, 0.0])
    ball = BallIndicator([0.0, 0.0], 1.0)
    res = run_da(zero, ball, 10.0, 1.0, 1.0, 5, x0=[0.3, -0.2])
    np.testing.assert_allclose(res.averaged_iterate, [0.3, -0.2])
    # constant gradient: x_{k+1} = P(x0 - (k+1) g / gamma_k)
    g = np.array([1.0, 0.5])
    C, D, M, N = 10.0, 4.0, 1.0, 6
    gammas = M * da_alphas(N) / (C * math.sqrt(D))
    xs = [ball.prox(-(k + 1) * g / gammas[k]) for k in range(N)]
    res = run_da(linear_oracle(g), ball, C, D, M, N, x0=[0.0, 0.0])
    np.testing.assert_allclose(res.last_iterate, xs[-1], rtol=1e-14)
    np.testing.assert_allclose(res.averaged_iterate, np.mean(xs, axis=0), rtol=1e-14)


# --------------------------------------------------------------------------
# M estimation
# --------------------------------------------------------------------------

def test_estimate_m_examples():
    g = np.array([3.0, 4.0])
    oracle = linear_oracle(g, h=BallIndicator([0.0, 0.0], 1.0))
    assert estimate_m(oracle, count=100) == 5.0
    box = BoxIndicator([-1.0], [1.0])
    assert estimate_m(abs_oracle(h=box), count=100) == 1.0
    assert estimate_m(abs_oracle(), sampler=box.sample, count=100) == 1.0
    qp = make_oracle("C1", 0)
    assert estimate_m(qp, count=500, rng_seed=3) == estimate_m(qp, count=500, rng_seed=3)
    assert estimate_m(NewsvendorOracle(), count=200) == pytest.approx(0.9)
