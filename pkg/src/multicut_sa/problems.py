"""Stochastic test problems with cheap exact oracles.

Two problems are provided:

* a two-stage stochastic QP whose first stage lives in a ball of radius D and
  whose quadratic recourse is solved in closed form, and
* a newsvendor (pinball loss) problem with Gaussian demand, whose optimal
  value and solution are known analytically.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import norm

from .composite import BallIndicator, BoxIndicator
from .oracle import OracleSample, StochasticOracle
from .rng import make_rng

GAMMA0 = 2.0


# --------------------------------------------------------------------------
# two-stage QP
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TwoStageQpInstance:
    """min_{|x1| <= D} c'x1 + E[Q(x1, xi)] with

    Q(x1, xi) = min_{x2} 1/2 (x1;x2)'(xi xi' + gamma0 I)(x1;x2) + xi'(x1;x2)
                s.t. |x2|^2 + |x1|^2 <= R^2.

    ``xi`` is Gaussian with independent coordinates ``xi_mean`` and ``xi_std``;
    its first n entries pair with x1 and the last n with x2.
    """

    n: int
    D: float
    R: float
    chi: float
    gamma0: float
    c: np.ndarray
    xi_mean: np.ndarray
    xi_std: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0 < self.D < self.R:
            raise ValueError(f"need 0 < D < R, got D={self.D}, R={self.R}")
        for attr, size in (("c", self.n), ("xi_mean", 2 * self.n), ("xi_std", 2 * self.n)):
            v = np.asarray(getattr(self, attr), dtype=float)
            if v.shape != (size,):
                raise ValueError(f"{attr} must have length {size}")
            object.__setattr__(self, attr, v)
        if np.any(self.xi_std < 0):
            raise ValueError("xi_std must be nonnegative")

    def __eq__(self, other):
        if not isinstance(other, TwoStageQpInstance):
            return NotImplemented
        return self.to_text() == other.to_text()

    def to_text(self):
        """Plain-text ``key = value`` form; vectors are space separated, floats in repr."""
        def vec(v):
            return " ".join(repr(float(t)) for t in v)

        lines = [
            "# two-stage QP instance",
            f"name = {self.name}",
            f"n = {self.n}",
            f"D = {float(self.D)!r}",
            f"R = {float(self.R)!r}",
            f"chi = {float(self.chi)!r}",
            f"gamma0 = {float(self.gamma0)!r}",
            f"c = {vec(self.c)}",
            f"xi_mean = {vec(self.xi_mean)}",
            f"xi_std = {vec(self.xi_std)}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        fields = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
        vec = lambda s: np.array([float(t) for t in s.split()])  # noqa: E731
        return cls(
            n=int(fields["n"]), D=float(fields["D"]), R=float(fields["R"]),
            chi=float(fields["chi"]), gamma0=float(fields["gamma0"]),
            c=vec(fields["c"]), xi_mean=vec(fields["xi_mean"]),
            xi_std=vec(fields["xi_std"]), name=fields.get("name", "custom"),
        )


class RecourseSolution(NamedTuple):
    value: float
    x2: np.ndarray
    multiplier: float
    alpha: float


QP_PRESETS = {
    "C1": dict(n=100, D=2.0, R=4.0, chi=5.0),
    "C2": dict(n=200, D=2.0, R=4.0, chi=5.0),
    "C3": dict(n=100, D=50.0, R=100.0, chi=2.0),
    "C4": dict(n=200, D=50.0, R=100.0, chi=2.0),
}


def generate_instance(seed, n, D, R, chi, gamma0=GAMMA0, name="custom"):
    """Random instance: c ~ U[-1,1]^n, xi means ~ U[-chi,chi], stds ~ U[0,chi]."""
    if n < 1:
        raise ValueError("n must be positive")
    if chi <= 0:
        raise ValueError("chi must be positive")
    if not 0 < D < R:
        raise ValueError(f"need 0 < D < R, got D={D}, R={R}")
    rng = make_rng(seed, "instance", name)
    c = rng.uniform(-1.0, 1.0, n)
    xi_mean = rng.uniform(-chi, chi, 2 * n)
    xi_std = rng.uniform(0.0, chi, 2 * n)
    return TwoStageQpInstance(n, float(D), float(R), float(chi), float(gamma0),
                              c, xi_mean, xi_std, name)


def preset_instance(name, seed):
    if name not in QP_PRESETS:
        raise KeyError(f"unknown two-stage preset {name!r}")
    return generate_instance(seed, name=name, **QP_PRESETS[name])


def _recourse_alpha(a, s, rho, gamma0):
    """Minimizer of the 1-D recourse quadratic over |alpha| sqrt(s) <= rho, and mu."""
    alpha = -(a + 1.0) / (s + gamma0)
    mu = 0.0
    if s > 0:
        amax = rho / math.sqrt(s)
        if abs(alpha) > amax:
            alpha = math.copysign(amax, alpha)
            mu = -(a + 1.0 + alpha * (s + gamma0)) / (2.0 * alpha)
    else:
        alpha = 0.0
    return alpha, mu


def second_stage_solve(instance, x1, xi):
    """Exact recourse solution; x2 = alpha * xi2 with alpha from a clamped 1-D problem."""
    x1 = np.asarray(x1, dtype=float)
    xi = np.asarray(xi, dtype=float)
    n, g0 = instance.n, instance.gamma0
    nx = float(x1 @ x1)
    if nx > instance.R ** 2 * (1 + 1e-12):
        raise ValueError(f"|x1| = {math.sqrt(nx):.6g} exceeds recourse radius {instance.R}")
    xi1, xi2 = xi[:n], xi[n:]
    a = float(xi1 @ x1)
    s = float(xi2 @ xi2)
    rho = math.sqrt(max(instance.R ** 2 - nx, 0.0))
    alpha, mu = _recourse_alpha(a, s, rho, g0)
    t = a + alpha * s
    value = 0.5 * t * t + 0.5 * g0 * (nx + alpha * alpha * s) + t
    return RecourseSolution(value, alpha * xi2, mu, alpha)


def recourse_objective(instance, x1, x2, xi):
    """Second-stage objective at an arbitrary x2 (used for certification)."""
    y = np.concatenate([np.asarray(x1, float), np.asarray(x2, float)])
    xi = np.asarray(xi, dtype=float)
    t = float(xi @ y)
    return 0.5 * t * t + 0.5 * instance.gamma0 * float(y @ y) + t


def oracle_two_stage(instance, x1, xi):
    """F(x1, xi) = c'x1 + Q(x1, xi) and its gradient via the recourse Lagrangian."""
    x1 = np.asarray(x1, dtype=float)
    xi = np.asarray(xi, dtype=float)
    sol = second_stage_solve(instance, x1, xi)
    xi1 = xi[:instance.n]
    t = float(xi1 @ x1) + float(xi[instance.n:] @ sol.x2)
    g = instance.c + (t + 1.0) * xi1 + (instance.gamma0 + 2.0 * sol.multiplier) * x1
    return OracleSample(float(instance.c @ x1) + sol.value, g)


class TwoStageQpOracle(StochasticOracle):
    """Stochastic oracle for a :class:`TwoStageQpInstance`; h is the D-ball indicator."""

    def __init__(self, instance):
        self.instance = instance
        self.dim = instance.n
        self.h = BallIndicator(np.zeros(instance.n), instance.D)

    def draw(self, rng, size=None):
        inst = self.instance
        shape = (2 * inst.n,) if size is None else (int(size), 2 * inst.n)
        return inst.xi_mean + inst.xi_std * rng.standard_normal(shape)

    def evaluate(self, x, xi):
        return oracle_two_stage(self.instance, x, xi)

    def values(self, x, xis):
        inst = self.instance
        x = np.asarray(x, dtype=float)
        xis = np.atleast_2d(np.asarray(xis, dtype=float))
        nx = float(x @ x)
        a = xis[:, :inst.n] @ x
        s = np.einsum("ij,ij->i", xis[:, inst.n:], xis[:, inst.n:])
        rho = math.sqrt(max(inst.R ** 2 - nx, 0.0))
        g0 = inst.gamma0
        alpha = -(a + 1.0) / (s + g0)
        amax = np.where(s > 0, rho / np.sqrt(np.where(s > 0, s, 1.0)), 0.0)
        alpha = np.clip(alpha, -amax, amax)
        t = a + alpha * s
        q = 0.5 * t * t + 0.5 * g0 * (nx + alpha * alpha * s) + t
        return float(inst.c @ x) + q


# --------------------------------------------------------------------------
# newsvendor
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NewsvendorProblem:
    """Pinball loss max{tau (xi - x), (1 - tau)(x - xi)} with xi ~ N(mu, sigma^2)."""

    tau: float = 0.9
    mu: float = 0.0
    sigma: float = 1.0
    lower: float = -5.0
    upper: float = 5.0

    def __post_init__(self):
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if not self.lower <= self.x_star <= self.upper:
            raise ValueError("box must contain the tau-quantile")

    @property
    def x_star(self):
        return self.mu + self.sigma * norm.ppf(self.tau)

    @property
    def phi_star(self):
        return newsvendor_phi_star(self)

    def expected_loss(self, x):
        """Closed form E[F(x, xi)] = (x - mu)(Phi(z) - tau) + sigma pdf(z), z = (x - mu)/sigma."""
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return self.sigma * (z * (norm.cdf(z) - self.tau) + norm.pdf(z))


NEWSVENDOR = NewsvendorProblem()


def newsvendor_phi_star(problem):
    """Optimal value sigma * pdf(Phi^{-1}(tau))."""
    return problem.sigma * float(norm.pdf(norm.ppf(problem.tau)))


def oracle_newsvendor(problem, x, xi):
    x = float(np.asarray(x, dtype=float).reshape(-1)[0])
    xi = float(xi)
    tau = problem.tau
    if xi > x:
        return OracleSample(tau * (xi - x), np.array([-tau]))
    return OracleSample((1.0 - tau) * (x - xi), np.array([1.0 - tau]))


class NewsvendorOracle(StochasticOracle):
    """Oracle for :class:`NewsvendorProblem`; h is the box indicator."""

    dim = 1

    def __init__(self, problem=NEWSVENDOR):
        self.problem = problem
        self.h = BoxIndicator([problem.lower], [problem.upper])

    def draw(self, rng, size=None):
        return self.problem.mu + self.problem.sigma * rng.standard_normal(size)

    def evaluate(self, x, xi):
        return oracle_newsvendor(self.problem, x, xi)

    def values(self, x, xis):
        x = float(np.asarray(x, dtype=float).reshape(-1)[0])
        d = np.asarray(xis, dtype=float) - x
        tau = self.problem.tau
        return np.maximum(tau * d, (tau - 1.0) * d)


PRESET_NAMES = tuple(QP_PRESETS) + ("NEWSVENDOR",)


def make_oracle(name, seed=0):
    """Oracle for a preset name; two-stage instances are generated from ``seed``."""
    if name == "NEWSVENDOR":
        return NewsvendorOracle(NEWSVENDOR)
    return TwoStageQpOracle(preset_instance(name, seed))
