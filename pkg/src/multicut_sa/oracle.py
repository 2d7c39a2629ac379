"""Stochastic first-order oracle interface.

An oracle draws samples xi and, for a point x and a sample xi, returns the
functional value F(x, xi) and a subgradient s(x, xi) in dF(., xi)(x). Drawing
and evaluating are separate so that one sample can serve both the cut at
z_{j} and the observed value Phi(z_j; xi_j).
"""

from typing import NamedTuple

import numpy as np

from .composite import Zero


class OracleSample(NamedTuple):
    value: float
    subgradient: np.ndarray
    sample_id: int = 0


class StochasticOracle:
    """Base class. Subclasses define ``dim``, ``h``, :meth:`draw` and :meth:`evaluate`."""

    dim = None
    h = Zero()

    def draw(self, rng, size=None):
        raise NotImplementedError

    def evaluate(self, x, xi):
        """OracleSample for F(x, xi) and s(x, xi)."""
        raise NotImplementedError

    def values(self, x, xis):
        """F(x, xi_t) for a batch of samples; override for speed."""
        return np.array([self.evaluate(x, xi).value for xi in xis])

    def __call__(self, x, xi):
        return self.evaluate(x, xi)


class FunctionOracle(StochasticOracle):
    """Oracle from plain callables ``value(x, xi)`` and ``grad(x, xi)``.

    With ``sampler=None`` the oracle is deterministic (xi is always None).
    Mostly useful for tests and small demonstrations.
    """

    def __init__(self, dim, value, grad, sampler=None, h=None):
        self.dim = int(dim)
        self._value = value
        self._grad = grad
        self._sampler = sampler
        self.h = h if h is not None else Zero()

    def draw(self, rng, size=None):
        if self._sampler is None:
            return None if size is None else [None] * int(size)
        return self._sampler(rng, size)

    def evaluate(self, x, xi):
        x = np.asarray(x, dtype=float)
        g = np.atleast_1d(np.asarray(self._grad(x, xi), dtype=float))
        return OracleSample(float(self._value(x, xi)), g)


def linear_oracle(g, c=0.0, h=None):
    """Deterministic f(x) = <g, x> + c."""
    g = np.atleast_1d(np.asarray(g, dtype=float))
    return FunctionOracle(g.size, lambda x, xi: c + float(g @ x), lambda x, xi: g, h=h)


def abs_oracle(h=None):
    """Deterministic f(x) = |x| in one dimension (subgradient sign(x), +1 at 0)."""
    return FunctionOracle(
        1,
        lambda x, xi: abs(float(x[0])),
        lambda x, xi: np.array([1.0 if x[0] >= 0 else -1.0]),
        h=h,
    )
