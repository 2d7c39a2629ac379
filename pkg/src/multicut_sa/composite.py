"""Composite terms h: zero, Euclidean ball indicator, box indicator.

Indicator values are 0 on the set and ``INF`` outside. The prox of an
indicator is the Euclidean projection and does not depend on the stepsize.
"""

import math

import numpy as np

#: Value reported for points outside the domain of h.
INF = math.inf

# Relative slack so that projected points (rounded) still count as feasible.
_FEAS_RTOL = 1e-9


class CompositeTerm:
    """Base class for the closed convex term h of phi = f + h."""

    def value(self, u):
        raise NotImplementedError

    def prox(self, v, lam=1.0):
        raise NotImplementedError

    def contains(self, u):
        return self.value(u) == 0.0

    def sample(self, rng, size=None):
        """Uniform feasible point(s); only meaningful for bounded sets."""
        raise ValueError(f"{type(self).__name__} has no bounded domain to sample")

    def start_point(self, n):
        """A canonical feasible starting point of dimension n."""
        return np.zeros(n)


class Zero(CompositeTerm):
    """h = 0."""

    def value(self, u):
        return 0.0

    def prox(self, v, lam=1.0):
        return np.array(v, dtype=float, copy=True)

    def __repr__(self):
        return "Zero()"


class BallIndicator(CompositeTerm):
    """Indicator of {u : ||u - center|| <= radius}."""

    def __init__(self, center, radius):
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.radius = float(radius)

    def value(self, u):
        dist = np.linalg.norm(np.asarray(u, dtype=float) - self.center)
        return 0.0 if dist <= self.radius * (1.0 + _FEAS_RTOL) else INF

    def prox(self, v, lam=1.0):
        d = np.asarray(v, dtype=float) - self.center
        nrm = np.linalg.norm(d)
        if nrm <= self.radius:
            return self.center + d
        return self.center + d * (self.radius / nrm)

    def sample(self, rng, size=None):
        n = self.center.size
        count = 1 if size is None else int(size)
        dirs = rng.standard_normal((count, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = self.radius * rng.random(count) ** (1.0 / n)
        pts = self.center + dirs * radii[:, None]
        return pts[0] if size is None else pts

    def start_point(self, n):
        return self.center.copy()

    def __repr__(self):
        return f"BallIndicator(center={self.center.tolist()}, radius={self.radius})"


class BoxIndicator(CompositeTerm):
    """Indicator of {u : lower <= u <= upper} (componentwise)."""

    def __init__(self, lower, upper):
        self.lower = np.atleast_1d(np.asarray(lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if self.lower.shape != self.upper.shape:
            raise ValueError("lower and upper must have the same shape")
        if np.any(self.lower > self.upper):
            raise ValueError("box requires lower <= upper componentwise")

    def value(self, u):
        u = np.asarray(u, dtype=float)
        slack = _FEAS_RTOL * np.maximum(1.0, np.abs(self.upper - self.lower))
        ok = np.all(u >= self.lower - slack) and np.all(u <= self.upper + slack)
        return 0.0 if ok else INF

    def prox(self, v, lam=1.0):
        return np.clip(np.asarray(v, dtype=float), self.lower, self.upper)

    def sample(self, rng, size=None):
        shape = self.lower.shape if size is None else (int(size),) + self.lower.shape
        return self.lower + (self.upper - self.lower) * rng.random(shape)

    def start_point(self, n):
        return 0.5 * (self.lower + self.upper)

    def __repr__(self):
        return f"BoxIndicator(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


def prox_h(h, v, lam):
    """argmin_u h(u) + ||u - v||^2 / (2 lam)."""
    return h.prox(v, lam)
