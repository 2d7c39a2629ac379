"""Cutting-plane models built from stochastic linearizations.

A linearization of phi at z is ``h(.) + F(z; xi) + <s(z; xi), . - z>``. Only its
affine part is stored, as an (intercept, gradient) pair. Aggregated one-cut
models are convex combinations of such pairs with geometric weights, and the
max-one-cut bundle keeps one aggregate per start index in B_j = {k in B : k <= j}.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .composite import INF, Zero


@dataclass(frozen=True)
class Cut:
    """Affine part of one stochastic linearization."""

    intercept: float
    gradient: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gradient, dtype=float))
        if g.ndim != 1:
            raise ValueError("cut gradient must be a vector")
        object.__setattr__(self, "gradient", g)
        object.__setattr__(self, "intercept", float(self.intercept))

    @classmethod
    def from_oracle(cls, z, value, subgradient):
        """Cut generated at ``z`` from F(z; xi) and s(z; xi)."""
        z = np.asarray(z, dtype=float)
        s = np.atleast_1d(np.asarray(subgradient, dtype=float))
        if s.shape != z.shape:
            raise ValueError(f"subgradient shape {s.shape} != point shape {z.shape}")
        return cls(float(value) - float(s @ z), s)

    @property
    def dim(self):
        return self.gradient.size

    def affine(self, u):
        return self.intercept + float(self.gradient @ np.asarray(u, dtype=float))


@dataclass(frozen=True)
class AggregateCut:
    """One-cut model L_k^j stored as a single combined affine pair.

    ``members`` is only populated when the owning model tracks members, and then
    holds ``(weight, Cut)`` pairs whose convex combination equals this cut.
    """

    intercept: float
    gradient: np.ndarray
    start_index: int
    members: tuple = None

    def affine(self, u):
        return self.intercept + float(self.gradient @ np.asarray(u, dtype=float))


def beta_for_horizon(I):
    """Averaging weight (I + 1 - log(I + 1)) / (I + 1 + log(I + 1))."""
    if int(I) != I or I < 1:
        raise ValueError(f"horizon must be a positive integer, got {I!r}")
    c = I + 1.0
    lc = math.log(c)
    return (c - lc) / (c + lc)


@dataclass(frozen=True)
class BetaSchedule:
    horizon: int
    beta: float

    @classmethod
    def for_horizon(cls, I):
        return cls(int(I), beta_for_horizon(I))


@dataclass(frozen=True)
class StartSet:
    """Iteration indices at which a new one-cut aggregate is spawned."""

    indices: tuple
    horizon: int

    def __post_init__(self):
        idx = tuple(int(k) for k in self.indices)
        object.__setattr__(self, "indices", idx)
        if not idx or idx[0] != 1:
            raise ValueError("start set must contain 1 as its smallest index")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("start indices must be strictly increasing")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if len(idx) > 1 and idx[-1] > self.horizon // 2:
            raise ValueError(
                f"start indices must not exceed floor(I/2) = {self.horizon // 2}"
            )

    def __contains__(self, j):
        return j in self.indices

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def active(self, j):
        """B_j = {k in B : k <= j}."""
        return tuple(k for k in self.indices if k <= j)


def single_start_set(I):
    """B = {1}, which reduces the max-one-cut model to the one-cut scheme."""
    return StartSet((1,), int(I))


def powers_of_two_start_set(I):
    """B = {2^i : 2^i <= I/2}."""
    if int(I) != I or I < 2:
        raise ValueError(f"powers-of-two start set needs I >= 2, got {I!r}")
    out, k = [], 1
    while 2 * k <= I:
        out.append(k)
        k *= 2
    return StartSet(tuple(out), int(I))


def aggregate_weights(k, j, beta):
    """Weights of L_k^j over cuts k..j: beta^(j-k) first, then (1-beta) beta^(j-i)."""
    if k < 1 or k > j:
        raise ValueError(f"need 1 <= k <= j, got k={k}, j={j}")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    expo = j - np.arange(k, j + 1)
    w = (1.0 - beta) * beta ** expo.astype(float)
    w[0] = beta ** (j - k)
    return w


class _AffineBundle:
    """Shared evaluation of h + max of affine pieces.

    Subclasses provide ``composite``, ``iteration``, ``intercepts`` and ``gradients``.
    """

    @property
    def size(self):
        return 0 if self.intercepts is None else self.intercepts.size

    @property
    def dim(self):
        return self.gradients.shape[1]

    def affine_values(self, u):
        return self.intercepts + self.gradients @ np.asarray(u, dtype=float)

    def evaluate(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise ValueError(f"point shape {u.shape} does not match model dimension {self.dim}")
        hv = self.composite.value(u)
        if hv == INF:
            return INF
        return hv + float(np.max(self.affine_values(u)))

    def active_index(self, u):
        """Index of the maximizing affine piece (first one on ties)."""
        return int(np.argmax(self.affine_values(u)))

    def _check_cut(self, cut, j):
        if j != self.iteration + 1:
            raise ValueError(f"expected update for iteration {self.iteration + 1}, got {j}")
        if self.gradients is not None and cut.dim != self.dim:
            raise ValueError(f"cut dimension {cut.dim} != model dimension {self.dim}")


@dataclass(frozen=True, eq=False)
class MaxOneCutModel(_AffineBundle):
    """Gamma_j = h + max_{k in B_j} L_k^j, updated recursively.

    Instances are immutable; :meth:`update` returns the next model.
    """

    composite: object
    beta: float
    start_set: StartSet
    iteration: int = 0
    starts: tuple = ()
    intercepts: np.ndarray = None
    gradients: np.ndarray = None
    track_members: bool = False
    _members: tuple = field(default=(), repr=False)

    @classmethod
    def empty(cls, composite, beta, start_set, track_members=False):
        return cls(composite if composite is not None else Zero(), float(beta),
                   start_set, track_members=track_members)

    @property
    def aggregates(self):
        members = self._members if self.track_members else (None,) * self.size
        return [
            AggregateCut(float(b), g.copy(), k, m)
            for b, g, k, m in zip(self.intercepts, self.gradients, self.starts, members)
        ]

    def update(self, cut, j):
        """Model after absorbing the linearization generated at iteration j."""
        self._check_cut(cut, j)
        beta = self.beta
        if j == 1:
            b = np.array([cut.intercept])
            G = cut.gradient[None, :].copy()
            starts = (1,)
            members = (((1.0, cut),),) if self.track_members else ()
        else:
            b = (1.0 - beta) * cut.intercept + beta * self.intercepts
            G = (1.0 - beta) * cut.gradient[None, :] + beta * self.gradients
            starts = self.starts
            members = ()
            if self.track_members:
                members = tuple(
                    tuple((beta * w, c) for w, c in mem) + ((1.0 - beta, cut),)
                    for mem in self._members
                )
            if j in self.start_set:
                b = np.append(b, cut.intercept)
                G = np.vstack([G, cut.gradient[None, :]])
                starts = starts + (j,)
                if self.track_members:
                    members = members + (((1.0, cut),),)
        return MaxOneCutModel(self.composite, beta, self.start_set, j, starts,
                              b, G, self.track_members, members)


@dataclass(frozen=True, eq=False)
class MultiCutModel(_AffineBundle):
    """Gamma_j = h + max over every raw cut seen so far (grows linearly in j).

    Kept for verification workloads; its noise is not controlled.
    """

    composite: object
    iteration: int = 0
    intercepts: np.ndarray = None
    gradients: np.ndarray = None

    @classmethod
    def empty(cls, composite):
        return cls(composite if composite is not None else Zero())

    def update(self, cut, j):
        self._check_cut(cut, j)
        if self.intercepts is None:
            return MultiCutModel(self.composite, j, np.array([cut.intercept]),
                                 cut.gradient[None, :].copy())
        return MultiCutModel(self.composite, j, np.append(self.intercepts, cut.intercept),
                             np.vstack([self.gradients, cut.gradient[None, :]]))


def build_multicut_model(cuts, composite=None):
    """Pointwise max of all ``cuts`` plus h."""
    cuts = list(cuts)
    if not cuts:
        raise ValueError("need at least one cut")
    model = MultiCutModel.empty(composite)
    for j, c in enumerate(cuts, start=1):
        model = model.update(c, j)
    return model


def build_max_one_cut_direct(cuts, beta, start_set, composite=None):
    """Gamma_j built from its definition: max over k in B_j of sum_i w_i^j cut_i.

    ``cuts[i-1]`` is the linearization generated at iteration i. Used to check
    the recursive update; the cost is O(j |B_j| n).
    """
    cuts = list(cuts)
    j = len(cuts)
    if j == 0:
        raise ValueError("need at least one cut")
    b_all = np.array([c.intercept for c in cuts])
    G_all = np.vstack([c.gradient for c in cuts])
    starts = start_set.active(j)
    b, G = [], []
    for k in starts:
        w = aggregate_weights(k, j, beta)
        b.append(w @ b_all[k - 1:])
        G.append(w @ G_all[k - 1:])
    return MaxOneCutModel(composite if composite is not None else Zero(), float(beta),
                          start_set, j, tuple(starts), np.array(b), np.vstack(G))
