"""Independent reference computations used as test oracles."""

import itertools

import numpy as np

from multicut_sa.composite import BallIndicator, BoxIndicator, Zero


def _h_mask(h, U):
    if isinstance(h, BallIndicator):
        return np.linalg.norm(U - h.center, axis=1) <= h.radius
    if isinstance(h, BoxIndicator):
        return np.all((U >= h.lower) & (U <= h.upper), axis=1)
    return np.ones(U.shape[0], dtype=bool)


def prox_objective(b, G, h, z0, lam, U):
    U = np.atleast_2d(U)
    vals = np.max(U @ G.T + b, axis=1) + np.sum((U - z0) ** 2, axis=1) / (2 * lam)
    return np.where(_h_mask(h, U), vals, np.inf)


def _ball_boundary_search(b, G, h, z0, lam, final):
    """Best point on the sphere of a ball indicator (n <= 2), by angle grids."""
    c, r = h.center, h.radius
    if c.size == 1:
        U = np.array([[c[0] - r], [c[0] + r]])
        f = prox_objective(b, G, Zero(), z0, lam, U)
        return U[np.argmin(f)], float(np.min(f))

    def pts(t):
        return c + r * np.column_stack([np.cos(t), np.sin(t)])

    t = np.linspace(0.0, 2 * np.pi, 20_000, endpoint=False)
    f = prox_objective(b, G, Zero(), z0, lam, pts(t))
    k = np.argmin(f)
    best, fbest, step = t[k], f[k], t[1] - t[0]
    while step * r > final:
        t = best + np.linspace(-4 * step, 4 * step, 33)
        step = t[1] - t[0]
        f = prox_objective(b, G, Zero(), z0, lam, pts(t))
        k = np.argmin(f)
        if f[k] <= fbest:
            best, fbest = t[k], f[k]
    return pts(np.array([best]))[0], float(fbest)


def _equality_qp(g0, A, c, z0, lam):
    """argmin g0.x + |x - z0|^2/(2 lam) subject to A x = c; None if inconsistent."""
    n = z0.size
    k = A.shape[0]
    K = np.zeros((n + k, n + k))
    K[:n, :n] = np.eye(n) / lam
    K[:n, n:] = A.T
    K[n:, :n] = A
    rhs = np.concatenate([z0 / lam - g0, c])
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    if np.linalg.norm(K @ sol - rhs) > 1e-9 * (1 + np.linalg.norm(rhs)):
        return None
    return sol[:n]


def reference_prox(b, G, h, z0, lam, final=1e-12):
    """Exact minimizer of the prox objective by active-set enumeration (small n, m).

    Every subset S of tied cuts and every pattern of box coordinates fixed at a
    bound defines an equality-constrained quadratic program with a closed-form
    solution. The true minimizer solves the program of its own active pattern,
    so the best feasible candidate is optimal. For a ball the sphere is
    searched separately.
    """
    b = np.asarray(b, float)
    G = np.atleast_2d(np.asarray(G, float))
    z0 = np.asarray(z0, float)
    m, n = G.shape
    if isinstance(h, BoxIndicator):
        patterns = itertools.product(*[(None, h.lower[i], h.upper[i]) for i in range(n)])
    else:
        patterns = [(None,) * n]
    best, fbest = None, np.inf
    for pattern in patterns:
        fixed = [i for i, v in enumerate(pattern) if v is not None]
        for r in range(1, m + 1):
            for S in itertools.combinations(range(m), r):
                rows = [G[i] - G[S[0]] for i in S[1:]]
                vals = [b[S[0]] - b[i] for i in S[1:]]
                for i in fixed:
                    e = np.zeros(n)
                    e[i] = 1.0
                    rows.append(e)
                    vals.append(pattern[i])
                A = np.array(rows).reshape(len(rows), n)
                x = _equality_qp(G[S[0]], A, np.array(vals, float), z0, lam)
                if x is None:
                    continue
                if isinstance(h, BoxIndicator):
                    x = np.clip(x, h.lower, h.upper)
                f = prox_objective(b, G, h, z0, lam, x[None, :])[0]
                if f < fbest:
                    best, fbest = x, f
    if isinstance(h, BallIndicator):
        bbest, fb = _ball_boundary_search(b, G, h, z0, lam, final)
        if fb < fbest:
            best, fbest = bbest, fb
    return best, float(fbest)


def random_prox_case(rng, n=None, m=None, kind=None):
    """Random (b, G, h, z0, lam) with n <= 2, m <= 4 and moderate scales."""
    n = int(rng.integers(1, 3)) if n is None else n
    m = int(rng.integers(1, 5)) if m is None else m
    kind = ("zero", "ball", "box")[int(rng.integers(3))] if kind is None else kind
    b = rng.normal(size=m)
    G = rng.uniform(-2, 2, size=(m, n))
    lam = float(rng.uniform(0.05, 1.0))
    if kind == "ball":
        h = BallIndicator(rng.uniform(-0.5, 0.5, n), float(rng.uniform(0.3, 1.2)))
    elif kind == "box":
        lower = rng.uniform(-1, 0, n)
        h = BoxIndicator(lower, lower + rng.uniform(0.2, 1.5, n))
    else:
        h = Zero()
    if kind == "zero" or rng.random() < 0.5:
        z0 = rng.uniform(-1, 1, n)
    else:
        z0 = h.sample(rng)
    return b, G, h, z0, lam


def direct_model_values(cuts, beta, starts, u):
    """Independent evaluation of max_k sum_i w_i^j aff_i(u) straight from the weight definition."""
    j = len(cuts)
    vals = []
    for k in starts:
        if k > j:
            continue
        total = beta ** (j - k) * cuts[k - 1].affine(u)
        for i in range(k + 1, j + 1):
            total += (1 - beta) * beta ** (j - i) * cuts[i - 1].affine(u)
        vals.append(total)
    return max(vals)
