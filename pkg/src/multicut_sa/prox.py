"""Prox subproblem for max-of-affine models.

Solves ``min_u h(u) + max_k (b_k + <g_k, u>) + ||u - z0||^2 / (2 lam)`` through
its saddle form over the simplex. For fixed weights theta the inner minimizer is
``u(theta) = prox_{lam h}(z0 - lam G^T theta)``, and the dual

    D(theta) = theta . (b + G u(theta)) + h(u(theta)) + ||u(theta) - z0||^2 / (2 lam)

is concave and smooth with gradient ``b + G u(theta)`` (Lipschitz constant at
most ``lam ||G||_2^2``). It is maximized by accelerated projected gradient
ascent. The step adapts to a secant estimate of the local curvature (the ball
projection makes D much flatter than the global bound suggests), momentum is
dropped whenever it points downhill, and a step that lowers D beyond roundoff
is rejected, so accepted iterates never decrease D. Acceptance never compares
nearly equal dual values directly: that would stall at sqrt(eps) accuracy in
theta, while the gap is linear in the theta error.

At ``u = u(theta)`` the primal-dual gap reduces to the complementary slackness
term ``max_k a_k(u) - sum_k theta_k a_k(u)``, which is what the stopping test
measures.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .composite import BallIndicator, BoxIndicator

LAMBDA_MIN = 1e-12
DEFAULT_RTOL = 1e-9
DEFAULT_MAX_ITER = 10_000
POLISH_EVERY = 25
ROUNDOFF_FACTOR = 64.0


class ProxNotConverged(RuntimeError):
    """Raised when the dual ascent hits its iteration cap before certifying."""

    def __init__(self, message, best_gap, solution=None):
        super().__init__(message)
        self.best_gap = best_gap
        self.solution = solution


@dataclass(frozen=True)
class ProxSolution:
    point: np.ndarray
    dual_weights: np.ndarray
    primal_value: float
    dual_value: float
    gap: float
    iterations: int
    dual_history: tuple = None


def project_simplex(v):
    """Euclidean projection onto {theta >= 0, sum theta = 1}."""
    v = np.asarray(v, dtype=float)
    m = v.size
    if m == 1:
        return np.ones(1)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, m + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def gap_roundoff_floor(G, lam):
    """Smallest gap resolvable in double precision for this bundle.

    ``u = z0 - lam G^T theta`` loses about eps * lam * |G|^2 to cancellation, and
    each affine value inherits that error times ``|g_k|``.
    """
    gmax = float(np.max(np.sum(G * G, axis=1))) if G.size else 0.0
    return ROUNDOFF_FACTOR * np.finfo(float).eps * lam * gmax


def default_tolerance(model, lam, primal_value):
    """Gap tolerance used when ``tol`` is not given."""
    return max(DEFAULT_RTOL * max(1.0, abs(primal_value)),
               gap_roundoff_floor(np.asarray(model.gradients, dtype=float), lam))


def _model_arrays(model):
    b = np.asarray(model.intercepts, dtype=float)
    G = np.asarray(model.gradients, dtype=float)
    if b.ndim != 1 or G.ndim != 2 or G.shape[0] != b.size:
        raise ValueError("malformed model: intercepts and gradients disagree")
    if b.size == 0:
        raise ValueError("prox subproblem needs a nonempty model")
    return b, G


def _inner(h, G, z0, lam, theta):
    return h.prox(z0 - lam * (G.T @ theta), lam)


def _dual(h, b, G, z0, lam, theta):
    u = _inner(h, G, z0, lam, theta)
    aff = b + G @ u
    d = u - z0
    val = float(theta @ aff) + h.value(u) + float(d @ d) / (2.0 * lam)
    return val, u, aff


def _solution(h, z0, lam, theta, u, aff, dual_value, iterations):
    d = u - z0
    top = float(np.max(aff))
    primal = h.value(u) + top + float(d @ d) / (2.0 * lam)
    gap = top - float(theta @ aff)
    return ProxSolution(u, theta, primal, dual_value, max(gap, 0.0), iterations)


def _face_weights(A_free, rhs_base, lam_eff):
    """Solve lam_eff A A^T theta + t 1 = rhs, 1^T theta = 1 (least squares)."""
    s = rhs_base.size
    K = np.zeros((s + 1, s + 1))
    K[:s, :s] = lam_eff * (A_free @ A_free.T)
    K[:s, s] = 1.0
    K[s, :s] = 1.0
    sol = np.linalg.lstsq(K, np.append(rhs_base, 1.0), rcond=None)[0]
    return sol[:s]


def _face_solve(h, b, G, z0, lam, S, v):
    """Weights on support S making all pieces in S equal at u(theta).

    The projection structure at ``v = z0 - lam G^T theta`` fixes how u depends
    on theta: clipped coordinates for a box, the boundary multiplier for a
    ball. On that face the conditions are linear in theta, except for the ball
    multiplier, which is found by a scalar root search.
    """
    A = G[S]
    if isinstance(h, BallIndicator) and np.linalg.norm(v - h.center) > h.radius:
        c, r = h.center, h.radius

        def weights(mu):
            z_eff = c + (z0 - c) / (1.0 + mu)
            return _face_weights(A, b[S] + A @ z_eff, lam / (1.0 + mu))

        def excess(mu):
            w = z0 - c - lam * (A.T @ weights(mu))
            return np.linalg.norm(w) - r * (1.0 + mu)

        if excess(0.0) <= 0.0:
            return _face_weights(A, b[S] + A @ z0, lam)
        hi = max(1.0, np.linalg.norm(v - c) / r)
        for _ in range(200):
            if excess(hi) < 0.0:
                break
            hi *= 2.0
        else:
            return None
        return weights(brentq(excess, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    u_fix = z0
    free = np.ones(z0.size, dtype=bool)
    if isinstance(h, BoxIndicator):
        free = (v > h.lower) & (v < h.upper)
        u_fix = np.where(free, z0, np.clip(v, h.lower, h.upper))
    return _face_weights(A[:, free], b[S] + A @ u_fix, lam)


def _structure(h, v):
    if isinstance(h, BallIndicator):
        return bool(np.linalg.norm(v - h.center) > h.radius)
    if isinstance(h, BoxIndicator):
        return ((v > h.lower) & (v < h.upper)).tobytes()
    return None


def _polish(h, b, G, z0, lam, theta, it, gap_ok):
    """Active-set refinement started from the support of ``theta``.

    First-order ascent identifies the optimal face slowly when the dual has
    nearly flat directions next to very steep ones (duplicate gradients, huge
    lam). Solving the face equations exactly, then adding the most violated
    piece or dropping a piece with negative weight, usually certifies within a
    few rounds. Returns a certified ProxSolution or None.
    """
    m = b.size
    S = set(np.nonzero(theta > 0.0)[0].tolist())
    cand = theta
    for _ in range(3 * m):
        if not S:
            return None
        idx = np.array(sorted(S))
        if idx.size == 1:
            theta_S = np.ones(1)
        else:
            v = z0 - lam * (G.T @ cand)
            for _ in range(8):
                theta_S = _face_solve(h, b, G, z0, lam, idx, v)
                if theta_S is None or not np.all(np.isfinite(theta_S)):
                    return None
                # Re-solve until the projection structure is self-consistent.
                v_new = z0 - lam * (G[idx].T @ theta_S)
                if _structure(h, v_new) == _structure(h, v):
                    break
                v = v_new
        if theta_S.min() < 0.0:
            S.discard(int(idx[np.argmin(theta_S)]))
            continue
        cand = np.zeros(m)
        cand[idx] = theta_S / theta_S.sum()
        val, u, aff = _dual(h, b, G, z0, lam, cand)
        sol = _solution(h, z0, lam, cand, u, aff, val, it)
        if gap_ok(sol):
            return sol
        k = int(np.argmax(aff))
        if k not in S:
            S.add(k)
        else:
            S.discard(int(idx[np.argmin(aff[idx])]))
    return None


def _try_polish(h, b, G, z0, lam, theta, it, gap_ok):
    try:
        return _polish(h, b, G, z0, lam, theta, it, gap_ok)
    except (ValueError, np.linalg.LinAlgError):
        return None


def prox_point(model, z0, lam, tol=None, max_iter=DEFAULT_MAX_ITER, theta0=None,
               record=False):
    """Certified minimizer of Gamma(u) + ||u - z0||^2 / (2 lam).

    Parameters
    ----------
    model : MaxOneCutModel or MultiCutModel
        Anything exposing ``intercepts`` (m,), ``gradients`` (m, n) and
        ``composite``.
    z0 : array_like
        Prox center.
    lam : float
        Prox stepsize, at least ``LAMBDA_MIN``.
    tol : float, optional
        Absolute gap tolerance. Defaults to ``1e-9 * max(1, |primal value|)``,
        re-evaluated at every iterate, but never below the roundoff floor
        :func:`gap_roundoff_floor`.
    max_iter : int
        Iteration cap; exceeding it raises :class:`ProxNotConverged`.
    theta0 : array_like, optional
        Warm-start weights (projected onto the simplex); uniform by default.
    record : bool
        Keep the dual values of accepted ascent steps in ``dual_history``.

    Returns
    -------
    ProxSolution
    """
    if not lam >= LAMBDA_MIN:
        raise ValueError(f"lambda must be >= {LAMBDA_MIN}, got {lam!r}")
    h = model.composite
    b, G = _model_arrays(model)
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (G.shape[1],):
        raise ValueError(f"prox center shape {z0.shape} does not match model dimension")
    m = b.size

    def finish(sol, history):
        if not record:
            return sol
        return ProxSolution(sol.point, sol.dual_weights, sol.primal_value,
                            sol.dual_value, sol.gap, sol.iterations, tuple(history))

    if m == 1:
        theta = np.ones(1)
        val, u, aff = _dual(h, b, G, z0, lam, theta)
        return finish(_solution(h, z0, lam, theta, u, aff, val, 0), [val])

    if theta0 is None:
        theta = np.full(m, 1.0 / m)
    else:
        theta = project_simplex(np.asarray(theta0, dtype=float))

    floor = gap_roundoff_floor(G, lam)

    def gap_ok(sol):
        if tol is not None:
            return sol.gap <= tol
        return sol.gap <= max(DEFAULT_RTOL * max(1.0, abs(sol.primal_value)), floor)

    L_max = lam * np.linalg.norm(G, 2) ** 2
    val, u, aff = _dual(h, b, G, z0, lam, theta)
    best = _solution(h, z0, lam, theta, u, aff, val, 0)
    history = [val]
    if gap_ok(best):
        return finish(best, history)
    if L_max <= 0.0:
        # All gradients vanish: D is linear in theta, maximized at a vertex.
        theta = np.zeros(m)
        theta[int(np.argmax(b))] = 1.0
        val, u, aff = _dual(h, b, G, z0, lam, theta)
        return finish(_solution(h, z0, lam, theta, u, aff, val, 1), history + [val])

    L = L_max
    y, t_mom = theta.copy(), 1.0
    grad_y = aff
    for it in range(1, max_iter + 1):
        trial = project_simplex(y + grad_y / L)
        if np.array_equal(trial, theta) and np.array_equal(y, theta):
            break  # exact fixed point of the gradient map
        tval, tu, taff = _dual(h, b, G, z0, lam, trial)
        dy = np.linalg.norm(trial - y)
        secant = np.linalg.norm(taff - grad_y) / dy if dy > 0.0 else 0.0
        if secant > L * (1.0 + 1e-9):
            # Local curvature underestimated: shrink the step and retry from y.
            L = min(L_max, max(2.0 * L, secant))
            continue
        if tval < val - 1e-12 * (1.0 + abs(val) + abs(tval)):
            # Momentum overshot: restart from the last accepted point.
            y, t_mom, grad_y = theta.copy(), 1.0, aff
            continue
        if float(grad_y @ (trial - theta)) < 0.0:
            t_next, y_next = 1.0, trial
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom * t_mom))
            y_next = trial + ((t_mom - 1.0) / t_next) * (trial - theta)
        theta, val, u, aff, t_mom, y = trial, tval, tu, taff, t_next, y_next
        history.append(val)
        sol = _solution(h, z0, lam, theta, u, aff, val, it)
        if sol.gap < best.gap:
            best = sol
        if gap_ok(sol):
            return finish(sol, history)
        if len(history) % POLISH_EVERY == 0:
            polished = _try_polish(h, b, G, z0, lam, theta, it, gap_ok)
            if polished is not None and polished.dual_value >= val - 1e-12 * (1.0 + abs(val)):
                return finish(polished, history + [polished.dual_value])
        L = max(0.9 * L, 1e-300)
        grad_y = aff if np.array_equal(y, theta) else b + G @ _inner(h, G, z0, lam, y)

    polished = _try_polish(h, b, G, z0, lam, best.dual_weights, max_iter, gap_ok)
    if polished is not None:
        return finish(polished, history + [polished.dual_value])
    raise ProxNotConverged(
        f"prox dual ascent stopped after {max_iter} iterations with gap {best.gap:.3e}",
        best.gap, best)


def kkt_residual(solution, model, z0, lam):
    """Largest violation among fixed point, complementary slackness and simplex."""
    h = model.composite
    b, G = _model_arrays(model)
    theta = np.asarray(solution.dual_weights, dtype=float)
    x = np.asarray(solution.point, dtype=float)
    z0 = np.asarray(z0, dtype=float)
    fixed = np.linalg.norm(x - h.prox(z0 - lam * (G.T @ theta), lam))
    aff = b + G @ x
    slack = float(theta @ (np.max(aff) - aff))
    simplex = max(float(np.max(-theta, initial=0.0)), abs(float(theta.sum()) - 1.0))
    return max(fixed, slack, simplex)
