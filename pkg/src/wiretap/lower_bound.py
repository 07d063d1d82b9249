"""Concave lower bound on the secrecy capacity.

Both Gram matrices are compressed onto the positive eigenspace of
``W1 - W2``; the resulting rate ``C+(R)`` is concave and non-decreasing in
``R``, and its maximum over the power budget lower-bounds the capacity. It
is maximized with conditional gradient (Frank-Wolfe), whose linear step
over ``{R >= 0, tr R <= P}`` is a single top-eigenvector computation.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .channel import DEFAULT_TOL, difference_split
from .optimality import capacity_raw
from .oracle import OracleConfig, _ascend, project_feasible

__all__ = ['Tightness', 'ProjectedProblem', 'BoundResult', 'build_projected',
           'cplus', 'cplus_gradient', 'maximize_lower_bound',
           'tightness_case']

class Tightness(enum.Enum):
    DEGRADED = 'Degraded'
    SAME_EIGENVECTORS = 'SameEigenvectors'
    LOW_SNR = 'LowSNR'
    UNKNOWN = 'Unknown'

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ProjectedProblem:
    p_plus: np.ndarray
    w1_plus: np.ndarray
    w2_plus: np.ndarray
    r_plus_dim: int


@dataclass(frozen=True)
class BoundResult:
    r_lb: np.ndarray
    c_lb: float
    gap_certificate: float
    iterations: int
    tightness: Tightness
    history: tuple = ()


def build_projected(pair, tol=DEFAULT_TOL):
    split = difference_split(pair, tol)
    u = split.u_plus
    p = u @ u.conj().T
    w1p = p @ pair.w1 @ p
    w2p = p @ pair.w2 @ p
    return ProjectedProblem(p, 0.5 * (w1p + w1p.conj().T),
                            0.5 * (w2p + w2p.conj().T), split.r_plus)


def cplus(projected, r):
    """``ln|I + W1+ R| - ln|I + W2+ R|``."""
    return capacity_raw(projected.w1_plus, projected.w2_plus, r)


def cplus_gradient(projected, r):
    m = r.shape[0]
    eye = np.eye(m)
    w1, w2 = projected.w1_plus, projected.w2_plus
    g = np.linalg.solve(eye + w1 @ r, w1) - np.linalg.solve(eye + w2 @ r, w2)
    return 0.5 * (g + g.conj().T)


def _line_search(proj, r, d, iters=80):
    """Exact maximizer over ``a in [0, 1]`` of the concave ``C+(r + a d)``.

    Bisection on the sign of the directional derivative, which is
    monotone on a concave slice and, unlike differences of objective
    values, does not lose precision near the optimum.
    """
    def slope(a):
        return float(np.real(np.vdot(cplus_gradient(proj, r + a * d), d)))

    if slope(0.0) <= 0:
        return 0.0
    if slope(1.0) >= 0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if slope(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo


def maximize_lower_bound(pair, p_t, tol=1e-7, max_iter=5000,
                         rank_tol=DEFAULT_TOL, inner_steps=20):
    """Maximize ``C+`` over ``{R >= 0, tr R <= p_t}`` by conditional gradient.

    Each iteration takes a Frank-Wolfe step towards ``p_t v v^+`` (``v`` the
    top eigenvector of the gradient, or towards 0 if no eigenvalue is
    positive) with an exact line search, followed by up to `inner_steps`
    projected-gradient steps with Armijo backtracking. Neither kind of step
    can lower the objective; the inner steps fix the slow zig-zag of plain
    conditional gradient when the maximizer is rank-deficient.

    Returns
    -------
    BoundResult
        ``gap_certificate`` is the final Frank-Wolfe duality gap, an upper
        bound on ``max C+ - c_lb``.
    """
    if p_t <= 0:
        raise ValueError('p_t must be positive')
    proj = build_projected(pair, rank_tol)
    m = pair.m
    r = np.zeros((m, m), dtype=complex)
    tight = tightness_case(pair, p_t)
    if proj.r_plus_dim == 0:
        return BoundResult(r, 0.0, 0.0, 0, tight)
    inner = OracleConfig(max_iter=max(inner_steps, 1), gtol=0.0)
    value = 0.0
    gap = np.inf
    history = [value]
    it = 0
    for it in range(1, max_iter + 1):
        g = cplus_gradient(proj, r)
        vals, vecs = np.linalg.eigh(g)
        if vals[-1] > 0:
            v = vecs[:, -1]
            s = p_t * np.outer(v, v.conj())
        else:
            s = np.zeros_like(r)
        d = s - r
        gap = float(np.real(np.vdot(g, d)))
        if gap <= tol:
            break
        r = project_feasible(r + _line_search(proj, r, d) * d, p_t)
        if inner_steps > 0 and np.real(np.trace(r)) > 0:
            r = _ascend(proj.w1_plus, proj.w2_plus, p_t, r, inner)[0]
        value = max(cplus(proj, r), value)
        history.append(value)
    return BoundResult(r, float(cplus(proj, r)), max(float(gap), 0.0), it,
                       tight, tuple(history))


def tightness_case(pair, p_t, tol=1e-10):
    """Which regime, if any, guarantees the lower bound is exact.

    The shared-eigenvector test comes first so that commuting channels are
    labelled as such even when they are also degraded.
    """
    w1, w2 = pair.w1, pair.w2
    comm = np.linalg.norm(w1 @ w2 - w2 @ w1)
    if comm <= tol * np.linalg.norm(w1) * np.linalg.norm(w2):
        return Tightness.SAME_EIGENVECTORS
    diff = np.linalg.eigvalsh(pair.difference)
    scale = max(float(np.max(np.abs(diff))), np.finfo(float).tiny)
    if diff[0] >= -DEFAULT_TOL * scale:
        return Tightness.DEGRADED
    if diff[-1] > 0 and p_t <= 1e-3 / diff[-1]:
        return Tightness.LOW_SNR
    return Tightness.UNKNOWN
