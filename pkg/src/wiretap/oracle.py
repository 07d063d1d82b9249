"""Brute-force reference maximizer for the secrecy rate.

Multistart projected gradient ascent over ``{R >= 0, tr R <= P_T}``. It
makes no use of the closed forms, which is the point: it is the
independent route used to check them. The hybrid solver then reuses the
active subspace it finds to polish the answer with the closed form.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .channel import eigh_desc
from .closed_form import solve_on_subspace
from .errors import WiretapError, ZeroMatrix
from .optimality import (capacity_gradient, capacity_raw,
                         necessary_condition, recover_multipliers)
from .solution import Method, Solution, numerical_rank

__all__ = ['OracleConfig', 'project_feasible', 'project_capped_simplex',
           'waterfill', 'oracle_maximize', 'extract_active_subspace',
           'refine_subspace', 'hybrid_solve']

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleConfig:
    starts: int = 16
    max_iter: int = 2000
    armijo: float = 1e-4
    max_backtracks: int = 60
    seed: int = 0
    rank_tol: float = 1e-6
    gtol: float = 1e-9
    workers: int = 1

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError('starts must be >= 1')
        if self.max_iter < 1:
            raise ValueError('max_iter must be >= 1')


def project_capped_simplex(v, total):
    """Euclidean projection of `v` onto ``{x >= 0, sum(x) <= total}``."""
    v = np.asarray(v, dtype=float)
    x = np.clip(v, 0.0, None)
    if x.sum() <= total:
        return x
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, len(u) + 1)
    rho = np.flatnonzero(u - (css - total) / k > 0)[-1]
    tau = (css[rho] - total) / (rho + 1)
    x = np.clip(v - tau, 0.0, None)
    excess = x.sum()
    return x * (total / excess) if excess > total else x


def project_feasible(x, p_t):
    """Frobenius-nearest point of ``{R >= 0, tr R <= p_t}`` to Hermitian `x`."""
    x = 0.5 * (x + x.conj().T)
    vals, vecs = np.linalg.eigh(x)
    vals = project_capped_simplex(vals, p_t)
    r = (vecs * vals) @ vecs.conj().T
    return 0.5 * (r + r.conj().T)


def waterfill(gains, total):
    """Classic water-filling of `total` power over channels with `gains`."""
    gains = np.asarray(gains, dtype=float)
    p = np.zeros_like(gains)
    active = gains > 0
    if not active.any():
        return p
    g = gains[active]
    order = np.argsort(g)[::-1]
    inv = 1.0 / g[order]
    for n in range(len(g), 0, -1):
        level = (total + inv[:n].sum()) / n
        if level > inv[n - 1]:
            break
    alloc = np.zeros_like(g)
    alloc[order[:n]] = level - inv[:n]
    p[active] = alloc
    return p


def _half(w, r, eye):
    """``G = W (I + R W)^{-1}`` (Hermitian PSD) and a square-root factor."""
    g = np.linalg.solve(eye + w @ r, w)
    g = 0.5 * (g + g.conj().T)
    vals, vecs = np.linalg.eigh(g)
    return g, vecs * np.sqrt(np.clip(vals, 0.0, None))


def _state(w1, w2, r, eye):
    g1, l1 = _half(w1, r, eye)
    g2, l2 = _half(w2, r, eye)
    return g1 - g2, l1, l2


def _delta(l1, l2, d):
    """``C(R + D) - C(R)`` from the factors of the two gradient terms.

    ``ln|I + W (R + D)| - ln|I + W R| = ln|I + G D|`` and ``G D`` is
    similar to ``L^+ D L``, so the change is a sum of ``log1p`` of
    Hermitian eigenvalues and stays accurate for tiny steps where a
    difference of two log-determinants would be all round-off.
    """
    e1 = np.linalg.eigvalsh(l1.conj().T @ d @ l1)
    e2 = np.linalg.eigvalsh(l2.conj().T @ d @ l2)
    return float(np.sum(np.log1p(e1)) - np.sum(np.log1p(e2)))


def _starts(pair, p_t, config):
    m = pair.m
    fixed = [('isotropic', (p_t / m) * np.eye(m, dtype=complex))]
    top = eigh_desc(pair.difference).vectors[:, 0]
    fixed.append(('difference_top', p_t * np.outer(top, top.conj())))
    dec = eigh_desc(pair.w1)
    p = waterfill(dec.values, p_t)
    if p.sum() <= 0:
        p = np.full(m, p_t / m)
    fixed.append(('waterfill_w1', (dec.vectors * p) @ dec.vectors.conj().T))
    out = fixed[:config.starts]
    for idx in range(len(out), config.starts):
        rng = np.random.default_rng([config.seed, idx])
        k = int(rng.integers(1, m + 1))
        g = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
        x = g @ g.conj().T
        out.append(('random', p_t * x / np.real(np.trace(x))))
    return out


def _ascend(w1, w2, p_t, r0, config):
    """Projected gradient ascent from `r0`; returns (R, C, iters, converged).

    Trial steps use the Barzilai-Borwein length; acceptance is the Armijo
    test with halving along the projected direction.
    """
    eye = np.eye(w1.shape[0])
    r = project_feasible(r0, p_t)
    c = capacity_raw(w1, w2, r)
    g, l1, l2 = _state(w1, w2, r, eye)
    gnorm = float(np.linalg.norm(g))
    t = 1.0 / gnorm if gnorm > 0 else 1.0
    for it in range(1, config.max_iter + 1):
        pg = np.linalg.norm(project_feasible(r + g, p_t) - r)
        if pg <= config.gtol * (1.0 + abs(c)):
            return r, capacity_raw(w1, w2, r), it - 1, True
        d = project_feasible(r + t * g, p_t) - r
        slope = float(np.real(np.vdot(g, d)))
        alpha = 1.0
        for _ in range(config.max_backtracks):
            gain = _delta(l1, l2, alpha * d)
            if gain >= config.armijo * alpha * slope:
                break
            alpha *= 0.5
        else:
            # no ascent left at machine precision
            return r, capacity_raw(w1, w2, r), it, True
        r_new = r + alpha * d
        g_new, l1, l2 = _state(w1, w2, r_new, eye)
        s = r_new - r
        y = g_new - g
        sy = float(np.real(np.vdot(s, y)))
        ss = float(np.real(np.vdot(s, s)))
        # concave curvature gives sy < 0; otherwise take a long step
        t = ss / -sy if sy < 0 else 1e3 * t
        gn = max(float(np.linalg.norm(g_new)), 1e-300)
        if not np.isfinite(t):
            t = 1.0 / gn
        # longer steps only reach the same face, and R + t G loses
        # precision in its eigenvalues once t |G| dwarfs P_T
        t = min(max(t, 1e-12), 1e4 * p_t / gn)
        r, c, g = r_new, c + gain, g_new
    return r, capacity_raw(w1, w2, r), config.max_iter, False


def oracle_maximize(pair, p_t, config=None):
    """Best of several projected-gradient ascents of the secrecy rate.

    Starts, in order: isotropic, beamforming on the top difference
    eigenvector, water-filling on W1, then random PSD matrices drawn from a
    generator keyed by ``(seed, start index)``. The winner is the highest
    final rate, ties going to the lowest start index, so the result does
    not depend on how the starts are scheduled.
    """
    config = OracleConfig() if config is None else config
    if p_t <= 0:
        raise ValueError('p_t must be positive')
    starts = _starts(pair, p_t, config)
    w1 = np.asarray(pair.w1)
    w2 = np.asarray(pair.w2)

    def run(item):
        return _ascend(w1, w2, p_t, item[1], config)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(s) for s in starts]

    best = 0
    for idx in range(1, len(results)):
        if results[idx][1] > results[best][1]:
            best = idx
    per_start = [{'index': i, 'kind': starts[i][0], 'capacity': res[1],
                  'iterations': res[2], 'converged': res[3]}
                 for i, res in enumerate(results)]
    r, c = results[best][0], results[best][1]
    diagnostics = {'starts': per_start, 'winner': best}
    m = pair.m
    if c <= 0:
        return Solution(np.zeros((m, m), dtype=complex), 0.0, 0, 0.0,
                        Method.ZERO, certified=False, diagnostics=diagnostics)
    cert = recover_multipliers(pair, r, p_t)
    diagnostics['certificate'] = cert.summary()
    return Solution(r, c, numerical_rank(r, config.rank_tol), cert.lam,
                    Method.ORACLE, certified=False, diagnostics=diagnostics)


def extract_active_subspace(r, rank_tol=1e-6):
    """Orthonormal eigenvectors of `r` with eigenvalues above
    ``rank_tol * lmax``."""
    dec = eigh_desc(r)
    if dec.values[0] <= 0:
        raise ZeroMatrix('covariance has no active subspace')
    return dec.vectors[:, dec.values > rank_tol * dec.values[0]]


def _frame(u0, u_perp, x):
    """Orthonormal frame of ``span(u0 + u_perp X)`` (polar factor)."""
    k = u0.shape[1]
    half = x.size // 2
    xm = (x[:half] + 1j * x[half:]).reshape(u_perp.shape[1], k)
    v = u0 + u_perp @ xm
    vals, vecs = np.linalg.eigh(v.conj().T @ v)
    return v @ (vecs / np.sqrt(vals)) @ vecs.conj().T


def refine_subspace(pair, u_a, p_t, xtol=1e-13):
    """Sharpen an approximate active subspace to an exact stationary one.

    At an optimum of rank k the range of R is an invariant subspace of the
    gradient. Capacity is flat to second order in subspace errors, so the
    oracle only pins the range down to about the square root of its
    tolerance; here the off-diagonal block ``U_perp^+ grad U`` of the
    closed-form solution on ``span(U)`` is driven to zero instead.

    Returns
    -------
    numpy.ndarray or None
        Refined orthonormal basis, or None if the root finder failed.
    """
    m, k = u_a.shape
    if k == m:
        return u_a
    q = np.linalg.qr(u_a, mode='complete')[0]
    u0, u_perp = q[:, :k], q[:, k:]
    scale = float(np.linalg.norm(pair.difference)) or 1.0

    def residual(x):
        u = _frame(u0, u_perp, x)
        try:
            r = solve_on_subspace(pair, u, p_t).covariance
        except WiretapError:
            return np.full(x.size, 1e3)
        g = capacity_gradient(pair, r)
        off = u_perp.conj().T @ (g @ u - u @ (u.conj().T @ g @ u)) / scale
        return np.concatenate([off.real.ravel(), off.imag.ravel()])

    x0 = np.zeros(2 * (m - k) * k)
    res = scipy.optimize.root(residual, x0, method='hybr',
                              options={'xtol': xtol})
    if not np.all(np.isfinite(res.x)):
        return None
    if np.linalg.norm(residual(res.x)) > np.linalg.norm(residual(x0)):
        return None
    return _frame(u0, u_perp, res.x)


def hybrid_solve(pair, p_t, config=None):
    """Oracle search for the active subspace, closed-form solve inside it.

    The subspace read off the oracle iterate is first sharpened with
    :func:`refine_subspace`.

    Returns the polished solution when it is at least as good as the raw
    oracle iterate, otherwise the oracle iterate with
    ``diagnostics['polish_failed']`` set.
    """
    config = OracleConfig() if config is None else config
    raw = oracle_maximize(pair, p_t, config)
    if raw.method is Method.ZERO:
        return raw
    u_a = extract_active_subspace(raw.covariance, config.rank_tol)
    holds, witness = necessary_condition(pair, raw.covariance,
                                         active_tol=config.rank_tol)
    try:
        polished = solve_on_subspace(pair, u_a, p_t)
    except WiretapError as exc:
        log.warning('subspace polish failed: %s', exc)
        raw.diagnostics['polish_failed'] = str(exc)
        return raw
    refined = refine_subspace(pair, u_a, p_t)
    if refined is not None and refined is not u_a:
        try:
            better = solve_on_subspace(pair, refined, p_t)
        except WiretapError as exc:
            log.info('refined subspace rejected: %s', exc)
        else:
            if better.capacity_nats >= polished.capacity_nats - 1e-12:
                polished = better
    if polished.capacity_nats >= raw.capacity_nats - 1e-9:
        polished.certified = False
        polished.diagnostics['oracle_capacity'] = raw.capacity_nats
        polished.diagnostics['necessary_condition_witness'] = witness
        polished.diagnostics['oracle_starts'] = raw.diagnostics['starts']
        return polished
    log.warning('polished capacity %.12g below oracle %.12g',
                polished.capacity_nats, raw.capacity_nats)
    raw.diagnostics['polish_failed'] = 'polished capacity below oracle'
    return raw
