"""Beamforming (rank-1) solutions and the complete two-antenna solver."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .channel import Classification, eigh_desc
from .closed_form import solve_full_rank, threshold_exact
from .errors import BelowThreshold, IllConditioned
from .optimality import capacity, capacity_gradient
from .solution import Method, Solution

__all__ = ['GeneralizedEigenPair', 'fix_phase', 'rank_one_solution',
           'low_snr_direction', 'solve_complete_m2']

TIE_RTOL = 1e-10


@dataclass(frozen=True)
class GeneralizedEigenPair:
    value: float
    vector: np.ndarray
    multiplicity: int = 1


def fix_phase(v):
    """Scale `v` to unit norm with its largest-magnitude entry real positive."""
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    return v * (np.abs(v[k]) / v[k])


def _pick(vals, vecs):
    """Top eigenpair; ties broken by the lexicographically largest real part."""
    top = vals.max()
    tied = np.flatnonzero(vals >= top - TIE_RTOL * max(abs(top), 1.0))
    cands = [fix_phase(vecs[:, k]) for k in tied]
    best = max(cands, key=lambda c: tuple(np.round(c.real, 12)))
    return GeneralizedEigenPair(float(top), best, len(tied))


def _top_generalized(pair, p_t):
    m = pair.m
    a = np.eye(m) + p_t * pair.w1
    b = np.eye(m) + p_t * pair.w2
    vals, vecs = scipy.linalg.eigh(a, b)
    return _pick(vals, vecs)


def rank_one_solution(pair, p_t):
    """Beamforming on the top generalized eigenvector of
    ``(I + P_T W1, I + P_T W2)``; capacity ``max(ln l_1, 0)``.

    The pencil is reduced to a Hermitian problem through the Cholesky
    factor of ``I + P_T W2``, which is always positive definite.
    """
    if p_t <= 0:
        raise ValueError('p_t must be positive')
    gen = _top_generalized(pair, p_t)
    diagnostics = {'generalized_eigenvalue': gen.value,
                   'multiplicity': gen.multiplicity}
    if gen.value <= 1.0:
        return Solution(np.zeros((pair.m, pair.m), dtype=complex), 0.0, 0,
                        0.0, Method.ZERO, diagnostics=diagnostics)
    u = gen.vector
    r = p_t * np.outer(u, u.conj())
    g = capacity_gradient(pair, r)
    lam = float(np.real(u.conj() @ g @ u))
    raw, _ = capacity(pair, r)
    diagnostics['capacity_direct'] = raw
    return Solution(r, max(float(np.log(gen.value)), 0.0), 1, lam,
                    Method.RANK_ONE, diagnostics=diagnostics)


def low_snr_direction(pair):
    """Top eigenpair of the difference channel ``W1 - W2``."""
    dec = eigh_desc(pair.difference)
    return _pick(dec.values, dec.vectors)


def solve_complete_m2(pair, p_t):
    """Optimal covariance for two transmit antennas.

    Full-rank closed form when the channel is strictly degraded and the
    power exceeds the exact threshold, beamforming otherwise.
    """
    if pair.m != 2:
        raise ValueError(f'two transmit antennas required, got {pair.m}')
    if pair.classification is Classification.STRICTLY_DEGRADED:
        try:
            if p_t > threshold_exact(pair):
                return solve_full_rank(pair, p_t)
        except (BelowThreshold, IllConditioned):
            pass
    return rank_one_solution(pair, p_t)
