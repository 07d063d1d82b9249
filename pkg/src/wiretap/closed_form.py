"""Closed-form optimal covariance for strictly degraded wiretap channels.

For ``W1 > W2`` and enough power the optimal covariance is full rank:

    R* = U diag(l_i) U^+ - W1^{-1},   l_i = 2 / (lam + sqrt(lam^2 + 4 mu_i lam))

where ``U, mu`` are the eigenvectors/eigenvalues of
``Z = W2 + W2 (W1 - W2)^{-1} W2`` and ``lam > 0`` enforces ``tr R* = P_T``.
This module also provides the power thresholds for that regime, the
projected variants for singular W1 and known active subspaces, and the
weak-eavesdropper and high-SNR approximations.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import (Classification, GramPair, compute_z, eigh_desc,
                      inv_hermitian, nullspace_projector)
from .errors import (BelowThreshold, IllConditioned, NotStrictlyDegraded,
                     NullspaceConditionViolated, ProjectedNotDegraded,
                     SingularW2)
from .optimality import capacity, full_rank_kkt_residual
from .solution import (Method, SecureWaterfill, Solution, ThresholdReport,
                       numerical_rank)

__all__ = [
    'water_level_power', 'solve_lambda', 'mode_powers', 'secure_waterfill',
    'solve_full_rank', 'capacity_closed', 'capacity_closed_alt',
    'capacity_infinity', 'threshold_conservative', 'threshold_bound_simple',
    'threshold_exact', 'threshold_report', 'solve_projected',
    'solve_on_subspace', 'Approximation', 'weak_eavesdropper_approx',
    'high_snr_approx',
]

log = logging.getLogger(__name__)

MAX_COND_W1 = 1e12
LAMBDA_RTOL = 1e-12
LAMBDA_MAXITER = 200


def mode_powers(mu, lam):
    """Per-mode eigenvalues ``l_i`` of ``U Lambda_1 U^+`` at multiplier `lam`.

    Written as ``2 / (lam + sqrt(lam^2 + 4 mu lam))``, which equals
    ``(2/lam) (sqrt(1 + 4 mu/lam) + 1)^{-1}`` and reduces to ``1/lam`` for
    ``mu = 0`` without cancellation.
    """
    mu = np.asarray(mu, dtype=float)
    return 2.0 / (lam + np.sqrt(lam * lam + 4.0 * mu * lam))


def water_level_power(mu, lam):
    """Left-hand side of the power equation, ``sum_i l_i(lam)``."""
    return float(np.sum(mode_powers(mu, lam)))


def solve_lambda(mu, target):
    """Unique ``lam > 0`` with ``sum_i l_i(lam) = target``.

    The sum is strictly decreasing in ``lam`` from infinity to zero, so a
    geometric bracket is grown from ``m / target`` and then bisected (in
    log scale) until the relative power mismatch is below 1e-12.
    """
    mu = np.asarray(mu, dtype=float)
    if target <= 0:
        raise ValueError('target power must be positive')
    if np.any(mu < 0):
        raise ValueError('mu must be non-negative')
    lam = len(mu) / target
    lo = hi = lam
    while water_level_power(mu, lo) < target:
        lo /= 2.0
    while water_level_power(mu, hi) > target:
        hi *= 2.0
    for _ in range(LAMBDA_MAXITER):
        mid = np.sqrt(lo * hi)
        val = water_level_power(mu, mid)
        if abs(val - target) <= LAMBDA_RTOL * target:
            return float(mid)
        if val > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    return float(np.sqrt(lo * hi))


def _check_full_rank_inputs(pair):
    if pair.classification is not Classification.STRICTLY_DEGRADED:
        raise NotStrictlyDegraded(
            f'channel is {pair.classification}, not strictly degraded')
    cond = np.linalg.cond(pair.w1)
    if cond > MAX_COND_W1:
        raise IllConditioned(
            f'cond(W1) = {cond:.3e}; use solve_projected for singular W1')


@dataclass(frozen=True)
class _Spectrum:
    mu: np.ndarray
    u: np.ndarray
    w1_inv: np.ndarray
    tr_w1_inv: float


def _spectrum(pair):
    _check_full_rank_inputs(pair)
    dec = eigh_desc(compute_z(pair))
    mu = np.clip(dec.values, 0.0, None)
    w1_inv = inv_hermitian(pair.w1)
    return _Spectrum(mu, dec.vectors, w1_inv, float(np.real(np.trace(w1_inv))))


def _covariance(spec, lam):
    l1 = mode_powers(spec.mu, lam)
    r = (spec.u * l1) @ spec.u.conj().T - spec.w1_inv
    return 0.5 * (r + r.conj().T), l1


def secure_waterfill(pair, p_t):
    """Multiplier and per-mode powers of the full-rank solution at `p_t`."""
    spec = _spectrum(pair)
    lam = solve_lambda(spec.mu, p_t + spec.tr_w1_inv)
    return SecureWaterfill(lam, mode_powers(spec.mu, lam), spec.mu, spec.u)


def capacity_closed(pair, wf):
    """Secrecy capacity from the water-filling quantities (any W2 >= 0).

    Raises
    ------
    BelowThreshold
        If the eavesdropper determinant is not strictly positive, which
        only happens when the closed form is used outside its validity.
    """
    m = pair.m
    _, logdet_w1 = np.linalg.slogdet(pair.w1)
    inner = inv_hermitian(pair.w1) - (wf.basis * wf.mode_powers) @ wf.basis.conj().T
    sign, logdet_e = np.linalg.slogdet(np.eye(m) - pair.w2 @ inner)
    if sign.real <= 0 or np.exp(logdet_e) <= 1e-12:
        raise BelowThreshold('eavesdropper determinant is not positive')
    return float(logdet_w1 + np.sum(np.log(wf.mode_powers)) - logdet_e)


def capacity_infinity(pair):
    """``ln(|W1| / |W2|)``, the high-power limit (``inf`` if W2 is singular)."""
    s1, l1 = np.linalg.slogdet(pair.w1)
    s2, l2 = np.linalg.slogdet(pair.w2)
    if abs(s2) == 0 or np.linalg.eigvalsh(pair.w2)[0] <= 0:
        return float('inf')
    return float(l1 - l2)


def capacity_closed_alt(pair, wf):
    """Second form of the capacity, valid only for W2 > 0:
    ``ln(|W1|/|W2|) + ln(|Lambda_1| / |Lambda_2|)``."""
    if np.any(wf.mu <= 0) or np.linalg.eigvalsh(pair.w2)[0] <= 0:
        raise SingularW2('second capacity form needs W2 > 0')
    l2 = wf.mode_powers + 1.0 / wf.mu
    return capacity_infinity(pair) + float(np.sum(np.log(wf.mode_powers / l2)))


def threshold_conservative(pair):
    """Explicit sufficient power threshold for the full-rank closed form.

    Evaluates the power equation at ``lam = lmin^2 / (mu_1 + lmin)``, the
    multiplier at which the smallest mode power reaches ``1/lmin``.
    """
    spec = _spectrum(pair)
    lmin = float(np.linalg.eigvalsh(pair.w1)[0])
    lam = lmin * lmin / (spec.mu[0] + lmin)
    p_t0 = water_level_power(spec.mu, lam) - spec.tr_w1_inv
    bound = threshold_bound_simple(pair, spec, lmin)
    if p_t0 > bound + 1e-9 * max(1.0, abs(bound)):
        warnings.warn(f'threshold {p_t0} exceeds its upper bound {bound}')
    return float(p_t0)


def threshold_bound_simple(pair, spec=None, lmin=None):
    """``m mu_1 / lmin^2 + (m - 1) / lmin``."""
    spec = _spectrum(pair) if spec is None else spec
    lmin = float(np.linalg.eigvalsh(pair.w1)[0]) if lmin is None else lmin
    m = pair.m
    return float(m * spec.mu[0] / lmin ** 2 + (m - 1) / lmin)


def threshold_exact(pair, tol=1e-9):
    """Smallest power at which the closed-form covariance is PSD.

    The closed-form covariance decreases in the Loewner order as ``lam``
    grows, so its minimum eigenvalue is monotone and the boundary ``lam``
    is found by bisection between the zero-power multiplier and the
    conservative one.
    """
    spec = _spectrum(pair)
    if pair.m == 1:
        return 0.0

    def min_eig(lam):
        r, _ = _covariance(spec, lam)
        return np.linalg.eigvalsh(r)[0]

    lam_hi = solve_lambda(spec.mu, spec.tr_w1_inv)
    if min_eig(lam_hi) >= 0:
        return 0.0
    lmin = float(np.linalg.eigvalsh(pair.w1)[0])
    lam_lo = lmin * lmin / (spec.mu[0] + lmin)
    # lam_lo is feasible by construction; guard against round-off anyway
    while min_eig(lam_lo) < 0:
        lam_lo /= 2.0
    p_lo = water_level_power(spec.mu, lam_hi) - spec.tr_w1_inv
    p_hi = water_level_power(spec.mu, lam_lo) - spec.tr_w1_inv
    while p_hi - p_lo > tol * max(p_hi, 1e-300):
        mid = np.sqrt(lam_lo * lam_hi)
        if mid in (lam_lo, lam_hi):
            break
        if min_eig(mid) >= 0:
            lam_lo = mid
            p_hi = water_level_power(spec.mu, mid) - spec.tr_w1_inv
        else:
            lam_hi = mid
            p_lo = water_level_power(spec.mu, mid) - spec.tr_w1_inv
    return float(max(p_hi, 0.0))


def threshold_report(pair):
    return ThresholdReport(p_t0_conservative=threshold_conservative(pair),
                           p_t0_exact=threshold_exact(pair),
                           bound_simple=threshold_bound_simple(pair))


def solve_full_rank(pair, p_t, with_threshold=True):
    """Full-rank optimal covariance of a strictly degraded channel.

    Parameters
    ----------
    pair : GramPair
        Must be strictly degraded with a well-conditioned W1.
    p_t : float
        Total transmit power, above the exact threshold.
    with_threshold : bool
        Attach a :class:`ThresholdReport` to the solution.

    Raises
    ------
    NotStrictlyDegraded, IllConditioned
        Channel outside the theorem's hypotheses.
    BelowThreshold
        `p_t` is too small for a PSD closed form; carries the report.
    """
    if p_t <= 0:
        raise ValueError('p_t must be positive')
    spec = _spectrum(pair)
    lam = solve_lambda(spec.mu, p_t + spec.tr_w1_inv)
    r, l1 = _covariance(spec, lam)
    vals = np.linalg.eigvalsh(r)
    if vals[0] < -1e-10 * p_t:
        raise BelowThreshold(
            f'P_T = {p_t:.6g} is below the full-rank threshold',
            report=threshold_report(pair))
    wf = SecureWaterfill(lam, l1, spec.mu, spec.u)
    c_closed = capacity_closed(pair, wf)
    raw, _ = capacity(pair, r)
    diagnostics = {
        'kkt_residual': full_rank_kkt_residual(pair, r, lam),
        'capacity_direct': raw,
        'trace_error': abs(float(np.real(np.trace(r))) - p_t),
        'min_eigenvalue': float(vals[0]),
        'mu': spec.mu.tolist(),
        'mode_powers': l1.tolist(),
    }
    return Solution(
        covariance=r,
        capacity_nats=max(c_closed, 0.0),
        rank=numerical_rank(r),
        lam=lam,
        method=Method.FULL_RANK,
        diagnostics=diagnostics,
        threshold=threshold_report(pair) if with_threshold else None,
    )


def _lift(sol, u, pair, p_t, method):
    r = u @ sol.covariance @ u.conj().T
    r = 0.5 * (r + r.conj().T)
    raw, clamped = capacity(pair, r)
    diagnostics = dict(sol.diagnostics)
    diagnostics['subspace_dim'] = u.shape[1]
    diagnostics['capacity_direct'] = raw
    diagnostics['kkt_residual_projected'] = diagnostics.pop('kkt_residual')
    diagnostics['kkt_residual'] = full_rank_kkt_residual(
        GramPair(u.conj().T @ pair.w1 @ u, u.conj().T @ pair.w2 @ u),
        sol.covariance, sol.lam)
    return Solution(r, sol.capacity_nats, numerical_rank(r), sol.lam, method,
                    diagnostics=diagnostics, threshold=sol.threshold)


def solve_projected(pair, p_t):
    """Optimal covariance when W1 is singular but its null space is shared
    by W2 and ``W1 - W2`` is positive definite on the rest.

    The problem is solved on ``range(W1)`` and lifted back, so the result
    has the rank of W1.
    """
    if pair.classification is Classification.STRICTLY_DEGRADED:
        return solve_full_rank(pair, p_t)
    if pair.classification is not Classification.DEGRADED_ON_NULLSPACE:
        raise NullspaceConditionViolated(
            f'channel is {pair.classification}; null(W1) must lie in null(W2) '
            'and W1 - W2 must be positive definite on its complement')
    u = nullspace_projector(pair.w1, pair.tol)
    sub = GramPair(u.conj().T @ pair.w1 @ u, u.conj().T @ pair.w2 @ u,
                   tol=pair.tol)
    sol = solve_full_rank(sub, p_t)
    return _lift(sol, u, pair, p_t, Method.PROJECTED_FULL_RANK)


def solve_on_subspace(pair, u_a, p_t):
    """Full-rank solution restricted to ``span(u_a)`` and lifted back.

    Raises
    ------
    ProjectedNotDegraded
        If ``u_a^+ (W1 - W2) u_a`` is not positive definite.
    """
    u_a = np.asarray(u_a, dtype=complex)
    if u_a.ndim == 1:
        u_a = u_a[:, None]
    sub = GramPair(u_a.conj().T @ pair.w1 @ u_a, u_a.conj().T @ pair.w2 @ u_a,
                   tol=pair.tol)
    if sub.classification is not Classification.STRICTLY_DEGRADED:
        raise ProjectedNotDegraded(
            f'projected channel is {sub.classification}')
    sol = solve_full_rank(sub, p_t)
    return _lift(sol, u_a, pair, p_t, Method.SUBSPACE)


@dataclass(frozen=True)
class Approximation:
    covariance: np.ndarray
    capacity_nats: Optional[float]
    regime_ok: bool
    lam: Optional[float] = None


def weak_eavesdropper_approx(pair, p_t, margin=0.1):
    """Covariance approximation for an eavesdropper much weaker than W1.

    ``R ~ U1 (I/lam - D1^{-1}) U1^+ - W2 / lam^2`` with
    ``lam ~ m / (P_T + tr W1^{-1})``: water-filling on W1 minus a secrecy
    correction. ``regime_ok`` is False (and a warning is issued) when some
    eigenvalue of W2 exceeds `margin` times ``m / (4 (P_T + tr W1^{-1}))``.
    """
    m = pair.m
    dec = eigh_desc(pair.w1)
    if dec.values[-1] <= 0:
        raise IllConditioned('W1 must be positive definite')
    target = p_t + float(np.sum(1.0 / dec.values))
    lam = m / target
    limit = margin * lam / 4.0
    ok = bool(np.linalg.eigvalsh(pair.w2)[-1] <= limit)
    if not ok:
        warnings.warn('eavesdropper is not weak enough for this approximation')
    first = (dec.vectors * (1.0 / lam - 1.0 / dec.values)) @ dec.vectors.conj().T
    r = first - pair.w2 / lam ** 2
    return Approximation(0.5 * (r + r.conj().T), None, ok, lam)


def high_snr_approx(pair, p_t, margin=10.0):
    """High-power covariance and capacity approximation (requires W2 > 0).

    Power ``d_i`` on the eigenvectors of Z is proportional to
    ``mu_i^{-1/2}``, and the capacity gap to ``ln(|W1|/|W2|)`` is
    ``(sum_i mu_i^{-1/2})^2 / P_T``.
    """
    if np.linalg.eigvalsh(pair.w2)[0] <= 1e-12 * np.linalg.eigvalsh(pair.w1)[-1]:
        raise SingularW2('high-SNR approximation needs W2 > 0')
    spec = _spectrum(pair)
    s = 1.0 / np.sqrt(spec.mu)
    d = p_t * s / np.sum(s)
    ok = bool(p_t >= margin * s.max() * np.sum(s))
    if not ok:
        warnings.warn('power is not high enough for the high-SNR approximation')
    r = (spec.u * d) @ spec.u.conj().T
    c_hat = capacity_infinity(pair) - float(np.sum(s)) ** 2 / p_t
    return Approximation(0.5 * (r + r.conj().T), c_hat, ok)
