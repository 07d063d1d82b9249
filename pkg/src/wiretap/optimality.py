"""Secrecy rate evaluation and optimality certificates.

The secrecy rate of a covariance ``R`` is ``ln|I + W1 R| - ln|I + W2 R|``.
Everything here evaluates or certifies candidate covariances; nothing in
this module solves the power-constrained problem itself.
"""

from dataclasses import dataclass

import numpy as np

from .channel import DEFAULT_TOL, difference_split
from .errors import HypothesisViolated, ProductNotHermitian, ZeroCovariance

__all__ = [
    'capacity', 'capacity_raw', 'capacity_gradient', 'KktCertificate',
    'recover_multipliers', 'full_rank_kkt_residual', 'necessary_condition',
    'rank_upper_bound', 'Inertia', 'inertia', 'lemma2_check', 'lemma3_value',
    'lemma3_concavity_check',
]

KKT_TOL = 1e-8
ACTIVE_TOL = 1e-8


def _logdet_plus(w, r):
    m = w.shape[0]
    sign, logabs = np.linalg.slogdet(np.eye(m) + w @ r)
    return logabs


def capacity_raw(w1, w2, r):
    return float(_logdet_plus(w1, r) - _logdet_plus(w2, r))


def capacity(pair, r):
    """Secrecy rate of covariance `r`.

    Returns
    -------
    (raw, clamped) : (float, float)
        The signed log-det difference and its positive part in nats.
    """
    raw = capacity_raw(pair.w1, pair.w2, r)
    return raw, max(raw, 0.0)


def _grad(w1, w2, r):
    m = w1.shape[0]
    eye = np.eye(m)
    g = np.linalg.solve(eye + w1 @ r, w1) - np.linalg.solve(eye + w2 @ r, w2)
    return 0.5 * (g + g.conj().T)


def capacity_gradient(pair, r):
    """Gradient ``W1 (I + R W1)^{-1} - W2 (I + R W2)^{-1}`` (Hermitian)."""
    return _grad(pair.w1, pair.w2, r)


def full_rank_kkt_residual(pair, r, lam):
    """``||lam (I + W1 R)(I + R W2) - (W1 - W2)||_F`` (zero multiplier)."""
    m = pair.m
    eye = np.eye(m)
    lhs = lam * (eye + pair.w1 @ r) @ (eye + r @ pair.w2)
    return float(np.linalg.norm(lhs - pair.difference))


@dataclass(frozen=True)
class KktCertificate:
    """Multipliers recovered for a candidate covariance and their residuals.

    Residuals are relative to ``||W1 - W2||_F``. ``gradient_residual`` is
    the Lagrangian gradient, zero by construction of the multipliers;
    ``stationarity_residual`` is the multiplied-out form
    ``lam (I + W1 R)(I + R W2) - (W1 - W2 + M)``, which only vanishes when
    ``M R = 0`` as well.
    """
    lam: float
    m_multiplier: np.ndarray
    gradient_residual: float
    stationarity_residual: float
    m_min_eig: float
    complementary_slackness: float
    trace_mr: float
    power_slackness: float
    power_feasible: bool
    psd_feasible: bool
    tol: float

    @property
    def m_spectrum(self):
        return np.linalg.eigvalsh(self.m_multiplier)

    @property
    def passes(self):
        return bool(self.power_feasible and self.psd_feasible
                    and self.lam >= 0
                    and self.gradient_residual <= self.tol
                    and self.stationarity_residual <= self.tol
                    and self.m_min_eig >= -self.tol
                    and self.complementary_slackness <= self.tol
                    and self.power_slackness <= self.tol)

    def summary(self):
        return {
            'passes': self.passes,
            'lambda': self.lam,
            'gradient_residual': self.gradient_residual,
            'stationarity_residual': self.stationarity_residual,
            'm_min_eigenvalue': self.m_min_eig,
            'complementary_slackness': self.complementary_slackness,
            'power_slackness': self.power_slackness,
            'power_feasible': self.power_feasible,
            'psd_feasible': self.psd_feasible,
        }


def recover_multipliers(pair, r, p_t, tol=KKT_TOL):
    """Build the multipliers ``(lam, M)`` that make `r` stationary.

    ``lam = tr(R grad) / tr(R)`` forces ``tr(M R) = 0`` and
    ``M = lam I - grad`` zeroes the Lagrangian gradient; the certificate
    content is then whether ``M`` is PSD and ``M R`` vanishes.

    Raises
    ------
    ZeroCovariance
        If ``tr(r) == 0``; the zero-rate case has no meaningful multiplier.
    """
    m = pair.m
    tr_r = float(np.real(np.trace(r)))
    if tr_r <= 0:
        raise ZeroCovariance('candidate covariance is zero')
    g = capacity_gradient(pair, r)
    lam = float(np.real(np.trace(r @ g))) / tr_r
    mult = lam * np.eye(m) - g
    scale = float(np.linalg.norm(pair.difference)) or 1.0
    eye = np.eye(m)

    grad_res = np.linalg.norm(g - lam * eye + mult) / scale
    a2 = lam * (eye + pair.w1 @ r) @ (eye + r @ pair.w2)
    stat_res = np.linalg.norm(a2 - (pair.difference + mult)) / scale
    r_norm = float(np.linalg.norm(r))
    comp = np.linalg.norm(mult @ r) / (scale * r_norm)
    tr_mr = abs(float(np.real(np.trace(mult @ r)))) / (scale * r_norm)
    pow_slack = abs(lam * (tr_r - p_t)) / (scale * p_t)
    r_eigs = np.linalg.eigvalsh(r)
    return KktCertificate(
        lam=lam,
        m_multiplier=mult,
        gradient_residual=float(grad_res),
        stationarity_residual=float(stat_res),
        m_min_eig=float(np.linalg.eigvalsh(mult)[0]) / scale,
        complementary_slackness=float(comp),
        trace_mr=tr_mr,
        power_slackness=float(pow_slack),
        power_feasible=tr_r <= p_t * (1 + tol),
        psd_feasible=bool(r_eigs[0] >= -1e-10 * max(r_eigs[-1], 0.0)),
        tol=tol,
    )


def active_basis(r, active_tol=ACTIVE_TOL):
    vals, vecs = np.linalg.eigh(r)
    lmax = vals[-1]
    if lmax <= 0:
        return vecs[:, :0]
    keep = vals > active_tol * lmax
    return vecs[:, keep][:, ::-1]


def necessary_condition(pair, r, tol=0.0, active_tol=ACTIVE_TOL):
    """Check that `r` only transmits on directions where W1 beats W2.

    Returns
    -------
    (holds, witness) : (bool, float)
        ``witness`` is the smallest eigenvalue of the difference channel
        restricted to the active eigenvectors of `r` (``inf`` for ``r = 0``).
    """
    u = active_basis(r, active_tol)
    if u.shape[1] == 0:
        return True, float('inf')
    witness = float(np.linalg.eigvalsh(u.conj().T @ pair.difference @ u)[0])
    return witness > tol, witness


def rank_upper_bound(pair, tol=DEFAULT_TOL):
    """Number of strictly positive eigenvalues of ``W1 - W2``."""
    return difference_split(pair, tol).r_plus


@dataclass(frozen=True)
class Inertia:
    n_plus: int
    n_zero: int
    n_minus: int


def inertia(a, tol=DEFAULT_TOL):
    vals = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    thr = tol * scale
    n_plus = int(np.sum(vals > thr))
    n_minus = int(np.sum(vals < -thr))
    return Inertia(n_plus, len(vals) - n_plus - n_minus, n_minus)


def lemma2_check(a, b, c, tol=1e-9):
    """Whether ``ABC`` is PSD for PSD `a`, `b`, `c` with Hermitian product."""
    p = a @ b @ c
    norm = float(np.linalg.norm(p))
    if np.linalg.norm(p - p.conj().T) > tol * max(norm, 1.0):
        raise ProductNotHermitian('A B C is not Hermitian')
    vals = np.linalg.eigvalsh(0.5 * (p + p.conj().T))
    return bool(vals[0] >= -tol * max(float(np.max(np.abs(vals))), 1.0))


def lemma3_value(a, b, x):
    """``ln|I - B (A + X)^{-1} B|``."""
    m = a.shape[0]
    inner = b @ np.linalg.solve(a + x, b)
    sign, logabs = np.linalg.slogdet(np.eye(m) - inner)
    if sign.real <= 0:
        return -np.inf
    return float(logabs)


def _random_psd(rng, m, scale=1.0, rank=None):
    k = m if rank is None else rank
    g = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
    x = scale * (g @ g.conj().T) / (2 * k)
    return 0.5 * (x + x.conj().T)


def lemma3_concavity_check(a, b, sample_count=200, seed=0, tol=1e-9):
    """Randomized check that ``X -> ln|I - B (A+X)^{-1} B|`` is concave and
    non-decreasing over the PSD cone.

    Raises
    ------
    HypothesisViolated
        If `a` is singular or ``B A^{-1} B`` exceeds the identity.
    """
    m = a.shape[0]
    if np.linalg.eigvalsh(a)[0] <= 0:
        raise HypothesisViolated('A must be positive definite')
    if np.linalg.eigvalsh(b)[0] < -1e-12 * max(1.0, np.abs(b).max()):
        raise HypothesisViolated('B must be PSD')
    bab = b @ np.linalg.solve(a, b)
    if np.linalg.eigvalsh(0.5 * (bab + bab.conj().T))[-1] > 1 + 1e-12:
        raise HypothesisViolated('B A^-1 B must not exceed I')
    rng = np.random.default_rng(seed)
    for _ in range(sample_count):
        scale = 10.0 ** rng.uniform(-2, 2)
        x1 = _random_psd(rng, m, scale, rank=int(rng.integers(1, m + 1)))
        x2 = _random_psd(rng, m, scale, rank=int(rng.integers(1, m + 1)))
        alpha = rng.uniform()
        f1, f2 = lemma3_value(a, b, x1), lemma3_value(a, b, x2)
        fm = lemma3_value(a, b, alpha * x1 + (1 - alpha) * x2)
        if fm < alpha * f1 + (1 - alpha) * f2 - tol:
            return False
        if lemma3_value(a, b, x1 + x2) < f1 - tol:
            return False
    return True
