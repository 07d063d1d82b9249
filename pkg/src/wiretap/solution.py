"""Result containers shared by all solvers."""

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class Method(enum.Enum):
    FULL_RANK = 'FullRank'
    RANK_ONE = 'RankOne'
    PROJECTED_FULL_RANK = 'ProjectedFullRank'
    SUBSPACE = 'Subspace'
    ORACLE = 'Oracle'
    ZERO = 'Zero'

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ThresholdReport:
    """Power thresholds above which the full-rank closed form is valid.

    ``p_t0_exact`` is the smallest power at which the closed-form covariance
    is PSD, found numerically; ``p_t0_conservative`` is the explicit
    sufficient threshold and ``bound_simple`` its cruder upper bound.
    """
    p_t0_conservative: float
    p_t0_exact: float
    bound_simple: float


@dataclass(frozen=True)
class SecureWaterfill:
    lam: float
    mode_powers: np.ndarray
    mu: np.ndarray
    basis: np.ndarray


@dataclass
class Solution:
    covariance: np.ndarray
    capacity_nats: float
    rank: int
    lam: float
    method: Method
    certified: bool = True
    diagnostics: dict = field(default_factory=dict)
    threshold: Optional[ThresholdReport] = None

    @property
    def capacity_bits(self):
        return self.capacity_nats / np.log(2.0)

    @property
    def power(self):
        return float(np.real(np.trace(self.covariance)))


def numerical_rank(r, rank_tol=1e-8):
    vals = np.linalg.eigvalsh(r)
    lmax = vals[-1]
    if lmax <= 0:
        return 0
    return int(np.sum(vals > rank_tol * lmax))
