"""Secrecy capacity of the Gaussian MIMO wiretap channel.

Closed-form optimal covariances for degraded channels, beamforming
solutions, a concave lower bound, a brute-force oracle and optimality
certificates.
"""

from .channel import Classification, GramPair, load_pair, pair_from_dict
from .closed_form import (capacity_infinity, solve_full_rank, solve_projected,
                          threshold_report)
from .errors import WiretapError
from .lower_bound import maximize_lower_bound
from .optimality import capacity, recover_multipliers
from .oracle import OracleConfig, hybrid_solve, oracle_maximize
from .rank_one import rank_one_solution, solve_complete_m2
from .solution import Method, Solution

__version__ = '0.1.0'

__all__ = [
    'Classification', 'GramPair', 'load_pair', 'pair_from_dict',
    'capacity_infinity', 'solve_full_rank', 'solve_projected',
    'threshold_report', 'WiretapError', 'maximize_lower_bound', 'capacity',
    'recover_multipliers', 'OracleConfig', 'hybrid_solve', 'oracle_maximize',
    'rank_one_solution', 'solve_complete_m2', 'Method', 'Solution',
]
