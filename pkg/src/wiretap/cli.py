"""Command-line front end.

Subcommands
-----------
solve      optimal covariance at one power level
sweep      capacity, rank and bounds over an SNR grid (CSV or JSON)
threshold  full-rank power thresholds of a strictly degraded channel
check      optimality certificate for a candidate covariance
oracle     multistart projected-gradient search with per-start results

Exit codes: 0 success, 2 malformed input, 3 invalid matrices,
4 channel not strictly degraded, 5 certificate failure.
"""

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import Classification, decode_matrix, encode_matrix, load_pair
from .closed_form import (capacity_infinity, solve_full_rank, solve_projected,
                          threshold_report)
from .errors import (BelowThreshold, ChannelError, IllConditioned,
                     MalformedInput, NotStrictlyDegraded, WiretapError)
from .lower_bound import maximize_lower_bound
from .optimality import (KKT_TOL, capacity, capacity_gradient,
                         necessary_condition, rank_upper_bound,
                         recover_multipliers)
from .oracle import OracleConfig, hybrid_solve, oracle_maximize
from .rank_one import rank_one_solution, solve_complete_m2
from .solution import Method, Solution, numerical_rank

__all__ = ['RunConfig', 'SweepRecord', 'solve_channel', 'parse_grid',
           'snr_grid', 'sweep_records', 'records_to_csv', 'main',
           'EXIT_OK', 'EXIT_MALFORMED', 'EXIT_INVALID', 'EXIT_NOT_DEGRADED',
           'EXIT_CERTIFICATE']

log = logging.getLogger('wiretap')

EXIT_OK = 0
EXIT_MALFORMED = 2
EXIT_INVALID = 3
EXIT_NOT_DEGRADED = 4
EXIT_CERTIFICATE = 5

CSV_FIELDS = ('p_t', 'snr_db', 'capacity_nats', 'capacity_bits', 'rank',
              'method', 'lower_bound_nats', 'c_infinity_nats', 'lambda',
              'kkt_residual')

LN2 = math.log(2.0)


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: str
    p_t: Optional[float] = None
    grid: Optional[tuple] = None
    units: str = 'nats'
    seed: int = 0
    starts: int = 16
    tol: float = KKT_TOL
    output: Optional[str] = None
    fmt: Optional[str] = None
    candidate: Optional[str] = None
    jobs: int = 1

    def __post_init__(self):
        if self.grid is not None:
            start, stop, step = self.grid
            if not step > 0:
                raise ValueError('sweep step must be positive')
            if start > stop:
                raise ValueError('sweep start must not exceed stop')
        if self.p_t is not None and not self.p_t > 0:
            raise ValueError('power must be positive')
        if self.jobs < 1:
            raise ValueError('--jobs must be >= 1')

    @property
    def oracle_config(self):
        return OracleConfig(starts=self.starts, seed=self.seed,
                            workers=self.jobs)


@dataclass(frozen=True)
class SweepRecord:
    p_t: float
    snr_db: float
    capacity_nats: float
    capacity_bits: float
    rank: int
    method: str
    lower_bound_nats: float
    c_infinity_nats: float
    lam: float
    kkt_residual: float

    def row(self):
        vals = (self.p_t, self.snr_db, self.capacity_nats, self.capacity_bits,
                self.rank, self.method, self.lower_bound_nats,
                self.c_infinity_nats, self.lam, self.kkt_residual)
        return [_fmt(v) for v in vals]


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ('inf' if v > 0 else 'nan')
    return str(v)


def _is_degraded(pair):
    diff = np.linalg.eigvalsh(pair.difference)
    scale = max(float(np.max(np.abs(diff))), np.finfo(float).tiny)
    return bool(diff[0] >= -pair.tol * scale)


def _zero_certificate(pair):
    """At ``R = 0`` the KKT system reduces to ``W1 - W2`` being NSD."""
    top = float(np.linalg.eigvalsh(capacity_gradient(
        pair, np.zeros((pair.m, pair.m))))[-1])
    scale = float(np.linalg.norm(pair.difference)) or 1.0
    return {'passes': top <= pair.tol * scale, 'lambda': 0.0,
            'gradient_top_eigenvalue': top}


def _certify(pair, sol, p_t, tol):
    if sol.method is Method.ZERO or np.real(np.trace(sol.covariance)) <= 0:
        return _zero_certificate(pair), 0.0
    cert = recover_multipliers(pair, sol.covariance, p_t, tol)
    return cert.summary(), cert.stationarity_residual


def _try_closed_form(pair, p_t):
    cls = pair.classification
    try:
        if pair.m == 2:
            return solve_complete_m2(pair, p_t)
        if cls is Classification.STRICTLY_DEGRADED:
            return solve_full_rank(pair, p_t)
        if cls is Classification.DEGRADED_ON_NULLSPACE:
            return solve_projected(pair, p_t)
    except (BelowThreshold, IllConditioned) as exc:
        log.info('closed form not applicable: %s', exc)
    return None


def solve_channel(pair, p_t, oracle_config=None, tol=KKT_TOL):
    """Pick the strongest applicable solver and certify its answer.

    Order: zero for reversed channels, the complete two-antenna solution,
    the full-rank closed form (directly or on ``range(W1)``), beamforming
    when ``W1 - W2`` has at most one positive eigenvalue, and otherwise the
    oracle-plus-polish heuristic. ``certified`` is true only when the
    optimality conditions are sufficient for the channel and they pass.
    """
    m = pair.m
    if pair.classification is Classification.REVERSED:
        sol = Solution(np.zeros((m, m), dtype=complex), 0.0, 0, 0.0,
                       Method.ZERO)
    else:
        sol = _try_closed_form(pair, p_t)
        if sol is None:
            if rank_upper_bound(pair, pair.tol) <= 1:
                sol = rank_one_solution(pair, p_t)
            else:
                sol = hybrid_solve(pair, p_t, oracle_config)
    summary, residual = _certify(pair, sol, p_t, tol)
    sol.diagnostics['certificate'] = summary
    sol.diagnostics['stationarity_residual'] = residual
    heuristic = sol.method in (Method.SUBSPACE, Method.ORACLE)
    if sol.method is Method.ZERO:
        sol.certified = bool(summary['passes'])
    elif heuristic:
        # KKT points are global maxima only when the rate is concave
        sol.certified = _is_degraded(pair) and bool(summary['passes'])
    else:
        sol.certified = bool(summary['passes'])
    return sol


def parse_grid(text):
    """``'start:stop:step'`` in dB."""
    parts = text.split(':')
    if len(parts) != 3:
        raise ValueError(f'sweep must be start:stop:step, got {text!r}')
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ValueError(f'sweep values must be numbers: {text!r}') from exc
    if not all(math.isfinite(v) for v in (start, stop, step)):
        raise ValueError('sweep values must be finite')
    return start, stop, step


def snr_grid(start, stop, step):
    """Grid points ``start + k*step`` up to `stop`, rounded to 1e-9 dB."""
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + k * step, 9) for k in range(n + 1)]


def _record(pair, snr_db, oracle_config, tol):
    p_t = 10.0 ** (snr_db / 10.0)
    sol = solve_channel(pair, p_t, oracle_config, tol)
    bound = maximize_lower_bound(pair, p_t)
    return SweepRecord(
        p_t=p_t, snr_db=snr_db,
        capacity_nats=float(sol.capacity_nats),
        capacity_bits=float(sol.capacity_nats) / LN2,
        rank=int(sol.rank), method=str(sol.method),
        lower_bound_nats=float(bound.c_lb),
        c_infinity_nats=float(capacity_infinity(pair)),
        lam=float(sol.lam),
        kkt_residual=float(sol.diagnostics['stationarity_residual']))


def sweep_records(pair, grid, oracle_config=None, tol=KKT_TOL, jobs=1):
    """One record per grid point, in grid order whatever `jobs` is."""
    points = snr_grid(*grid)
    # oracle starts stay serial inside a parallel sweep
    inner = oracle_config or OracleConfig()
    if jobs > 1:
        inner = OracleConfig(starts=inner.starts, seed=inner.seed, workers=1)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(
                lambda s: _record(pair, s, inner, tol), points))
    return [_record(pair, s, inner, tol) for s in points]


def records_to_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(CSV_FIELDS)
    for rec in records:
        writer.writerow(rec.row())
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else _fmt(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return str(x) if not isinstance(x, str) and x is not None else x


def _dumps(obj):
    return json.dumps(_jsonable(obj), indent=2) + '\n'


def _convert(nats, units):
    return nats / LN2 if units == 'bits' else nats


def _db(p):
    return 10.0 * math.log10(p) if p > 0 else float('-inf')


def _threshold_dict(report):
    if report is None:
        return None
    return {k: {'linear': v, 'db': _db(v)} for k, v in (
        ('p_t0_exact', report.p_t0_exact),
        ('p_t0_conservative', report.p_t0_conservative),
        ('bound_simple', report.bound_simple))}


def _solution_report(pair, sol, p_t, units):
    diag = dict(sol.diagnostics)
    certificate = diag.pop('certificate', None)
    threshold = sol.threshold
    if threshold is None and pair.classification is \
            Classification.STRICTLY_DEGRADED:
        try:
            threshold = threshold_report(pair)
        except WiretapError as exc:
            log.info('no threshold report: %s', exc)
    return {
        'name': pair.name,
        'classification': str(pair.classification),
        'p_t': p_t,
        'snr_db': _db(p_t),
        'method': str(sol.method),
        'certified': bool(sol.certified),
        'rank': int(sol.rank),
        'units': units,
        'capacity': _convert(sol.capacity_nats, units),
        'capacity_nats': sol.capacity_nats,
        'capacity_bits': sol.capacity_bits,
        'lambda': sol.lam,
        'R': encode_matrix(sol.covariance),
        'threshold': _threshold_dict(threshold),
        'certificate': certificate,
        'diagnostics': diag,
    }


def cmd_solve(config, pair):
    sol = solve_channel(pair, config.p_t, config.oracle_config, config.tol)
    return _dumps(_solution_report(pair, sol, config.p_t, config.units)), \
        EXIT_OK


def cmd_sweep(config, pair):
    records = sweep_records(pair, config.grid, config.oracle_config,
                            config.tol, config.jobs)
    if (config.fmt or 'csv') == 'csv':
        return records_to_csv(records), EXIT_OK
    rows = []
    for rec in records:
        row = dict(zip(CSV_FIELDS, (
            rec.p_t, rec.snr_db, rec.capacity_nats, rec.capacity_bits,
            rec.rank, rec.method, rec.lower_bound_nats, rec.c_infinity_nats,
            rec.lam, rec.kkt_residual)))
        for key in ('capacity', 'lower_bound', 'c_infinity'):
            row[key] = _convert(row[f'{key}_nats'], config.units)
        rows.append(row)
    return _dumps({'units': config.units, 'records': rows}), EXIT_OK


def cmd_threshold(config, pair):
    if pair.classification is not Classification.STRICTLY_DEGRADED:
        raise NotStrictlyDegraded(
            f'channel is {pair.classification}; thresholds need W1 - W2 > 0')
    out = _threshold_dict(threshold_report(pair))
    out['name'] = pair.name
    return _dumps(out), EXIT_OK


def _load_candidate(path, m):
    try:
        with open(path, encoding='utf-8') as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f'{path}: invalid JSON ({exc})') from exc
    if not isinstance(obj, dict) or 'R' not in obj:
        raise MalformedInput('candidate document needs key "R"')
    r = decode_matrix(obj['R'])
    if r.shape != (m, m):
        raise ChannelError(f'candidate is {r.shape}, channel needs {(m, m)}')
    if np.max(np.abs(r - r.conj().T)) > 1e-12 * max(np.max(np.abs(r)), 1.0):
        raise ChannelError('candidate covariance is not Hermitian')
    return 0.5 * (r + r.conj().T)


def cmd_check(config, pair):
    r = _load_candidate(config.candidate, pair.m)
    raw, _ = capacity(pair, r)
    rank = numerical_rank(r)
    bound = rank_upper_bound(pair, pair.tol)
    holds, witness = necessary_condition(pair, r)
    out = {'name': pair.name, 'p_t': config.p_t, 'rank': rank,
           'rank_bound': bound, 'rank_ok': rank <= bound,
           'capacity_nats': raw, 'capacity': _convert(raw, config.units),
           'units': config.units,
           'necessary_condition': {'holds': holds, 'witness': witness}}
    if np.real(np.trace(r)) <= 0:
        cert = _zero_certificate(pair)
        out['certificate'] = cert
        passes = cert['passes']
    else:
        cert = recover_multipliers(pair, r, config.p_t, config.tol)
        out['certificate'] = cert.summary()
        out['multiplier_spectrum'] = cert.m_spectrum
        passes = cert.passes and holds and rank <= bound
    out['passes'] = bool(passes)
    return _dumps(out), EXIT_OK if passes else EXIT_CERTIFICATE


def cmd_oracle(config, pair):
    sol = oracle_maximize(pair, config.p_t, config.oracle_config)
    report = _solution_report(pair, sol, config.p_t, config.units)
    report['starts'] = report['diagnostics'].pop('starts')
    return _dumps(report), EXIT_OK


COMMANDS = {'solve': cmd_solve, 'sweep': cmd_sweep,
            'threshold': cmd_threshold, 'check': cmd_check,
            'oracle': cmd_oracle}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--input', '-i', required=True,
                        help='channel JSON file (H1/H2 or W1/W2)')
    power = common.add_mutually_exclusive_group()
    power.add_argument('--snr-db', type=float,
                       help='total power in dB (10 log10 P_T)')
    power.add_argument('--power', type=float, help='total power, linear')
    common.add_argument('--units', choices=('nats', 'bits'), default='nats')
    common.add_argument('--seed', type=int, default=0)
    common.add_argument('--starts', type=int, default=16,
                        help='oracle multistart count')
    common.add_argument('--tol', type=float, default=KKT_TOL,
                        help='certificate tolerance')
    common.add_argument('--output', '-o', help='write here instead of stdout')
    common.add_argument('--format', choices=('json', 'csv'), dest='fmt')
    common.add_argument('--jobs', type=int, default=1,
                        help='worker threads (output does not depend on it)')

    parser = argparse.ArgumentParser(
        prog='wiretap', description='Gaussian MIMO wiretap secrecy capacity.')
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('solve', parents=[common], help='solve at one power')
    sw = sub.add_parser('sweep', parents=[common], help='SNR sweep')
    sw.add_argument('--sweep', required=True, metavar='START:STOP:STEP',
                    help='dB grid, e.g. --sweep=-20:30:0.5')
    sub.add_parser('threshold', parents=[common],
                   help='full-rank power thresholds')
    ck = sub.add_parser('check', parents=[common],
                        help='certify a candidate covariance')
    ck.add_argument('--candidate', required=True,
                    help='JSON file with key "R"')
    sub.add_parser('oracle', parents=[common], help='multistart oracle')
    return parser


def _configure_logging():
    level = os.environ.get('WIRETAP_LOG', 'WARNING').strip().upper()
    if level.isdigit():
        level = int(level)
    elif not isinstance(logging.getLevelName(level), int):
        level = 'WARNING'
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')


def _config_from_args(args):
    p_t = None
    if args.snr_db is not None:
        p_t = 10.0 ** (args.snr_db / 10.0)
    elif args.power is not None:
        p_t = args.power
    if args.command in ('solve', 'check', 'oracle') and p_t is None:
        raise ValueError(f'{args.command} needs --snr-db or --power')
    grid = parse_grid(args.sweep) if args.command == 'sweep' else None
    if args.starts < 1:
        raise ValueError('--starts must be >= 1')
    return RunConfig(command=args.command, input=args.input, p_t=p_t,
                     grid=grid, units=args.units, seed=args.seed,
                     starts=args.starts, tol=args.tol, output=args.output,
                     fmt=args.fmt, candidate=getattr(args, 'candidate', None),
                     jobs=args.jobs)


def run(config):
    """Execute `config`; returns ``(text, exit_code)``."""
    pair = load_pair(config.input)
    return COMMANDS[config.command](config, pair)


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        text, code = run(config)
    except (MalformedInput, ValueError, OSError) as exc:
        if isinstance(exc, ChannelError):
            print(f'error: {exc}', file=sys.stderr)
            return EXIT_INVALID
        print(f'error: {exc}', file=sys.stderr)
        return EXIT_MALFORMED
    except NotStrictlyDegraded as exc:
        print(f'error: {exc}', file=sys.stderr)
        return EXIT_NOT_DEGRADED
    except WiretapError as exc:
        print(f'error: {exc}', file=sys.stderr)
        return EXIT_INVALID
    if config.output:
        with open(config.output, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == '__main__':
    sys.exit(main())
