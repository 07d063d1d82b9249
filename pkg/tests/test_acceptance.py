"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import json
import math
import warnings

import numpy as np

from generators import (commuting_capacity, commuting_pair, degraded_pair,
                        nondegraded_pair, random_psd, single_positive_pair)
from wiretap import GramPair, capacity, oracle_maximize, solve_full_rank
from wiretap.channel import encode_matrix
from wiretap.cli import main, solve_channel
from wiretap.closed_form import (capacity_infinity, high_snr_approx,
                                 threshold_conservative, threshold_exact,
                                 weak_eavesdropper_approx)
from wiretap.lower_bound import maximize_lower_bound
from wiretap.optimality import (inertia, lemma2_check, lemma3_concavity_check,
                                necessary_condition, rank_upper_bound,
                                recover_multipliers)
from wiretap.oracle import waterfill
from wiretap.rank_one import rank_one_solution
from wiretap.solution import Method


def test_example_channel_capacity(example_pair, criterion):
    sol = solve_full_rank(example_pair, 10.0)
    ora = oracle_maximize(example_pair, 10.0)
    rel = abs(sol.capacity_nats - ora.capacity_nats) / sol.capacity_nats
    ok = abs(sol.capacity_nats - 2.2569) <= 1e-3 and rel <= 1e-5
    criterion(1, ok, f'C={sol.capacity_nats:.6f} oracle rel diff={rel:.1e}')
    assert ok


def test_high_snr_limit(example_pair, criterion):
    c_inf = capacity_infinity(example_pair)
    grid = np.arange(-20.0, 40.0 + 1e-9, 0.5)
    delta = np.array([solve_channel(example_pair, 10 ** (s / 10)).capacity_nats
                      - c_inf for s in grid])
    at_40 = delta[-1] + c_inf
    ok = (abs(c_inf - math.log(20.0)) <= 1e-12
          and abs(at_40 - math.log(20.0)) <= 0.02
          and bool(np.all(delta < 0)) and bool(np.all(np.diff(delta) > 0)))
    criterion(2, ok, f'C(40 dB)={at_40:.5f} ln20={math.log(20):.5f} '
                     f'max dC={delta.max():.2e}')
    assert ok


def test_rank_transition(example_pair, criterion):
    grid = np.arange(0.25, 0.40, 0.0005)
    ranks = [solve_channel(example_pair, p).rank for p in grid]
    switch = grid[ranks.index(2)]
    assert set(ranks[:ranks.index(2)]) == {1}
    assert set(ranks[ranks.index(2):]) == {2}
    exact = threshold_exact(example_pair)
    cons = threshold_conservative(example_pair)
    switch_db = 10 * math.log10(switch)
    ok = (abs(switch - 0.3113) <= 0.002 and abs(switch_db + 6.0) <= 1.5
          and exact <= cons and abs(cons - 0.766) <= 1e-3)
    criterion(3, ok, f'switch at P={switch:.4f} ({switch_db:.2f} dB) '
                     f'exact={exact:.4f} conservative={cons:.4f}')
    assert ok


def test_high_snr_approximation(example_pair, criterion):
    exact = solve_full_rank(example_pair, 100.0).capacity_nats
    approx = high_snr_approx(example_pair, 100.0)
    err = abs(exact - approx.capacity_nats)
    ok = err <= 0.02 and abs(approx.capacity_nats - 2.8917) <= 1e-4
    criterion(4, ok, f'exact={exact:.5f} approx={approx.capacity_nats:.5f}')
    assert ok


def _strictly_degraded_above(rng, m, p_t):
    while True:
        pair = degraded_pair(rng, m)
        if threshold_exact(pair) < p_t:
            return pair


def test_full_rank_certification(criterion):
    rng = np.random.default_rng(5)
    worst = {'kkt': 0.0, 'trace': 0.0, 'gap': 0.0}
    min_eig = np.inf
    for k in range(100):
        m = (2, 3, 4)[k % 3]
        p_t = (1.0, 10.0)[(k // 3) % 2]
        pair = _strictly_degraded_above(rng, m, p_t)
        sol = solve_full_rank(pair, p_t)
        cert = recover_multipliers(pair, sol.covariance, p_t)
        ora = oracle_maximize(pair, p_t)
        worst['kkt'] = max(worst['kkt'], cert.stationarity_residual)
        worst['trace'] = max(worst['trace'],
                             abs(np.trace(sol.covariance).real - p_t) / p_t)
        worst['gap'] = max(worst['gap'], abs(sol.capacity_nats
                                             - ora.capacity_nats)
                           / sol.capacity_nats)
        min_eig = min(min_eig, np.linalg.eigvalsh(sol.covariance)[0])
    ok = (worst['kkt'] <= 1e-8 and worst['trace'] <= 1e-9 and min_eig > 0
          and worst['gap'] <= 1e-5)
    criterion(5, ok, f'kkt={worst["kkt"]:.1e} trace={worst["trace"]:.1e} '
                     f'min eig={min_eig:.1e} oracle gap={worst["gap"]:.1e}')
    assert ok


def test_rank_bound_and_necessary_condition(criterion):
    rng = np.random.default_rng(6)
    rank_viol = witness_viol = 0
    for k in range(200):
        m = (2, 3, 4)[k % 3]
        p_t = (0.1, 1.0, 10.0)[(k // 3) % 3]
        kind = k % 4
        if kind == 0:
            pair = degraded_pair(rng, m)
        elif kind == 1:
            pair = nondegraded_pair(rng, m)
        elif kind == 2:
            # rank-deficient eavesdropper
            pair = GramPair(random_psd(rng, m),
                            random_psd(rng, m, rank=max(1, m - 1)))
        else:
            pair = GramPair(random_psd(rng, m, rank=max(1, m - 1)),
                            random_psd(rng, m))
        ora = oracle_maximize(pair, p_t)
        if ora.rank > rank_upper_bound(pair):
            rank_viol += 1
        sol = solve_channel(pair, p_t)
        if sol.method is not Method.ZERO:
            holds, _ = necessary_condition(pair, sol.covariance)
            witness_viol += not holds
    beam_err = 0.0
    beam_methods = set()
    for k in range(30):
        m = (2, 3, 4)[k % 3]
        p_t = (0.1, 1.0, 10.0)[(k // 3) % 3]
        pair = single_positive_pair(rng, m)
        beam = rank_one_solution(pair, p_t)
        sol = solve_channel(pair, p_t)
        ora = oracle_maximize(pair, p_t)
        beam_methods.add(sol.method)
        beam_err = max(beam_err, abs(ora.capacity_nats - beam.capacity_nats)
                       / max(beam.capacity_nats, 1e-12),
                       abs(capacity(pair, beam.covariance)[0]
                           - beam.capacity_nats))
        if ora.rank != 1 or sol.rank != 1:
            rank_viol += 1
    ok = (rank_viol == 0 and witness_viol == 0 and beam_err <= 1e-5
          and beam_methods <= {Method.RANK_ONE})
    criterion(6, ok, f'rank violations={rank_viol} witness violations='
                     f'{witness_viol} beamforming err={beam_err:.1e}')
    assert ok


def test_lower_bound_tightness(criterion):
    rng = np.random.default_rng(7)
    powers = (0.1, 1.0, 10.0)
    deg_err = comm_err = 0.0
    excess = -np.inf
    for k in range(50):
        m = (2, 3, 4)[k % 3]
        p_t = powers[(k // 3) % 3]
        pair = degraded_pair(rng, m)
        c = solve_channel(pair, p_t).capacity_nats
        lb = maximize_lower_bound(pair, p_t).c_lb
        deg_err = max(deg_err, abs(lb - c) / max(c, 0.01))

        pair, a, b = commuting_pair(rng, m)
        c = commuting_capacity(a, b, p_t)
        lb = maximize_lower_bound(pair, p_t).c_lb
        comm_err = max(comm_err, abs(lb - c) / max(c, 0.01))

        pair = nondegraded_pair(rng, m)
        c = oracle_maximize(pair, p_t).capacity_nats
        excess = max(excess, maximize_lower_bound(pair, p_t).c_lb - c)

    pair = nondegraded_pair(np.random.default_rng(8), 3)
    ratios = []
    for p_t in 10.0 ** -np.arange(1, 6):
        c = rank_one_solution(pair, p_t).capacity_nats
        ratios.append(maximize_lower_bound(pair, p_t).c_lb / c)
    gaps = np.abs(1 - np.array(ratios))
    low_ok = bool(np.all(np.diff(gaps) <= 1e-12)) and gaps[-1] <= 1e-3
    ok = deg_err <= 1e-4 and comm_err <= 1e-4 and excess <= 1e-5 and low_ok
    criterion(7, ok, f'degraded={deg_err:.1e} commuting={comm_err:.1e} '
                     f'excess={excess:.1e} low-SNR ratio={ratios[-1]:.6f}')
    assert ok


def test_lemma_suites(criterion):
    rng = np.random.default_rng(9)
    inertia_viol = 0
    for _ in range(500):
        m = int(rng.integers(2, 6))
        k = int(rng.integers(1, m + 1))
        g = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        a = g + g.conj().T
        s = (rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k)))
        if rng.uniform() < 0.5:
            s[:, -1] = s[:, 0]
        inertia_viol += inertia(s.conj().T @ a @ s).n_plus > inertia(a).n_plus

    product_viol = 0
    for t in range(200):
        m = int(rng.integers(2, 5))
        if t % 2 == 0:
            # commuting triple
            u = np.linalg.qr(rng.standard_normal((m, m))
                             + 1j * rng.standard_normal((m, m)))[0]
            a, b, c = ((u * rng.uniform(0, 2, m)) @ u.conj().T
                       for _ in range(3))
        else:
            a = random_psd(rng, m)
            b = random_psd(rng, m, rank=int(rng.integers(1, m + 1)))
            c = a
        product_viol += not lemma2_check(a, b, c)

    concave_viol = 0
    for t in range(20):
        m = int(rng.integers(2, 5))
        a = random_psd(rng, m) + 0.1 * np.eye(m)
        b = random_psd(rng, m)
        top = np.linalg.eigvalsh(b @ np.linalg.solve(a, b))[-1]
        b = b * math.sqrt(0.9 / top)
        concave_viol += not lemma3_concavity_check(a, b, sample_count=10,
                                                   seed=t)
    ok = inertia_viol == 0 and product_viol == 0 and concave_viol == 0
    criterion(8, ok, f'violations: inertia={inertia_viol} '
                     f'product={product_viol} concavity={concave_viol}')
    assert ok


def test_weak_eavesdropper_order(criterion):
    rng = np.random.default_rng(10)
    ratios = []
    wf_err = 0.0
    for _ in range(10):
        m = 3
        w1 = random_psd(rng, m) + np.eye(m)
        w2 = random_psd(rng, m)
        p_t = 10.0
        errs = []
        for eps in (1e-3, 5e-4):
            pair = GramPair(w1, eps * w2)
            exact = solve_full_rank(pair, p_t).covariance
            with warnings.catch_warnings():
                warnings.simplefilter('ignore')
                approx = weak_eavesdropper_approx(pair, p_t).covariance
            errs.append(np.linalg.norm(exact - approx))
        ratios.append(errs[0] / errs[1])
        zero = GramPair(w1, np.zeros((m, m)))
        vals, vecs = np.linalg.eigh(w1)
        wf = (vecs * waterfill(vals, p_t)) @ vecs.conj().T
        with warnings.catch_warnings():
            warnings.simplefilter('ignore')
            wf_err = max(wf_err,
                         np.linalg.norm(solve_full_rank(zero, p_t).covariance
                                        - wf),
                         np.linalg.norm(weak_eavesdropper_approx(zero, p_t)
                                        .covariance - wf))
    ok = all(1.5 <= r <= 2.5 for r in ratios) and wf_err <= 1e-9
    criterion(9, ok, f'ratio range=[{min(ratios):.4f}, {max(ratios):.4f}] '
                     f'water-filling err={wf_err:.1e}')
    assert ok


def _run(tmp_path, name, args):
    out = tmp_path / name
    assert main(args + ['--output', str(out)]) == 0
    return out.read_bytes()


def test_determinism(tmp_path, example_file, criterion):
    rng = np.random.default_rng(11)
    pair = nondegraded_pair(rng, 3)
    other = tmp_path / 'nondegraded.json'
    other.write_text(json.dumps({'W1': encode_matrix(pair.w1),
                                 'W2': encode_matrix(pair.w2)}))
    same = True
    for path in (str(example_file), str(other)):
        oracle = ['oracle', '--input', path, '--snr-db', '3', '--seed', '7']
        sweep = ['sweep', '--input', path, '--sweep=-10:20:2.5']
        runs = [_run(tmp_path, 'o1', oracle),
                _run(tmp_path, 'o2', oracle),
                _run(tmp_path, 'o3', oracle + ['--jobs', '4'])]
        same &= len(set(runs)) == 1
        runs = [_run(tmp_path, 's1', sweep),
                _run(tmp_path, 's2', sweep),
                _run(tmp_path, 's3', sweep + ['--jobs', '4'])]
        same &= len(set(runs)) == 1
    criterion(10, same, 'oracle and sweep outputs byte-identical across runs '
                        'and thread counts' if same else 'outputs differ')
    assert same
