"""Benchmark harnesses: solver statistics and banded log-det timing.

Per-trial seeds derive deterministically from the master seed, so runs
are reproducible no matter how the trial pool is sized (the
SPARSE_SDP_THREADS environment variable caps the worker processes).
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from statistics import mean, median

import numpy as np

from .completion import PartialSymMatrix, banded_pattern, logdet_completion_banded
from .maxcut import initial_point, maxcut_sdp, random_graph
from .solver import SolverConfig, solve


def trial_seed(master, index):
    """Stable per-trial seed derived from the master seed."""
    return int(np.random.SeedSequence(entropy=[int(master), int(index)])
               .generate_state(1)[0])


def worker_count():
    raw = os.environ.get("SPARSE_SDP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_solver_trial(args):
    """One random MAX-CUT solve; returns its timing and iteration stats."""
    n, m, seed, direction_mode, gamma, gap_tol = args
    graph = random_graph(n, m, seed)
    problem = maxcut_sdp(graph)
    x0, y0 = initial_point(problem)
    cfg = SolverConfig(gamma=gamma, gap_tol=gap_tol, direction_mode=direction_mode)
    t0 = time.perf_counter()
    report = solve(problem, x0, y0, cfg)
    elapsed = time.perf_counter() - t0
    summary = report.summary()
    return {
        "time": elapsed,
        "iterations": report.iterations,
        "cg_primal": summary["mean_cg_primal"],
        "cg_dual": summary["mean_cg_dual"],
        "descent_steps": summary["mean_descent_steps"],
    }


def _run_trials(jobs):
    workers = worker_count()
    if workers == 1:
        return [run_solver_trial(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_solver_trial, jobs))


def parse_sizes(text):
    """'5:7,10:16' -> [(5, 7), (10, 16)]."""
    pairs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        n_str, m_str = chunk.split(":")
        pairs.append((int(n_str), int(m_str)))
    if not pairs:
        raise ValueError("no sizes given")
    return pairs


def run_table_of_iterations(sizes, trials, seed, gamma=None, gap_tol=1e-3):
    """Mean solve statistics per (n, m) size with the four-direction solver."""
    rows = []
    for n, m in sizes:
        jobs = [(n, m, trial_seed(seed, 1_000_000 * n + 1_000 * m + t), "four",
                 gamma, gap_tol) for t in range(trials)]
        stats = _run_trials(jobs)
        rows.append({
            "n": n,
            "m": m,
            "trials": trials,
            "mean_time": mean(s["time"] for s in stats),
            "median_time": median(s["time"] for s in stats),
            "mean_main_iters": mean(s["iterations"] for s in stats),
            "mean_cg_dx1": mean(s["cg_primal"] for s in stats),
            "mean_cg_ds2": mean(s["cg_dual"] for s in stats),
            "mean_pot_min": mean(s["descent_steps"] for s in stats),
        })
    return rows


def run_direction_comparison(sizes, trials, seed, gamma=None, gap_tol=1e-3):
    """Four- vs two-direction solves on identical instances."""
    rows = []
    for n, m in sizes:
        seeds = [trial_seed(seed, 1_000_000 * n + 1_000 * m + t)
                 for t in range(trials)]
        for mode in ("four", "two"):
            jobs = [(n, m, s, mode, gamma, gap_tol) for s in seeds]
            stats = _run_trials(jobs)
            rows.append({
                "mode": mode,
                "n": n,
                "m": m,
                "trials": trials,
                "mean_time": mean(s["time"] for s in stats),
                "median_time": median(s["time"] for s in stats),
                "mean_iters": mean(s["iterations"] for s in stats),
            })
    return rows


def random_banded_partial(n, bandwidth, seed):
    """Random PD partial matrix on the full band of the given bandwidth.

    Built as the band of G G^T for a banded lower-triangular G with unit
    diagonal, so every clique block is positive definite.
    """
    rng = np.random.default_rng(seed)
    p = min(bandwidth, n - 1)
    # gband[i, k] holds G[i, i-k] for offsets k = 0..p
    gband = rng.standard_normal((n, p + 1)) * 0.5
    gband[:, 0] = 1.0
    for k in range(1, p + 1):
        gband[:k, k] = 0.0
    pat = banded_pattern(n, bandwidth)
    diag = np.zeros(n)
    off = np.zeros(pat.nnz)
    # M[i, i-d] = sum_{k>=d} G[i, i-k] G[i-d, (i-d)-(k-d)]
    for d in range(p + 1):
        acc = np.zeros(n - d)
        for k in range(d, p + 1):
            acc += gband[d:, k] * gband[: n - d, k - d]
        if d == 0:
            diag[:] = acc
        else:
            for t, i in enumerate(range(d, n)):
                off[pat.edge_index(i, i - d)] = acc[t]
    return PartialSymMatrix(pat, diag, off)


def time_banded_sweep(cases, reps, blocks=5, min_block_seconds=0.01):
    """Interleaved block timing for a family of (n, bandwidth, seed) cases.

    Each timing block averages enough calls to fill ``min_block_seconds``
    (at least reps/blocks of them); the blocks of all cases interleave so
    machine-speed drift hits every case alike.  Returns one list of block
    averages per case; the per-case minimum is the cleanest estimate.
    """
    prepared = []
    counts = []
    reps = int(reps)
    blocks = max(1, min(int(blocks), reps))
    for n, bandwidth, seed in cases:
        xbar = random_banded_partial(n, bandwidth, seed)
        t0 = time.perf_counter()
        logdet_completion_banded(xbar, bandwidth)  # warm path once
        probe = max(time.perf_counter() - t0, 1e-9)
        prepared.append((xbar, bandwidth))
        counts.append(max(max(1, reps // blocks),
                          math.ceil(min_block_seconds / probe)))
    samples = [[] for _ in prepared]
    for _ in range(blocks):
        for idx, (xbar, bandwidth) in enumerate(prepared):
            t0 = time.perf_counter()
            for _ in range(counts[idx]):
                logdet_completion_banded(xbar, bandwidth)
            samples[idx].append((time.perf_counter() - t0) / counts[idx])
    return samples


def time_banded_logdet(n, bandwidth, reps, seed, blocks=3, min_block_seconds=0.02):
    """Block-average call times for one banded instance."""
    return time_banded_sweep([(n, bandwidth, seed)], reps, blocks=blocks,
                             min_block_seconds=min_block_seconds)[0]


def _stats(times):
    return {
        "mean_time": mean(times) if times else float("nan"),
        "median_time": median(times) if times else float("nan"),
        "min_time": min(times) if times else float("nan"),
    }


def run_banded_fixed_bandwidth(bandwidth, n_values, reps, seed):
    if not reps:
        return []
    cases = [(n, bandwidth, trial_seed(seed, n)) for n in n_values]
    samples = time_banded_sweep(cases, reps)
    return [{"n": n, "bandwidth": bandwidth, "reps": reps, **_stats(times)}
            for n, times in zip(n_values, samples)]


def run_banded_fixed_diff(diff, p_values, reps, seed):
    if not reps:
        return []
    cases = [(p + diff, p, trial_seed(seed, p)) for p in p_values]
    samples = time_banded_sweep(cases, reps)
    return [{"bandwidth": p, "bandwidth_sq": p * p, "n": p + diff, "reps": reps,
             **_stats(times)}
            for p, times in zip(p_values, samples)]
