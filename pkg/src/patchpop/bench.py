"""Benchmark harness: warm timed windows, the three experiments, CSV output.

Per-evaluation cost is measured by running the optimizer repeatedly inside a
fixed-length window of wall-clock time (one run may exceed the window; it
then is the window) and dividing elapsed monotonic time by the evaluations
performed.  Unmeasured warmup windows run first until two consecutive window
means differ by less than 10% (capped), which absorbs JIT compilation and
cache warming; the measured windows' mean and standard deviation are
reported together with the window count, never a bare point estimate.

Every cell (algorithm, store, problem size) draws its seeds from the master
seed and the cell coordinates, so structural results are reproducible while
timings float.  Cells run sequentially on one thread to keep timings honest.
"""

import csv
import math
import time
from dataclasses import dataclass

from .algorithms import ALGORITHMS, Budget, TargetFitness, run_mu_plus_one
from .fitness import KnapsackEvaluator, OneMaxEvaluator, generate_instance
from .naive import NaiveStore
from .rng import Rng, derive_seed
from .tree import PatchTree

STORES = {"mst": PatchTree, "naive": NaiveStore}
ALGORITHM_NAMES = ("rls", "opo", "mpo2", "mpo10")

# fixed tags for seed derivation, so every consumer gets an independent stream
_TAG_INSTANCE = 101
_TAG_RUN = 202
_TAG_TRACE = 303


@dataclass
class TimingRecord:
    window_values: list  # seconds per evaluation, one per measured window
    mean_s: float
    std_s: float
    windows: int


def timed_windows(run_factory, window_secs: float, windows: int, *,
                  warmup_tol: float = 0.10, max_warmup: int = 10,
                  clock=time.perf_counter) -> TimingRecord:
    """Measure seconds per evaluation over warm fixed-length windows.

    ``run_factory()`` must perform one complete optimizer run and return the
    number of fitness evaluations it used.  Runs repeat until the window is
    full; a single long run counts as its own (longer) window.
    """
    if windows < 1:
        raise ValueError("need at least one measured window")
    if window_secs <= 0:
        raise ValueError("window length must be positive")

    def one_window():
        t0 = clock()
        evals = 0
        while True:
            evals += run_factory()
            elapsed = clock() - t0
            if elapsed >= window_secs:
                break
        if evals <= 0:
            raise ValueError("window finished with zero evaluations")
        return elapsed / evals

    prev = one_window()
    used = 1
    while used < max_warmup:
        cur = one_window()
        used += 1
        if abs(cur - prev) < warmup_tol * prev:
            break
        prev = cur

    values = [one_window() for _ in range(windows)]
    mean = sum(values) / windows
    if windows >= 2:
        var = sum((v - mean) ** 2 for v in values) / (windows - 1)
        std = math.sqrt(var)
    else:
        std = 0.0
    return TimingRecord(values, mean, std, windows)


def pearson(xs, ys) -> float:
    """Sample Pearson correlation coefficient."""
    n = len(xs)
    if n != len(ys):
        raise ValueError("sequences must have equal length")
    if n < 2:
        raise ValueError("need at least two points")
    mx = sum(xs) / n
    my = sum(ys) / n
    sxy = sxx = syy = 0.0
    for x, y in zip(xs, ys):
        dx = x - mx
        dy = y - my
        sxy += dx * dy
        sxx += dx * dx
        syy += dy * dy
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("correlation undefined: a sequence has zero variance")
    return sxy / math.sqrt(sxx * syy)


# ---------------------------------------------------------------------------
# experiments

SCALING_HEADER = ["algorithm", "store", "n", "mean_s", "std_s", "windows", "seed"]
TRACE_HEADER = ["evals", "avg_op_time_s", "total_patch_size", "min_patch", "max_patch"]


def _cell_runner(alg_name, store_name, n, evaluator_for, stop_for, cell_seed):
    store_cls = STORES[store_name]
    counter = [0]

    def run():
        run_seed = derive_seed(cell_seed, _TAG_RUN, counter[0])
        counter[0] += 1
        store = store_cls(n, evaluator_for(), Rng(run_seed))
        trace = ALGORITHMS[alg_name](store, stop_for(), engine="compiled")
        return trace.evaluations

    return run


def _scaling_cells(algorithms, stores, ks):
    for alg in algorithms:
        if alg not in ALGORITHM_NAMES:
            raise ValueError(f"unknown algorithm {alg!r}")
    for s in stores:
        if s not in STORES:
            raise ValueError(f"unknown store {s!r}")
    for alg in algorithms:
        for s in stores:
            for k in ks:
                yield alg, s, k


def experiment_onemax_scaling(algorithms, stores, ks, seed, windows,
                              window_secs, progress=None):
    """Fixed-target runs to the OneMax optimum at n = 2**k; one row per cell."""
    rows = []
    for alg, store_name, k in _scaling_cells(algorithms, stores, ks):
        n = 2 ** k
        cell_seed = derive_seed(seed, hash_name(alg), hash_name(store_name), k)
        run = _cell_runner(
            alg, store_name, n,
            lambda n=n: OneMaxEvaluator(n),
            lambda n=n: TargetFitness(n),
            cell_seed,
        )
        rec = timed_windows(run, window_secs, windows)
        rows.append([alg, store_name, n, f"{rec.mean_s:.6e}", f"{rec.std_s:.6e}",
                     rec.windows, seed])
        if progress:
            progress(f"onemax-scaling {alg}/{store_name} n={n}: "
                     f"{rec.mean_s:.3e} s/eval (std {rec.std_s:.1e})")
    return rows


def experiment_knapsack_budget(algorithms, stores, ks, seed, windows,
                               window_secs, budget=25000, progress=None):
    """Fixed-budget knapsack runs on one generated instance per problem size."""
    if budget < 1:
        raise ValueError("budget must be positive")
    instances = {}
    rows = []
    for alg, store_name, k in _scaling_cells(algorithms, stores, ks):
        n = 2 ** k
        if k not in instances:
            instances[k] = generate_instance(n, Rng(derive_seed(seed, _TAG_INSTANCE, k)))
        inst = instances[k]
        cell_seed = derive_seed(seed, hash_name(alg), hash_name(store_name), k)
        run = _cell_runner(
            alg, store_name, n,
            lambda inst=inst: KnapsackEvaluator(inst),
            lambda: Budget(budget),
            cell_seed,
        )
        rec = timed_windows(run, window_secs, windows)
        rows.append([alg, store_name, n, f"{rec.mean_s:.6e}", f"{rec.std_s:.6e}",
                     rec.windows, seed])
        if progress:
            progress(f"knapsack-budget {alg}/{store_name} n={n}: "
                     f"{rec.mean_s:.3e} s/eval (std {rec.std_s:.1e})")
    return rows


def experiment_knapsack_trace(seed, n=10_000, budget=100_000, stride=10,
                              progress=None):
    """One (10+1) GA run on the tree store with per-stride trace records.

    Returns (rows, correlation): rows follow TRACE_HEADER, and the
    correlation is the Pearson coefficient between the per-checkpoint mean
    total patch size and the mean operation time.
    """
    if stride < 1:
        raise ValueError("stride must be positive")
    if budget < stride:
        raise ValueError("budget must cover at least one checkpoint stride")
    inst = generate_instance(n, Rng(derive_seed(seed, _TAG_INSTANCE, 0)))
    store = PatchTree(n, KnapsackEvaluator(inst), Rng(derive_seed(seed, _TAG_TRACE)))
    trace = run_mu_plus_one(store, 10, 1.4 / n, 0.9, Budget(budget),
                            engine="compiled", stride=stride)
    rows = []
    for cp in trace.checkpoints:
        rows.append([cp.evaluations, f"{cp.op_seconds:.6e}",
                     f"{cp.tps_mean:.4f}", cp.tps_min, cp.tps_max])
    corr = pearson([cp.tps_mean for cp in trace.checkpoints],
                   [cp.op_seconds for cp in trace.checkpoints])
    if progress:
        progress(f"knapsack-trace n={n} budget={budget}: "
                 f"{len(rows)} checkpoints, patch-size/op-time correlation {corr:.4f}")
    return rows, corr


def hash_name(name: str) -> int:
    """Stable small integer for a cell-coordinate string (seed derivation)."""
    h = 0
    for ch in name:
        h = (h * 31 + ord(ch)) & 0xFFFFFFFF
    return h


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
