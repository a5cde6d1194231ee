"""Benchmark command line.

Example::

    patchpop-bench --experiment onemax-scaling --algorithms rls,opo \\
        --stores mst,naive --k-min 5 --k-max 13 --seed 1 \\
        --windows 10 --window-secs 1.0 --out scaling.csv

Writes one CSV per invocation (header row always present) and prints one
progress line per cell.  Exit status is 0 on success and nonzero with a
diagnostic on invalid configuration.
"""

import argparse
import sys

from . import bench


def _parse_list(text, allowed, what):
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError(f"no {what} given")
    for t in items:
        if t not in allowed:
            raise ValueError(f"unknown {what} {t!r} (choose from {', '.join(allowed)})")
    return items


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="patchpop-bench",
        description="timing and diversity experiments for the patch-based population store",
    )
    p.add_argument("--experiment", required=True,
                   choices=["onemax-scaling", "knapsack-budget", "knapsack-trace"])
    p.add_argument("--algorithms", default="rls,opo,mpo2,mpo10",
                   help="comma list of rls,opo,mpo2,mpo10 (scaling/budget experiments)")
    p.add_argument("--stores", default="mst,naive",
                   help="comma list of mst,naive (scaling/budget experiments)")
    p.add_argument("--k-min", type=int, default=5, help="smallest k for n=2**k")
    p.add_argument("--k-max", type=int, default=13, help="largest k for n=2**k")
    p.add_argument("--budget", type=int, default=None,
                   help="evaluation budget (default 25000 for knapsack-budget, "
                        "100000 for knapsack-trace)")
    p.add_argument("--stride", type=int, default=10,
                   help="checkpoint stride for knapsack-trace")
    p.add_argument("--seed", type=int, default=1, help="master seed")
    p.add_argument("--windows", type=int, default=10, help="measured windows per cell")
    p.add_argument("--window-secs", type=float, default=1.0,
                   help="length of one timing window in seconds")
    p.add_argument("--out", required=True, help="CSV output path")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if not 5 <= args.k_min <= args.k_max <= 24:
            raise ValueError("k range must satisfy 5 <= k-min <= k-max <= 24")
        if args.windows < 1:
            raise ValueError("need at least one window")
        if args.window_secs <= 0:
            raise ValueError("window length must be positive")
        ks = list(range(args.k_min, args.k_max + 1))
        progress = lambda msg: print(msg, flush=True)  # noqa: E731

        if args.experiment == "onemax-scaling":
            algorithms = _parse_list(args.algorithms, bench.ALGORITHM_NAMES, "algorithm")
            stores = _parse_list(args.stores, tuple(bench.STORES), "store")
            rows = bench.experiment_onemax_scaling(
                algorithms, stores, ks, args.seed, args.windows,
                args.window_secs, progress=progress)
            bench.write_csv(args.out, bench.SCALING_HEADER, rows)
        elif args.experiment == "knapsack-budget":
            algorithms = _parse_list(args.algorithms, bench.ALGORITHM_NAMES, "algorithm")
            stores = _parse_list(args.stores, tuple(bench.STORES), "store")
            budget = 25000 if args.budget is None else args.budget
            rows = bench.experiment_knapsack_budget(
                algorithms, stores, ks, args.seed, args.windows,
                args.window_secs, budget=budget, progress=progress)
            bench.write_csv(args.out, bench.SCALING_HEADER, rows)
        else:
            budget = 100_000 if args.budget is None else args.budget
            rows, corr = bench.experiment_knapsack_trace(
                args.seed, budget=budget, stride=args.stride, progress=progress)
            bench.write_csv(args.out, bench.TRACE_HEADER, rows)
            print(f"pearson_correlation={corr:.6f}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
