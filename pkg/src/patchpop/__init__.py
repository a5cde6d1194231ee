"""Patch-based population storage for bit-string genetic algorithms.

The package provides two observationally equivalent population stores — the
spanning-tree-of-patches store (:class:`PatchTree`) with incremental fitness
evaluation, and a straightforward baseline (:class:`NaiveStore`) — plus the
optimizers and the benchmark harness that compares them.
"""

from ._jit import JIT_ENABLED
from .algorithms import (
    ALGORITHMS,
    Budget,
    RunTrace,
    TargetFitness,
    run_mu_plus_one,
    run_one_plus_one,
    run_rls,
    uniform_crossover_spec,
)
from .fitness import (
    KnapsackEvaluator,
    KnapsackInstance,
    OneMaxEvaluator,
    generate_instance,
    knapsack_compare,
    load_instance,
    save_instance,
)
from .indexset import IndexSet
from .naive import NaiveStore
from .patches import (
    Patch,
    apply_patch,
    bits_from_str,
    bits_to_str,
    difference_patch,
    hamming_distance,
    random_bits,
)
from .rng import Rng, derive_seed
from .tree import PatchTree

__all__ = [
    "ALGORITHMS",
    "Budget",
    "IndexSet",
    "JIT_ENABLED",
    "KnapsackEvaluator",
    "KnapsackInstance",
    "NaiveStore",
    "OneMaxEvaluator",
    "Patch",
    "PatchTree",
    "Rng",
    "RunTrace",
    "TargetFitness",
    "apply_patch",
    "bits_from_str",
    "bits_to_str",
    "derive_seed",
    "difference_patch",
    "generate_instance",
    "hamming_distance",
    "knapsack_compare",
    "load_instance",
    "random_bits",
    "run_mu_plus_one",
    "run_one_plus_one",
    "run_rls",
    "save_instance",
    "uniform_crossover_spec",
]

__version__ = "0.1.0"
