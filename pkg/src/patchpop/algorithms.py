"""Optimizers over the store interface: RLS, (1+1) EA and the (mu+1) GA.

All three run against either store implementation.  Every run owns one
random stream (the store's), consumed in a fixed documented order:

* RLS iteration: one position draw (the flipped bit).
* (1+1) iteration: binomial flip count, then that many position draws.
* (mu+1) iteration: branch draw; crossover branch draws two parent indices,
  Bin(d, 1/2) and Bin(n-d, p_m) counts, then the position draws of the
  simultaneous flip (removals first); mutation branch draws one parent index
  and a Bin(n, p_m) count, then position draws.  Removal tie-breaks draw once
  when more than one member is tied, scanning members before the offspring.

Two engines produce identical trajectories from equal seeds: a plain Python
loop over store methods (``engine="python"``, the readable reference, also
usable with any third-party store object), and compiled whole-run chunks
(``engine="compiled"``, the one the benchmark uses).  After a compiled run
the store remains structurally valid but its node ids are reassigned.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import _loops
from .naive import NaiveStore
from .tree import M_TPS, M_VHI, PatchTree, tree_add_random

_CHUNK = 4096


@dataclass(frozen=True)
class Budget:
    """Stop after this many fitness evaluations (the initial ones count)."""

    max_evaluations: int

    def __post_init__(self):
        if self.max_evaluations < 1:
            raise ValueError("budget must be at least 1 evaluation")


@dataclass(frozen=True)
class TargetFitness:
    """Stop once any evaluated individual reaches this fitness value."""

    value: object


@dataclass
class Checkpoint:
    evaluations: int
    op_seconds: float  # mean seconds per evaluation since the last checkpoint
    tps_mean: float  # total patch size over the interval: mean, min, max
    tps_min: int
    tps_max: int


@dataclass
class RunTrace:
    evaluations: int
    best_fitness: object
    best_key: int
    hit_target: bool
    checkpoints: list = field(default_factory=list)


def uniform_crossover_spec(p_m: float):
    """Uniform crossover fused with standard bit mutation.

    Returns f(d, n, rng) -> (keep_d, add_s) sampling the number of differing
    bits to keep flipped from Bin(d, 1/2) and the number of same bits to flip
    from Bin(n - d, p_m).
    """
    if not 0.0 <= p_m <= 1.0:
        raise ValueError(f"mutation rate must be in [0, 1], got {p_m}")

    def f(d, n, rng):
        return rng.binomial(d, 0.5), rng.binomial(n - d, p_m)

    return f


def _target_key(store, stop):
    if isinstance(stop, TargetFitness):
        return store.evaluator.key(stop.value), True
    return 0, False


def _budget_left(stop, evals):
    if isinstance(stop, Budget):
        return stop.max_evaluations - evals
    return None


def _check_fresh(store):
    if len(store) != 1:
        raise ValueError("runs must start from a fresh store with one individual")


def _trace(store, x, evals, hit):
    return RunTrace(
        evaluations=evals,
        best_fitness=store.fitness(x),
        best_key=store.fitness_key(x),
        hit_target=hit,
    )


# ---------------------------------------------------------------------------
# python engine (reference; works with any object implementing the interface)


def _python_one_parent(store, stop, draw_ell):
    evals = 1
    tkey, use_target = _target_key(store, stop)
    parent = store.node_ids()[0]
    hit = use_target and store.fitness_key(parent) >= tkey
    while not hit:
        left = _budget_left(stop, evals)
        if left is not None and left <= 0:
            break
        off = store.mutate(parent, draw_ell(store))
        evals += 1
        if store.fitness_key(off) >= store.fitness_key(parent):
            store.discard(parent)
            parent = off
        else:
            store.discard(off)
        hit = use_target and store.fitness_key(parent) >= tkey
    return _trace(store, parent, evals, hit)


def _python_mu_plus_one(store, mu, p_m, p_c, stop):
    n = store.n
    rng = store.rng
    spec = uniform_crossover_spec(p_m)
    tkey, use_target = _target_key(store, stop)
    members = [store.node_ids()[0]]
    evals = 1
    hit = use_target and store.fitness_key(members[0]) >= tkey
    while len(members) < mu and not hit:
        left = _budget_left(stop, evals)
        if left is not None and left <= 0:
            break
        members.append(store.add_random())
        evals += 1
        hit = use_target and store.fitness_key(members[-1]) >= tkey
    while not hit and len(members) == mu:
        left = _budget_left(stop, evals)
        if left is not None and left <= 0:
            break
        c = rng.unit()
        if c < p_c:
            x1 = members[rng.below(mu)]
            x2 = members[rng.below(mu)]
            off = store.crossover(x1, x2, spec)
        else:
            x = members[rng.below(mu)]
            off = store.mutate(x, rng.binomial(n, p_m))
        evals += 1
        if use_target and store.fitness_key(off) >= tkey:
            members.append(off)
            hit = True
            break
        candidates = members + [off]
        keys = [store.fitness_key(i) for i in candidates]
        worst = min(keys)
        tied = [i for i, k in enumerate(keys) if k == worst]
        pick = tied[rng.below(len(tied))] if len(tied) > 1 else tied[0]
        victim = candidates[pick]
        store.discard(victim)
        if victim != off:
            members[pick] = off
    best = max(members, key=store.fitness_key)
    return _trace(store, best, evals, hit)


# ---------------------------------------------------------------------------
# compiled engine


def _resync_tree(store: PatchTree):
    """Reassign node ids to the slots left stored by a compiled run."""
    st = store._st
    store._slot_of = {}
    store._id_of = {}
    for slot in range(int(st.m[M_VHI])):
        if st.vused[slot]:
            nid = store._next_id
            store._next_id += 1
            store._slot_of[nid] = slot
            store._id_of[slot] = nid


def _resync_naive(store: NaiveStore, ns, slots):
    for nid in store._bits:
        store._alive[nid] = False
    store._bits = {}
    for slot in slots:
        nid = store._next_id
        store._next_id += 1
        store._bits[nid] = ns.bits[slot].copy()
        store._raw[nid] = (int(ns.f0[slot]), int(ns.f1[slot]))
        store._alive[nid] = True


def _naive_run_state(store: NaiveStore, slots):
    ev = store.evaluator
    ns = _loops.new_naive_run_state(store.n, ev.ptag, ev.capacity, ev.weights,
                                    ev.values, slots)
    first = store.node_ids()[0]
    ns.bits[0][:] = store._bits[first]
    f0, f1 = store._raw[first]
    _loops._nset(ns.m, ns.key, ns.f0, ns.f1, 0, f0, f1)
    return ns


def _compiled_one_parent(store, stop, p, is_rls):
    tkey, use_target = _target_key(store, stop)
    evals = 1
    algst = np.zeros(2, dtype=np.int64)
    hit = False
    use_p = not is_rls
    if isinstance(store, PatchTree):
        st = store._st
        algst[0] = store._slot_of[store.node_ids()[0]]
        if use_target and st.vkey[algst[0]] >= tkey:
            hit = True
        while not hit:
            left = _budget_left(stop, evals)
            chunk = _CHUNK if left is None else min(_CHUNK, left)
            if chunk <= 0:
                break
            st, done, hit = _loops.one_parent_tree_chunk(
                st, store.rng.state, algst, chunk, tkey, use_target, p, use_p)
            store._st = st
            evals += int(done)
        _resync_tree(store)
        best = store._id_of[int(algst[0])]
        return _trace(store, best, evals, bool(hit))
    ns = _naive_run_state(store, 2)
    if use_target and ns.key[0] >= tkey:
        hit = True
    while not hit:
        left = _budget_left(stop, evals)
        chunk = _CHUNK if left is None else min(_CHUNK, left)
        if chunk <= 0:
            break
        done, hit = _loops.one_parent_naive_chunk(
            ns, store.rng.state, algst, chunk, tkey, use_target, p, use_p)
        evals += int(done)
    _resync_naive(store, ns, [int(algst[0])])
    best = store.node_ids()[-1]
    return _trace(store, best, evals, bool(hit))


def _compiled_mu_plus_one(store, mu, p_m, p_c, stop, stride=None, clock=None):
    tree = isinstance(store, PatchTree)
    collecting = stride is not None
    if collecting and not tree:
        raise ValueError("trace collection is only supported on the tree store")
    tkey, use_target = _target_key(store, stop)
    clock = clock or time.perf_counter
    members = np.zeros(mu, dtype=np.int64)
    checkpoints = []
    stats = np.zeros(3, dtype=np.int64)

    def reset_stats():
        stats[0] = 0
        stats[1] = np.iinfo(np.int64).max
        stats[2] = 0

    def note_tps():
        tps = int(store._st.m[M_TPS])
        stats[0] += tps
        stats[1] = min(stats[1], tps)
        stats[2] = max(stats[2], tps)

    reset_stats()
    t_mark = clock()
    last_cp = 0
    evals = 1
    hit = False
    algst = np.zeros(4, dtype=np.int64)

    if tree:
        st = store._st
        members[0] = store._slot_of[store.node_ids()[0]]
        if collecting:
            note_tps()
    else:
        ns = _naive_run_state(store, mu + 1)
        algst[0] = mu

    def key_of(slot):
        return int(st.vkey[int(slot)]) if tree else int(ns.key[int(slot)])

    if use_target and key_of(members[0]) >= tkey:
        hit = True

    # initial population: members[1:] by mutation chains, budget permitting
    filled = 1
    if not hit and mu > 1:
        left = _budget_left(stop, evals)
        allowed = mu - 1 if left is None else max(0, min(mu - 1, left))
        if allowed:
            if tree:
                if collecting:
                    # one call per member so the patch-size stats see each step
                    for i in range(1, allowed + 1):
                        st, z, _n = tree_add_random(st, store.rng.state)
                        store._st = st
                        members[i] = z
                        note_tps()
                else:
                    st = _loops.mpo_tree_init(st, store.rng.state,
                                              members[: allowed + 1])
                    store._st = st
            else:
                _loops.mpo_naive_init(ns, store.rng.state, members[: allowed + 1])
            filled += allowed
            evals += allowed
            if use_target:
                for i in range(filled):
                    if key_of(members[i]) >= tkey:
                        hit = True

    def run_chunk(chunk):
        nonlocal st
        if tree:
            st, done, h = _loops.mpo_tree_chunk(
                st, store.rng.state, algst, members, p_m, p_c, chunk, tkey,
                use_target, stats)
            store._st = st
        else:
            done, h = _loops.mpo_naive_chunk(
                ns, store.rng.state, members, algst, p_m, p_c, chunk, tkey,
                use_target)
        return int(done), h

    def record():
        nonlocal t_mark, last_cp
        now = clock()
        interval = evals - last_cp
        if interval > 0:
            checkpoints.append(Checkpoint(
                evaluations=evals,
                op_seconds=(now - t_mark) / interval,
                tps_mean=stats[0] / interval,
                tps_min=int(stats[1]),
                tps_max=int(stats[2]),
            ))
        t_mark = now
        last_cp = evals
        reset_stats()

    if collecting and evals - last_cp >= stride:
        record()

    while not hit and filled == mu:
        left = _budget_left(stop, evals)
        chunk = (last_cp + stride - evals) if collecting else _CHUNK
        if left is not None:
            chunk = min(chunk, left)
        if chunk <= 0:
            break
        done, hit = run_chunk(chunk)
        evals += done
        if collecting:
            exhausted = (_budget_left(stop, evals) or 1) <= 0
            if evals == last_cp + stride or hit or exhausted:
                record()

    if tree:
        _resync_tree(store)
        slot_best = max(members[:filled], key=key_of)
        best = store._id_of[int(slot_best)]
    else:
        _resync_naive(store, ns, [int(s) for s in sorted(members[:filled])])
        best = max(store.node_ids(), key=store.fitness_key)
    trace = _trace(store, best, evals, bool(hit))
    trace.checkpoints = checkpoints
    return trace


# ---------------------------------------------------------------------------
# public entry points


def _pick_engine(store, engine):
    if engine == "auto":
        return "compiled" if isinstance(store, (PatchTree, NaiveStore)) else "python"
    return engine


def run_rls(store, stop, engine: str = "auto") -> RunTrace:
    """Randomized local search: flip one random bit, keep the offspring on >=."""
    _check_fresh(store)
    if _pick_engine(store, engine) == "python":
        return _python_one_parent(store, stop, lambda s: 1)
    return _compiled_one_parent(store, stop, 0.0, True)


def run_one_plus_one(store, p: float, stop, engine: str = "auto") -> RunTrace:
    """(1+1) EA: flip Bin(n, p) random bits, keep the offspring on >=."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mutation rate must be in [0, 1], got {p}")
    _check_fresh(store)
    if _pick_engine(store, engine) == "python":
        return _python_one_parent(store, stop, lambda s: s.rng.binomial(s.n, p))
    return _compiled_one_parent(store, stop, p, False)


def run_mu_plus_one(store, mu: int, p_m: float, p_c: float, stop,
                    engine: str = "auto", stride: int | None = None,
                    clock=None) -> RunTrace:
    """Steady-state (mu+1) GA with uniform crossover fused with mutation.

    With probability p_c the offspring is a crossover of two uniformly chosen
    parents followed by mutation (one store operation, one evaluation);
    otherwise one parent is mutated.  The minimum-fitness member of the
    (mu+1)-set is then removed, ties broken uniformly.  ``stride`` enables
    per-checkpoint trace records (compiled engine only).
    """
    if mu < 1:
        raise ValueError(f"mu must be positive, got {mu}")
    if not 0.0 <= p_c <= 1.0:
        raise ValueError(f"crossover probability must be in [0, 1], got {p_c}")
    _check_fresh(store)
    if _pick_engine(store, engine) == "python":
        if stride is not None:
            raise ValueError("trace collection requires the compiled engine")
        return _python_mu_plus_one(store, mu, p_m, p_c, stop)
    return _compiled_mu_plus_one(store, mu, p_m, p_c, stop, stride=stride,
                                 clock=clock)


ALGORITHMS = {
    "rls": lambda store, stop, engine="auto": run_rls(store, stop, engine),
    "opo": lambda store, stop, engine="auto": run_one_plus_one(
        store, 1.0 / store.n, stop, engine),
    "mpo2": lambda store, stop, engine="auto": run_mu_plus_one(
        store, 2, 1.2 / store.n, 0.9, stop, engine),
    "mpo10": lambda store, stop, engine="auto": run_mu_plus_one(
        store, 10, 1.4 / store.n, 0.9, stop, engine),
}
