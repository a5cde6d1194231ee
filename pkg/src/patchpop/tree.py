"""Population stored as a minimum spanning tree of patches.

One bit string (the *complete individual*) is materialized at all times; every
other individual exists only as meta-information on a tree vertex (fitness,
alive flag) plus the patches written on the tree edges.  The edge set is kept
a minimum spanning tree of the stored individuals under Hamming distance, so
the total number of stored indices is the minimum needed to keep everything
reachable.  Producing an offspring promotes the complete individual to the
parent (applying the patches along the connecting path), builds the flip set
in a permutation-backed scratch set, evaluates fitness incrementally while
applying the flips, then walks the whole tree once to measure the distance
from the offspring to every stored vertex and splices the new vertex into the
tree with a linear-time spanning-tree repair.

State layout and calling convention
-----------------------------------
All state lives in flat numpy arrays bundled in a ``TreeState`` namedtuple.
Hot code never passes the bundle across a function boundary: the compiled
helpers take the individual arrays they touch (tuple arguments cost two
orders of magnitude more per call than plain arrays under numba's reference
counting).  The convention throughout is bail-and-retry: an operation first
runs a draw-free capacity preflight, then builds its flip set (consuming
random draws exactly once), then runs the scan/repair stage which may report
that the patch pool is too small.  Bail codes are handled by reallocating
through ``grow_dispatch`` (which returns a rebuilt state bundle) and
re-entering; no randomness is ever replayed.

``m`` (int64 metadata) slots: problem data, the anchor slot (the vertex the
complete individual equals), vertex/edge/alive counters, the scratch-set
size, pool fill and live-patch total, allocation high-water marks and
freelist tops, a traversal epoch, and the scan/repair hand-off values.
Discarded vertices stay in the tree until they reach degree 1, then dissolve
recursively; an edge swap during insertion can also strand a dead vertex at
degree 1, which dissolves the same way.
"""

from collections import namedtuple

import numpy as np

from ._jit import kernel
from .fitness import apply_flips_delta, eval_full, fitness_key
from .indexset import iset_add_random_absent, iset_flip_random, iset_merge
from .patches import Patch, _fill_random_bits
from .rng import Rng, sample_binomial_state

# metadata slots
M_N = 0        # universe size
M_PTAG = 1     # problem tag (0 onemax, 1 knapsack)
M_CAP = 2      # knapsack capacity
M_ANCHOR = 3   # slot of the vertex the complete individual equals
M_NV = 4       # stored vertices
M_NE = 5       # stored edges
M_NALIVE = 6   # alive vertices
M_SS = 7       # scratch set size
M_PLEN = 8     # pool fill
M_TPS = 9      # total patch size (live pool ints)
M_VHI = 10     # vertex slot high-water mark
M_EHI = 11     # edge slot high-water mark
M_VFT = 12     # vertex freelist top
M_EFT = 13     # edge freelist top
M_EPOCH = 14   # traversal stamp
M_CNT = 15     # vertices seen by the last scan
M_NA = 16      # attachments chosen by the last repair
M_NEED = 17    # pool ints required by the pending attachment patches
MSIZE = 20

# preflight/prepare bail codes
GROW_VERTS = 1
GROW_EDGES = 2
GROW_ADJ = 3
GROW_POOL = 4

_INF = np.int64(2**63 - 1)
_ZBIT = np.int64(1) << np.int64(31)

TreeState = namedtuple(
    "TreeState",
    [
        "m", "complete", "perm", "inv", "weights", "values",
        # per-vertex
        "vkey", "vf0", "vf1", "valive", "vused", "deg", "adj", "vfree",
        "dist", "pre", "parv", "pare", "mark",
        "ikey", "okey", "cmin1", "cmin2", "carg", "stk", "stki", "rem",
        # per-edge
        "eu", "ev", "eoff", "elen", "efree", "erem",
        # patch pool
        "pool",
    ],
)


def new_state(n, ptag, capacity, weights, values, cap_v=8, cap_d=4, cap_e=8, cap_p=64):
    m = np.zeros(MSIZE, dtype=np.int64)
    m[M_N] = n
    m[M_PTAG] = ptag
    m[M_CAP] = capacity
    m[M_ANCHOR] = -1
    return TreeState(
        m=m,
        complete=np.zeros(n, dtype=np.uint8),
        perm=np.arange(n, dtype=np.int32),
        inv=np.arange(n, dtype=np.int32),
        weights=np.asarray(weights, dtype=np.int64),
        values=np.asarray(values, dtype=np.int64),
        vkey=np.zeros(cap_v, dtype=np.int64),
        vf0=np.zeros(cap_v, dtype=np.int64),
        vf1=np.zeros(cap_v, dtype=np.int64),
        valive=np.zeros(cap_v, dtype=np.uint8),
        vused=np.zeros(cap_v, dtype=np.uint8),
        deg=np.zeros(cap_v, dtype=np.int32),
        adj=np.zeros((cap_v, cap_d), dtype=np.int32),
        vfree=np.zeros(cap_v, dtype=np.int32),
        dist=np.zeros(cap_v, dtype=np.int64),
        pre=np.zeros(cap_v, dtype=np.int32),
        parv=np.zeros(cap_v, dtype=np.int32),
        pare=np.zeros(cap_v, dtype=np.int32),
        mark=np.zeros(cap_v, dtype=np.int64),
        ikey=np.zeros(cap_v, dtype=np.int64),
        okey=np.zeros(cap_v, dtype=np.int64),
        cmin1=np.zeros(cap_v, dtype=np.int64),
        cmin2=np.zeros(cap_v, dtype=np.int64),
        carg=np.zeros(cap_v, dtype=np.int32),
        stk=np.zeros(cap_v, dtype=np.int32),
        stki=np.zeros(cap_v, dtype=np.int32),
        rem=np.zeros(cap_v, dtype=np.int32),
        eu=np.full(cap_e, -1, dtype=np.int32),
        ev=np.zeros(cap_e, dtype=np.int32),
        eoff=np.zeros(cap_e, dtype=np.int64),
        elen=np.zeros(cap_e, dtype=np.int32),
        efree=np.zeros(cap_e, dtype=np.int32),
        erem=np.zeros(cap_e, dtype=np.uint8),
        pool=np.zeros(cap_p, dtype=np.int32),
    )


# ---------------------------------------------------------------------------
# growth (cold path; these are the only functions that pass the whole bundle)


@kernel
def _grow_vertices(st):
    old = st.vkey.shape[0]
    cap = old * 2
    capd = st.adj.shape[1]

    def cp64(a):
        b = np.zeros(cap, dtype=np.int64)
        b[:old] = a
        return b

    def cp32(a):
        b = np.zeros(cap, dtype=np.int32)
        b[:old] = a
        return b

    def cp8(a):
        b = np.zeros(cap, dtype=np.uint8)
        b[:old] = a
        return b

    adj = np.zeros((cap, capd), dtype=np.int32)
    adj[:old, :] = st.adj
    return TreeState(
        st.m, st.complete, st.perm, st.inv, st.weights, st.values,
        cp64(st.vkey), cp64(st.vf0), cp64(st.vf1), cp8(st.valive), cp8(st.vused),
        cp32(st.deg), adj, cp32(st.vfree),
        cp64(st.dist), cp32(st.pre), cp32(st.parv), cp32(st.pare), cp64(st.mark),
        cp64(st.ikey), cp64(st.okey), cp64(st.cmin1), cp64(st.cmin2),
        cp32(st.carg), cp32(st.stk), cp32(st.stki), cp32(st.rem),
        st.eu, st.ev, st.eoff, st.elen, st.efree, st.erem, st.pool,
    )


@kernel
def _grow_edges(st):
    old = st.eu.shape[0]
    cap = old * 2
    eu = np.full(cap, -1, dtype=np.int32)
    eu[:old] = st.eu
    ev = np.zeros(cap, dtype=np.int32)
    ev[:old] = st.ev
    eoff = np.zeros(cap, dtype=np.int64)
    eoff[:old] = st.eoff
    elen = np.zeros(cap, dtype=np.int32)
    elen[:old] = st.elen
    efree = np.zeros(cap, dtype=np.int32)
    efree[:old] = st.efree
    erem = np.zeros(cap, dtype=np.uint8)
    erem[:old] = st.erem
    return TreeState(
        st.m, st.complete, st.perm, st.inv, st.weights, st.values,
        st.vkey, st.vf0, st.vf1, st.valive, st.vused, st.deg, st.adj, st.vfree,
        st.dist, st.pre, st.parv, st.pare, st.mark,
        st.ikey, st.okey, st.cmin1, st.cmin2, st.carg, st.stk, st.stki, st.rem,
        eu, ev, eoff, elen, efree, erem, st.pool,
    )


@kernel
def _grow_adj(st):
    capv = st.adj.shape[0]
    need = st.m[M_NV] + 1
    capd = st.adj.shape[1]
    while capd < need:
        capd *= 2
    adj = np.zeros((capv, capd), dtype=np.int32)
    adj[:, : st.adj.shape[1]] = st.adj
    return TreeState(
        st.m, st.complete, st.perm, st.inv, st.weights, st.values,
        st.vkey, st.vf0, st.vf1, st.valive, st.vused, st.deg, adj, st.vfree,
        st.dist, st.pre, st.parv, st.pare, st.mark,
        st.ikey, st.okey, st.cmin1, st.cmin2, st.carg, st.stk, st.stki, st.rem,
        st.eu, st.ev, st.eoff, st.elen, st.efree, st.erem, st.pool,
    )


@kernel
def _grow_pool(st):
    """Compact live patches into a pool able to hold M_NEED more ints."""
    m = st.m
    need = m[M_NEED]
    live = m[M_TPS]
    cap = st.pool.shape[0]
    while live + need > cap // 2:  # headroom keeps compaction rare
        cap *= 2
    pool = np.zeros(cap, dtype=np.int32)
    fill = np.int64(0)
    for e in range(m[M_EHI]):
        if st.eu[e] >= 0:
            ln = st.elen[e]
            off = st.eoff[e]
            pool[fill : fill + ln] = st.pool[off : off + ln]
            st.eoff[e] = fill
            fill += ln
    m[M_PLEN] = fill
    return TreeState(
        st.m, st.complete, st.perm, st.inv, st.weights, st.values,
        st.vkey, st.vf0, st.vf1, st.valive, st.vused, st.deg, st.adj, st.vfree,
        st.dist, st.pre, st.parv, st.pare, st.mark,
        st.ikey, st.okey, st.cmin1, st.cmin2, st.carg, st.stk, st.stki, st.rem,
        st.eu, st.ev, st.eoff, st.elen, st.efree, st.erem, pool,
    )


@kernel
def grow_dispatch(st, code):
    if code == GROW_VERTS:
        return _grow_vertices(st)
    if code == GROW_EDGES:
        return _grow_edges(st)
    if code == GROW_ADJ:
        return _grow_adj(st)
    return _grow_pool(st)


# ---------------------------------------------------------------------------
# array-level helpers (hot path)


@kernel(inline=True)
def _other_e(eu, ev, e, u):
    a = eu[e]
    if a == u:
        return ev[e]
    return a


@kernel(inline=True)
def _adj_del(adj, deg, u, e):
    d = deg[u]
    for k in range(d):
        if adj[u, k] == e:
            adj[u, k] = adj[u, d - 1]
            deg[u] = d - 1
            return
    raise RuntimeError("edge missing from adjacency list")


@kernel(inline=True)
def _edge_del(m, deg, adj, eu, ev, elen, efree, e):
    _adj_del(adj, deg, eu[e], e)
    _adj_del(adj, deg, ev[e], e)
    m[M_NE] -= 1
    m[M_TPS] -= elen[e]
    eu[e] = -1
    efree[m[M_EFT]] = e
    m[M_EFT] += 1


@kernel(inline=True)
def _edge_add(m, deg, adj, eu, ev, eoff, elen, efree, a, b, off, ln):
    """Link a new edge; capacity is guaranteed by the preflight."""
    if m[M_EFT] > 0:
        m[M_EFT] -= 1
        e = efree[m[M_EFT]]
    else:
        e = np.int32(m[M_EHI])
        m[M_EHI] += 1
    eu[e] = a
    ev[e] = b
    eoff[e] = off
    elen[e] = ln
    adj[a, deg[a]] = e
    deg[a] += 1
    adj[b, deg[b]] = e
    deg[b] += 1
    m[M_NE] += 1
    m[M_TPS] += ln
    return e


@kernel(inline=True)
def _pool_patch_apply(complete, pool, off, ln):
    for k in range(off, off + ln):
        complete[pool[k]] ^= 1


@kernel(inline=True)
def _preflight(m, vkey, adj, eu):
    """Draw-free capacity check covering the worst case of one insertion.

    The new vertex may attach to up to NV components, so up to NV fresh
    edges, one fresh vertex slot, and adjacency rows of NV + 1 entries can be
    needed.  Must run before any randomness is consumed so a grow-and-retry
    replays no draws.
    """
    nv = m[M_NV]
    if m[M_VFT] == 0 and m[M_VHI] >= vkey.shape[0]:
        return GROW_VERTS
    if m[M_EFT] + (eu.shape[0] - m[M_EHI]) < nv:
        return GROW_EDGES
    if adj.shape[1] < nv + 1:
        return GROW_ADJ
    return 0


@kernel(inline=True)
def _path_find(m, deg, adj, parv, pare, mark, stk, stki, eu, ev, src, dst):
    """DFS from src until dst is marked; parv/pare then give the path back."""
    m[M_EPOCH] += 1
    epoch = m[M_EPOCH]
    mark[src] = epoch
    parv[src] = -1
    pare[src] = -1
    if src == dst:
        return
    stk[0] = src
    stki[0] = 0
    depth = 0
    while depth >= 0:
        u = stk[depth]
        k = stki[depth]
        if k < deg[u]:
            stki[depth] += 1
            e = adj[u, k]
            o = _other_e(eu, ev, e, u)
            if mark[o] != epoch:
                mark[o] = epoch
                parv[o] = u
                pare[o] = e
                if o == dst:
                    return
                depth += 1
                stk[depth] = o
                stki[depth] = 0
        else:
            depth -= 1
    raise RuntimeError("target vertex unreachable; tree is disconnected")


@kernel(inline=True)
def _promote_a(m, complete, deg, adj, parv, pare, mark, stk, stki,
               eu, ev, eoff, elen, pool, x):
    """Re-root the complete individual onto vertex x by applying path patches."""
    if m[M_ANCHOR] == x:
        return
    _path_find(m, deg, adj, parv, pare, mark, stk, stki, eu, ev, x, m[M_ANCHOR])
    v = np.int32(m[M_ANCHOR])
    while v != x:
        e = pare[v]
        _pool_patch_apply(complete, pool, eoff[e], np.int64(elen[e]))
        v = parv[v]
    m[M_ANCHOR] = x


@kernel(inline=True)
def _scan_a(m, perm, inv, deg, adj, dist, pre, parv, pare, mark, stk, stki,
            eu, ev, eoff, elen, pool, root):
    """Full-tree DFS from root merging edge patches through the scratch set.

    On entry the scratch set holds the offspring's flip set relative to root;
    dist[v] then records the Hamming distance from the offspring to every
    stored vertex, and pre[] lists vertices in DFS preorder with parv/pare
    parent links.  The scratch set is restored before returning.  Returns the
    vertex count.
    """
    m[M_EPOCH] += 1
    epoch = m[M_EPOCH]
    ss = m[M_SS]
    mark[root] = epoch
    parv[root] = -1
    pare[root] = -1
    dist[root] = ss
    pre[0] = root
    cnt = np.int64(1)
    stk[0] = root
    stki[0] = 0
    depth = 0
    while depth >= 0:
        u = stk[depth]
        k = stki[depth]
        if k < deg[u]:
            stki[depth] += 1
            e = adj[u, k]
            o = _other_e(eu, ev, e, u)
            if mark[o] != epoch:
                off = eoff[e]
                ss = iset_merge(perm, inv, ss, pool[off : off + elen[e]])
                mark[o] = epoch
                parv[o] = u
                pare[o] = e
                dist[o] = ss
                pre[cnt] = o
                cnt += 1
                depth += 1
                stk[depth] = o
                stki[depth] = 0
        else:
            if depth > 0:
                e = pare[u]
                off = eoff[e]
                ss = iset_merge(perm, inv, ss, pool[off : off + elen[e]])
            depth -= 1
    m[M_SS] = ss  # net zero: every merge was undone on backtrack
    return cnt


@kernel(inline=True)
def _diff_a(m, perm, inv, deg, adj, pare, mark, stk, stki,
            eu, ev, eoff, elen, pool, x1, x2):
    """Load the difference between x1 and x2 into the scratch set.

    DFS from x1 merging on descent and unmerging on backtrack stops the
    moment x2 appears: the active merges are then exactly the path patches.
    """
    m[M_SS] = 0
    if x1 == x2:
        return
    m[M_EPOCH] += 1
    epoch = m[M_EPOCH]
    ss = np.int64(0)
    mark[x1] = epoch
    stk[0] = x1
    stki[0] = 0
    depth = 0
    while depth >= 0:
        u = stk[depth]
        k = stki[depth]
        if k < deg[u]:
            stki[depth] += 1
            e = adj[u, k]
            o = _other_e(eu, ev, e, u)
            if mark[o] != epoch:
                off = eoff[e]
                ss = iset_merge(perm, inv, ss, pool[off : off + elen[e]])
                if o == x2:
                    m[M_SS] = ss
                    return
                mark[o] = epoch
                pare[o] = e
                depth += 1
                stk[depth] = o
                stki[depth] = 0
        else:
            if depth > 0:
                e = pare[u]
                off = eoff[e]
                ss = iset_merge(perm, inv, ss, pool[off : off + elen[e]])
            depth -= 1
    raise RuntimeError("target vertex unreachable; tree is disconnected")


@kernel(inline=True)
def _zkey(dist_v, order):
    # weight in the high bits; the set bit ranks new-vertex edges after
    # equal-weight incumbent tree edges; preorder index breaks remaining ties
    return (dist_v << np.int64(32)) | _ZBIT | order


@kernel(inline=True)
def _ekey(w, e):
    return (np.int64(w) << np.int64(32)) | np.int64(e)


@kernel(inline=True)
def _repair_a(m, deg, adj, dist, pre, parv, pare, ikey, okey, cmin1, cmin2,
              carg, stk, eu, ev, elen, erem, pool):
    """Decide the spanning-tree repair for the pending insertion.

    Works over the preorder left by the scan.  Marks the tree edges to drop
    in ``erem``, collects the attachment vertices (one per surviving
    component) in ``stk``, and parks the counts in M_NA/M_NEED.  Linear in
    the vertex count.  Returns GROW_POOL if the pending attachment patches
    do not fit the pool, before anything is modified.
    """
    cnt = m[M_CNT]

    # bottom-up: ikey[u] = cheapest connection to the new vertex available
    # inside u's subtree, where path edges cap the usable candidate
    for i in range(cnt - 1, -1, -1):
        u = pre[i]
        ik = _zkey(dist[u], np.int64(i))
        cm1 = _INF
        cm2 = _INF
        ca = np.int32(-1)
        for k in range(deg[u]):
            e = adj[u, k]
            if e == pare[u]:
                continue
            o = _other_e(eu, ev, e, u)
            cand = ikey[o]
            ek = _ekey(elen[e], e)
            if ek > cand:
                cand = ek
            if cand < cm1:
                cm2 = cm1
                cm1 = cand
                ca = o
            elif cand < cm2:
                cm2 = cand
            if cand < ik:
                ik = cand
        ikey[u] = ik
        cmin1[u] = cm1
        cmin2[u] = cm2
        carg[u] = ca

    # top-down: okey[v] = cheapest connection outside v's subtree; a tree
    # edge leaves the spanning tree iff both sides can reconnect more cheaply
    for i in range(cnt):
        u = pre[i]
        if i == 0:
            up = _INF
        else:
            up = okey[u]
            pk = _ekey(elen[pare[u]], pare[u])
            if pk > up:
                up = pk
        zu = _zkey(dist[u], np.int64(i))
        for k in range(deg[u]):
            e = adj[u, k]
            if e == pare[u] and i > 0:
                continue
            o = _other_e(eu, ev, e, u)
            sib = cmin1[u] if carg[u] != o else cmin2[u]
            ok = zu
            if sib < ok:
                ok = sib
            if up < ok:
                ok = up
            okey[o] = ok
            bound = ikey[o]
            if ok > bound:
                bound = ok
            if _ekey(elen[e], e) > bound:
                erem[e] = 1

    # bottom-up over the kept-edge forest: each component attaches through
    # its cheapest member (ikey/carg reused as the component accumulators)
    na = np.int64(0)
    need = np.int64(0)
    for i in range(cnt - 1, -1, -1):
        u = pre[i]
        ck = _zkey(dist[u], np.int64(i))
        cv = u
        for k in range(deg[u]):
            e = adj[u, k]
            if e == pare[u]:
                continue
            if erem[e] == 1:
                continue
            o = _other_e(eu, ev, e, u)
            if ikey[o] < ck:
                ck = ikey[o]
                cv = carg[o]
        ikey[u] = ck
        carg[u] = cv
        if i == 0 or erem[pare[u]] == 1:
            stk[na] = cv
            na += 1
            need += dist[cv]

    m[M_NA] = na
    m[M_NEED] = need
    if m[M_PLEN] + need > pool.shape[0]:
        # undo the removal marks; the retry recomputes them after the pool
        # has been rebuilt (offsets change, decisions do not)
        for i in range(1, cnt):
            erem[pare[pre[i]]] = 0
        return GROW_POOL
    return 0


@kernel(inline=True)
def _prep_ready(m, perm, inv, deg, adj, dist, pre, parv, pare, mark,
                ikey, okey, cmin1, cmin2, carg, stk, stki,
                eu, ev, eoff, elen, erem, pool):
    """Scan + repair once the scratch set holds the operator flip set."""
    root = m[M_ANCHOR]
    m[M_CNT] = _scan_a(m, perm, inv, deg, adj, dist, pre, parv, pare, mark,
                       stk, stki, eu, ev, eoff, elen, pool, root)
    return _repair_a(m, deg, adj, dist, pre, parv, pare, ikey, okey, cmin1,
                     cmin2, carg, stk, eu, ev, elen, erem, pool)


@kernel(inline=True)
def _exec_a(m, complete, perm, inv, weights, values,
            vkey, vf0, vf1, valive, vused, deg, adj, vfree,
            dist, pre, parv, pare, okey, cmin2, stk, rem,
            eu, ev, eoff, elen, efree, erem, pool, parent):
    """Apply the pending insertion: flip bits, evaluate incrementally, build
    the attachment patches, swap edges, dissolve stranded dead leaves.

    Capacity was guaranteed by the preflight and the pool check; nothing in
    here can fail or consume randomness.  Returns (new slot, removed count).
    """
    cnt = m[M_CNT]
    na = m[M_NA]

    f0, f1 = apply_flips_delta(complete, perm, m[M_SS], m[M_PTAG],
                               weights, values, vf0[parent], vf1[parent])

    if m[M_VFT] > 0:
        m[M_VFT] -= 1
        z = np.int64(vfree[m[M_VFT]])
    else:
        z = m[M_VHI]
        m[M_VHI] += 1
    vused[z] = 1
    deg[z] = 0
    valive[z] = 1
    vf0[z] = f0
    vf1[z] = f1
    vkey[z] = fitness_key(m[M_PTAG], m[M_CAP], f0, f1)

    # build every attachment patch before touching the edge set: the path
    # walks read edges that are about to be deleted, and deleted edge ids
    # must not be recycled while still referenced.  Space was reserved, so
    # appends cannot move the pool mid-loop.
    npool = m[M_PLEN]
    for t in range(na):
        a = stk[t]
        v = a
        while v != parent:
            e = pare[v]
            off = eoff[e]
            m[M_SS] = iset_merge(perm, inv, m[M_SS], pool[off : off + elen[e]])
            v = parv[v]
        ln = m[M_SS]
        seg = pool[npool : npool + ln]
        seg[:] = perm[:ln]
        seg.sort()
        okey[t] = npool
        cmin2[t] = ln
        npool += ln
        v = a
        while v != parent:
            e2 = pare[v]
            off2 = eoff[e2]
            m[M_SS] = iset_merge(perm, inv, m[M_SS], pool[off2 : off2 + elen[e2]])
            v = parv[v]
    m[M_PLEN] = npool

    swapped = False
    for i in range(1, cnt):
        e = pare[pre[i]]
        if erem[e] == 1:
            erem[e] = 0
            _edge_del(m, deg, adj, eu, ev, elen, efree, e)
            swapped = True

    for t in range(na):
        _edge_add(m, deg, adj, eu, ev, eoff, elen, efree,
                  np.int32(z), stk[t], okey[t], np.int32(cmin2[t]))

    m[M_ANCHOR] = z
    m[M_NV] += 1
    m[M_NALIVE] += 1

    # an edge swap can strand a dead vertex at degree 1; it must dissolve
    # exactly like a discarded leaf
    nrem = np.int64(0)
    if swapped:
        for i in range(cnt):
            nrem = _dissolve_a(m, complete, valive, vused, deg, adj, vfree,
                               rem, eu, ev, eoff, elen, efree, pool,
                               np.int64(pre[i]), nrem)
    return z, nrem


@kernel(inline=True)
def _dissolve_a(m, complete, valive, vused, deg, adj, vfree, rem,
                eu, ev, eoff, elen, efree, pool, v, nrem):
    """Remove v and its successors while they are dead degree-1 leaves.

    Removed slots append to rem from index nrem; returns the new count.  If
    the anchor dissolves, the complete individual first moves one hop to the
    surviving neighbor.
    """
    while vused[v] == 1 and valive[v] == 0 and deg[v] == 1:
        e = adj[v, 0]
        nb = _other_e(eu, ev, e, v)
        if m[M_ANCHOR] == v:
            _pool_patch_apply(complete, pool, eoff[e], np.int64(elen[e]))
            m[M_ANCHOR] = nb
        _edge_del(m, deg, adj, eu, ev, elen, efree, e)
        vused[v] = 0
        vfree[m[M_VFT]] = v
        m[M_VFT] += 1
        m[M_NV] -= 1
        rem[nrem] = v
        nrem += 1
        v = np.int64(nb)
    return nrem


@kernel(inline=True)
def _discard_a(m, complete, valive, vused, deg, adj, vfree, rem,
               eu, ev, eoff, elen, efree, pool, x):
    valive[x] = 0
    m[M_NALIVE] -= 1
    return _dissolve_a(m, complete, valive, vused, deg, adj, vfree, rem,
                       eu, ev, eoff, elen, efree, pool, x, np.int64(0))


# scratch-set builders (the only stages that consume randomness)


@kernel(inline=True)
def _load_sample(m, perm, inv, ell, rstate):
    ss = np.int64(0)
    for _ in range(ell):
        ss, _e = iset_add_random_absent(perm, inv, ss, rstate)
    m[M_SS] = ss


@kernel(inline=True)
def _load_indices(m, perm, inv, indices):
    m[M_SS] = iset_merge(perm, inv, np.int64(0), indices)


@kernel(inline=True)
def _load_cross_flip(m, perm, inv, keep_d, add_s, rstate):
    d = m[M_SS]
    m[M_SS] = iset_flip_random(perm, inv, d, add_s, d - keep_d, rstate)


# ---------------------------------------------------------------------------
# bundle-level operations (one bundle crossing per call; loops use the
# array-level pieces directly)


@kernel
def tree_create(st, rstate):
    """First individual: random complete bit string, fully evaluated."""
    _fill_random_bits(st.complete, rstate)
    f0, f1 = eval_full(st.complete, st.m[M_PTAG], st.weights, st.values)
    m = st.m
    slot = m[M_VHI]
    m[M_VHI] += 1
    st.vused[slot] = 1
    st.deg[slot] = 0
    st.valive[slot] = 1
    st.vf0[slot] = f0
    st.vf1[slot] = f1
    st.vkey[slot] = fitness_key(m[M_PTAG], m[M_CAP], f0, f1)
    m[M_ANCHOR] = slot
    m[M_NV] = 1
    m[M_NALIVE] = 1
    return st, slot


@kernel
def _st_prep_ready_loop(st):
    """Run scan + repair, growing the pool as required; returns final state."""
    while True:
        code = _prep_ready(st.m, st.perm, st.inv, st.deg, st.adj, st.dist,
                           st.pre, st.parv, st.pare, st.mark, st.ikey,
                           st.okey, st.cmin1, st.cmin2, st.carg, st.stk,
                           st.stki, st.eu, st.ev, st.eoff, st.elen, st.erem,
                           st.pool)
        if code == 0:
            return st
        st = grow_dispatch(st, code)


@kernel
def _st_preflight_loop(st):
    while True:
        code = _preflight(st.m, st.vkey, st.adj, st.eu)
        if code == 0:
            return st
        st = grow_dispatch(st, code)


@kernel
def _st_exec(st, parent):
    z, nrem = _exec_a(st.m, st.complete, st.perm, st.inv, st.weights,
                      st.values, st.vkey, st.vf0, st.vf1, st.valive,
                      st.vused, st.deg, st.adj, st.vfree, st.dist, st.pre,
                      st.parv, st.pare, st.okey, st.cmin2, st.stk, st.rem,
                      st.eu, st.ev, st.eoff, st.elen, st.efree, st.erem,
                      st.pool, parent)
    return st, z, nrem


@kernel
def tree_promote(st, x):
    _promote_a(st.m, st.complete, st.deg, st.adj, st.parv, st.pare, st.mark,
               st.stk, st.stki, st.eu, st.ev, st.eoff, st.elen, st.pool, x)


@kernel
def tree_mutate(st, parent, ell, rstate):
    """Offspring of ``parent`` with ``ell`` distinct uniformly chosen bits flipped."""
    tree_promote(st, parent)
    st = _st_preflight_loop(st)
    _load_sample(st.m, st.perm, st.inv, ell, rstate)
    st = _st_prep_ready_loop(st)
    return _st_exec(st, parent)


@kernel
def tree_mutate_indices(st, parent, indices):
    """Deterministic mutate: flip exactly the given positions."""
    tree_promote(st, parent)
    st = _st_preflight_loop(st)
    _load_indices(st.m, st.perm, st.inv, indices)
    st = _st_prep_ready_loop(st)
    return _st_exec(st, parent)


@kernel
def tree_diff(st, x1, x2):
    _diff_a(st.m, st.perm, st.inv, st.deg, st.adj, st.pare, st.mark, st.stk,
            st.stki, st.eu, st.ev, st.eoff, st.elen, st.pool, x1, x2)
    return st.m[M_SS]


@kernel
def tree_cross_begin(st, x1, x2):
    """Promote to x1 and load the parent difference into the scratch set."""
    tree_promote(st, x1)
    return tree_diff(st, x1, x2)


@kernel
def tree_cross_finish(st, x1, keep_d, add_s, rstate):
    """Finish a crossover: keep ``keep_d`` differing flips, add ``add_s`` same flips.

    The scratch set must hold the parent difference (from tree_cross_begin).
    Drops d - keep_d random differing positions, adds add_s random same
    positions, then commits the offspring exactly like a mutation.
    """
    st = _st_preflight_loop(st)
    _load_cross_flip(st.m, st.perm, st.inv, keep_d, add_s, rstate)
    st = _st_prep_ready_loop(st)
    return _st_exec(st, x1)


@kernel
def tree_cross_uniform(st, x1, x2, p_m, rstate):
    """Uniform crossover fused with standard bit mutation, one evaluation."""
    d = tree_cross_begin(st, x1, x2)
    keep = sample_binomial_state(rstate, d, 0.5)
    add = sample_binomial_state(rstate, st.m[M_N] - d, p_m)
    return tree_cross_finish(st, x1, keep, add, rstate)


@kernel
def tree_add_random(st, rstate):
    """Statistically fresh uniform individual: mutate the anchor by Bin(n, 1/2) bits."""
    ell = sample_binomial_state(rstate, st.m[M_N], 0.5)
    return tree_mutate(st, st.m[M_ANCHOR], ell, rstate)


@kernel
def tree_discard(st, x):
    """Mark x discarded; dissolve it if it is a degree-1 leaf, cascading.

    Removed slots are reported in st.rem; returns how many were removed.
    """
    return _discard_a(st.m, st.complete, st.valive, st.vused, st.deg, st.adj,
                      st.vfree, st.rem, st.eu, st.ev, st.eoff, st.elen,
                      st.efree, st.pool, x)


# ---------------------------------------------------------------------------
# Python-facing store


class PatchTree:
    """Population store keeping one complete individual plus a spanning tree
    of patches; the primary implementation of the store interface.

    Vertices are addressed by opaque integer node ids, monotonically
    increasing and never reused within one store, so stale handles are
    detected instead of silently aliasing.
    """

    kind = "mst"

    def __init__(self, n: int, evaluator, rng: Rng | int):
        if n < 1:
            raise ValueError(f"n must be positive, got {n}")
        if evaluator.n != n:
            raise ValueError("evaluator problem size does not match store size")
        self.n = int(n)
        self.evaluator = evaluator
        self.rng = rng if isinstance(rng, Rng) else Rng(rng)
        self._st = new_state(
            self.n, evaluator.ptag, evaluator.capacity, evaluator.weights, evaluator.values
        )
        self._slot_of = {}
        self._id_of = {}
        self._next_id = 0
        self._st, slot = tree_create(self._st, self.rng.state)
        self._root_id = self._register(slot)

    # -- id management ------------------------------------------------------

    def _register(self, slot) -> int:
        nid = self._next_id
        self._next_id += 1
        self._slot_of[nid] = int(slot)
        self._id_of[int(slot)] = nid
        return nid

    def _slot(self, nid: int) -> int:
        try:
            return self._slot_of[nid]
        except KeyError:
            raise KeyError(f"node id {nid} is not stored (unknown or already removed)")

    def _collect_removed(self, nrem: int) -> None:
        for k in range(int(nrem)):
            slot = int(self._st.rem[k])
            nid = self._id_of.pop(slot)
            del self._slot_of[nid]

    # -- queries ------------------------------------------------------------

    def __len__(self) -> int:
        return int(self._st.m[M_NV])

    @property
    def alive_count(self) -> int:
        return int(self._st.m[M_NALIVE])

    @property
    def anchor(self) -> int:
        return self._id_of[int(self._st.m[M_ANCHOR])]

    def node_ids(self):
        return sorted(self._slot_of)

    def alive_ids(self):
        return [nid for nid in sorted(self._slot_of) if self.alive(nid)]

    def fitness(self, x: int):
        s = self._slot(x)
        return self.evaluator.value_from_raw(int(self._st.vf0[s]), int(self._st.vf1[s]))

    def fitness_key(self, x: int) -> int:
        return int(self._st.vkey[self._slot(x)])

    def alive(self, x: int) -> bool:
        return bool(self._st.valive[self._slot(x)])

    def total_patch_size(self) -> int:
        return int(self._st.m[M_TPS])

    def complete_bits(self) -> np.ndarray:
        """Copy of the complete individual (equals the anchor's bit string)."""
        return self._st.complete.copy()

    def reconstruct(self, x: int) -> np.ndarray:
        """Bit string of vertex x, rebuilt from the anchor through path patches."""
        s = self._slot(x)
        bits = self._st.complete.copy()
        anchor_slot = int(self._st.m[M_ANCHOR])
        tree_diff(self._st, anchor_slot, s)
        ss = int(self._st.m[M_SS])
        bits[self._st.perm[:ss]] ^= 1
        return bits

    # -- operators ----------------------------------------------------------

    def promote(self, x: int) -> None:
        tree_promote(self._st, self._slot(x))

    def mutate(self, parent: int, ell: int) -> int:
        s = self._slot(parent)
        if not self._st.valive[s]:
            raise ValueError(f"parent {parent} has been discarded")
        if not 0 <= ell <= self.n:
            raise ValueError(f"flip count {ell} outside [0, {self.n}]")
        self._st, z, nrem = tree_mutate(self._st, s, int(ell), self.rng.state)
        self._collect_removed(nrem)
        return self._register(z)

    def mutate_explicit(self, parent: int, indices) -> int:
        s = self._slot(parent)
        if not self._st.valive[s]:
            raise ValueError(f"parent {parent} has been discarded")
        patch = indices if isinstance(indices, Patch) else Patch(indices, self.n)
        if len(patch) and patch.indices[-1] >= self.n:
            raise IndexError("patch index out of range")
        self._st, z, nrem = tree_mutate_indices(self._st, s, patch.indices)
        self._collect_removed(nrem)
        return self._register(z)

    def add_random(self) -> int:
        """New individual distributed as a fresh uniform sample."""
        ell = self.rng.binomial(self.n, 0.5)
        anchor_slot = int(self._st.m[M_ANCHOR])
        self._st, z, nrem = tree_mutate(self._st, anchor_slot, ell, self.rng.state)
        self._collect_removed(nrem)
        return self._register(z)

    def crossover(self, x1: int, x2: int, f) -> int:
        s1, s2 = self._slot(x1), self._slot(x2)
        if not (self._st.valive[s1] and self._st.valive[s2]):
            raise ValueError("crossover parents must both be alive")
        d = int(tree_cross_begin(self._st, s1, s2))
        keep_d, add_s = f(d, self.n, self.rng)
        if not 0 <= keep_d <= d:
            raise ValueError(f"crossover spec returned keep_d={keep_d} outside [0, {d}]")
        if not 0 <= add_s <= self.n - d:
            raise ValueError(
                f"crossover spec returned add_s={add_s} outside [0, {self.n - d}]"
            )
        self._st, z, nrem = tree_cross_finish(
            self._st, s1, int(keep_d), int(add_s), self.rng.state
        )
        self._collect_removed(nrem)
        return self._register(z)

    def difference(self, x1: int, x2: int) -> Patch:
        """Exact set of positions where the two stored individuals differ."""
        s1, s2 = self._slot(x1), self._slot(x2)
        tree_diff(self._st, s1, s2)
        ss = int(self._st.m[M_SS])
        return Patch(np.sort(self._st.perm[:ss].astype(np.int64)))

    def discard(self, x: int) -> None:
        s = self._slot(x)
        if not self._st.valive[s]:
            raise ValueError(f"node {x} is already discarded")
        if self.alive_count <= 1:
            raise ValueError("cannot discard the last alive individual")
        nrem = tree_discard(self._st, s)
        self._collect_removed(nrem)

    # -- debugging ----------------------------------------------------------

    def dump(self) -> str:
        """Text dump: one line per vertex and per edge, in stable id order."""
        st = self._st
        lines = []
        for nid in sorted(self._slot_of):
            s = self._slot_of[nid]
            if st.m[M_PTAG] == 0:
                fit = str(int(st.vf0[s]))
            else:
                fit = f"{int(st.vf0[s])},{int(st.vf1[s])}"
            lines.append(f"vertex {nid} fitness={fit} alive={int(st.valive[s])}")
        seen = []
        for e in range(int(st.m[M_EHI])):
            if st.eu[e] >= 0:
                a = self._id_of[int(st.eu[e])]
                b = self._id_of[int(st.ev[e])]
                if a > b:
                    a, b = b, a
                off, ln = int(st.eoff[e]), int(st.elen[e])
                idx = " ".join(str(int(i)) for i in st.pool[off : off + ln])
                seen.append((a, b, f"edge {a} {b} {ln}" + (f" {idx}" if ln else "")))
        for _, _, line in sorted(seen):
            lines.append(line)
        return "\n".join(lines) + "\n"

    def check_invariants(self) -> None:
        """Structural self-check used by the test suite (slow, Python-level)."""
        st = self._st
        nv = int(st.m[M_NV])
        assert nv == len(self._slot_of)
        assert int(st.m[M_NE]) == nv - 1
        # perm/inv stay mutually inverse
        assert (st.perm[st.inv] == np.arange(self.n, dtype=np.int32)).all()
        anchor = int(st.m[M_ANCHOR])
        assert st.vused[anchor] == 1
        # no stored vertex is dead with degree <= 1 (unless it is the only one)
        for slot in self._id_of:
            if not st.valive[slot] and nv > 1:
                assert st.deg[slot] >= 2, "dead vertex left at degree <= 1"
        # edge endpoints used; total patch size consistent
        tps = 0
        for e in range(int(st.m[M_EHI])):
            if st.eu[e] >= 0:
                assert st.vused[st.eu[e]] and st.vused[st.ev[e]]
                tps += int(st.elen[e])
        assert tps == int(st.m[M_TPS])
