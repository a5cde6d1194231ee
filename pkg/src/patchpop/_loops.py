"""Whole-run optimizer loops, compiled.

The benchmark measures sub-microsecond per-evaluation costs, so the optimizer
inner loops must not cross the interpreter boundary per iteration, and under
numba a call that passes the state arrays costs tens to hundreds of
nanoseconds in reference-count traffic.  The per-evaluation operation path
(promote, flip-set build, distance scan, spanning-tree repair, insertion,
discard cascade) is therefore fused into the loop bodies here.

The fused blocks mirror the stage kernels in tree.py block for block; those
stages remain the reference implementation behind the Python-level store API,
and tests pin the two paths together by asserting byte-identical trajectories
between the compiled and interpreted engines for equal seeds (including runs
that exercise every growth path).

Capacity growth is the one thing an inner loop cannot do: it returns a grow
code to its small trampoline, which reallocates through ``grow_dispatch`` and
re-enters.  The phase word in ``algst`` records whether the interrupted
evaluation had already consumed its random draws, so re-entry never replays
randomness.
"""

from collections import namedtuple

import numpy as np

from ._jit import kernel
from .fitness import apply_flips_delta, eval_full, fitness_key
from .naive import naive_cross_make, naive_diff_scan, naive_offspring
from .indexset import iset_add_random_absent, iset_flip_random, iset_merge
from .patches import _fill_random_bits
from .rng import rand_below, rand_unit, sample_binomial_state
from .tree import (
    GROW_ADJ,
    GROW_EDGES,
    GROW_POOL,
    GROW_VERTS,
    M_ANCHOR,
    M_CAP,
    M_EFT,
    M_EHI,
    M_EPOCH,
    M_N,
    M_NA,
    M_NALIVE,
    M_NE,
    M_NEED,
    M_NV,
    M_PLEN,
    M_PTAG,
    M_SS,
    M_TPS,
    M_VFT,
    M_VHI,
    _INF,
    _ZBIT,
    grow_dispatch,
)

# algst slots shared by the tree inners
A_PARENT = 0   # incumbent (rls/opo) or free slot (naive mpo)
A_PHASE = 1    # 0 = next eval starts fresh; 1 = flip set built, repair pending
A_OPPARENT = 2  # vertex the pending offspring descends from


@kernel(inline=True)
def _zkey_i(dist_v, order):
    return (dist_v << np.int64(32)) | _ZBIT | order


@kernel(inline=True)
def _ekey_i(w, e):
    return (np.int64(w) << np.int64(32)) | np.int64(e)


@kernel(inline=True)
def _edge_del_i(m, deg, adj, eu, ev, elen, efree, e):
    a = eu[e]
    d = deg[a]
    for k in range(d):
        if adj[a, k] == e:
            adj[a, k] = adj[a, d - 1]
            deg[a] = d - 1
            break
    b = ev[e]
    d = deg[b]
    for k in range(d):
        if adj[b, k] == e:
            adj[b, k] = adj[b, d - 1]
            deg[b] = d - 1
            break
    m[M_NE] -= 1
    m[M_TPS] -= elen[e]
    eu[e] = -1
    efree[m[M_EFT]] = e
    m[M_EFT] += 1


@kernel(inline=True)
def _dissolve_i(m, complete, valive, vused, deg, adj, vfree,
                eu, ev, eoff, elen, efree, pool, v):
    while vused[v] == 1 and valive[v] == 0 and deg[v] == 1:
        e = adj[v, 0]
        nb = ev[e] if eu[e] == v else eu[e]
        if m[M_ANCHOR] == v:
            off = eoff[e]
            for k in range(off, off + elen[e]):
                complete[pool[k]] ^= 1
            m[M_ANCHOR] = nb
        _edge_del_i(m, deg, adj, eu, ev, elen, efree, e)
        vused[v] = 0
        vfree[m[M_VFT]] = v
        m[M_VFT] += 1
        m[M_NV] -= 1
        v = np.int64(nb)


@kernel(inline=True)
def _discard_i(m, complete, valive, vused, deg, adj, vfree,
               eu, ev, eoff, elen, efree, pool, x):
    valive[x] = 0
    m[M_NALIVE] -= 1
    _dissolve_i(m, complete, valive, vused, deg, adj, vfree,
                eu, ev, eoff, elen, efree, pool, x)


@kernel(inline=True)
def _preflight_i(m, vkey, adj, eu):
    nv = m[M_NV]
    if m[M_VFT] == 0 and m[M_VHI] >= vkey.shape[0]:
        return np.int64(GROW_VERTS)
    if m[M_EFT] + (eu.shape[0] - m[M_EHI]) < nv:
        return np.int64(GROW_EDGES)
    if adj.shape[1] < nv + 1:
        return np.int64(GROW_ADJ)
    return np.int64(0)


@kernel(inline=True)
def _promote_i(m, complete, deg, adj, parv, pare, mark, stk, stki,
               eu, ev, eoff, elen, pool, x):
    if m[M_ANCHOR] == x:
        return
    m[M_EPOCH] += 1
    epoch = m[M_EPOCH]
    mark[x] = epoch
    parv[x] = -1
    pare[x] = -1
    stk[0] = np.int32(x)
    stki[0] = 0
    depth = 0
    while depth >= 0:
        u = stk[depth]
        k = stki[depth]
        if k < deg[u]:
            stki[depth] += 1
            e = adj[u, k]
            o = ev[e] if eu[e] == u else eu[e]
            if mark[o] != epoch:
                mark[o] = epoch
                parv[o] = u
                pare[o] = e
                if o == m[M_ANCHOR]:
                    break
                depth += 1
                stk[depth] = o
                stki[depth] = 0
        else:
            depth -= 1
    v = np.int32(m[M_ANCHOR])
    while v != x:
        e = pare[v]
        off = eoff[e]
        for k in range(off, off + elen[e]):
            complete[pool[k]] ^= 1
        v = parv[v]
    m[M_ANCHOR] = x


@kernel(inline=True)
def _diff_i(m, perm, inv, deg, adj, pare, mark, stk, stki,
            eu, ev, eoff, elen, pool, x1, x2):
    m[M_SS] = 0
    if x1 == x2:
        return
    m[M_EPOCH] += 1
    epoch = m[M_EPOCH]
    ss = np.int64(0)
    mark[x1] = epoch
    stk[0] = np.int32(x1)
    stki[0] = 0
    depth = 0
    while depth >= 0:
        u = stk[depth]
        k = stki[depth]
        if k < deg[u]:
            stki[depth] += 1
            e = adj[u, k]
            o = ev[e] if eu[e] == u else eu[e]
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


@kernel(inline=True)
def _op_eval_step(m, complete, perm, inv, weights, values, vkey, vf0, vf1,
                  valive, vused, deg, adj, vfree, dist, pre, parv, pare,
                  mark, ikey, okey, cmin1, cmin2, carg, stk, stki,
                  eu, ev, eoff, elen, efree, erem, pool, parent):
    """Fused scan + repair + insert for the flip set in the scratch set.

    Mirrors tree.py's _scan_a / _repair_a / _exec_a.  Returns
    (-1, GROW_POOL) when the pool must grow first (nothing durable is
    modified in that case), else (new slot, 0).
    """
    # --- distance scan (tree.py: _scan_a) ---------------------------------
    m[M_EPOCH] += 1
    epoch = m[M_EPOCH]
    ss = m[M_SS]
    root = np.int64(parent)
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
            o = ev[e] if eu[e] == u else eu[e]
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
    m[M_SS] = ss

    # --- repair decisions (tree.py: _repair_a) -----------------------------
    for i in range(cnt - 1, -1, -1):
        u = pre[i]
        ik = _zkey_i(dist[u], np.int64(i))
        cm1 = _INF
        cm2 = _INF
        ca = np.int32(-1)
        for k in range(deg[u]):
            e = adj[u, k]
            if e == pare[u]:
                continue
            o = ev[e] if eu[e] == u else eu[e]
            cand = ikey[o]
            ek = _ekey_i(elen[e], e)
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

    for i in range(cnt):
        u = pre[i]
        if i == 0:
            up = _INF
        else:
            up = okey[u]
            pk = _ekey_i(elen[pare[u]], pare[u])
            if pk > up:
                up = pk
        zu = _zkey_i(dist[u], np.int64(i))
        for k in range(deg[u]):
            e = adj[u, k]
            if e == pare[u] and i > 0:
                continue
            o = ev[e] if eu[e] == u else eu[e]
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
            if _ekey_i(elen[e], e) > bound:
                erem[e] = 1

    na = np.int64(0)
    need = np.int64(0)
    for i in range(cnt - 1, -1, -1):
        u = pre[i]
        ck = _zkey_i(dist[u], np.int64(i))
        cv = u
        for k in range(deg[u]):
            e = adj[u, k]
            if e == pare[u]:
                continue
            if erem[e] == 1:
                continue
            o = ev[e] if eu[e] == u else eu[e]
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
        for i in range(1, cnt):
            erem[pare[pre[i]]] = 0
        return np.int64(-1), np.int64(GROW_POOL)

    # --- insert (tree.py: _exec_a) ------------------------------------------
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
            _edge_del_i(m, deg, adj, eu, ev, elen, efree, e)
            swapped = True

    for t in range(na):
        if m[M_EFT] > 0:
            m[M_EFT] -= 1
            e = efree[m[M_EFT]]
        else:
            e = np.int32(m[M_EHI])
            m[M_EHI] += 1
        a = stk[t]
        eu[e] = z
        ev[e] = a
        eoff[e] = okey[t]
        elen[e] = np.int32(cmin2[t])
        adj[z, deg[z]] = e
        deg[z] += 1
        adj[a, deg[a]] = e
        deg[a] += 1
        m[M_NE] += 1
        m[M_TPS] += cmin2[t]

    m[M_ANCHOR] = z
    m[M_NV] += 1
    m[M_NALIVE] += 1

    if swapped:
        for i in range(cnt):
            _dissolve_i(m, complete, valive, vused, deg, adj, vfree,
                        eu, ev, eoff, elen, efree, pool, np.int64(pre[i]))
    return z, np.int64(0)


# ---------------------------------------------------------------------------
# tree-store loops


@kernel
def _one_parent_tree_inner(m, complete, perm, inv, weights, values, vkey,
                           vf0, vf1, valive, vused, deg, adj, vfree, dist,
                           pre, parv, pare, mark, ikey, okey, cmin1, cmin2,
                           carg, stk, stki, eu, ev, eoff, elen, efree,
                           erem, pool, rstate, algst, max_evals, target_key,
                           use_target, p, use_p):
    parent = algst[A_PARENT]
    phase = algst[A_PHASE]
    n = m[M_N]
    evals = np.int64(0)
    hit = False
    code = np.int64(0)
    while evals < max_evals:
        if phase == 0:
            code = _preflight_i(m, vkey, adj, eu)
            if code != 0:
                break
            _promote_i(m, complete, deg, adj, parv, pare, mark, stk, stki,
                       eu, ev, eoff, elen, pool, parent)
            if use_p:
                ell = sample_binomial_state(rstate, n, p)
            else:
                ell = np.int64(1)
            ss = np.int64(0)
            for _ in range(ell):
                ss, _e = iset_add_random_absent(perm, inv, ss, rstate)
            m[M_SS] = ss
            phase = np.int64(1)
        z, code = _op_eval_step(m, complete, perm, inv, weights, values,
                                vkey, vf0, vf1, valive, vused, deg, adj,
                                vfree, dist, pre, parv, pare, mark, ikey,
                                okey, cmin1, cmin2, carg, stk, stki,
                                eu, ev, eoff, elen, efree, erem, pool,
                                parent)
        if code != 0:
            break
        phase = np.int64(0)
        evals += 1
        if vkey[z] >= vkey[parent]:
            _discard_i(m, complete, valive, vused, deg, adj, vfree,
                       eu, ev, eoff, elen, efree, pool, parent)
            parent = z
        else:
            _discard_i(m, complete, valive, vused, deg, adj, vfree,
                       eu, ev, eoff, elen, efree, pool, z)
        if use_target and vkey[parent] >= target_key:
            hit = True
            break
    algst[A_PARENT] = parent
    algst[A_PHASE] = phase
    return evals, hit, code


@kernel
def one_parent_tree_chunk(st, rstate, algst, max_evals, target_key,
                          use_target, p, use_p):
    """RLS (use_p False) or (1+1) EA (use_p True) for up to max_evals."""
    evals = np.int64(0)
    hit = False
    while True:
        done, hit, code = _one_parent_tree_inner(
            st.m, st.complete, st.perm, st.inv, st.weights, st.values,
            st.vkey, st.vf0, st.vf1, st.valive, st.vused, st.deg, st.adj,
            st.vfree, st.dist, st.pre, st.parv, st.pare, st.mark, st.ikey,
            st.okey, st.cmin1, st.cmin2, st.carg, st.stk, st.stki,
            st.eu, st.ev, st.eoff, st.elen, st.efree, st.erem, st.pool,
            rstate, algst, max_evals - evals, target_key, use_target, p, use_p)
        evals += done
        if code == 0 or hit or evals >= max_evals:
            break
        st = grow_dispatch(st, code)
    return st, evals, hit


@kernel
def _mpo_tree_inner(m, complete, perm, inv, weights, values, vkey, vf0, vf1,
                    valive, vused, deg, adj, vfree, dist, pre, parv, pare,
                    mark, ikey, okey, cmin1, cmin2, carg, stk, stki,
                    eu, ev, eoff, elen, efree, erem, pool,
                    rstate, algst, members, p_m, p_c, max_evals, target_key,
                    use_target, stats):
    phase = algst[A_PHASE]
    mu = members.shape[0]
    n = m[M_N]
    evals = np.int64(0)
    hit = False
    code = np.int64(0)
    while evals < max_evals:
        if phase == 0:
            code = _preflight_i(m, vkey, adj, eu)
            if code != 0:
                break
            c = rand_unit(rstate)
            if c < p_c:
                i1 = rand_below(rstate, mu)
                i2 = rand_below(rstate, mu)
                x1 = members[i1]
                x2 = members[i2]
                _promote_i(m, complete, deg, adj, parv, pare, mark, stk,
                           stki, eu, ev, eoff, elen, pool, x1)
                _diff_i(m, perm, inv, deg, adj, pare, mark, stk, stki,
                        eu, ev, eoff, elen, pool, x1, x2)
                d = m[M_SS]
                keep = sample_binomial_state(rstate, d, 0.5)
                add = sample_binomial_state(rstate, n - d, p_m)
                m[M_SS] = iset_flip_random(perm, inv, d, add, d - keep,
                                           rstate)
                algst[A_OPPARENT] = x1
            else:
                i = rand_below(rstate, mu)
                x = members[i]
                ell = sample_binomial_state(rstate, n, p_m)
                _promote_i(m, complete, deg, adj, parv, pare, mark, stk,
                           stki, eu, ev, eoff, elen, pool, x)
                ss = np.int64(0)
                for _ in range(ell):
                    ss, _e = iset_add_random_absent(perm, inv, ss, rstate)
                m[M_SS] = ss
                algst[A_OPPARENT] = x
            phase = np.int64(1)
        z, code = _op_eval_step(m, complete, perm, inv, weights, values,
                                vkey, vf0, vf1, valive, vused, deg, adj,
                                vfree, dist, pre, parv, pare, mark, ikey,
                                okey, cmin1, cmin2, carg, stk, stki,
                                eu, ev, eoff, elen, efree, erem, pool,
                                algst[A_OPPARENT])
        if code != 0:
            break
        phase = np.int64(0)
        evals += 1
        tps = m[M_TPS]
        stats[0] += tps
        if tps < stats[1]:
            stats[1] = tps
        if tps > stats[2]:
            stats[2] = tps
        if use_target and vkey[z] >= target_key:
            hit = True
            break
        # remove a minimum-fitness member of the (mu+1)-set, ties uniform;
        # candidate order: members[0..mu-1], then the offspring
        worst = vkey[z]
        for ii in range(mu):
            k = vkey[members[ii]]
            if k < worst:
                worst = k
        ties = np.int64(0)
        for ii in range(mu):
            if vkey[members[ii]] == worst:
                ties += 1
        if vkey[z] == worst:
            ties += 1
        r = np.int64(0)
        if ties > 1:
            r = rand_below(rstate, ties)
        victim = np.int64(z)
        seen = np.int64(0)
        for ii in range(mu):
            if vkey[members[ii]] == worst:
                if seen == r:
                    victim = members[ii]
                    members[ii] = z
                    break
                seen += 1
        _discard_i(m, complete, valive, vused, deg, adj, vfree,
                   eu, ev, eoff, elen, efree, pool, victim)
    algst[A_PHASE] = phase
    return evals, hit, code


@kernel
def mpo_tree_chunk(st, rstate, algst, members, p_m, p_c, max_evals,
                   target_key, use_target, stats):
    """Steady-state (mu+1) iterations; stats accumulates [sum, min, max] of
    the total patch size sampled after every evaluation."""
    evals = np.int64(0)
    hit = False
    while True:
        done, hit, code = _mpo_tree_inner(
            st.m, st.complete, st.perm, st.inv, st.weights, st.values,
            st.vkey, st.vf0, st.vf1, st.valive, st.vused, st.deg, st.adj,
            st.vfree, st.dist, st.pre, st.parv, st.pare, st.mark, st.ikey,
            st.okey, st.cmin1, st.cmin2, st.carg, st.stk, st.stki,
            st.eu, st.ev, st.eoff, st.elen, st.efree, st.erem, st.pool,
            rstate, algst, members, p_m, p_c, max_evals - evals, target_key,
            use_target, stats)
        evals += done
        if code == 0 or hit or evals >= max_evals:
            break
        st = grow_dispatch(st, code)
    return st, evals, hit


@kernel
def _mpo_init_inner(m, complete, perm, inv, weights, values, vkey, vf0, vf1,
                    valive, vused, deg, adj, vfree, dist, pre, parv, pare,
                    mark, ikey, okey, cmin1, cmin2, carg, stk, stki,
                    eu, ev, eoff, elen, efree, erem, pool, rstate, members,
                    algst, start):
    """Extend the member chain from index start; returns (next index, code)."""
    from_slot = members[start - 1]
    n = m[M_N]
    i = start
    while i < members.shape[0]:
        if algst[A_PHASE] == 0:
            code = _preflight_i(m, vkey, adj, eu)
            if code != 0:
                return i, code
            ell = sample_binomial_state(rstate, n, 0.5)
            _promote_i(m, complete, deg, adj, parv, pare, mark, stk, stki,
                       eu, ev, eoff, elen, pool, from_slot)
            ss = np.int64(0)
            for _ in range(ell):
                ss, _e = iset_add_random_absent(perm, inv, ss, rstate)
            m[M_SS] = ss
            algst[A_PHASE] = 1
        z, code = _op_eval_step(m, complete, perm, inv, weights, values,
                                vkey, vf0, vf1, valive, vused, deg, adj,
                                vfree, dist, pre, parv, pare, mark, ikey,
                                okey, cmin1, cmin2, carg, stk, stki,
                                eu, ev, eoff, elen, efree, erem, pool,
                                from_slot)
        if code != 0:
            return i, code
        algst[A_PHASE] = 0
        members[i] = z
        from_slot = z
        i += 1
    return i, np.int64(0)


@kernel
def mpo_tree_init(st, rstate, members):
    """Fill members[1:] with fresh random individuals (members[0] pre-set)."""
    algst = np.zeros(4, dtype=np.int64)
    i = np.int64(1)
    while i < members.shape[0]:
        j, code = _mpo_init_inner(
            st.m, st.complete, st.perm, st.inv, st.weights, st.values,
            st.vkey, st.vf0, st.vf1, st.valive, st.vused, st.deg, st.adj,
            st.vfree, st.dist, st.pre, st.parv, st.pare, st.mark, st.ikey,
            st.okey, st.cmin1, st.cmin2, st.carg, st.stk, st.stki,
            st.eu, st.ev, st.eoff, st.elen, st.efree, st.erem, st.pool,
            rstate, members, algst, i)
        i = j
        if code == 0:
            break
        st = grow_dispatch(st, code)
    return st


# ---------------------------------------------------------------------------
# naive-store loops

NaiveRunState = namedtuple(
    "NaiveRunState",
    ["m", "bits", "key", "f0", "f1", "perm", "inv", "dbuf", "sbuf",
     "weights", "values"],
)

NM_N = 0
NM_PTAG = 1
NM_CAP = 2


def new_naive_run_state(n, ptag, capacity, weights, values, slots):
    m = np.zeros(4, dtype=np.int64)
    m[NM_N] = n
    m[NM_PTAG] = ptag
    m[NM_CAP] = capacity
    return NaiveRunState(
        m=m,
        bits=np.zeros((slots, n), dtype=np.uint8),
        key=np.zeros(slots, dtype=np.int64),
        f0=np.zeros(slots, dtype=np.int64),
        f1=np.zeros(slots, dtype=np.int64),
        perm=np.arange(n, dtype=np.int32),
        inv=np.arange(n, dtype=np.int32),
        dbuf=np.empty(n, dtype=np.int32),
        sbuf=np.empty(n, dtype=np.int32),
        weights=np.asarray(weights, dtype=np.int64),
        values=np.asarray(values, dtype=np.int64),
    )


@kernel(inline=True)
def _nset(m, key, f0a, f1a, slot, a, b):
    f0a[slot] = a
    f1a[slot] = b
    key[slot] = fitness_key(m[NM_PTAG], m[NM_CAP], a, b)


@kernel
def naive_create_slot(ns, slot, rstate):
    _fill_random_bits(ns.bits[slot], rstate)
    a, b = eval_full(ns.bits[slot], ns.m[NM_PTAG], ns.weights, ns.values)
    _nset(ns.m, ns.key, ns.f0, ns.f1, slot, a, b)


@kernel(inline=True)
def _nmutate(m, bits, key, f0a, f1a, perm, inv, weights, values,
             parent, out, ell, rstate):
    ss = np.int64(0)
    for _ in range(ell):
        ss, _e = iset_add_random_absent(perm, inv, ss, rstate)
    a, b = naive_offspring(bits[parent], bits[out], perm, ss,
                           m[NM_PTAG], weights, values)
    _nset(m, key, f0a, f1a, out, a, b)


@kernel(inline=True)
def _ncross(m, bits, key, f0a, f1a, dbuf, sbuf, weights, values,
            s1, s2, out, p_m, rstate):
    d = naive_diff_scan(bits[s1], bits[s2], dbuf, sbuf)
    keep = sample_binomial_state(rstate, d, 0.5)
    add = sample_binomial_state(rstate, m[NM_N] - d, p_m)
    a, b = naive_cross_make(bits[s1], bits[out], dbuf, d, sbuf, keep, add,
                            rstate, m[NM_PTAG], weights, values)
    _nset(m, key, f0a, f1a, out, a, b)


@kernel
def one_parent_naive_chunk(ns, rstate, algst, max_evals, target_key,
                           use_target, p, use_p):
    m, bits, key, f0a, f1a = ns.m, ns.bits, ns.key, ns.f0, ns.f1
    perm, inv = ns.perm, ns.inv
    weights, values = ns.weights, ns.values
    parent = algst[A_PARENT]
    n = m[NM_N]
    evals = np.int64(0)
    hit = False
    while evals < max_evals:
        out = 1 - parent
        if use_p:
            ell = sample_binomial_state(rstate, n, p)
        else:
            ell = np.int64(1)
        _nmutate(m, bits, key, f0a, f1a, perm, inv, weights, values,
                 parent, out, ell, rstate)
        evals += 1
        if key[out] >= key[parent]:
            parent = out
        if use_target and key[parent] >= target_key:
            hit = True
            break
    algst[A_PARENT] = parent
    return evals, hit


@kernel
def mpo_naive_init(ns, rstate, members):
    """members[0] holds the created individual; fill the rest by mutation chains."""
    m, bits, key, f0a, f1a = ns.m, ns.bits, ns.key, ns.f0, ns.f1
    n = m[NM_N]
    prev = members[0]
    for i in range(1, members.shape[0]):
        ell = sample_binomial_state(rstate, n, 0.5)
        _nmutate(m, bits, key, f0a, f1a, ns.perm, ns.inv, ns.weights,
                 ns.values, prev, np.int64(i), ell, rstate)
        members[i] = i
        prev = np.int64(i)


@kernel
def mpo_naive_chunk(ns, rstate, members, algst, p_m, p_c, max_evals,
                    target_key, use_target):
    m, bits, key, f0a, f1a = ns.m, ns.bits, ns.key, ns.f0, ns.f1
    perm, inv = ns.perm, ns.inv
    dbuf, sbuf = ns.dbuf, ns.sbuf
    weights, values = ns.weights, ns.values
    mu = members.shape[0]
    n = m[NM_N]
    free = algst[0]
    evals = np.int64(0)
    hit = False
    while evals < max_evals:
        c = rand_unit(rstate)
        if c < p_c:
            i1 = rand_below(rstate, mu)
            i2 = rand_below(rstate, mu)
            _ncross(m, bits, key, f0a, f1a, dbuf, sbuf, weights, values,
                    members[i1], members[i2], free, p_m, rstate)
        else:
            i = rand_below(rstate, mu)
            ell = sample_binomial_state(rstate, n, p_m)
            _nmutate(m, bits, key, f0a, f1a, perm, inv, weights, values,
                     members[i], free, ell, rstate)
        evals += 1
        if use_target and key[free] >= target_key:
            hit = True
            break
        worst = key[free]
        for ii in range(mu):
            k = key[members[ii]]
            if k < worst:
                worst = k
        ties = np.int64(0)
        for ii in range(mu):
            if key[members[ii]] == worst:
                ties += 1
        if key[free] == worst:
            ties += 1
        r = np.int64(0)
        if ties > 1:
            r = rand_below(rstate, ties)
        seen = np.int64(0)
        # if no member matches r the offspring itself is removed and its slot
        # simply remains the free slot
        for ii in range(mu):
            if key[members[ii]] == worst:
                if seen == r:
                    old = members[ii]
                    members[ii] = free
                    free = old
                    break
                seen += 1
    algst[0] = free
    return evals, hit
