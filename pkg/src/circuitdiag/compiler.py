"""CNF to smooth d-DNNF compilation.

Exhaustive DPLL search with decomposition into connected components of the
residual clause graph, component caching, and decision or-nodes; a smoothing
pass follows.  Compilation is deterministic: branching follows a min-fill
elimination order of the CNF's primal graph (latest-eliminated variable of
the current component first), which makes the search mirror a tree
decomposition; ``branching="freq"`` selects the most-frequent-variable rule
instead.

Unit propagation and component splitting are the hot inner loops; they run
over flat arrays and are numba-compiled when available (see kernels.py).
Unit assumptions let callers condition the CNF on an observation before
compiling, which is the default mode of the diagnosis engine.
"""
from __future__ import annotations

import sys
import time

import numpy as np

from .dnnf import (Ddnnf, DdnnfBuilder, LimitError, differentiate, evaluate,
                   implications, model_count, query, reduce, satisfiable,
                   smoothed, validate)
from .kernels import jit

__all__ = [
    "compile_cnf", "compile_wcnf", "CompileStats", "LimitError",
    "elimination_positions", "evaluate", "differentiate", "implications",
    "query", "reduce", "satisfiable", "model_count", "smoothed", "validate",
]

DEFAULT_MAX_NODES = 2_000_000


class CompileStats:
    def __init__(self):
        self.decisions = 0
        self.cache_hits = 0
        self.nodes = 0
        self.seconds = 0.0

    def __repr__(self):
        return (f"CompileStats(decisions={self.decisions}, "
                f"cache_hits={self.cache_hits}, nodes={self.nodes}, "
                f"seconds={self.seconds:.3f})")


def compile_wcnf(wcnf, observation=None, **kw):
    """Compile a :class:`~circuitdiag.encode.WeightedCnf`; ``observation``
    is an optional {var: bit} map applied as unit assumptions."""
    assumptions = []
    if observation:
        assumptions = [v if b else -v for v, b in observation.items()]
    return compile_cnf(wcnf.n_vars, wcnf.clauses, assumptions=assumptions, **kw)


def elimination_positions(n_vars, clauses):
    """Min-fill elimination order of the primal graph; returns a position
    array (higher = eliminated later = closer to the decomposition root)."""
    adj = [set() for _ in range(n_vars + 1)]
    present = set()
    for c in clauses:
        vs = {abs(l) for l in c}
        present |= vs
        for v in vs:
            adj[v] |= vs
    for v in present:
        adj[v].discard(v)
    pos = np.zeros(n_vars + 1, dtype=np.int64)
    alive = set(present)
    step = 0
    while alive:
        v = min(alive, key=lambda u: (len(adj[u] & alive), u))
        pos[v] = step
        step += 1
        nb = adj[v] & alive
        for a in nb:
            adj[a] |= nb
            adj[a].discard(a)
        alive.discard(v)
    return pos


def _bcp(queue, qn, assign, sat, n_un, cl_ptr, cl_lits, occ_ptr, occ_cid,
         occ_val, trail, strail, ctrail, tops):
    """Unit propagation; returns 1 on conflict.  Effects recorded on the
    three trails with tops[0..2] as stack pointers."""
    qi = 0
    while qi < qn:
        l = queue[qi]
        qi += 1
        v = l if l > 0 else -l
        val = 1 if l > 0 else 0
        a = assign[v]
        if a >= 0:
            if a != val:
                return 1
            continue
        assign[v] = val
        trail[tops[0]] = v
        tops[0] += 1
        for j in range(occ_ptr[v], occ_ptr[v + 1]):
            cid = occ_cid[j]
            if occ_val[j] == val:
                if sat[cid] == 0:
                    sat[cid] = 1
                    strail[tops[1]] = cid
                    tops[1] += 1
            else:
                n_un[cid] -= 1
                ctrail[tops[2]] = cid
                tops[2] += 1
        for j in range(occ_ptr[v], occ_ptr[v + 1]):
            cid = occ_cid[j]
            if occ_val[j] != val and sat[cid] == 0:
                k = n_un[cid]
                if k == 0:
                    return 1
                if k == 1:
                    for t in range(cl_ptr[cid], cl_ptr[cid + 1]):
                        l2 = cl_lits[t]
                        v2 = l2 if l2 > 0 else -l2
                        if assign[v2] < 0:
                            queue[qn] = l2
                            qn += 1
                            break
    return 0


def _unwind(t0, t1, t2, assign, sat, n_un, trail, strail, ctrail, tops):
    while tops[0] > t0:
        tops[0] -= 1
        assign[trail[tops[0]]] = -1
    while tops[1] > t1:
        tops[1] -= 1
        sat[strail[tops[1]]] = 0
    while tops[2] > t2:
        tops[2] -= 1
        n_un[ctrail[tops[2]]] += 1


def _split(active, assign, sat, cl_ptr, cl_lits, occ_ptr, occ_cid,
           cstamp, vstamp, stamp, var_order, use_freq, freq, bfs,
           out_cids, out_cptr, out_vars, out_vptr, out_branch):
    """Connected components of the active clauses via shared unassigned
    variables.  Component clause/var lists come out sorted (canonical cache
    keys); the branch variable per component follows the elimination order
    or, with use_freq, the occurrence count."""
    nc = 0
    cpos = 0
    vpos = 0
    out_cptr[0] = 0
    out_vptr[0] = 0
    for ai in range(active.shape[0]):
        seed = active[ai]
        if sat[seed] == 1 or cstamp[seed] == stamp:
            continue
        bn = 0
        bfs[bn] = seed
        bn += 1
        cstamp[seed] = stamp
        cstart = cpos
        vstart = vpos
        bi = 0
        while bi < bn:
            cid = bfs[bi]
            bi += 1
            out_cids[cpos] = cid
            cpos += 1
            for t in range(cl_ptr[cid], cl_ptr[cid + 1]):
                l = cl_lits[t]
                v = l if l > 0 else -l
                if assign[v] >= 0:
                    continue
                if vstamp[v] != stamp:
                    vstamp[v] = stamp
                    freq[v] = 0
                    out_vars[vpos] = v
                    vpos += 1
                    for j in range(occ_ptr[v], occ_ptr[v + 1]):
                        c2 = occ_cid[j]
                        if sat[c2] == 0 and cstamp[c2] != stamp:
                            cstamp[c2] = stamp
                            bfs[bn] = c2
                            bn += 1
                freq[v] += 1
        cs = out_cids[cstart:cpos]
        cs.sort()
        vs = out_vars[vstart:vpos]
        vs.sort()
        best = out_vars[vstart]
        if use_freq == 1:
            bp = freq[best]
            for t in range(vstart, vpos):
                v = out_vars[t]
                if freq[v] > bp or (freq[v] == bp and v < best):
                    bp = freq[v]
                    best = v
        else:
            bp = var_order[best]
            for t in range(vstart, vpos):
                v = out_vars[t]
                if var_order[v] > bp or (var_order[v] == bp and v < best):
                    bp = var_order[v]
                    best = v
        out_branch[nc] = best
        nc += 1
        out_cptr[nc] = cpos
        out_vptr[nc] = vpos
    return nc


_bcp = jit(_bcp)
_unwind = jit(_unwind)
_split = jit(_split)


def compile_cnf(n_vars, clauses, assumptions=(), max_nodes=DEFAULT_MAX_NODES,
                max_seconds=None, check=False, stats=None, branching="elim",
                var_order=None):
    """Compile CNF clauses over variables 1..n_vars into a smooth d-DNNF.

    ``var_order`` optionally supplies precomputed elimination positions
    (reusable across observations of the same CNF).  Raises
    :class:`LimitError` when the node or time budget is exceeded;
    truncation is never silent.
    """
    t0 = time.perf_counter()
    stats = stats if stats is not None else CompileStats()
    if branching == "elim":
        if var_order is None:
            var_order = elimination_positions(n_vars, clauses)
        use_freq = 0
    elif branching == "freq":
        var_order = np.zeros(n_vars + 1, dtype=np.int64)
        use_freq = 1
    else:
        raise ValueError(f"unknown branching {branching!r}")
    var_order = np.asarray(var_order, dtype=np.int64)
    builder = DdnnfBuilder(n_vars, max_nodes)

    clause_list = []
    units = list(assumptions)
    contradiction = False
    for c in clauses:
        lits = tuple(dict.fromkeys(c))
        if any(-l in lits for l in lits):
            continue  # tautology
        for l in lits:
            if not 1 <= abs(l) <= n_vars:
                raise ValueError(f"literal {l} out of range 1..{n_vars}")
        if not lits:
            contradiction = True
        else:
            if len(lits) == 1:
                units.append(lits[0])
            clause_list.append(lits)
    for l in assumptions:
        if not 1 <= abs(l) <= n_vars:
            raise ValueError(f"assumption {l} out of range 1..{n_vars}")

    m = len(clause_list)
    cl_ptr = np.zeros(m + 1, dtype=np.int64)
    for i, lits in enumerate(clause_list):
        cl_ptr[i + 1] = cl_ptr[i] + len(lits)
    cl_lits = np.empty(cl_ptr[-1], dtype=np.int64)
    pos = 0
    for lits in clause_list:
        for l in lits:
            cl_lits[pos] = l
            pos += 1
    occ_n = np.zeros(n_vars + 2, dtype=np.int64)
    for lits in clause_list:
        for l in lits:
            occ_n[abs(l) + 1] += 1
    occ_ptr = np.cumsum(occ_n)
    occ_cid = np.empty(occ_ptr[-1], dtype=np.int64)
    occ_val = np.empty(occ_ptr[-1], dtype=np.int8)
    fill = occ_ptr.copy()
    for cid, lits in enumerate(clause_list):
        for l in lits:
            v = abs(l)
            occ_cid[fill[v]] = cid
            occ_val[fill[v]] = 1 if l > 0 else 0
            fill[v] += 1

    assign = np.full(n_vars + 1, -1, dtype=np.int8)
    sat = np.zeros(m, dtype=np.uint8)
    n_un = np.array([len(lits) for lits in clause_list] or [0],
                    dtype=np.int64)[:m] if m else np.zeros(0, dtype=np.int64)
    cap = int(cl_ptr[-1]) + n_vars + len(units) + 8
    trail = np.empty(n_vars + 1, dtype=np.int64)
    strail = np.empty(m, dtype=np.int64)
    ctrail = np.empty(cap, dtype=np.int64)
    queue = np.empty(cap, dtype=np.int64)
    tops = np.zeros(3, dtype=np.int64)
    cstamp = np.zeros(m, dtype=np.int64)
    vstamp = np.zeros(n_vars + 1, dtype=np.int64)
    freq = np.zeros(n_vars + 1, dtype=np.int64)
    bfs = np.empty(m, dtype=np.int64)
    stamp_box = [0]
    cache = {}
    deadline = t0 + max_seconds if max_seconds else None

    def run_bcp(lits):
        qn = len(lits)
        for i, l in enumerate(lits):
            queue[i] = l
        return bool(_bcp(queue, qn, assign, sat, n_un, cl_ptr, cl_lits,
                         occ_ptr, occ_cid, occ_val, trail, strail, ctrail,
                         tops))

    def components(active):
        stamp_box[0] += 1
        k = len(active)
        out_cids = np.empty(k, dtype=np.int64)
        out_cptr = np.empty(k + 1, dtype=np.int64)
        out_vars = np.empty(n_vars + 1, dtype=np.int64)
        out_vptr = np.empty(k + 2, dtype=np.int64)
        out_branch = np.empty(k + 1, dtype=np.int64)
        nc = _split(active, assign, sat, cl_ptr, cl_lits, occ_ptr, occ_cid,
                    cstamp, vstamp, stamp_box[0], var_order, use_freq, freq,
                    bfs, out_cids, out_cptr, out_vars, out_vptr, out_branch)
        out = []
        for i in range(nc):
            cids = out_cids[out_cptr[i]:out_cptr[i + 1]]
            vs = out_vars[out_vptr[i]:out_vptr[i + 1]]
            out.append((cids, vs, int(out_branch[i])))
        return out

    def implied_since(tlen):
        return [int(w) if assign[w] else -int(w)
                for w in trail[tlen:tops[0]]]

    def solve(comp):
        cids, vs, branch = comp
        key = (cids.tobytes(), vs.tobytes())
        node = cache.get(key)
        if node is not None:
            stats.cache_hits += 1
            return node
        stats.decisions += 1
        if deadline and stats.decisions % 1024 == 0 and \
                time.perf_counter() > deadline:
            raise LimitError(f"time budget {max_seconds}s exceeded")
        children = []
        for phase in (1, 0):
            t0_, t1_, t2_ = int(tops[0]), int(tops[1]), int(tops[2])
            conflict = run_bcp([branch if phase else -branch])
            if conflict:
                children.append(builder.FALSE)
            else:
                parts = [builder.literal(l) for l in implied_since(t0_)]
                active = cids[sat[cids] == 0]
                dead = False
                for sub in components(active):
                    r = solve(sub)
                    if r == builder.FALSE:
                        dead = True
                        break
                    parts.append(r)
                children.append(builder.FALSE if dead
                                else builder.and_node(parts))
            _unwind(t0_, t1_, t2_, assign, sat, n_un, trail, strail, ctrail,
                    tops)
        node = builder.or_node(branch, children)
        cache[key] = node
        return node

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 4 * n_vars + 1000))
    try:
        if contradiction:
            root = builder.FALSE
        elif run_bcp(units):
            root = builder.FALSE
        else:
            parts = [builder.literal(l) for l in implied_since(0)]
            active = np.nonzero(sat == 0)[0].astype(np.int64)
            dead = False
            for sub in components(active):
                r = solve(sub)
                if r == builder.FALSE:
                    dead = True
                    break
                parts.append(r)
            root = builder.FALSE if dead else builder.and_node(parts)
        graph = smoothed(builder.build(root), max_nodes)
    finally:
        sys.setrecursionlimit(old_limit)
    if check:
        validate(graph)
    stats.nodes = graph.node_count
    stats.seconds = time.perf_counter() - t0
    return graph
