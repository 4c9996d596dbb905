"""Hot traversal kernels over the flat d-DNNF node arrays.

Each pass is written once as a plain function over numpy arrays and compiled
with numba's @njit when available.  Set CIRCUITDIAG_NO_NUMBA=1 to force the
pure-Python path (used by the fallback benchmark and constrained installs).

Node kinds: 0=false, 1=true, 2=literal, 3=and, 4=or.  Nodes are in
topological order (children before parents).  Evidence is an int8 array per
variable: -1 unknown, 0/1 assigned.
"""
from __future__ import annotations

import os

import numpy as np

K_FALSE, K_TRUE, K_LIT, K_AND, K_OR = 0, 1, 2, 3, 4


def _evaluate_pass(kind, lit, child_ptr, children, weights, evidence,
                   values, sat):
    n = kind.shape[0]
    for i in range(n):
        k = kind[i]
        if k == K_LIT:
            l = lit[i]
            v = l if l > 0 else -l
            e = evidence[v]
            if e >= 0 and (e == 1) != (l > 0):
                values[i] = 0.0
                sat[i] = 0
            else:
                values[i] = weights[v, 0] if l > 0 else weights[v, 1]
                sat[i] = 1
        elif k == K_TRUE:
            values[i] = 1.0
            sat[i] = 1
        elif k == K_FALSE:
            values[i] = 0.0
            sat[i] = 0
        elif k == K_AND:
            acc = 1.0
            ok = 1
            for j in range(child_ptr[i], child_ptr[i + 1]):
                c = children[j]
                acc *= values[c]
                if sat[c] == 0:
                    ok = 0
            values[i] = acc
            sat[i] = ok
        else:  # K_OR
            acc = 0.0
            ok = 0
            for j in range(child_ptr[i], child_ptr[i + 1]):
                c = children[j]
                acc += values[c]
                if sat[c] == 1:
                    ok = 1
            values[i] = acc
            sat[i] = ok


def _backprop_pass(kind, child_ptr, children, values, sat, deriv, ctx, root):
    n = kind.shape[0]
    for i in range(n):
        deriv[i] = 0.0
        ctx[i] = 0
    deriv[root] = 1.0
    ctx[root] = sat[root]
    for i in range(n - 1, -1, -1):
        k = kind[i]
        if k == K_OR:
            d = deriv[i]
            c_ok = ctx[i]
            for j in range(child_ptr[i], child_ptr[i + 1]):
                c = children[j]
                deriv[c] += d
                if c_ok == 1 and sat[c] == 1:
                    ctx[c] = 1
        elif k == K_AND:
            d = deriv[i]
            c_ok = ctx[i]
            lo = child_ptr[i]
            hi = child_ptr[i + 1]
            zeros = 0
            prod_nz = 1.0
            for j in range(lo, hi):
                v = values[children[j]]
                if v == 0.0:
                    zeros += 1
                else:
                    prod_nz *= v
            for j in range(lo, hi):
                c = children[j]
                v = values[c]
                if zeros == 0:
                    sib = prod_nz / v
                elif zeros == 1 and v == 0.0:
                    sib = prod_nz
                else:
                    sib = 0.0
                deriv[c] += d * sib
                if c_ok == 1:
                    ctx[c] = 1


def _gather_marginals(kind, lit, values, sat, deriv, ctx, out_pr, out_exists):
    n = kind.shape[0]
    for i in range(n):
        if kind[i] == K_LIT:
            l = lit[i]
            v = l if l > 0 else -l
            col = 1 if l > 0 else 0
            out_pr[v, col] += deriv[i] * values[i]
            if ctx[i] == 1 and sat[i] == 1:
                out_exists[v, col] = 1


INF64 = np.int64(10 ** 9)


def _mc_pass(kind, lit, child_ptr, children, fault_var, mc):
    """Bottom-up minimum cardinality: negated un-exempted health literals
    count 1, or-nodes take the min, and-nodes the (capped) sum."""
    n = kind.shape[0]
    for i in range(n):
        k = kind[i]
        if k == K_LIT:
            l = lit[i]
            mc[i] = 1 if (l < 0 and fault_var[-l] == 1) else 0
        elif k == K_FALSE:
            mc[i] = INF64
        elif k == K_TRUE:
            mc[i] = 0
        elif k == K_AND:
            acc = np.int64(0)
            for j in range(child_ptr[i], child_ptr[i + 1]):
                acc += mc[children[j]]
                if acc > INF64:
                    acc = INF64
            mc[i] = acc
        else:
            best = INF64
            for j in range(child_ptr[i], child_ptr[i + 1]):
                c = children[j]
                if mc[c] < best:
                    best = mc[c]
            mc[i] = best


def _kbound_pass(kind, child_ptr, children, mc, kb, edge_keep, root, bound):
    """Top-down local bounds: or-nodes drop children above their bound and
    push the max bound to survivors; and-nodes push bound minus the
    siblings' mc sum.  edge_keep marks surviving or-edges."""
    n = kind.shape[0]
    for i in range(n):
        kb[i] = -INF64
    kb[root] = bound
    for i in range(n - 1, -1, -1):
        if kb[i] == -INF64:
            continue
        k = kind[i]
        if k == K_OR:
            for j in range(child_ptr[i], child_ptr[i + 1]):
                c = children[j]
                if mc[c] > kb[i]:
                    edge_keep[j] = 0
                else:
                    edge_keep[j] = 1
                    if kb[i] > kb[c]:
                        kb[c] = kb[i]
        elif k == K_AND:
            for j in range(child_ptr[i], child_ptr[i + 1]):
                c = children[j]
                cand = kb[i] - (mc[i] - mc[c])
                if cand > kb[c]:
                    kb[c] = cand


def _use_numba():
    if os.environ.get("CIRCUITDIAG_NO_NUMBA"):
        return False
    try:
        import numba  # noqa: F401
        return True
    except ImportError:
        return False


USING_NUMBA = _use_numba()


def jit(fn):
    """Apply @njit when numba is enabled, else return the plain function."""
    if USING_NUMBA:
        from numba import njit
        return njit(cache=True)(fn)
    return fn


# always-available references for the fallback benchmark
evaluate_pass_py = _evaluate_pass
backprop_pass_py = _backprop_pass
gather_marginals_py = _gather_marginals

evaluate_pass = jit(_evaluate_pass)
backprop_pass = jit(_backprop_pass)
gather_marginals = jit(_gather_marginals)
mc_pass = jit(_mc_pass)
kbound_pass = jit(_kbound_pass)
