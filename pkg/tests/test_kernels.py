import numpy as np

from circuitdiag import compiler, kernels
from circuitdiag.encode import encode_flat
from oracles import random_test_circuit


def test_python_fallback_matches_active_kernels():
    """The plain-Python pass (the CIRCUITDIAG_NO_NUMBA path) and the active
    kernels produce identical values, derivatives, and existence flags."""
    import random
    rng = random.Random(12)
    c = random_test_circuit(rng, 6, 3)
    wc = encode_flat(c)
    g = compiler.compile_wcnf(wc)
    ev = np.full(g.n_vars + 1, -1, dtype=np.int8)
    ev[wc.vars.wire_var(c.inputs[0])] = 1
    ev[wc.vars.wire_var(c.gates[-1].id)] = 0

    n = g.node_count
    val_a = np.zeros(n)
    sat_a = np.zeros(n, dtype=np.uint8)
    kernels.evaluate_pass(g.kind, g.lit, g.child_ptr, g.children, wc.weights,
                          ev, val_a, sat_a)
    val_b = np.zeros(n)
    sat_b = np.zeros(n, dtype=np.uint8)
    kernels.evaluate_pass_py(g.kind, g.lit, g.child_ptr, g.children,
                             wc.weights, ev, val_b, sat_b)
    assert np.array_equal(val_a, val_b)
    assert np.array_equal(sat_a, sat_b)

    der_a = np.zeros(n)
    ctx_a = np.zeros(n, dtype=np.uint8)
    kernels.backprop_pass(g.kind, g.child_ptr, g.children, val_a, sat_a,
                          der_a, ctx_a, g.root)
    der_b = np.zeros(n)
    ctx_b = np.zeros(n, dtype=np.uint8)
    kernels.backprop_pass_py(g.kind, g.child_ptr, g.children, val_b, sat_b,
                             der_b, ctx_b, g.root)
    assert np.array_equal(der_a, der_b)
    assert np.array_equal(ctx_a, ctx_b)

    pr_a = np.zeros((g.n_vars + 1, 2))
    ex_a = np.zeros((g.n_vars + 1, 2), dtype=np.uint8)
    kernels.gather_marginals(g.kind, g.lit, val_a, sat_a, der_a, ctx_a,
                             pr_a, ex_a)
    pr_b = np.zeros((g.n_vars + 1, 2))
    ex_b = np.zeros((g.n_vars + 1, 2), dtype=np.uint8)
    kernels.gather_marginals_py(g.kind, g.lit, val_b, sat_b, der_b, ctx_b,
                                pr_b, ex_b)
    assert np.array_equal(pr_a, pr_b)
    assert np.array_equal(ex_a, ex_b)
