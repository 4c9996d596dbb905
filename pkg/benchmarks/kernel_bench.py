"""Benchmark the d-DNNF traversal kernels: numba @njit versus the plain
Python fallback (the path CIRCUITDIAG_NO_NUMBA=1 selects).

Usage: python benchmarks/kernel_bench.py [--n 32] [--repeat 20]
"""
import argparse
import time

import numpy as np

from circuitdiag import compiler, kernels
from circuitdiag.encode import encode_flat
from circuitdiag.gen import GenSpec, generate_circuit


def run_passes(g, weights, ev, evaluate, backprop, gather, repeat):
    pr = np.zeros((g.n_vars + 1, 2))
    ex = np.zeros((g.n_vars + 1, 2), dtype=np.uint8)
    t0 = time.perf_counter()
    for _ in range(repeat):
        evaluate(g.kind, g.lit, g.child_ptr, g.children, weights, ev,
                 g.values, g.sat)
        backprop(g.kind, g.child_ptr, g.children, g.values, g.sat,
                 g.deriv, g.ctx, g.root)
        pr[:] = 0
        ex[:] = 0
        gather(g.kind, g.lit, g.values, g.sat, g.deriv, g.ctx, pr, ex)
    return (time.perf_counter() - t0) / repeat, float(g.values[g.root])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--seed", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    circuit = generate_circuit(GenSpec(args.n, 25, 5, args.seed))
    wcnf = encode_flat(circuit)
    print(f"circuit: {circuit.name} ({len(circuit.gates)} gates, "
          f"{wcnf.n_vars} vars)")
    t0 = time.perf_counter()
    g = compiler.compile_wcnf(wcnf)
    print(f"compiled: {g.node_count} nodes, {g.edge_count} edges "
          f"in {time.perf_counter() - t0:.2f}s "
          f"(numba={'on' if kernels.USING_NUMBA else 'off'})")

    ev = np.full(g.n_vars + 1, -1, dtype=np.int8)
    for w in list(circuit.inputs) + list(circuit.outputs):
        ev[wcnf.vars.wire_var(w)] = 0

    if kernels.USING_NUMBA:
        # warm the jit before timing
        run_passes(g, wcnf.weights, ev, kernels.evaluate_pass,
                   kernels.backprop_pass, kernels.gather_marginals, 1)
        jit_t, jit_v = run_passes(g, wcnf.weights, ev, kernels.evaluate_pass,
                                  kernels.backprop_pass,
                                  kernels.gather_marginals, args.repeat)
        print(f"numba kernels:   {jit_t * 1e3:8.2f} ms/query")
    else:
        jit_t = None
    py_t, py_v = run_passes(g, wcnf.weights, ev, kernels.evaluate_pass_py,
                            kernels.backprop_pass_py,
                            kernels.gather_marginals_py,
                            max(1, args.repeat // 10))
    print(f"python fallback: {py_t * 1e3:8.2f} ms/query")
    if jit_t:
        print(f"speedup: {py_t / jit_t:.1f}x (results match: "
              f"{abs(py_v - jit_v) < 1e-12})")


if __name__ == "__main__":
    main()
