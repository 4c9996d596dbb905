"""Command line interface.

Subcommands mirror the package surface: parse/abstract/clone for circuit
work, encode/compile for the CNF and d-DNNF interchange formats, diagnose
for single sessions, estimate for the cost-model sweep, gen for random
circuits, bench for batch experiments, and serve for the HTTP workbench API.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import compiler
from .abstraction import abstraction, format_cone_tree
from .circuit import CircuitError, parse_bench, render_bench
from .cloning import minimize_abstraction
from .costmodel import format_cost_table, select_abstraction
from .diagnose import (DiagnosisSession, SimulationOracle, System,
                       run_session)
from .dnnf import read_nnf, smoothed, validate, write_nnf
from .encode import ModelParams, encode_flat, read_dimacs, to_dimacs
from .gen import GenSpec, RNG_NAME, generate_circuit
from .harness import bench_run, load_config


def _read_circuit(path):
    text = Path(path).read_text()
    return parse_bench(text, Path(path).stem)


def _read_observation(arg):
    """wire=bit lines from a file, or inline `w1=1,w2=0`."""
    if "=" in arg and not Path(arg).exists():
        pairs = [p for p in arg.replace(",", "\n").splitlines() if p.strip()]
    else:
        pairs = [l for l in Path(arg).read_text().splitlines()
                 if l.strip() and not l.strip().startswith("#")]
    obs = {}
    for p in pairs:
        w, _, b = p.partition("=")
        obs[w.strip()] = int(b.strip())
    return obs


def cmd_parse(args):
    c = _read_circuit(args.netlist)
    sys.stdout.write(render_bench(c))
    return 0


def cmd_abstract(args):
    c = _read_circuit(args.netlist)
    view = abstraction(c, max_cone_inputs=args.max_cone_inputs)
    sys.stdout.write(format_cone_tree(view))
    return 0


def cmd_clone(args):
    c = _read_circuit(args.netlist)
    cloned, cmap = minimize_abstraction(c)
    out = Path(args.out or (Path(args.netlist).stem + ".cloned.bench"))
    out.write_text(render_bench(cloned))
    sidecar = out.with_suffix(".clonemap")
    sidecar.write_text("".join(f"{cl} {orig}\n" for cl, orig in cmap.items()))
    before = len(abstraction(c).abstraction)
    after = len(abstraction(cloned).abstraction)
    print(f"abstraction {before} -> {after} with {len(cmap)} clones")
    print(f"wrote {out} and {sidecar}")
    return 0


def cmd_encode(args):
    c = _read_circuit(args.netlist)
    params = ModelParams(args.healthy_prior, args.broken_high)
    wcnf = encode_flat(c, params)
    cnf_text, w_text = to_dimacs(wcnf)
    base = Path(args.out or Path(args.netlist).stem)
    cnf_path = base.with_suffix(".cnf")
    w_path = base.with_suffix(".w")
    cnf_path.write_text(cnf_text)
    w_path.write_text(w_text)
    print(f"wrote {cnf_path} ({wcnf.n_vars} vars, {len(wcnf.clauses)} "
          f"clauses) and {w_path}")
    return 0


def cmd_compile(args):
    cnf_text = Path(args.cnf).read_text()
    w_text = Path(args.weights).read_text() if args.weights else None
    n_vars, clauses, weights = read_dimacs(cnf_text, w_text)
    stats = compiler.CompileStats()
    graph = compiler.compile_cnf(n_vars, clauses, stats=stats,
                                 max_nodes=args.max_nodes,
                                 max_seconds=args.max_seconds, check=True)
    out = Path(args.out or (Path(args.cnf).stem + ".nnf"))
    out.write_text(write_nnf(graph))
    wmc = compiler.evaluate(graph, weights, {})
    print(f"wrote {out}: {stats}; weighted count {wmc:.12g}")
    return 0


def cmd_nnfcheck(args):
    graph = smoothed(read_nnf(Path(args.nnf).read_text()))
    validate(graph)
    print(f"{args.nnf}: valid smooth d-DNNF, {graph.node_count} nodes")
    return 0


def cmd_diagnose(args):
    circuit = _read_circuit(args.netlist)
    obs = _read_observation(args.observation)
    params = ModelParams(args.healthy_prior, args.broken_high)
    system = System(circuit, mode=args.mode, params=params, clone=args.clone,
                    max_cone_inputs=args.max_cone_inputs,
                    max_seconds=args.max_seconds)
    session = DiagnosisSession(system, obs, heuristic=args.heuristic,
                               k=args.k, seed=args.seed)
    oracle = None
    if args.answers:
        answers = _read_observation(args.answers)
        oracle = type("MapOracle", (), {
            "measure": staticmethod(lambda w: answers[w])})
    elif args.faults:
        faults = set(args.faults.split(","))
        inputs = {w: obs[w] for w in circuit.inputs}
        oracle = SimulationOracle(circuit, faults, inputs)
    while True:
        session.advance()
        if session.status != "running":
            break
        wire, info = session.proposal()
        if oracle is None:
            print("no oracle given (use --faults or --answers) and the "
                  "session needs a measurement", file=sys.stderr)
            return 2
        value = oracle.measure(wire)
        snap = " ".join(f"{c}={p:.4f}"
                        for c, p in sorted(session.component_posteriors()
                                           .items()))
        print(f"measure {wire} -> {value}   "
              f"(entropy {info.get('wireEntropy', 0):.4f}) [{snap}]")
        session.submit(wire, value)
    print(f"status: {session.status}")
    if session.failure:
        print(f"reason: {session.failure}")
    print(f"cost: {session.cost}")
    print(f"faults: {' '.join(session.faults) if session.faults else '(none)'}")
    if args.transcript:
        Path(args.transcript).write_text(
            json.dumps(session.transcript, indent=2) + "\n")
    return 0 if session.status == "done" else 1


def cmd_estimate(args):
    c = _read_circuit(args.netlist)
    thresholds = [None]
    if args.thresholds:
        thresholds += [int(t) for t in args.thresholds.split(",")]
    view, rows = select_abstraction(c, thresholds)
    if args.csv:
        import csv as _csv
        with open(args.csv, "w", newline="") as fh:
            w = _csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    sys.stdout.write(format_cost_table(rows))
    best = min(rows, key=lambda r: r["edc"])
    thr = "all" if best["threshold"] is None else best["threshold"]
    print(f"best threshold: {thr} (EDC {best['edc']:.2f})")
    return 0


def cmd_gen(args):
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for idx in range(args.count):
        spec = GenSpec(args.n, args.p, args.i, args.seed + idx)
        circuit = generate_circuit(spec)
        view = abstraction(circuit)
        cloned, cmap = minimize_abstraction(circuit)
        path = outdir / f"{circuit.name}.bench"
        path.write_text(render_bench(circuit))
        manifest.append({
            "file": path.name,
            "n": spec.n, "p": spec.p, "i": spec.i, "seed": spec.seed,
            "rng": RNG_NAME,
            "gates": len(circuit.gates),
            "inputs": len(circuit.inputs),
            "outputs": len(circuit.outputs),
            "abstraction": len(view.abstraction),
            "clones": len(cmap),
            "abstraction_after_cloning": len(abstraction(cloned).abstraction),
            "treewidth": "not computed",
        })
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {args.count} circuits and manifest.json to {outdir}")
    return 0


def cmd_bench(args):
    cfg = load_config(Path(args.config).read_text())
    report = bench_run(cfg)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    if args.text:
        Path(args.text).write_text(report.to_text())
    if not args.csv and not args.text:
        sys.stdout.write(report.to_text())
    if not report.sound:
        print("soundness failures detected", file=sys.stderr)
        return 1
    return 0


def cmd_serve(args):
    from .service import main as serve_main
    serve_main(host=args.host, port=args.port,
               idle_timeout=args.idle_timeout)
    return 0


def _add_model_args(p):
    p.add_argument("--healthy-prior", type=float, default=0.9)
    p.add_argument("--broken-high", type=float, default=0.5)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="circuitdiag",
        description="sequential fault diagnosis of combinational circuits")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="validate and canonicalize a netlist")
    p.add_argument("netlist")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("abstract", help="print the abstraction and cone tree")
    p.add_argument("netlist")
    p.add_argument("--max-cone-inputs", type=int, default=None)
    p.set_defaults(func=cmd_abstract)

    p = sub.add_parser("clone", help="minimize the abstraction by cloning")
    p.add_argument("netlist")
    p.add_argument("--out")
    p.set_defaults(func=cmd_clone)

    p = sub.add_parser("encode", help="emit DIMACS CNF + weight sidecar")
    p.add_argument("netlist")
    p.add_argument("--out")
    _add_model_args(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("compile", help="compile DIMACS CNF to c2d-style .nnf")
    p.add_argument("cnf")
    p.add_argument("--weights")
    p.add_argument("--out")
    p.add_argument("--max-nodes", type=int, default=compiler.DEFAULT_MAX_NODES)
    p.add_argument("--max-seconds", type=float, default=None)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("nnfcheck", help="validate an .nnf file")
    p.add_argument("nnf")
    p.set_defaults(func=cmd_nnfcheck)

    p = sub.add_parser("diagnose", help="run one diagnosis session")
    p.add_argument("netlist")
    p.add_argument("--observation", required=True,
                   help="file of wire=bit lines, or inline w1=1,w2=0")
    p.add_argument("--mode", choices=("flat", "hierarchical"),
                   default="hierarchical")
    p.add_argument("--heuristic", choices=("fp", "ew", "random"),
                   default="fp")
    p.add_argument("--k", type=int, default=None,
                   help="fault cardinality bound for pruning")
    p.add_argument("--faults", help="comma list of gates: scripted oracle")
    p.add_argument("--answers", help="wire=bit file answering measurements")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clone", action="store_true")
    p.add_argument("--max-cone-inputs", type=int, default=None)
    p.add_argument("--max-seconds", type=float, default=None)
    p.add_argument("--transcript", help="write the JSON transcript here")
    _add_model_args(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("estimate", help="cost-model sweep over thresholds")
    p.add_argument("netlist")
    p.add_argument("--thresholds", help="comma list of max-cone-input values")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("gen", help="generate random circuits")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, default=25)
    p.add_argument("--i", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", default="generated")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="run a batch experiment config")
    p.add_argument("config")
    p.add_argument("--csv")
    p.add_argument("--text")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="start the HTTP session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8734)
    p.add_argument("--idle-timeout", type=float, default=1800.0)
    p.set_defaults(func=cmd_serve)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (CircuitError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
