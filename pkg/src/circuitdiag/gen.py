"""Random circuit and fault-scenario generation.

Circuits are composed from N building blocks: a percentage P of ten-gate
single-output cone blocks (bundled .bench fragments) and the rest single
gates from the {OR, NOR, AND, NAND, NOT, BUFFER} pool with fan-in up to I.
Blocks are placed in a random order and each input is wired to the output of
a distinct random predecessor; inputs that cannot be connected become
primary inputs.  Sink outputs become primary outputs.

Everything is deterministic given the seed (numpy PCG64 stream).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .circuit import Circuit, FaultScenario, Gate, parse_bench, simulate

log = logging.getLogger(__name__)

RNG_NAME = "numpy-PCG64"
GATE_POOL = ("OR", "NOR", "AND", "NAND", "NOT", "BUFFER")
TEMPLATE_COUNT = 8


@dataclass(frozen=True)
class GenSpec:
    """(N, P, I) formula: component count, percent cones, max gate fan-in."""

    n: int
    p: int
    i: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or not 0 <= self.p <= 100 or self.i < 1:
            raise ValueError(f"bad generator spec {self}")

    @property
    def cone_count(self):
        # round half up; python round() is banker's
        return int(self.p * self.n / 100.0 + 0.5)

    @property
    def total_gates(self):
        c = self.cone_count
        return (self.n - c) + 10 * c


def _load_templates():
    out = []
    for t in range(TEMPLATE_COUNT):
        text = resources.files("circuitdiag.data.templates") \
            .joinpath(f"t{t}.bench").read_text()
        out.append(parse_bench(text, f"t{t}"))
    return out


_TEMPLATES = None


def cone_templates():
    global _TEMPLATES
    if _TEMPLATES is None:
        _TEMPLATES = _load_templates()
    return _TEMPLATES


def generate_circuit(spec):
    """Generate a random combinational circuit for a :class:`GenSpec`."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    templates = cone_templates()
    c = spec.cone_count
    kinds = [("cone", int(t)) for t in rng.integers(0, TEMPLATE_COUNT, size=c)]
    kinds += [("gate", int(g)) for g in
              rng.integers(0, len(GATE_POOL), size=spec.n - c)]
    order = rng.permutation(len(kinds))
    placed = [kinds[i] for i in order]

    gates = []
    primary_inputs = []
    pool = []  # output wires of already-placed components
    consumed = set()

    def connect(count):
        chosen = []
        avail = [w for w in pool]
        take = min(count, len(avail))
        if take:
            idx = rng.choice(len(avail), size=take, replace=False)
            chosen = [avail[int(i)] for i in sorted(int(i) for i in idx)]
        while len(chosen) < count:
            pi = f"pi{len(primary_inputs)}"
            primary_inputs.append(pi)
            chosen.append(pi)
        return chosen

    for pos, (what, which) in enumerate(placed):
        if what == "gate":
            kind = GATE_POOL[which]
            fan_n = 1 if kind in ("NOT", "BUFFER") else \
                int(rng.integers(2, spec.i + 1)) if spec.i >= 2 else 1
            fanin = connect(fan_n)
            out = f"g{pos}"
            gates.append(Gate(out, kind, tuple(fanin)))
            consumed.update(fanin)
            pool.append(out)
        else:
            tpl = templates[which]
            fanin = connect(len(tpl.inputs))
            rename = dict(zip(tpl.inputs, fanin))
            prefix = f"c{pos}t{which}_"
            for w in [g.id for g in tpl.gates]:
                rename[w] = prefix + w
            for g in tpl.topo_gates():
                gates.append(Gate(rename[g.id], g.kind,
                                  tuple(rename[w] for w in g.fanin)))
            consumed.update(fanin)
            pool.append(rename[tpl.outputs[0]])

    outputs = [w for w in pool if w not in consumed]
    name = f"gen_n{spec.n}_p{spec.p}_i{spec.i}_s{spec.seed}"
    return Circuit(name, primary_inputs, outputs, gates)


def generate_scenarios(circuit, cardinality, count, seed, max_tries=256):
    """Random fault scenarios with an abnormal test vector each.

    Scenarios whose fault set produces no abnormal vector within
    ``max_tries`` draws are skipped (logged), so fewer than ``count`` may
    return.
    """
    if cardinality > len(circuit.gates):
        raise ValueError("cardinality exceeds gate count")
    rng = np.random.Generator(np.random.PCG64(seed))
    gate_ids = [g.id for g in circuit.gates]
    out = []
    skipped = 0
    for _ in range(count):
        idx = rng.choice(len(gate_ids), size=cardinality, replace=False)
        faulty = frozenset(gate_ids[int(i)] for i in idx)
        scen = _abnormal_scenario(circuit, faulty, rng, max_tries)
        if scen is None:
            skipped += 1
        else:
            out.append(scen)
    if skipped:
        log.warning("skipped %d scenarios with no abnormal test vector",
                    skipped)
    return out


def exhaustive_single_fault(circuit, seed, tests_per_gate=1, max_tries=256):
    """One (or more) scenarios per gate: the equal-prior single-fault mode."""
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    skipped = 0
    for g in circuit.gates:
        for _ in range(tests_per_gate):
            scen = _abnormal_scenario(circuit, frozenset([g.id]), rng,
                                      max_tries)
            if scen is None:
                skipped += 1
            else:
                out.append(scen)
    if skipped:
        log.warning("skipped %d single-fault scenarios", skipped)
    return out


def _abnormal_scenario(circuit, faulty, rng, max_tries):
    for _ in range(max_tries):
        bits = rng.integers(0, 2, size=len(circuit.inputs))
        vector = {w: int(b) for w, b in zip(circuit.inputs, bits)}
        healthy = simulate(circuit, vector, ())
        broken = simulate(circuit, vector, faulty)
        if any(healthy[o] != broken[o] for o in circuit.outputs):
            expected = {o: broken[o] for o in circuit.outputs}
            return FaultScenario(faulty, vector, expected)
    return None


def observation_of(circuit, scenario):
    """The abnormal observation a scenario presents to the diagnoser."""
    obs = dict(scenario.input_vector)
    obs.update(scenario.expected_outputs)
    return obs
