"""Gate-level combinational circuit model.

Provides the ``Circuit``/``Gate`` data structures, a parser and renderer for
the classic .bench netlist dialect, deterministic fault simulation (the
measurement oracle used by the benchmark harness), and depth levels.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

GATE_KINDS = ("AND", "OR", "NAND", "NOR", "NOT", "BUFFER", "XOR", "XNOR")
_UNARY = {"NOT", "BUFFER"}
_KIND_ALIASES = {"BUF": "BUFFER", "BUFF": "BUFFER"}


class CircuitError(ValueError):
    """Structural problem with a circuit (bad wiring, cycle, arity)."""


class BenchParseError(CircuitError):
    """Syntax error in a .bench netlist; carries line and column."""

    def __init__(self, msg, line, column=1):
        super().__init__(f"line {line}, col {column}: {msg}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Gate:
    """A gate named by its output wire."""

    id: str
    kind: str
    fanin: tuple[str, ...]


@dataclass(frozen=True)
class FaultScenario:
    faulty: frozenset[str]
    input_vector: dict[str, int]
    expected_outputs: dict[str, int]


class Circuit:
    """Immutable combinational circuit.

    Every wire is either a primary input or the output of exactly one gate.
    Instances are safe to share across threads; all methods are read-only.
    """

    def __init__(self, name, inputs, outputs, gates):
        self.name = name
        self.inputs = tuple(inputs)
        self.outputs = tuple(outputs)
        self.gates = tuple(gates)
        self._input_set = frozenset(self.inputs)
        self._gate_by_id = {}
        for g in self.gates:
            if g.id in self._gate_by_id or g.id in self.inputs:
                raise CircuitError(f"duplicate definition of wire {g.id!r}")
            self._gate_by_id[g.id] = g
        self._validate()
        self._topo = self._topo_sort()
        # wire -> gates consuming it, in definition order
        self._fanout = {w: [] for w in self.wires()}
        for g in self.gates:
            for w in g.fanin:
                self._fanout[w].append(g.id)

    def _validate(self):
        seen_inputs = set()
        for w in self.inputs:
            if w in seen_inputs:
                raise CircuitError(f"duplicate input {w!r}")
            seen_inputs.add(w)
        for g in self.gates:
            if g.kind not in GATE_KINDS:
                raise CircuitError(f"unknown gate kind {g.kind!r} for {g.id!r}")
            if g.kind in _UNARY and len(g.fanin) != 1:
                raise CircuitError(f"{g.kind} gate {g.id!r} must have exactly 1 fanin")
            if g.kind not in _UNARY and len(g.fanin) < 1:
                raise CircuitError(f"gate {g.id!r} has empty fanin")
            for w in g.fanin:
                if w not in seen_inputs and w not in self._gate_by_id:
                    raise CircuitError(f"undefined wire {w!r} in fanin of {g.id!r}")
        for w in self.outputs:
            if w not in seen_inputs and w not in self._gate_by_id:
                raise CircuitError(f"undefined output wire {w!r}")

    def _topo_sort(self):
        order = []
        placed = set(self.inputs)
        pending = list(self.gates)
        while pending:
            rest = []
            progressed = False
            for g in pending:
                if all(w in placed for w in g.fanin):
                    order.append(g)
                    placed.add(g.id)
                    progressed = True
                else:
                    rest.append(g)
            if not progressed:
                cyc = ", ".join(g.id for g in rest[:5])
                raise CircuitError(f"cycle detected involving {cyc}")
            pending = rest
        return tuple(order)

    # -- read-only views ---------------------------------------------------

    def wires(self):
        """All wire names: inputs in declared order, then gates in definition order."""
        return list(self.inputs) + [g.id for g in self.gates]

    def is_input(self, wire):
        return wire in self._input_set

    def gate(self, wire):
        return self._gate_by_id[wire]

    def has_gate(self, wire):
        return wire in self._gate_by_id

    def gate_ids(self):
        return [g.id for g in self.gates]

    def topo_gates(self):
        return self._topo

    def consumers(self, wire):
        """Gate ids that take ``wire`` as a fanin (the wire's fanout)."""
        return list(self._fanout[wire])

    def __len__(self):
        return len(self.gates)

    def __repr__(self):
        return (f"Circuit({self.name!r}, {len(self.inputs)} in, "
                f"{len(self.outputs)} out, {len(self.gates)} gates)")


_GATE_FUNCS = {
    "AND": lambda vals: int(all(vals)),
    "OR": lambda vals: int(any(vals)),
    "NAND": lambda vals: int(not all(vals)),
    "NOR": lambda vals: int(not any(vals)),
    "NOT": lambda vals: 1 - vals[0],
    "BUFFER": lambda vals: vals[0],
    "XOR": lambda vals: sum(vals) & 1,
    "XNOR": lambda vals: 1 - (sum(vals) & 1),
}


def eval_gate(kind, vals):
    return _GATE_FUNCS[kind](vals)


_LINE_RE = re.compile(r"^\s*(INPUT|OUTPUT)\s*\(\s*([^\s()]+)\s*\)\s*$", re.IGNORECASE)
_GATE_RE = re.compile(
    r"^\s*([^\s=()]+)\s*=\s*([A-Za-z]+)\s*\(\s*([^()]*?)\s*\)\s*$")


def parse_bench(text, name="circuit"):
    """Parse a .bench netlist into a :class:`Circuit`.

    Grammar: ``INPUT(x)``, ``OUTPUT(x)``, ``x = KIND(a, b, ...)``; kinds are
    case-insensitive (BUF/BUFF accepted for BUFFER); ``#`` starts a comment.
    """
    inputs, outputs, gates = [], [], []
    defined = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if m:
            keyword, wire = m.group(1).upper(), m.group(2)
            if keyword == "INPUT":
                if wire in defined:
                    raise BenchParseError(f"duplicate definition of {wire!r}", lineno)
                inputs.append(wire)
                defined.add(wire)
            else:
                outputs.append(wire)
            continue
        m = _GATE_RE.match(line)
        if m:
            out, kind, args = m.group(1), m.group(2).upper(), m.group(3)
            kind = _KIND_ALIASES.get(kind, kind)
            if kind not in GATE_KINDS:
                raise BenchParseError(f"unknown gate kind {m.group(2)!r}", lineno,
                                      line.index("=") + 2)
            fanin = tuple(w.strip() for w in args.split(",") if w.strip())
            if not fanin:
                raise BenchParseError(f"gate {out!r} has no fanin", lineno)
            if out in defined:
                raise BenchParseError(f"duplicate definition of {out!r}", lineno)
            gates.append(Gate(out, kind, fanin))
            defined.add(out)
            continue
        col = len(raw) - len(raw.lstrip()) + 1
        raise BenchParseError(f"cannot parse {line!r}", lineno, col)
    try:
        return Circuit(name, inputs, outputs, gates)
    except BenchParseError:
        raise
    except CircuitError as exc:
        raise CircuitError(f"{name}: {exc}") from exc


def render_bench(circuit, header=None):
    """Render the canonical .bench form: inputs, outputs, gates in topo order."""
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.extend(f"INPUT({w})" for w in circuit.inputs)
    lines.extend(f"OUTPUT({w})" for w in circuit.outputs)
    for g in circuit.topo_gates():
        lines.append(f"{g.id} = {g.kind}({', '.join(g.fanin)})")
    return "\n".join(lines) + "\n"


def evaluate(circuit, input_vector):
    """Healthy evaluation: value of every wire given the primary inputs."""
    vals = {}
    for w in circuit.inputs:
        if w not in input_vector:
            raise CircuitError(f"input vector missing {w!r}")
        vals[w] = int(input_vector[w])
    for g in circuit.topo_gates():
        vals[g.id] = eval_gate(g.kind, [vals[w] for w in g.fanin])
    return vals


def simulate(circuit, input_vector, faulty=()):
    """Fault simulation: the ground-truth measurement oracle.

    The healthy circuit is evaluated first; then each faulty gate, in
    decreasing depth order (ties by ascending gate id), has its output
    flipped relative to its currently computed value and the change is
    propagated forward.  Flipped gates stay pinned at their flipped value.
    Returns a value for every wire.
    """
    for g in faulty:
        if not circuit.has_gate(g):
            raise CircuitError(f"unknown gate id {g!r} in fault set")
    vals = evaluate(circuit, input_vector)
    if not faulty:
        return vals
    depth = depth_levels(circuit)
    order = sorted(faulty, key=lambda g: (-depth[g], g))
    pinned = set()
    for g in order:
        vals[g] = 1 - vals[g]
        pinned.add(g)
        for h in circuit.topo_gates():
            if h.id not in pinned:
                vals[h.id] = eval_gate(h.kind, [vals[w] for w in h.fanin])
    return vals


def depth_levels(circuit):
    """Depth level per gate: output gates are 1, otherwise 1 + shortest
    forward path to any output gate.  Gates that cannot reach an output get
    level ``len(gates) + 1`` (deeper than everything)."""
    out_gates = [w for w in circuit.outputs if circuit.has_gate(w)]
    levels = {}
    frontier = list(dict.fromkeys(out_gates))
    for g in frontier:
        levels[g] = 1
    while frontier:
        nxt = []
        for gid in frontier:
            for w in circuit.gate(gid).fanin:
                if circuit.has_gate(w) and w not in levels:
                    levels[w] = levels[gid] + 1
                    nxt.append(w)
        frontier = nxt
    fallback = len(circuit.gates) + 1
    for g in circuit.gates:
        levels.setdefault(g.id, fallback)
    return levels
