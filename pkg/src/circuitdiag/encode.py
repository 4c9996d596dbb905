"""Weighted propositional encoding of circuits.

Flat encoding: per gate X, clauses for okX -> NormalBehavior(X) and
!okX -> (X <-> thetaX); health variables carry the prior, theta the broken
output distribution, primary inputs are uniform so the weighted model count
normalizes to 1.

Abstraction encoding: health variables only for top-level components; gates
strictly inside cones are encoded healthy; a cone root outputs the complement
of its healthy function when broken, weighted by the cone's computed failure
prior.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .abstraction import abstraction, cone_subsystem

ROLE_INPUT = "input"
ROLE_WIRE = "wire"
ROLE_OK = "ok"
ROLE_THETA = "theta"
ROLE_AUX = "aux"


class EncodeError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Fault-model parameters: prior of health and P(output=1 | broken)."""

    healthy_prior: float = 0.9
    broken_high: float = 0.5

    def __post_init__(self):
        for name in ("healthy_prior", "broken_high"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise EncodeError(f"{name} must be in (0, 1), got {v}")


class VarTable:
    """1-based variable ids with (role, owner) bookkeeping."""

    def __init__(self):
        self.roles = [None]  # index 0 unused
        self._wire = {}
        self._ok = {}
        self._theta = {}

    def add(self, role, owner):
        self.roles.append((role, owner))
        v = len(self.roles) - 1
        if role in (ROLE_WIRE, ROLE_INPUT):
            self._wire[owner] = v
        elif role == ROLE_OK:
            self._ok[owner] = v
        elif role == ROLE_THETA:
            self._theta[owner] = v
        return v

    def __len__(self):
        return len(self.roles) - 1

    def role(self, var):
        return self.roles[var]

    def wire_var(self, wire):
        return self._wire[wire]

    def has_wire(self, wire):
        return wire in self._wire

    def ok_var(self, component):
        return self._ok[component]

    def has_ok(self, component):
        return component in self._ok

    def theta_var(self, component):
        return self._theta[component]

    def components(self):
        """Health-carrying component ids, in encoding order."""
        return list(self._ok)

    def wires(self):
        return list(self._wire)


@dataclass
class WeightedCnf:
    """CNF clauses plus per-literal weights; the machine form of the joint
    distribution over wires and health variables."""

    clauses: list
    vars: VarTable
    weights: np.ndarray  # (n_vars+1, 2): column 0 positive, 1 negative

    @property
    def n_vars(self):
        return len(self.vars)

    def evidence_from_wires(self, wire_values):
        """Map {wire: bit} to {var: bit}."""
        return {self.vars.wire_var(w): int(b) for w, b in wire_values.items()}


def _equiv_clauses(x, kind, fans, invert=False):
    """CNF of (x <-> f(fans)) over positive fanin vars; invert complements f."""

    def xl(phase):
        return x if phase else -x

    if kind in ("NOT", "BUFFER"):
        a = fans[0]
        want = (kind == "BUFFER") ^ invert
        if want:
            return [[-x, a], [x, -a]]
        return [[-x, -a], [x, a]]
    if kind in ("AND", "NAND"):
        neg = (kind == "NAND") ^ invert
        one = xl(not neg)   # value of x when all fanins are 1
        zero = xl(neg)
        return [[zero, a] for a in fans] + [[one] + [-a for a in fans]]
    if kind in ("OR", "NOR"):
        neg = (kind == "NOR") ^ invert
        one = xl(not neg)
        zero = xl(neg)
        return [[one, -a] for a in fans] + [[zero] + [a for a in fans]]
    if kind in ("XOR", "XNOR"):
        flip = (kind == "XNOR") ^ invert
        out = []
        for bits in product((0, 1), repeat=len(fans)):
            f = (sum(bits) & 1) ^ flip
            clause = [(-a if b else a) for a, b in zip(fans, bits)]
            clause.append(xl(f))
            out.append(clause)
        return out
    raise EncodeError(f"unsupported gate kind {kind!r}")


def _fan_vars(vt, clauses, gate, guard_limit=4):
    """Fanin vars of a gate; wide XOR/XNOR gets a balanced aux tree so the
    direct parity expansion stays small."""
    fans = [vt.wire_var(w) for w in gate.fanin]
    if gate.kind in ("XOR", "XNOR") and len(fans) > guard_limit:
        level = fans
        while len(level) > 2:
            nxt = []
            for i in range(0, len(level) - 1, 2):
                aux = vt.add(ROLE_AUX, (gate.id, len(nxt)))
                clauses.extend(_equiv_clauses(aux, "XOR", level[i:i + 2]))
                nxt.append(aux)
            if len(level) % 2:
                nxt.append(level[-1])
            level = nxt
        return level
    return fans


def _guarded(clauses, guard_lit):
    return [[-guard_lit] + c for c in clauses]


def _weights_for(vt, params, cone_prior_of=None):
    w = np.ones((len(vt) + 1, 2), dtype=np.float64)
    for v in range(1, len(vt) + 1):
        role, owner = vt.role(v)
        if role == ROLE_INPUT:
            w[v] = (0.5, 0.5)
        elif role == ROLE_OK:
            if cone_prior_of and owner in cone_prior_of:
                p = cone_prior_of[owner]
                w[v] = (1.0 - p, p)
            else:
                w[v] = (params.healthy_prior, 1.0 - params.healthy_prior)
        elif role == ROLE_THETA:
            w[v] = (params.broken_high, 1.0 - params.broken_high)
    return w


def encode_flat(circuit, params=ModelParams()):
    """Full (baseline) encoding: every gate carries ok and theta variables."""
    vt = VarTable()
    for w in circuit.inputs:
        vt.add(ROLE_INPUT, w)
    for g in circuit.gates:
        vt.add(ROLE_WIRE, g.id)
    ok = {g.id: vt.add(ROLE_OK, g.id) for g in circuit.gates}
    th = {g.id: vt.add(ROLE_THETA, g.id) for g in circuit.gates}
    clauses = []
    for g in circuit.topo_gates():
        x = vt.wire_var(g.id)
        fans = _fan_vars(vt, clauses, g)
        clauses.extend(_guarded(_equiv_clauses(x, g.kind, fans), ok[g.id]))
        clauses.extend(_guarded([[-x, th[g.id]], [x, -th[g.id]]], -ok[g.id]))
    return WeightedCnf(clauses, vt, _weights_for(vt, params))


def encode_abstraction(circuit, view, params, cone_priors):
    """Hierarchical encoding of a circuit under an abstraction view.

    ``cone_priors`` maps every nontrivial cone root of the view to its
    failure probability (see :func:`cone_prior`).
    """
    for root in view.cones:
        if root not in cone_priors:
            raise EncodeError(f"missing cone prior for {root!r}")
    vt = VarTable()
    for w in circuit.inputs:
        vt.add(ROLE_INPUT, w)
    for g in circuit.gates:
        vt.add(ROLE_WIRE, g.id)
    ok = {}
    th = {}
    members = [c for c in view.abstraction if circuit.has_gate(c)]
    for comp in members:
        ok[comp] = vt.add(ROLE_OK, comp)
    for comp in members:
        if comp not in view.cones:
            th[comp] = vt.add(ROLE_THETA, comp)
    clauses = []
    for g in circuit.topo_gates():
        x = vt.wire_var(g.id)
        fans = _fan_vars(vt, clauses, g)
        if g.id in view.cones:
            clauses.extend(_guarded(_equiv_clauses(x, g.kind, fans), ok[g.id]))
            clauses.extend(_guarded(_equiv_clauses(x, g.kind, fans, invert=True),
                                    -ok[g.id]))
        elif g.id in ok:
            clauses.extend(_guarded(_equiv_clauses(x, g.kind, fans), ok[g.id]))
            clauses.extend(_guarded([[-x, th[g.id]], [x, -th[g.id]]],
                                    -ok[g.id]))
        else:
            clauses.extend(_equiv_clauses(x, g.kind, fans))
    prior_of = {r: cone_priors[r] for r in view.cones}
    return WeightedCnf(clauses, vt, _weights_for(vt, params, prior_of))


def encode_healthy(circuit):
    """Health-free encoding: every gate constrained to its function."""
    vt = VarTable()
    for w in circuit.inputs:
        vt.add(ROLE_INPUT, w)
    for g in circuit.gates:
        vt.add(ROLE_WIRE, g.id)
    clauses = []
    for g in circuit.topo_gates():
        fans = _fan_vars(vt, clauses, g)
        clauses.extend(_equiv_clauses(vt.wire_var(g.id), g.kind, fans))
    return WeightedCnf(clauses, vt, _weights_for(vt, ModelParams()))


def cone_prior(circuit, view, root, params=ModelParams()):
    """Failure probability of the cone rooted at ``root``: the probability,
    under uniform cone inputs, that the faulty-capable subsystem disagrees
    with the healthy one.  Computed bottom-up, inner cones first."""
    from . import compiler  # deferred: compiler is a heavier import

    sub = cone_subsystem(view, root)
    sview = abstraction(sub, max_cone_inputs=view.max_cone_inputs)
    inner = {r: cone_prior(sub, sview, r, params) for r in sview.cones}
    wcnf = encode_abstraction(sub, sview, params, inner)
    vt = wcnf.vars
    clauses = list(wcnf.clauses)
    # healthy twin sharing the input variables
    hw = {}
    for w in sub.inputs:
        hw[w] = vt.wire_var(w)
    for g in sub.topo_gates():
        hw[g.id] = vt.add(ROLE_AUX, ("healthy", g.id))
    for g in sub.topo_gates():
        fans = [hw[w] for w in g.fanin]
        if g.kind in ("XOR", "XNOR") and len(fans) > 4:
            level = fans
            while len(level) > 2:
                nxt = []
                for i in range(0, len(level) - 1, 2):
                    aux = vt.add(ROLE_AUX, ("healthy", g.id, len(nxt)))
                    clauses.extend(_equiv_clauses(aux, "XOR", level[i:i + 2]))
                    nxt.append(aux)
                if len(level) % 2:
                    nxt.append(level[-1])
                level = nxt
            fans = level
        clauses.extend(_equiv_clauses(hw[g.id], g.kind, fans))
    xor_out = vt.add(ROLE_AUX, "disagree")
    clauses.extend(_equiv_clauses(xor_out, "XOR",
                                  [vt.wire_var(root), hw[root]]))
    weights = np.ones((len(vt) + 1, 2), dtype=np.float64)
    weights[:wcnf.weights.shape[0]] = wcnf.weights
    joint = WeightedCnf(clauses, vt, weights)
    ddnnf = compiler.compile_wcnf(joint)
    p = compiler.evaluate(ddnnf, weights, {xor_out: 1})
    return min(max(float(p), 0.0), 1.0)


def cone_failure_priors(circuit, view, params=ModelParams()):
    """Priors for every nontrivial cone of the view; the preprocessing
    product consumed by :func:`encode_abstraction`."""
    return {root: cone_prior(circuit, view, root, params)
            for root in view.cones}


# -- DIMACS + weight sidecar ------------------------------------------------

def to_dimacs(wcnf, comments=True):
    """Render (cnf_text, weights_text); weights lines are `w var pos neg`."""
    lines = [f"p cnf {wcnf.n_vars} {len(wcnf.clauses)}"]
    if comments:
        for v in range(1, wcnf.n_vars + 1):
            role, owner = wcnf.vars.role(v)
            lines.insert(v - 1, f"c var {v} {role} {owner}")
    for c in wcnf.clauses:
        lines.append(" ".join(str(l) for l in c) + " 0")
    wlines = []
    for v in range(1, wcnf.n_vars + 1):
        wlines.append(f"w {v} {wcnf.weights[v, 0]:.12g} {wcnf.weights[v, 1]:.12g}")
    return "\n".join(lines) + "\n", "\n".join(wlines) + "\n"


def read_dimacs(cnf_text, weights_text=None):
    """Parse a DIMACS file plus optional weight sidecar.

    Returns (n_vars, clauses, weights); weights default to 1/1.
    """
    n_vars = None
    clauses = []
    for raw in cnf_text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise EncodeError(f"bad DIMACS header: {line!r}")
            n_vars = int(parts[2])
            continue
        lits = [int(t) for t in line.split()]
        if lits and lits[-1] == 0:
            lits = lits[:-1]
        if lits:
            clauses.append(lits)
    if n_vars is None:
        raise EncodeError("missing DIMACS p-line")
    weights = np.ones((n_vars + 1, 2), dtype=np.float64)
    if weights_text:
        for raw in weights_text.splitlines():
            line = raw.strip()
            if not line or not line.startswith("w"):
                continue
            _, v, pos, neg = line.split()
            weights[int(v)] = (float(pos), float(neg))
    return n_vars, clauses, weights
