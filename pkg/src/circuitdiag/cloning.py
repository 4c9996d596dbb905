"""Component cloning: shrink a circuit's abstraction without changing its
input-output function.

A clone of gate G takes over a subset of G's parents; with the parents
partitioned by enclosing cone, q-1 clones suffice to absorb G and all its
copies into cones.  Clones are named ``<original>__c<k>`` so the clone map is
recoverable from names alone.
"""
from __future__ import annotations

from .abstraction import abstraction
from .circuit import Circuit, CircuitError, Gate

CLONE_SEP = "__c"


class CloneMap:
    """Bidirectional clone bookkeeping; clone-of-clone flattens to the
    ultimate original."""

    def __init__(self):
        self._orig = {}
        self._clones = {}

    def add(self, clone_id, original_id):
        original_id = self.original(original_id)
        self._orig[clone_id] = original_id
        self._clones.setdefault(original_id, []).append(clone_id)

    def original(self, gate_id):
        return self._orig.get(gate_id, gate_id)

    def clones(self, original_id):
        return list(self._clones.get(self.original(original_id), ()))

    def siblings(self, gate_id):
        """The original and every clone of ``gate_id``'s family."""
        orig = self.original(gate_id)
        return [orig] + self.clones(orig)

    def is_clone(self, gate_id):
        return gate_id in self._orig

    def __len__(self):
        return len(self._orig)

    def items(self):
        return self._orig.items()

    @classmethod
    def from_names(cls, circuit):
        m = cls()
        for g in circuit.gates:
            if CLONE_SEP in g.id:
                base = g.id.rsplit(CLONE_SEP, 1)[0]
                if circuit.has_gate(base):
                    m.add(g.id, base)
        return m


def parents(circuit, gate_id):
    """Gates taking ``gate_id``'s output as an input, in definition order."""
    return [c for c in circuit.consumers(gate_id)]


def parent_partition(circuit, view, gate_id):
    """Partition of ``gate_id``'s parents: two parents share a subset iff a
    cone of the view contains both.  ``gate_id`` must be an abstraction
    member that is not a cone root."""
    if gate_id not in view.abstraction or view.is_cone_root(gate_id):
        raise CircuitError(f"{gate_id!r} is not a cloning candidate")
    groups = {}
    order = []
    for p in parents(circuit, gate_id):
        key = view.top_component(p)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(p)
    return [groups[k] for k in order]


def _next_clone_id(circuit, original_id):
    k = 1
    while circuit.has_gate(f"{original_id}{CLONE_SEP}{k}") or \
            f"{original_id}{CLONE_SEP}{k}" in circuit.inputs:
        k += 1
    return f"{original_id}{CLONE_SEP}{k}"


def clone(circuit, gate_id, parent_subset, clone_id=None):
    """Clone ``gate_id`` according to ``parent_subset``: the edges from the
    gate to those parents are redirected to a new gate with the same kind and
    fanin.  ``parent_subset`` must be a nonempty proper subset of the
    parents.  The circuit's input-output function is unchanged."""
    all_parents = parents(circuit, gate_id)
    subset = list(dict.fromkeys(parent_subset))
    if not subset or not set(subset) < set(all_parents):
        raise CircuitError(
            f"parent subset {subset!r} of {gate_id!r} must be a nonempty "
            f"proper subset of its parents {all_parents!r}")
    g = circuit.gate(gate_id)
    clone_id = clone_id or _next_clone_id(circuit, gate_id)
    new_gates = []
    in_subset = set(subset)
    for h in circuit.gates:
        if h.id in in_subset:
            h = Gate(h.id, h.kind,
                     tuple(clone_id if w == gate_id else w for w in h.fanin))
        new_gates.append(h)
        if h.id == gate_id:
            new_gates.append(Gate(clone_id, g.kind, g.fanin))
    return Circuit(circuit.name, circuit.inputs, circuit.outputs, new_gates)


def minimize_abstraction(circuit, max_passes=None):
    """Clone every candidate (abstraction member that is not a cone root)
    with q-1 clones per candidate until no reduction is possible.

    Candidates are processed in ascending gate-id order; the original keeps
    the lexicographically-first parent subset.  A cloning that fails to
    shrink the abstraction is reverted, which keeps the run monotone and the
    fixpoint loop terminating.  Returns the new circuit and the clone map.
    """
    cmap = CloneMap()
    current = circuit
    passes = 0
    while True:
        passes += 1
        view = abstraction(current)
        size = len(view.abstraction)
        progressed = False
        candidates = sorted(view.abstraction)
        for gid in candidates:
            # the view shifts as clonings are accepted; re-test candidacy
            if gid not in view.abstraction or view.is_cone_root(gid):
                continue
            psets = parent_partition(current, view, gid)
            if len(psets) < 2:
                continue
            ordered = sorted(psets, key=lambda s: tuple(sorted(s)))
            trial = current
            made = []
            for subset in ordered[1:]:
                cid = _next_clone_id(trial, cmap.original(gid))
                trial = clone(trial, gid, subset, cid)
                made.append(cid)
            new_view = abstraction(trial)
            reduction = size - len(new_view.abstraction)
            assert reduction >= 0, "cloning must never grow the abstraction"
            if reduction >= 1:
                current = trial
                for cid in made:
                    cmap.add(cid, gid)
                view = new_view
                size = len(view.abstraction)
                progressed = True
        if not progressed:
            break
        if max_passes is not None and passes >= max_passes:
            break
    return current, cmap
