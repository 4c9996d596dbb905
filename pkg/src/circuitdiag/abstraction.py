"""Structural abstraction of a circuit: dominators, cones, thresholded views.

A component X dominates Y when every path from Y to a circuit output passes
through X.  The abstraction is the set of gates not strictly dominated by any
other gate; each abstraction member roots a (possibly trivial) cone holding
the gates it dominates.  Cones above a fan-in threshold can be destroyed,
which promotes their members into the abstraction while surviving inner
cones are re-identified.
"""
from __future__ import annotations

from dataclasses import dataclass

from .circuit import Circuit, CircuitError, depth_levels

VIRTUAL_ROOT = "__collector__"


@dataclass(frozen=True)
class Cone:
    root: str
    members: frozenset[str]
    inputs: tuple[str, ...]

    def __repr__(self):
        return f"Cone({self.root}, |D|={len(self.members)}, |I|={len(self.inputs)})"


class AbstractionView:
    """Dominator/cone structure of a circuit.

    ``abstraction`` lists the top-level components in canonical wire order;
    ``cones`` maps each nontrivial maximal cone root to its :class:`Cone`.
    The view is immutable and shareable.
    """

    def __init__(self, circuit, abstraction, cones, idom, dom_children,
                 virtual_root, max_cone_inputs):
        self.circuit = circuit
        self.abstraction = tuple(abstraction)
        self.cones = dict(cones)
        self.depth = depth_levels(circuit)
        self.virtual_root = virtual_root
        self.max_cone_inputs = max_cone_inputs
        self._idom = idom
        self._dom_children = dom_children
        self._abstraction_set = frozenset(self.abstraction)
        self._member_root = {}
        for root, cone in self.cones.items():
            for m in cone.members:
                self._member_root[m] = root

    def is_cone_root(self, gate_id):
        return gate_id in self.cones

    def enclosing_cone(self, gate_id):
        """Root of the maximal cone whose members include ``gate_id``, or None."""
        return self._member_root.get(gate_id)

    def top_component(self, gate_id):
        """The abstraction member whose (possibly trivial) cone holds ``gate_id``."""
        if gate_id in self._abstraction_set:
            return gate_id
        return self._member_root.get(gate_id)

    def dominated_set(self, gate_id):
        """All gates dominated by ``gate_id`` (including itself)."""
        out = []
        stack = [gate_id]
        while stack:
            g = stack.pop()
            out.append(g)
            stack.extend(self._dom_children.get(g, ()))
        return out

    def __repr__(self):
        return (f"AbstractionView(|A|={len(self.abstraction)}, "
                f"cones={len(self.cones)})")


def _dominators(circuit):
    """Immediate dominators on the reversed gate graph rooted at the output
    collector.  Returns (root, idom map, reachable set)."""
    out_gates = []
    for w in circuit.outputs:
        if circuit.has_gate(w) and w not in out_gates:
            out_gates.append(w)
    if len(out_gates) == 1:
        root = out_gates[0]
        root_succ = []
    else:
        root = VIRTUAL_ROOT
        root_succ = out_gates

    def succs(n):
        if n == VIRTUAL_ROOT:
            return root_succ
        out = []
        seen = set()
        for w in circuit.gate(n).fanin:
            if circuit.has_gate(w) and w not in seen:
                seen.add(w)
                out.append(w)
        return out

    # reverse postorder from root (iterative DFS)
    rpo = []
    state = {root: 0}
    stack = [(root, iter(succs(root)))]
    while stack:
        node, it = stack[-1]
        advanced = False
        for s in it:
            if s not in state:
                state[s] = 0
                stack.append((s, iter(succs(s))))
                advanced = True
                break
        if not advanced:
            stack.pop()
            rpo.append(node)
    rpo.reverse()
    index = {n: i for i, n in enumerate(rpo)}
    reachable = set(rpo)

    preds = {n: [] for n in rpo}
    for g in circuit.gates:
        if g.id not in reachable:
            continue
        for c in circuit.consumers(g.id):
            if c in reachable and g.id in reachable:
                preds[g.id].append(c)
    if root == VIRTUAL_ROOT:
        for g in root_succ:
            preds[g].append(VIRTUAL_ROOT)
    else:
        # output wires may also feed gates; the root keeps no predecessors
        preds[root] = []

    idom = {root: root}

    def intersect(a, b):
        while a != b:
            while index[a] > index[b]:
                a = idom[a]
            while index[b] > index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for n in rpo[1:]:
            new = None
            for p in preds[n]:
                if p in idom:
                    new = p if new is None else intersect(new, p)
            if new is not None and idom.get(n) != new:
                idom[n] = new
                changed = True
    return root, idom, reachable


def abstraction(circuit, max_cone_inputs=None):
    """Compute the :class:`AbstractionView` of a circuit.

    ``max_cone_inputs`` destroys every cone (at any nesting depth) whose
    input count exceeds it; 0 yields the trivial abstraction.
    """
    root, idom, reachable = _dominators(circuit)
    dom_children = {}
    for n, d in idom.items():
        if n != d:
            dom_children.setdefault(d, []).append(n)
    for k in dom_children:
        dom_children[k].sort()

    def subtree(g):
        out = []
        stack = [g]
        while stack:
            x = stack.pop()
            out.append(x)
            stack.extend(dom_children.get(x, ()))
        return out

    def cone_inputs(members):
        mset = set(members)
        inputs = []
        seen = set()
        for w in circuit.wires():
            if w in mset or w in seen:
                continue
            for m in mset:
                if w in circuit.gate(m).fanin:
                    inputs.append(w)
                    seen.add(w)
                    break
        return tuple(inputs)

    abstraction_members = set()
    cones = {}

    def place(g):
        """Classify gate g (a candidate top-level component)."""
        abstraction_members.add(g)
        sub = subtree(g)
        if len(sub) < 2:
            return
        inputs = cone_inputs(sub)
        if max_cone_inputs is not None and len(inputs) > max_cone_inputs:
            # destroyed: members surface, surviving inner cones re-identified
            for c in dom_children.get(g, ()):
                place(c)
        else:
            cones[g] = Cone(g, frozenset(sub), inputs)

    top = dom_children.get(root, [])
    if root != VIRTUAL_ROOT:
        # single-output system: the output gate itself is a top-level
        # component; its own cone is the whole system and is not reported
        abstraction_members.add(root)
    for g in top:
        place(g)
    # gates unreachable from any output are junk; surface them
    for g in circuit.gates:
        if g.id not in reachable:
            abstraction_members.add(g.id)

    order = [w for w in circuit.wires()
             if w in abstraction_members or w in cones]
    return AbstractionView(circuit, order, cones, idom, dom_children,
                           VIRTUAL_ROOT if root == VIRTUAL_ROOT else None,
                           max_cone_inputs)


def cone_subsystem(view, root):
    """Standalone circuit for the cone rooted at ``root``: inputs are the
    cone inputs, the only output is the root's wire, gates are the members.

    Abstraction members with trivial cones yield single-gate circuits.
    """
    circuit = view.circuit
    if root in view.cones:
        members = set(view.cones[root].members)
    elif root in view.abstraction and circuit.has_gate(root):
        members = set(view.dominated_set(root))
    else:
        raise CircuitError(f"{root!r} is not a cone root of this view")
    gates = [g for g in circuit.topo_gates() if g.id in members]
    mset = {g.id for g in gates}
    inputs = []
    seen = set()
    for g in gates:
        for w in g.fanin:
            if w not in mset and w not in seen:
                seen.add(w)
                inputs.append(w)
    wire_pos = {w: i for i, w in enumerate(circuit.wires())}
    inputs.sort(key=wire_pos.__getitem__)
    return Circuit(f"{circuit.name}.{root}", inputs, [root], gates)


def subview(view, root):
    """Abstraction of a cone's subsystem, inheriting the destroy threshold."""
    return abstraction(cone_subsystem(view, root),
                       max_cone_inputs=view.max_cone_inputs)


def format_cone_tree(view, indent=0):
    """Stable text form: one cone per line (root, |members|, |inputs|)."""
    lines = []
    if indent == 0:
        lines.append("abstraction: " + " ".join(view.abstraction))
    for root in view.abstraction:
        if root not in view.cones:
            continue
        cone = view.cones[root]
        lines.append("%scone %s members=%d inputs=%d"
                     % ("  " * indent, root, len(cone.members), len(cone.inputs)))
        lines.extend(format_cone_tree(subview(view, root), indent + 1))
    return lines if indent else "\n".join(lines) + "\n"
