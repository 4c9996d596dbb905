"""Smooth deterministic decomposable NNF graphs and their queries.

Nodes live in flat topologically-ordered arrays (children before parents)
so the weighted evaluation / differentiation passes can run as compiled
kernels.  Alongside the float slots, boolean satisfiability/context slots
give exact zero tests for marginals (a marginal is zero iff no model
supports it), avoiding floating-point zero comparisons.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .kernels import K_AND, K_FALSE, K_LIT, K_OR, K_TRUE

_INF = np.int64(10 ** 9)


class LimitError(RuntimeError):
    """Node or time budget exceeded during compilation."""


class ValidationError(ValueError):
    """Structural d-DNNF property violated."""


class ReductionEmptyError(ValueError):
    """Cardinality bound below the minimum fault cardinality: the pruned
    graph would be empty."""


class NnfFormatError(ValueError):
    pass


class Ddnnf:
    """Flat smooth d-DNNF.  Query state (values/derivatives) lives on the
    instance; concurrent queries need one instance per thread."""

    def __init__(self, kind, lit, dvar, child_ptr, children, root, n_vars):
        self.kind = kind
        self.lit = lit
        self.dvar = dvar
        self.child_ptr = child_ptr
        self.children = children
        self.root = root
        self.n_vars = n_vars
        n = len(kind)
        self.values = np.zeros(n, dtype=np.float64)
        self.sat = np.zeros(n, dtype=np.uint8)
        self.deriv = np.zeros(n, dtype=np.float64)
        self.ctx = np.zeros(n, dtype=np.uint8)
        self._evaluated = False

    @property
    def node_count(self):
        return len(self.kind)

    @property
    def edge_count(self):
        return len(self.children)

    def node_children(self, i):
        return self.children[self.child_ptr[i]:self.child_ptr[i + 1]]

    def var_sets(self):
        """Mentioned-variable bitsets (python ints) per node."""
        sets = [0] * self.node_count
        for i in range(self.node_count):
            k = self.kind[i]
            if k == K_LIT:
                sets[i] = 1 << abs(int(self.lit[i]))
            elif k in (K_AND, K_OR):
                acc = 0
                for c in self.node_children(i):
                    acc |= sets[c]
                sets[i] = acc
        return sets

    def __repr__(self):
        return (f"Ddnnf(nodes={self.node_count}, edges={self.edge_count}, "
                f"vars={self.n_vars})")


class DdnnfBuilder:
    """Incremental builder; node 0 is false, node 1 is true.  Literal nodes
    are deduplicated; and-nodes flatten nested and-children."""

    def __init__(self, n_vars, max_nodes=None):
        self.n_vars = n_vars
        self.max_nodes = max_nodes
        self.kinds = [K_FALSE, K_TRUE]
        self.lits = [0, 0]
        self.dvars = [0, 0]
        self.child_lists = [(), ()]
        self._lit_cache = {}

    FALSE = 0
    TRUE = 1

    def _push(self, kind, lit=0, dvar=0, children=()):
        if self.max_nodes is not None and len(self.kinds) >= self.max_nodes:
            raise LimitError(f"node budget {self.max_nodes} exceeded")
        self.kinds.append(kind)
        self.lits.append(lit)
        self.dvars.append(dvar)
        self.child_lists.append(tuple(children))
        return len(self.kinds) - 1

    def literal(self, l):
        node = self._lit_cache.get(l)
        if node is None:
            node = self._push(K_LIT, lit=l)
            self._lit_cache[l] = node
        return node

    def and_node(self, children):
        flat = []
        for c in children:
            if c == self.TRUE:
                continue
            if c == self.FALSE:
                return self.FALSE
            if self.kinds[c] == K_AND:
                flat.extend(self.child_lists[c])
            else:
                flat.append(c)
        if not flat:
            return self.TRUE
        if len(flat) == 1:
            return flat[0]
        return self._push(K_AND, children=flat)

    def or_node(self, dvar, children):
        kept = [c for c in children if c != self.FALSE]
        if not kept:
            return self.FALSE
        if len(kept) == 1:
            return kept[0]
        return self._push(K_OR, dvar=dvar, children=kept)

    def build(self, root):
        n = len(self.kinds)
        child_ptr = np.zeros(n + 1, dtype=np.int64)
        for i, cs in enumerate(self.child_lists):
            child_ptr[i + 1] = child_ptr[i] + len(cs)
        children = np.empty(child_ptr[-1], dtype=np.int64)
        pos = 0
        for cs in self.child_lists:
            for c in cs:
                children[pos] = c
                pos += 1
        return Ddnnf(np.array(self.kinds, dtype=np.int8),
                     np.array(self.lits, dtype=np.int32),
                     np.array(self.dvars, dtype=np.int32),
                     child_ptr, children, root, self.n_vars)


def smoothed(ddnnf, max_nodes=None):
    """Insert (v or not-v) gadgets so every or-node's children mention the
    same variables and the root mentions all of them.  Only nodes reachable
    from the root are kept."""
    sets = ddnnf.var_sets()
    reach = np.zeros(ddnnf.node_count, dtype=bool)
    reach[ddnnf.root] = True
    for i in range(ddnnf.node_count - 1, -1, -1):
        if reach[i]:
            for c in ddnnf.node_children(i):
                reach[c] = True
    b = DdnnfBuilder(ddnnf.n_vars, max_nodes)
    gadget = {}

    def gadgets_for(missing_mask):
        out = []
        v = 0
        while missing_mask:
            if missing_mask & 1:
                g = gadget.get(v)
                if g is None:
                    g = b._push(K_OR, dvar=v,
                                children=(b.literal(v), b.literal(-v)))
                    gadget[v] = g
                out.append(g)
            missing_mask >>= 1
            v += 1
        return out

    remap = [0] * ddnnf.node_count
    for i in range(ddnnf.node_count):
        if not reach[i]:
            continue
        k = ddnnf.kind[i]
        if k == K_FALSE:
            remap[i] = b.FALSE
        elif k == K_TRUE:
            remap[i] = b.TRUE
        elif k == K_LIT:
            remap[i] = b.literal(int(ddnnf.lit[i]))
        elif k == K_AND:
            remap[i] = b.and_node([remap[c] for c in ddnnf.node_children(i)])
        else:
            cs = list(ddnnf.node_children(i))
            union = 0
            for c in cs:
                union |= sets[c]
            new_cs = []
            for c in cs:
                missing = union & ~sets[c]
                mapped = remap[c]
                if missing:
                    mapped = b.and_node([mapped] + gadgets_for(missing))
                new_cs.append(mapped)
            remap[i] = b.or_node(int(ddnnf.dvar[i]), new_cs)
            sets[i] = union
    root = remap[ddnnf.root]
    full = ((1 << (ddnnf.n_vars + 1)) - 2)
    missing = full & ~sets[ddnnf.root]
    if missing and ddnnf.kind[ddnnf.root] != K_FALSE:
        root = b.and_node([root] + gadgets_for(missing))
    return b.build(root)


def validate(ddnnf):
    """Check decomposability, decision-determinism, and smoothness; raises
    :class:`ValidationError` naming the failed property and node."""
    sets = ddnnf.var_sets()
    for i in range(ddnnf.node_count):
        k = ddnnf.kind[i]
        cs = ddnnf.node_children(i)
        if k == K_AND:
            acc = 0
            for c in cs:
                if acc & sets[c]:
                    raise ValidationError(f"and-node {i} not decomposable")
                acc |= sets[c]
        elif k == K_OR:
            if len(cs) > 1:
                dv = int(ddnnf.dvar[i])
                if dv <= 0:
                    raise ValidationError(f"or-node {i} has no decision var")
                phases = set()
                for c in cs:
                    phases.add(_forced_phase(ddnnf, c, dv))
                if None in phases or len(phases) != len(cs):
                    raise ValidationError(
                        f"or-node {i} children do not decide var {dv}")
            first = None
            for c in cs:
                if first is None:
                    first = sets[c]
                elif sets[c] != first:
                    raise ValidationError(f"or-node {i} not smooth")
    return True


def _forced_phase(ddnnf, node, var):
    k = ddnnf.kind[node]
    if k == K_LIT and abs(int(ddnnf.lit[node])) == var:
        return 1 if ddnnf.lit[node] > 0 else 0
    if k == K_AND:
        for c in ddnnf.node_children(node):
            if ddnnf.kind[c] == K_LIT and abs(int(ddnnf.lit[c])) == var:
                return 1 if ddnnf.lit[c] > 0 else 0
    return None


def _evidence_array(n_vars, evidence):
    ev = np.full(n_vars + 1, -1, dtype=np.int8)
    if evidence:
        for v, b in evidence.items():
            ev[v] = int(b)
    return ev


def evaluate(ddnnf, weights, evidence=None):
    """Weighted evaluation under evidence; returns Pr(evidence) under the
    encoder's normalization.  Fills the value/sat slots."""
    ev = _evidence_array(ddnnf.n_vars, evidence)
    kernels.evaluate_pass(ddnnf.kind, ddnnf.lit, ddnnf.child_ptr,
                          ddnnf.children, weights, ev,
                          ddnnf.values, ddnnf.sat)
    ddnnf._evaluated = True
    return float(ddnnf.values[ddnnf.root])


@dataclass
class Marginals:
    """Per-variable joint marginals Pr(V=b, evidence) plus exact boolean
    existence flags (column 1 = value 1)."""

    pr: np.ndarray
    exists: np.ndarray
    p_evidence: float
    root_sat: bool

    def posterior(self, var, value=1):
        if self.p_evidence <= 0.0:
            return 0.0
        return float(self.pr[var, value]) / self.p_evidence

    def certain_value(self, var):
        """0/1 if the variable is implied under the evidence, else None."""
        e1, e0 = bool(self.exists[var, 1]), bool(self.exists[var, 0])
        if e1 and not e0:
            return 1
        if e0 and not e1:
            return 0
        return None


def differentiate(ddnnf, weights=None):
    """Top-down pass computing Pr(V=b, evidence) for every variable at once.
    :func:`evaluate` must have run on this instance."""
    if not ddnnf._evaluated:
        raise ValidationError("evaluate must run before differentiate")
    kernels.backprop_pass(ddnnf.kind, ddnnf.child_ptr, ddnnf.children,
                          ddnnf.values, ddnnf.sat, ddnnf.deriv, ddnnf.ctx,
                          ddnnf.root)
    pr = np.zeros((ddnnf.n_vars + 1, 2), dtype=np.float64)
    exists = np.zeros((ddnnf.n_vars + 1, 2), dtype=np.uint8)
    kernels.gather_marginals(ddnnf.kind, ddnnf.lit, ddnnf.values, ddnnf.sat,
                             ddnnf.deriv, ddnnf.ctx, pr, exists)
    return Marginals(pr, exists, float(ddnnf.values[ddnnf.root]),
                     bool(ddnnf.sat[ddnnf.root]))


def query(ddnnf, weights, evidence=None):
    """evaluate + differentiate in one call."""
    evaluate(ddnnf, weights, evidence)
    return differentiate(ddnnf)


def implications(marginals):
    """Literals forced by the evidence: Pr(V = not-b, e) = 0 while
    Pr(V = b, e) > 0, decided on the exact existence flags."""
    out = set()
    ex = marginals.exists
    for v in range(1, ex.shape[0]):
        e1, e0 = ex[v, 1], ex[v, 0]
        if e1 and not e0:
            out.add(v)
        elif e0 and not e1:
            out.add(-v)
    return out


def satisfiable(ddnnf, evidence=None):
    """Exact boolean: does any model agree with the evidence?"""
    ev = _evidence_array(ddnnf.n_vars, evidence)
    weights = np.ones((ddnnf.n_vars + 1, 2), dtype=np.float64)
    kernels.evaluate_pass(ddnnf.kind, ddnnf.lit, ddnnf.child_ptr,
                          ddnnf.children, weights, ev,
                          ddnnf.values, ddnnf.sat)
    ddnnf._evaluated = True
    return bool(ddnnf.sat[ddnnf.root])


def model_count(ddnnf, evidence=None):
    """Exact model count (python ints; test-scale graphs)."""
    ev = _evidence_array(ddnnf.n_vars, evidence)
    counts = [0] * ddnnf.node_count
    for i in range(ddnnf.node_count):
        k = ddnnf.kind[i]
        if k == K_TRUE:
            counts[i] = 1
        elif k == K_LIT:
            l = int(ddnnf.lit[i])
            e = ev[abs(l)]
            counts[i] = 0 if (e >= 0 and (e == 1) != (l > 0)) else 1
        elif k == K_AND:
            acc = 1
            for c in ddnnf.node_children(i):
                acc *= counts[c]
            counts[i] = acc
        elif k == K_OR:
            counts[i] = sum(counts[c] for c in ddnnf.node_children(i))
    return counts[ddnnf.root]


def reduce(ddnnf, health_vars, exempt_vars, bound):
    """Cardinality pruning: drop branches whose minimum count of broken,
    un-exempted health variables exceeds the bound.

    Two passes: a bottom-up minimum-cardinality (mc) pass, then a top-down
    local-bound pass where an or-node removes children with mc above its
    bound and an and-node passes bound minus the siblings' mc sum.  No model
    with at most ``bound`` un-exempted faults is removed; some heavier models
    may survive.
    """
    if bound < 0:
        raise ValueError("bound must be >= 0")
    n = ddnnf.node_count
    fault_var = np.zeros(ddnnf.n_vars + 1, dtype=np.uint8)
    for v in set(health_vars) - set(exempt_vars):
        fault_var[v] = 1
    mc = np.zeros(n, dtype=np.int64)
    kernels.mc_pass(ddnnf.kind, ddnnf.lit, ddnnf.child_ptr, ddnnf.children,
                    fault_var, mc)
    if mc[ddnnf.root] > bound:
        raise ReductionEmptyError(
            f"bound {bound} below minimum fault cardinality {mc[ddnnf.root]}")
    kb = np.empty(n, dtype=np.int64)
    edge_keep = np.ones(ddnnf.edge_count, dtype=np.uint8)
    kernels.kbound_pass(ddnnf.kind, ddnnf.child_ptr, ddnnf.children, mc, kb,
                        edge_keep, ddnnf.root, bound)

    b = DdnnfBuilder(ddnnf.n_vars)
    remap = np.full(n, -1, dtype=np.int64)
    neg_inf = -kernels.INF64
    for i in range(n):
        if kb[i] == neg_inf and i != ddnnf.root:
            continue
        k = ddnnf.kind[i]
        if k == K_FALSE:
            remap[i] = b.FALSE
        elif k == K_TRUE:
            remap[i] = b.TRUE
        elif k == K_LIT:
            remap[i] = b.literal(int(ddnnf.lit[i]))
        elif k == K_AND:
            remap[i] = b.and_node(
                [remap[c] for c in ddnnf.node_children(i)])
        else:
            cs = [c for j, c in zip(range(ddnnf.child_ptr[i],
                                          ddnnf.child_ptr[i + 1]),
                                    ddnnf.node_children(i))
                  if edge_keep[j]]
            remap[i] = b.or_node(int(ddnnf.dvar[i]), [remap[c] for c in cs])
    return b.build(int(remap[ddnnf.root]))


# -- c2d-style .nnf interchange ----------------------------------------------

def write_nnf(ddnnf):
    """Serialize to the c2d text form (`nnf nodes edges vars`, L/A/O lines)."""
    lines = [f"nnf {ddnnf.node_count} {ddnnf.edge_count} {ddnnf.n_vars}"]
    for i in range(ddnnf.node_count):
        k = ddnnf.kind[i]
        if k == K_LIT:
            lines.append(f"L {int(ddnnf.lit[i])}")
        elif k == K_TRUE:
            lines.append("A 0")
        elif k == K_FALSE:
            lines.append("O 0 0")
        elif k == K_AND:
            cs = ddnnf.node_children(i)
            lines.append("A " + " ".join([str(len(cs))] + [str(c) for c in cs]))
        else:
            cs = ddnnf.node_children(i)
            lines.append(f"O {int(ddnnf.dvar[i])} " +
                         " ".join([str(len(cs))] + [str(c) for c in cs]))
    return "\n".join(lines) + "\n"


def read_nnf(text):
    """Parse the c2d text form.  The result is raw: callers should run
    :func:`validate` (after :func:`smoothed`) before querying."""
    lines = [l for l in (raw.strip() for raw in text.splitlines())
             if l and not l.startswith("c")]
    if not lines or not lines[0].startswith("nnf"):
        raise NnfFormatError("missing nnf header")
    parts = lines[0].split()
    if len(parts) != 4:
        raise NnfFormatError(f"bad header {lines[0]!r}")
    n_nodes, _, n_vars = int(parts[1]), int(parts[2]), int(parts[3])
    if len(lines) - 1 != n_nodes:
        raise NnfFormatError(
            f"header claims {n_nodes} nodes, found {len(lines) - 1}")
    kinds, lits, dvars, child_lists = [], [], [], []
    for ln in lines[1:]:
        toks = ln.split()
        if toks[0] == "L":
            kinds.append(K_LIT)
            lits.append(int(toks[1]))
            dvars.append(0)
            child_lists.append(())
        elif toks[0] == "A":
            c = int(toks[1])
            kinds.append(K_TRUE if c == 0 else K_AND)
            lits.append(0)
            dvars.append(0)
            child_lists.append(tuple(int(t) for t in toks[2:2 + c]))
        elif toks[0] == "O":
            dv, c = int(toks[1]), int(toks[2])
            kinds.append(K_FALSE if c == 0 else K_OR)
            lits.append(0)
            dvars.append(dv)
            child_lists.append(tuple(int(t) for t in toks[3:3 + c]))
        else:
            raise NnfFormatError(f"bad node line {ln!r}")
    n = len(kinds)
    child_ptr = np.zeros(n + 1, dtype=np.int64)
    for i, cs in enumerate(child_lists):
        for c in cs:
            if c >= i:
                raise NnfFormatError(f"node {i} references later node {c}")
        child_ptr[i + 1] = child_ptr[i] + len(cs)
    children = np.array([c for cs in child_lists for c in cs] or [],
                        dtype=np.int64)
    return Ddnnf(np.array(kinds, dtype=np.int8), np.array(lits, dtype=np.int32),
                 np.array(dvars, dtype=np.int32), child_ptr, children,
                 n - 1, n_vars)


def import_nnf(text):
    """Read, smooth, and validate an externally produced .nnf graph."""
    g = smoothed(read_nnf(text))
    validate(g)
    return g
