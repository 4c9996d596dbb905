"""Diagnostic cost estimation and threshold-based cone destruction.

The expected diagnostic cost of using an abstraction splits into the
isolation cost (bits needed to localize a single fault, log2 of the unknown
measurement points per hierarchy level) and the abstraction cost (expected
overhead measurements spent crossing cone boundaries).  Destroying cones
trades abstraction cost for isolation cost; sweeping a threshold list and
taking the argmin picks the abstraction to diagnose with.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .abstraction import abstraction, cone_subsystem, subview


@dataclass(frozen=True)
class CostEstimate:
    isolation: float
    abstraction: float

    @property
    def total(self):
        return self.isolation + self.abstraction

    def __repr__(self):
        return (f"CostEstimate(IC={self.isolation:.2f}, "
                f"AC={self.abstraction:.2f}, EDC={self.total:.2f})")


def _default_observed(circuit):
    return set(circuit.inputs) | set(circuit.outputs)


def measurement_points(view, observed=None):
    """Unknown measurement points: output wires of abstraction components
    not already observed (inputs and outputs by default)."""
    if observed is None:
        observed = _default_observed(view.circuit)
    return sum(1 for g in view.abstraction if g not in observed)


def _cone_boundary_unknown(view, root, observed):
    cone = view.cones[root]
    wires = set(cone.inputs) | {root}
    return sum(1 for w in wires if w not in observed)


def isolation_cost(circuit, view, observed=None):
    """Average bits to localize a single fault: log2 of the unknown
    measurement points plus the average of the recursive costs of the
    abstract components (cone recursion assumes its boundary measured)."""
    if observed is None:
        observed = _default_observed(circuit)
    mp = measurement_points(view, observed)
    p = len(view.abstraction)
    if p == 0:
        return 0.0
    inner = 0.0
    for root in view.abstraction:
        if root in view.cones:
            sub = cone_subsystem(view, root)
            inner += isolation_cost(sub, subview(view, root))
    cost = inner / p
    if mp > 0:
        cost += math.log2(mp)
    return cost


def abstraction_cost(circuit, view, observed=None):
    """Average overhead measurements per component: each cone charges its
    unknown boundary wires to every member, recursively."""
    if observed is None:
        observed = _default_observed(circuit)
    n = len(circuit.gates)
    if n == 0:
        return 0.0
    total = 0.0
    for root in view.cones:
        cone = view.cones[root]
        mp_u = _cone_boundary_unknown(view, root, observed)
        sub = cone_subsystem(view, root)
        total += len(cone.members) * (mp_u + abstraction_cost(sub, subview(view, root)))
    return total / n


def edc(circuit, view, observed=None):
    """Expected diagnostic cost: isolation plus abstraction cost."""
    return CostEstimate(isolation_cost(circuit, view, observed),
                        abstraction_cost(circuit, view, observed))


def component_overhead(circuit, view, gate_id):
    """Overhead term a single component contributes inside the abstraction
    cost: the sum of unknown boundary wires of every cone it lies in."""
    total = 0.0
    observed = _default_observed(circuit)
    while True:
        top = view.top_component(gate_id)
        if top is None or top not in view.cones:
            return total
        total += _cone_boundary_unknown(view, top, observed)
        if top == gate_id:
            return total
        sub = cone_subsystem(view, top)
        view = subview(view, top)
        observed = _default_observed(sub)


def fault_isolation_path(circuit, view, gate_id):
    """Bits to isolate a fault at ``gate_id``: log2 of the unknown points at
    each hierarchy level on the way to the cone containing it."""
    total = 0.0
    observed = _default_observed(circuit)
    while True:
        mp = measurement_points(view, observed)
        if mp > 0:
            total += math.log2(mp)
        top = view.top_component(gate_id)
        if top is None or top not in view.cones or top == gate_id:
            break
        circuit = cone_subsystem(view, top)
        view = subview(view, top)
        observed = _default_observed(circuit)
    return total


def destroy_cones(view, max_inputs):
    """Flatten every cone (at any nesting depth) with more inputs than
    ``max_inputs``; 0 yields the trivial abstraction."""
    if max_inputs < 0:
        raise ValueError("max_inputs must be >= 0")
    thr = max_inputs
    if view.max_cone_inputs is not None:
        thr = min(thr, view.max_cone_inputs)
    return abstraction(view.circuit, max_cone_inputs=thr)


def select_abstraction(circuit, thresholds):
    """Estimate the expected cost per destroy threshold (None = keep all
    cones) and return the argmin view plus the full report table."""
    rows = []
    best = None
    for thr in thresholds:
        view = abstraction(circuit, max_cone_inputs=thr)
        est = edc(circuit, view)
        rows.append({
            "threshold": thr,
            "abstraction_size": len(view.abstraction),
            "measurement_points": measurement_points(view),
            "ac": est.abstraction,
            "ic": est.isolation,
            "edc": est.total,
        })
        if best is None or est.total < best[1].total:
            best = (view, est)
    return best[0], rows


def format_cost_table(rows):
    header = f"{'thr':>5} {'|A|':>6} {'MPu':>6} {'AC':>8} {'IC':>8} {'EDC':>8}"
    lines = [header]
    for r in rows:
        thr = "all" if r["threshold"] is None else str(r["threshold"])
        lines.append(f"{thr:>5} {r['abstraction_size']:>6} "
                     f"{r['measurement_points']:>6} {r['ac']:>8.2f} "
                     f"{r['ic']:>8.2f} {r['edc']:>8.2f}")
    return "\n".join(lines) + "\n"
