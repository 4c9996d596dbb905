"""Sequential diagnosis engine.

The session is an explicit state machine: it proposes one measurement point
at a time (failure-probability + entropy heuristic, entropy-only, or a fixed
random order), absorbs the measured value, deduces certified faults from
exact-zero marginals, and stops when the identified faults explain the
observation.  Hierarchical mode diagnoses the abstraction first and recurses
into cones certified faulty; cloned systems are reasoned about on the clone
circuit while measurements are taken on the original wires.

Batch drivers (:func:`psd`, :func:`hpsd`, :func:`diagnose`) loop the state
machine against a measurement oracle; the HTTP service drives the same
machine asynchronously.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from . import compiler
from .abstraction import abstraction, cone_subsystem
from .circuit import CircuitError, simulate
from .cloning import CloneMap, minimize_abstraction
from .dnnf import ReductionEmptyError, implications as _implications
from .dnnf import reduce as _reduce
from .encode import (ModelParams, cone_failure_priors, encode_abstraction,
                     encode_flat)


class StuckSessionError(RuntimeError):
    """No unmeasured candidate remains but the goal is not met."""


class SessionFailure(RuntimeError):
    """Resource limits or inconsistent evidence ended the session."""


class AlreadyKnownError(ValueError):
    """The posted wire is already measured or implied."""


def entropy(p):
    """Shannon entropy in bits of a Bernoulli(p) variable; 0 log 0 = 0."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


class SimulationOracle:
    """Measurement oracle backed by fault simulation of the original circuit."""

    def __init__(self, circuit, faulty, input_vector):
        self.values = simulate(circuit, input_vector, faulty)

    def measure(self, wire):
        return self.values[wire]


def meets_criteria_flat(ddnnf, wcnf, faults, evidence):
    """Goal check on the unpruned compilation: is assuming exactly ``faults``
    broken and everything else healthy consistent with the evidence?"""
    ev = dict(evidence)
    fault_set = set(faults)
    for comp in wcnf.vars.components():
        ev[wcnf.vars.ok_var(comp)] = 0 if comp in fault_set else 1
    return compiler.satisfiable(ddnnf, ev)


def meets_criteria_sim(circuit, faults, wire_values):
    """Goal check by fault propagation: simulate the faults (deeper first)
    and compare every output value recorded in ``wire_values``."""
    inputs = {}
    for w in circuit.inputs:
        if w not in wire_values:
            raise CircuitError(f"observation missing input {w!r}")
        inputs[w] = wire_values[w]
    sim = simulate(circuit, inputs, set(faults))
    return all(sim[w] == wire_values[w]
               for w in circuit.outputs if w in wire_values)


class System:
    """Observation-independent preprocessing of a circuit for diagnosis:
    optional cloning, abstraction view, cone priors, and encodings.  Reused
    across any number of sessions on the same circuit."""

    def __init__(self, circuit, mode="hierarchical", params=None, clone=False,
                 max_cone_inputs=None, max_nodes=compiler.DEFAULT_MAX_NODES,
                 max_seconds=None, simplify=True):
        if mode not in ("flat", "hierarchical"):
            raise ValueError(f"unknown mode {mode!r}")
        self.original = circuit
        self.params = params or ModelParams()
        self.mode = mode
        self.max_nodes = max_nodes
        self.max_seconds = max_seconds
        self.simplify = simplify
        if clone:
            self.circuit, self.clone_map = minimize_abstraction(circuit)
        else:
            self.circuit, self.clone_map = circuit, CloneMap()
        self.max_cone_inputs = max_cone_inputs
        self._entries = {}
        self._compiled = {}
        self.top = self._entry((), self.circuit)

    def _entry(self, path, circuit):
        entry = self._entries.get(path)
        if entry is None:
            if self.mode == "flat":
                view = None
                wcnf = encode_flat(circuit, self.params)
            else:
                view = abstraction(circuit,
                                   max_cone_inputs=self.max_cone_inputs)
                priors = cone_failure_priors(circuit, view, self.params)
                wcnf = encode_abstraction(circuit, view, self.params, priors)
            order = compiler.elimination_positions(wcnf.n_vars, wcnf.clauses)
            entry = (circuit, view, wcnf, order)
            self._entries[path] = entry
        return entry

    def cone_entry(self, path, parent_view, root):
        return self._entry(path, cone_subsystem(parent_view, root))

    def compiled(self, path, observation):
        """Compilation for a frame, shared across sessions.  With
        simplification off the graph is observation-independent and one
        compile serves every session on this system (sessions must not run
        concurrently on one System; the service builds one per session)."""
        circuit, view, wcnf, order = self._entries[path]
        obs = dict(observation) if self.simplify else None
        key = (path, tuple(sorted(obs.items())) if obs else None)
        graph = self._compiled.get(key)
        if graph is None:
            graph = compiler.compile_wcnf(
                wcnf, observation=obs, var_order=order,
                max_nodes=self.max_nodes, max_seconds=self.max_seconds)
            self._compiled[key] = graph
        return graph


class _Frame:
    """One level of the hierarchical recursion (the only level, when flat)."""

    def __init__(self, system, path, circuit, view, wcnf, observation, k,
                 is_cone, seed):
        self.path = path
        self.circuit = circuit
        self.view = view
        self.wcnf = wcnf
        self.k = k
        self.is_cone = is_cone
        self.phase = "psd"
        self.B = []
        self.i_expand = 0
        self.b_len_at_expand = -1
        self.criteria_checked_at = -1  # len(B) at the last goal evaluation
        self.D_local = []
        self.reduced_at = -1  # len(B) at the last reduce; -1 forces the first
        self.wire_values = dict(observation)
        self.y = wcnf.evidence_from_wires(observation)
        self.last_marg = None
        self.boundary = {}
        if view is None:
            self.components = [g.id for g in circuit.gates]
            self.candidates = list(circuit.wires())
        else:
            members = set(view.abstraction)
            self.components = list(wcnf.vars.components())
            self.candidates = [w for w in circuit.wires()
                               if w in members or w in circuit.inputs]
        self.candidate_set = set(self.candidates)
        rng = random.Random(f"{seed}:{'/'.join(path) or 'top'}")
        self.random_order = list(self.candidates)
        rng.shuffle(self.random_order)
        self.ddnnf_full = system.compiled(path, self.y)
        self.ddnnf_cur = self.ddnnf_full

    def known_wires(self):
        """Wire values known at this frame via measurement or deduction."""
        out = dict(self.wire_values)
        if self.last_marg is not None:
            for w in self.circuit.wires():
                if w in out:
                    continue
                val = self.last_marg.certain_value(self.wcnf.vars.wire_var(w))
                if val is not None:
                    out[w] = val
        return out

    def wire_known(self, wire):
        if wire in self.wire_values:
            return True
        if self.last_marg is None:
            return False
        return self.last_marg.certain_value(
            self.wcnf.vars.wire_var(wire)) is not None


@dataclass
class DiagnosisResult:
    faults: tuple
    measurements: tuple
    cost: int
    status: str
    observation: dict
    transcript: list = field(default_factory=list)


class DiagnosisSession:
    """The diagnosis state machine.

    Call :meth:`advance` until ``status`` leaves ``"running"`` or a proposal
    is pending; answer proposals with :meth:`submit`.  ``faults`` always
    names gates of the original circuit.
    """

    def __init__(self, system, observation, heuristic="fp", k=None, seed=0):
        if heuristic not in ("fp", "ew", "random"):
            raise ValueError(f"unknown heuristic {heuristic!r}")
        self.system = system
        self.params = system.params
        self.mode = system.mode
        self.heuristic = heuristic
        self.k = k
        self.seed = seed
        self.observation = {w: int(b) for w, b in observation.items()}
        self.oracle_cache = dict(self.observation)
        self.measurements = []
        self.faults = []
        self.status = "running"
        self.failure = None
        self.transcript = []
        self.pending = None  # (frame wire, original wire, info)
        self._processed_families = set()
        circuit, view, wcnf, _order = system.top
        missing = [w for w in circuit.inputs if w not in self.observation]
        if missing:
            raise CircuitError(f"observation missing inputs {missing}")
        try:
            self.frames = [_Frame(system, (), circuit, view, wcnf,
                                  self._project(self.observation, wcnf),
                                  k, False, seed)]
        except compiler.LimitError as exc:
            self.status = "failed"
            self.failure = str(exc)
            self.frames = []

    @property
    def cost(self):
        return len(self.measurements)

    # -- public driving surface ------------------------------------------

    def advance(self):
        """Run deductions and frame transitions until a measurement proposal
        is pending or the session leaves the running state."""
        if self.status != "running" or self.pending is not None:
            return
        try:
            self._run()
        except compiler.LimitError as exc:
            self.status = "failed"
            self.failure = str(exc)

    def proposal(self):
        """The pending proposal: (wire to measure on the original circuit,
        info dict), or None."""
        if self.pending is None:
            return None
        _wire, orig, info = self.pending
        return orig, info

    def submit(self, wire, value):
        """Record a measured value.  The wire must be the pending proposal
        or a legal unmeasured candidate of the active frame."""
        if self.status != "running":
            raise SessionFailure(f"session is {self.status}")
        value = int(value)
        frame = self.frames[-1]
        if self.pending is not None and wire == self.pending[1]:
            frame_wire = self.pending[0]
        else:
            frame_wire = self._frame_wire_for(frame, wire)
            if frame_wire not in frame.candidate_set:
                raise CircuitError(
                    f"wire {wire!r} is not a measurement candidate here")
            if frame.wire_known(frame_wire):
                raise AlreadyKnownError(f"wire {wire!r} is already known")
        if frame_wire in frame.wire_values:
            raise AlreadyKnownError(f"wire {wire!r} was already measured")
        self.pending = None
        orig = self._original_wire(frame_wire)
        counted = orig not in self.oracle_cache
        self.oracle_cache[orig] = value
        if counted:
            self.measurements.append((orig, value))
        self._assert_wire(frame, frame_wire, value)
        self.transcript.append({
            "event": "measure", "wire": orig, "value": value,
            "frame": "/".join(frame.path) or "top",
            "cost": self.cost,
        })

    # -- internals ---------------------------------------------------------

    def _project(self, wire_values, wcnf):
        return {w: b for w, b in wire_values.items()
                if wcnf.vars.has_wire(w)}

    def _original_wire(self, wire):
        return self.system.clone_map.original(wire)

    def _frame_wire_for(self, frame, wire):
        """Map a user-named wire onto this frame (the wire itself or one of
        its clones present in the frame's circuit)."""
        if frame.wcnf.vars.has_wire(wire):
            return wire
        for sib in self.system.clone_map.siblings(wire):
            if frame.wcnf.vars.has_wire(sib):
                return sib
        raise CircuitError(f"wire {wire!r} unknown to the active frame")

    def _assert_wire(self, frame, wire, value):
        """Assert a measured value at the wire and at every clone sibling
        known to the frame (physically they are the same wire)."""
        for sib in set(self.system.clone_map.siblings(wire)):
            if frame.wcnf.vars.has_wire(sib):
                frame.wire_values[sib] = value
                frame.y[frame.wcnf.vars.wire_var(sib)] = value

    def _assert_health(self, comp, state):
        """Clone discipline: once any copy's health is certified, assert the
        same state for the original and all siblings, everywhere."""
        sibs = set(self.system.clone_map.siblings(comp))
        for frame in self.frames:
            for sib in sibs:
                if frame.wcnf.vars.has_ok(sib):
                    frame.y[frame.wcnf.vars.ok_var(sib)] = state

    def _run(self):
        while True:
            if not self.frames:
                self.status = "failed"
                return
            frame = self.frames[-1]
            if frame.phase == "psd":
                if not self._psd_step(frame):
                    return
            else:
                if not self._expand_step(frame):
                    return

    def _psd_step(self, frame):
        """One round of the measure/deduce loop; returns True to continue
        the outer loop, False when a proposal is pending or the session
        reached a terminal state."""
        changed = True
        while changed:
            self._maybe_reduce(frame)
            marg = compiler.query(frame.ddnnf_cur, frame.wcnf.weights, frame.y)
            frame.last_marg = marg
            if not marg.root_sat:
                self.status = "failed"
                self.failure = ("evidence inconsistent with the compiled "
                                "model (cardinality bound too low?)")
                return False
            changed = False
            in_b = set(frame.B)
            for comp in frame.components:
                okv = frame.wcnf.vars.ok_var(comp)
                if comp in in_b:
                    continue
                if not marg.exists[okv, 1]:
                    frame.B.append(comp)
                    in_b.add(comp)
                    self._assert_health(comp, 0)
                    changed = True
                elif not marg.exists[okv, 0]:
                    self._assert_health(comp, 1)
        if self._criteria_ready(frame):
            if self.mode == "flat":
                frame.D_local.extend(c for c in frame.B
                                     if c not in frame.D_local)
                self._conclude(frame)
                return self.status == "running"
            frame.phase = "expand"
            frame.b_len_at_expand = len(frame.B)
            return True
        return self._propose(frame)

    def _maybe_reduce(self, frame):
        if self.k is None or len(frame.B) == frame.reduced_at:
            return
        bound = max(self.k - len(frame.B), 0)
        health = {frame.wcnf.vars.ok_var(c) for c in frame.components}
        exempt = {frame.wcnf.vars.ok_var(c) for c in frame.B}
        try:
            frame.ddnnf_cur = _reduce(frame.ddnnf_cur, health, exempt, bound)
        except ReductionEmptyError:
            # bound below the certified cardinality: keep the unpruned graph
            self.transcript.append({"event": "reduce-skipped",
                                    "frame": "/".join(frame.path) or "top"})
        frame.reduced_at = len(frame.B)

    def _criteria_ready(self, frame):
        """Stopping test: the goal must hold for the current fault set, the
        fault set must have grown since the last expansion round, and a cone
        frame additionally needs all its inputs known (unless every
        component's health is already certain)."""
        if len(frame.B) <= frame.b_len_at_expand:
            return False
        if not frame.is_cone and len(frame.B) == frame.criteria_checked_at:
            # goal satisfiability only shrinks as evidence grows; without the
            # input-completion concern a re-check needs a new fault
            return False
        frame.criteria_checked_at = len(frame.B)
        if not meets_criteria_flat(frame.ddnnf_full, frame.wcnf, frame.B,
                                   frame.y):
            return False
        if frame.is_cone and not self._all_inputs_known(frame):
            return self._all_health_certain(frame)
        return True

    def _all_inputs_known(self, frame):
        return all(frame.wire_known(w) for w in frame.circuit.inputs)

    def _all_health_certain(self, frame):
        marg = frame.last_marg
        for comp in frame.components:
            okv = frame.wcnf.vars.ok_var(comp)
            if marg.exists[okv, 0] and marg.exists[okv, 1]:
                return False
        return True

    # -- measurement selection ---------------------------------------------

    def _wire_entropy(self, frame, wire):
        v = frame.wcnf.vars.wire_var(wire)
        return entropy(frame.last_marg.posterior(v, 1))

    def _component_wires(self, frame, comp):
        """The variables of a component: fanins plus output; a cone root is
        a virtual gate whose fanins are the cone inputs.  Inside a cone
        frame the subsystem inputs are always included."""
        if frame.view is not None and frame.view.is_cone_root(comp):
            wires = list(frame.view.cones[comp].inputs) + [comp]
        else:
            wires = list(frame.circuit.gate(comp).fanin) + [comp]
        if frame.is_cone:
            wires += [w for w in frame.circuit.inputs if w not in wires]
        return [w for w in wires if w in frame.candidate_set]

    def _pick(self, frame):
        cands = [w for w in frame.candidates if w not in frame.wire_values]
        if not cands:
            return None
        if self.heuristic == "random":
            for w in frame.random_order:
                if w not in frame.wire_values:
                    return w
            return None
        if self.heuristic == "ew":
            pos = [w for w in cands if self._wire_entropy(frame, w) > 0.0]
            if not pos:
                return None
            return max(pos, key=lambda w: (self._wire_entropy(frame, w),
                                           -cands.index(w)))
        # fp: components by failure posterior, then entropy among their wires
        marg = frame.last_marg
        ranked = []
        for comp in frame.components:
            okv = frame.wcnf.vars.ok_var(comp)
            if marg.exists[okv, 0] and marg.exists[okv, 1]:
                ranked.append((marg.posterior(okv, 0), comp))
        ranked.sort(key=lambda t: -t[0])
        for _, comp in ranked:
            wires = [w for w in self._component_wires(frame, comp)
                     if w not in frame.wire_values
                     and self._wire_entropy(frame, w) > 0.0]
            if wires:
                return max(wires, key=lambda w: self._wire_entropy(frame, w))
        pos = [w for w in cands if self._wire_entropy(frame, w) > 0.0]
        if pos:
            return max(pos, key=lambda w: (self._wire_entropy(frame, w),
                                           -cands.index(w)))
        return None

    def _propose(self, frame):
        """Pick the next wire; auto-answers wires whose value is already
        cached from an earlier measurement elsewhere in the session."""
        wire = self._pick(frame)
        if wire is None:
            self.status = "stuck"
            self.failure = "no unmeasured candidate remains"
            return False
        orig = self._original_wire(wire)
        if orig in self.oracle_cache:
            self._assert_wire(frame, wire, self.oracle_cache[orig])
            return True
        info = {
            "wire": orig,
            "wireEntropy": self._wire_entropy(frame, wire),
            "frame": "/".join(frame.path) or "top",
        }
        if self.heuristic == "fp":
            comp = self._fp_component(frame)
            if comp is not None:
                okv = frame.wcnf.vars.ok_var(comp)
                info["component"] = self.system.clone_map.original(comp)
                info["componentPosterior"] = frame.last_marg.posterior(okv, 0)
        self.pending = (wire, orig, info)
        self.transcript.append({"event": "propose", **info})
        return False

    def _fp_component(self, frame):
        marg = frame.last_marg
        best, best_p = None, -1.0
        for comp in frame.components:
            okv = frame.wcnf.vars.ok_var(comp)
            if not (marg.exists[okv, 0] and marg.exists[okv, 1]):
                continue
            p = marg.posterior(okv, 0)
            if p > best_p + 1e-12:
                best, best_p = comp, p
        return best

    def component_posteriors(self):
        """Failure posterior per component of the active frame (original
        component names)."""
        if not self.frames:
            return {}
        frame = self.frames[-1]
        if frame.last_marg is None:
            return {}
        out = {}
        for comp in frame.components:
            okv = frame.wcnf.vars.ok_var(comp)
            out[self.system.clone_map.original(comp)] = \
                frame.last_marg.posterior(okv, 0)
        return out

    def implied_wires(self):
        """Wires of the active frame whose values are known by deduction."""
        if not self.frames or self.frames[-1].last_marg is None:
            return {}
        frame = self.frames[-1]
        out = {}
        for w in frame.circuit.wires():
            if w in frame.wire_values:
                continue
            val = frame.last_marg.certain_value(frame.wcnf.vars.wire_var(w))
            if val is not None:
                out[self.system.clone_map.original(w)] = val
        return out

    # -- hierarchical expansion ----------------------------------------------

    def _expand_step(self, frame):
        while frame.i_expand < len(frame.B):
            comp = frame.B[frame.i_expand]
            frame.i_expand += 1
            orig = self.system.clone_map.original(comp)
            if frame.view is not None and frame.view.is_cone_root(comp):
                if orig in self._processed_families:
                    continue
                self._processed_families.add(orig)
                self._recurse(frame, comp)
                return True
            if comp not in frame.D_local:
                frame.D_local.append(comp)
        known = frame.known_wires()
        boundary = {w: known[w] for w in
                    list(frame.circuit.inputs) + list(frame.circuit.outputs)
                    if w in known}
        sim_faults = set()
        for d in frame.D_local:
            for sib in self.system.clone_map.siblings(d):
                if frame.circuit.has_gate(sib):
                    sim_faults.add(sib)
        try:
            ok = meets_criteria_sim(frame.circuit, sim_faults, known)
        except CircuitError:
            # inputs unknown: reachable only through the all-certain
            # exception of the completion rule
            ok = True
        if ok:
            frame.boundary = boundary
            self._conclude(frame)
            return self.status == "running"
        frame.phase = "psd"
        return True

    def _recurse(self, frame, root):
        imps = _implications(frame.last_marg)
        z = dict(frame.wire_values)
        for w in frame.circuit.wires():
            v = frame.wcnf.vars.wire_var(w)
            if v in imps:
                z.setdefault(w, 1)
            elif -v in imps:
                z.setdefault(w, 0)
        cone = frame.view.cones[root]
        u_g = {w: z[w] for w in list(cone.inputs) + [root] if w in z}
        if self.k is None:
            k_child = None
        else:
            k_child = self.k - len(frame.D_local) - len(frame.B) \
                + (frame.i_expand - 1) + 2
            k_child = min(max(k_child, 0), self.k)
        path = frame.path + (root,)
        circuit, view, wcnf, _order = self.system.cone_entry(path, frame.view, root)
        child = _Frame(self.system, path, circuit, view, wcnf,
                       self._project(u_g, wcnf), k_child, True, self.seed)
        self.frames.append(child)
        self.transcript.append({"event": "recurse", "cone": root,
                                "observation": u_g})

    def _conclude(self, frame):
        self.frames.pop()
        if not self.frames:
            seen = set()
            for d in frame.D_local:
                orig = self.system.clone_map.original(d)
                if orig not in seen:
                    seen.add(orig)
                    self.faults.append(orig)
            self.status = "done"
            self.transcript.append({"event": "done",
                                    "faults": list(self.faults),
                                    "cost": self.cost})
            return
        parent = self.frames[-1]
        for w, b in frame.boundary.items():
            self._assert_wire(parent, self._frame_wire_for(parent, w), b)
        for d in frame.D_local:
            if d not in parent.D_local:
                parent.D_local.append(d)
        self.transcript.append({"event": "return", "cone": frame.path[-1],
                                "faults": list(frame.D_local)})


def run_session(session, oracle, max_steps=100000):
    """Drive a session against an oracle until it leaves the running state."""
    for _ in range(max_steps):
        session.advance()
        if session.status != "running":
            break
        wire, _info = session.proposal()
        session.submit(wire, oracle.measure(wire))
    return DiagnosisResult(tuple(session.faults), tuple(session.measurements),
                           session.cost, session.status,
                           dict(session.observation), session.transcript)


def diagnose(system, observation, oracle, heuristic="fp", k=None, seed=0):
    """Run one full diagnosis on a prepared :class:`System`."""
    session = DiagnosisSession(system, observation, heuristic=heuristic,
                               k=k, seed=seed)
    return run_session(session, oracle)


def psd(circuit, observation, oracle, heuristic="fp", k=None, seed=0,
        params=None, **system_kw):
    """Flat (baseline) probabilistic sequential diagnosis."""
    system = System(circuit, mode="flat", params=params, **system_kw)
    return diagnose(system, observation, oracle, heuristic, k, seed)


def hpsd(circuit, observation, oracle, heuristic="fp", k=None, seed=0,
         params=None, **system_kw):
    """Hierarchical probabilistic sequential diagnosis."""
    system = System(circuit, mode="hierarchical", params=params, **system_kw)
    return diagnose(system, observation, oracle, heuristic, k, seed)
