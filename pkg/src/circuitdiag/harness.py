"""Batch experiment runner.

A single YAML document configures circuits (paths, bundled names, or
generator specs), fault scenarios, and diagnosis strategies; every
(circuit, strategy) cell runs each scenario against the simulate-backed
oracle and the report carries mean cost, solved counts, and soundness
failures.  Runs are deterministic given the configured seeds; wall-clock
columns can be disabled for byte-identical replay comparisons.

Config schema (all fields optional unless noted)::

    seed: 42                      # master seed (per-cell seeds derive from it)
    budget:
      seconds_per_scenario: 60.0  # wall budget; scenario marked unsolved
      max_nodes: 2000000          # compiler node budget
      simplify: true              # compile per observation vs once per circuit
    params: {healthy_prior: 0.9, broken_high: 0.5}
    circuits:                     # required, one entry per circuit
      - path: some/netlist.bench
      - name: paperlike_fig1      # bundled circuit
      - gen: {n: 32, p: 25, i: 5, seed: 7}
    scenarios:                    # required
      cardinality: 1
      count: 100                  # per circuit; ignored when exhaustive
      exhaustive: false           # one scenario per gate when true
      seed: 3
    strategies:                   # required, one entry per strategy
      - {heuristic: fp, mode: flat, pruning: false, clone: false}
    report:
      times: true                 # include wall-clock columns
"""
from __future__ import annotations

import csv
import io
import time

import yaml

from . import compiler
from .circuit import parse_bench
from .diagnose import (DiagnosisSession, SimulationOracle, System,
                       meets_criteria_sim, run_session)
from .encode import ModelParams
from .gen import (GenSpec, exhaustive_single_fault, generate_circuit,
                  generate_scenarios, observation_of)

HEURISTICS = ("fp", "ew", "random")
MODES = ("flat", "hierarchical")


class ConfigError(ValueError):
    pass


def load_config(text):
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"bad YAML: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    for key in ("circuits", "scenarios", "strategies"):
        if key not in cfg:
            raise ConfigError(f"config missing {key!r}")
    for s in cfg["strategies"]:
        if s.get("heuristic", "fp") not in HEURISTICS:
            raise ConfigError(f"unknown heuristic in {s}")
        if s.get("mode", "flat") not in MODES:
            raise ConfigError(f"unknown mode in {s}")
    return cfg


def _bundled(name):
    from importlib import resources
    ref = resources.files("circuitdiag.data.circuits").joinpath(f"{name}.bench")
    if not ref.is_file():
        raise ConfigError(f"unknown bundled circuit {name!r}")
    return parse_bench(ref.read_text(), name)


def _load_circuits(cfg):
    out = []
    for entry in cfg["circuits"]:
        if "path" in entry:
            with open(entry["path"]) as fh:
                out.append(parse_bench(fh.read(), entry["path"]))
        elif "name" in entry:
            out.append(_bundled(entry["name"]))
        elif "gen" in entry:
            g = entry["gen"]
            spec = GenSpec(g["n"], g["p"], g["i"], g.get("seed", 0))
            out.append(generate_circuit(spec))
        else:
            raise ConfigError(f"bad circuit entry {entry!r}")
    return out


def _scenarios_for(circuit, scfg, master_seed):
    seed = scfg.get("seed", 0) ^ (master_seed * 2654435761 % (2 ** 31))
    if scfg.get("exhaustive"):
        return exhaustive_single_fault(circuit, seed,
                                       max_tries=scfg.get("max_tries", 256))
    return generate_scenarios(circuit, scfg.get("cardinality", 1),
                              scfg.get("count", 100), seed,
                              max_tries=scfg.get("max_tries", 256))


def bench_run(cfg):
    """Run every (circuit, strategy) cell; returns the report rows."""
    master_seed = cfg.get("seed", 0)
    budget = cfg.get("budget", {})
    per_scenario = budget.get("seconds_per_scenario", 60.0)
    max_nodes = budget.get("max_nodes", compiler.DEFAULT_MAX_NODES)
    simplify = budget.get("simplify", True)
    p = cfg.get("params", {})
    params = ModelParams(p.get("healthy_prior", 0.9), p.get("broken_high", 0.5))
    circuits = _load_circuits(cfg)
    rows = []
    soundness_failed = 0
    for ci, circuit in enumerate(circuits):
        scenarios = _scenarios_for(circuit, cfg["scenarios"], master_seed)
        if not scenarios:
            continue
        systems = {}
        for si, strat in enumerate(cfg["strategies"]):
            heuristic = strat.get("heuristic", "fp")
            mode = strat.get("mode", "flat")
            pruning = bool(strat.get("pruning", False))
            clone = bool(strat.get("clone", False))
            max_ci = strat.get("max_cone_inputs")
            sys_key = (mode, clone, max_ci)
            if sys_key not in systems:
                systems[sys_key] = System(
                    circuit, mode=mode, params=params, clone=clone,
                    max_cone_inputs=max_ci, max_nodes=max_nodes,
                    simplify=simplify)
            system = systems[sys_key]
            solved = 0
            costs = []
            times = []
            failures = 0
            for sc_i, scen in enumerate(scenarios):
                obs = observation_of(circuit, scen)
                oracle = SimulationOracle(circuit, scen.faulty,
                                          scen.input_vector)
                k = scen_cardinality(scen) if pruning else None
                seed = (master_seed * 1000003 + ci * 10007 + si * 101
                        + sc_i) % (2 ** 31)
                t0 = time.perf_counter()
                try:
                    session = DiagnosisSession(system, obs,
                                               heuristic=heuristic, k=k,
                                               seed=seed)
                    result = _run_budgeted(session, oracle, t0, per_scenario)
                except compiler.LimitError:
                    result = None
                dt = time.perf_counter() - t0
                if result is None or result.status != "done":
                    continue
                if not meets_criteria_sim(circuit, result.faults, obs):
                    failures += 1
                    soundness_failed += 1
                    continue
                solved += 1
                costs.append(result.cost)
                times.append(dt)
            rows.append({
                "circuit": circuit.name,
                "gates": len(circuit.gates),
                "cardinality": (cfg["scenarios"].get("cardinality", 1)
                                if not cfg["scenarios"].get("exhaustive")
                                else 1),
                "heuristic": heuristic,
                "mode": mode,
                "pruning": pruning,
                "clone": clone,
                "scenarios": len(scenarios),
                "solved": solved,
                "mean_cost": (round(sum(costs) / solved, 4) if solved else ""),
                "mean_time_s": (round(sum(times) / solved, 4) if solved else ""),
                "soundness_failures": failures,
            })
    rows.sort(key=lambda r: (r["circuit"], r["mode"], r["heuristic"],
                             r["pruning"], r["clone"]))
    budget_note = (f"budget: {per_scenario}s/scenario, "
                   f"{max_nodes} compile nodes, simplify={simplify}")
    return Report(rows, soundness_failed == 0,
                  include_times=cfg.get("report", {}).get("times", True),
                  budget_note=budget_note)


def scen_cardinality(scen):
    return len(scen.faulty)


def _run_budgeted(session, oracle, t0, budget):
    while True:
        session.advance()
        if session.status != "running":
            break
        if budget and time.perf_counter() - t0 > budget:
            session.status = "failed"
            session.failure = "scenario time budget exceeded"
            break
        wire, _ = session.proposal()
        session.submit(wire, oracle.measure(wire))
    from .diagnose import DiagnosisResult
    return DiagnosisResult(tuple(session.faults), tuple(session.measurements),
                           session.cost, session.status,
                           dict(session.observation), session.transcript)


class Report:
    COLUMNS = ("circuit", "gates", "cardinality", "heuristic", "mode",
               "pruning", "clone", "scenarios", "solved", "mean_cost",
               "mean_time_s", "soundness_failures")

    def __init__(self, rows, sound, include_times=True, budget_note=""):
        self.rows = rows
        self.sound = sound
        self.include_times = include_times
        self.budget_note = budget_note

    def _columns(self):
        if self.include_times:
            return self.COLUMNS
        return tuple(c for c in self.COLUMNS if c != "mean_time_s")

    def to_csv(self):
        buf = io.StringIO()
        cols = self._columns()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({c: r[c] for c in cols})
        return buf.getvalue()

    def to_text(self):
        cols = self._columns()
        table = [[str(r[c]) for c in cols] for r in self.rows]
        widths = [max(len(c), *(len(row[i]) for row in table)) if table
                  else len(c) for i, c in enumerate(cols)]
        lines = []
        if self.budget_note:
            lines.append(f"# {self.budget_note}")
        lines.append(" ".join(c.ljust(w) for c, w in zip(cols, widths)))
        for row in table:
            lines.append(" ".join(v.ljust(w) for v, w in zip(row, widths)))
        return "\n".join(lines) + "\n"
