"""Session-oriented HTTP API for the diagnosis engine.

The workbench (or any scripted client) creates a session with a circuit and
an observation, polls the measurement proposal, and posts measured values;
the engine advances through deduction-only steps automatically.  Sessions
live in memory, expire after an idle period, and serialize their requests
(concurrent posts to one session get a conflict error).

Endpoints: POST /sessions; GET /sessions/{id}; GET /sessions/{id}/proposal;
POST /sessions/{id}/measurements; DELETE /sessions/{id}; GET /circuits.
"""
from __future__ import annotations

import threading
import time
import uuid
from importlib import resources

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import compiler
from .abstraction import abstraction
from .circuit import BenchParseError, CircuitError, parse_bench
from .diagnose import (AlreadyKnownError, DiagnosisSession, SimulationOracle,
                       System)
from .encode import ModelParams


def sig12(x):
    """Probabilities travel as decimals with 12 significant digits."""
    return float(f"{float(x):.12g}")


def bundled_circuit_names():
    out = []
    for entry in resources.files("circuitdiag.data.circuits").iterdir():
        if entry.name.endswith(".bench"):
            out.append(entry.name[:-len(".bench")])
    return sorted(out)


def load_bundled(name):
    ref = resources.files("circuitdiag.data.circuits").joinpath(f"{name}.bench")
    if not ref.is_file():
        raise CircuitError(f"unknown bundled circuit {name!r}")
    return parse_bench(ref.read_text(), name)


class CircuitSpec(BaseModel):
    name: str | None = None
    bench: str | None = None


class CreateSession(BaseModel):
    circuit: CircuitSpec
    observation: dict[str, int]
    mode: str = "hierarchical"
    heuristic: str = "fp"
    k: int | None = None
    clone: bool = False
    faults: list[str] | None = None  # scripted demo oracle
    seed: int = 0
    healthy_prior: float = 0.9
    broken_high: float = 0.5
    max_cone_inputs: int | None = None


class Measurement(BaseModel):
    wire: str
    value: int = Field(ge=0, le=1)


class SessionResource:
    def __init__(self, sid, circuit, req):
        self.id = sid
        self.circuit = circuit
        self.lock = threading.Lock()
        self.created_at = time.time()
        self.last_activity = self.created_at
        self.phase = "compiling"
        self.error = None
        self.session = None
        self.oracle = None
        self.request = req

    def build(self):
        """Compile and bring the session to its first steady state."""
        try:
            params = ModelParams(self.request.healthy_prior,
                                 self.request.broken_high)
            system = System(self.circuit, mode=self.request.mode,
                            params=params, clone=self.request.clone,
                            max_cone_inputs=self.request.max_cone_inputs)
            self.session = DiagnosisSession(
                system, self.request.observation,
                heuristic=self.request.heuristic, k=self.request.k,
                seed=self.request.seed)
            if self.request.faults is not None:
                inputs = {w: self.request.observation[w]
                          for w in self.circuit.inputs}
                self.oracle = SimulationOracle(self.circuit,
                                               set(self.request.faults),
                                               inputs)
            self.session.advance()
            self.phase = "ready"
        except (CircuitError, compiler.LimitError, ValueError) as exc:
            self.phase = "failed"
            self.error = str(exc)

    def touch(self):
        self.last_activity = time.time()


def _err(status, code, message):
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message}})


def create_app(idle_timeout=1800.0, async_compile=True):
    app = FastAPI(title="circuitdiag service")
    store: dict[str, SessionResource] = {}
    store_lock = threading.Lock()

    def sweep():
        now = time.time()
        with store_lock:
            dead = [k for k, v in store.items()
                    if now - v.last_activity > idle_timeout]
            for k in dead:
                del store[k]

    def get_resource(sid):
        sweep()
        res = store.get(sid)
        if res is None:
            raise HTTPException(404, detail={"code": "not_found",
                                             "message": f"no session {sid}"})
        res.touch()
        return res

    def state_of(res):
        out = {
            "id": res.id,
            "phase": res.phase,
            "circuit": res.circuit.name,
        }
        if res.phase == "failed":
            out["status"] = "failed"
            out["error"] = res.error
            return out
        if res.phase == "compiling":
            out["status"] = "compiling"
            return out
        s = res.session
        out.update({
            "status": s.status,
            "mode": s.mode,
            "heuristic": s.heuristic,
            "cost": s.cost,
            "observation": s.observation,
            "measurements": [[w, v] for w, v in s.measurements],
            "faults": list(s.faults),
            "posteriors": {c: sig12(p)
                           for c, p in s.component_posteriors().items()},
            "implications": s.implied_wires(),
        })
        if s.status == "failed":
            out["error"] = s.failure
        prop = s.proposal()
        if prop is not None:
            out["proposal"] = _proposal_body(res, prop)
        return out

    def _proposal_body(res, prop):
        wire, info = prop
        body = {"wire": wire,
                "wireEntropy": sig12(info.get("wireEntropy", 0.0))}
        if "component" in info:
            body["component"] = info["component"]
            body["componentPosterior"] = sig12(info["componentPosterior"])
        if res.oracle is not None:
            body["oracleValue"] = res.oracle.measure(wire)
        return body

    @app.get("/circuits")
    def circuits():
        return {"circuits": bundled_circuit_names()}

    @app.get("/circuits/{name}")
    def circuit_text(name: str):
        try:
            load_bundled(name)
        except CircuitError as exc:
            raise HTTPException(404, detail={"code": "not_found",
                                             "message": str(exc)})
        ref = resources.files("circuitdiag.data.circuits") \
            .joinpath(f"{name}.bench")
        return {"name": name, "bench": ref.read_text()}

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSession):
        sweep()
        try:
            if req.circuit.bench:
                circuit = parse_bench(req.circuit.bench, "inline")
            elif req.circuit.name:
                circuit = load_bundled(req.circuit.name)
            else:
                return _err(400, "bad_request", "circuit name or bench needed")
            if req.mode not in ("flat", "hierarchical"):
                return _err(400, "bad_request", f"unknown mode {req.mode!r}")
            if req.heuristic not in ("fp", "ew", "random"):
                return _err(400, "bad_request",
                            f"unknown heuristic {req.heuristic!r}")
            missing = [w for w in circuit.inputs if w not in req.observation]
            if missing:
                return _err(400, "bad_request",
                            f"observation missing inputs {missing}")
            if req.faults:
                for f in req.faults:
                    if not circuit.has_gate(f):
                        return _err(400, "bad_request",
                                    f"unknown fault gate {f!r}")
        except (BenchParseError, CircuitError) as exc:
            return _err(400, "parse_error", str(exc))
        sid = uuid.uuid4().hex[:12]
        res = SessionResource(sid, circuit, req)
        with store_lock:
            store[sid] = res
        if async_compile:
            threading.Thread(target=res.build, daemon=True).start()
        else:
            res.build()
        return state_of(res)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return state_of(get_resource(sid))

    @app.get("/sessions/{sid}/abstraction")
    def get_abstraction(sid: str):
        res = get_resource(sid)
        view = abstraction(res.circuit)
        return {
            "abstraction": list(view.abstraction),
            "cones": {root: {"members": sorted(c.members),
                             "inputs": list(c.inputs)}
                      for root, c in view.cones.items()},
        }

    @app.get("/sessions/{sid}/proposal")
    def get_proposal(sid: str):
        res = get_resource(sid)
        if res.phase == "compiling":
            return _err(409, "compiling", "session is still compiling")
        if res.phase == "failed":
            return _err(409, "failed", res.error or "session failed")
        s = res.session
        if s.status == "done":
            return _err(409, "done", "session already finished")
        if s.status in ("stuck", "failed"):
            return _err(409, s.status, s.failure or s.status)
        prop = s.proposal()
        if prop is None:
            return _err(409, "no_proposal", "no proposal pending")
        return _proposal_body(res, prop)

    @app.post("/sessions/{sid}/measurements")
    def post_measurement(sid: str, m: Measurement):
        res = get_resource(sid)
        if res.phase == "compiling":
            return _err(409, "compiling", "session is still compiling")
        if res.phase == "failed":
            return _err(409, "failed", res.error or "session failed")
        if not res.lock.acquire(blocking=False):
            return _err(409, "conflict", "another request holds this session")
        try:
            s = res.session
            if s.status == "done":
                return _err(409, "done", "session already finished")
            try:
                s.submit(m.wire, m.value)
            except AlreadyKnownError as exc:
                return _err(409, "already_known", str(exc))
            except CircuitError as exc:
                return _err(404, "unknown_wire", str(exc))
            s.advance()
            return state_of(res)
        finally:
            res.lock.release()

    @app.delete("/sessions/{sid}", status_code=204)
    def delete_session(sid: str):
        get_resource(sid)
        with store_lock:
            store.pop(sid, None)
        return None

    return app


def main(host="127.0.0.1", port=8734, idle_timeout=1800.0):
    import uvicorn
    uvicorn.run(create_app(idle_timeout=idle_timeout), host=host, port=port)
