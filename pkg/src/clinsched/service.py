"""Request/response service for the interactive planning loop.

A session wraps one instance plus its latest solve outcome, user background
facts and an append-only edit history.  Edits use a small fixed op set (add /
remove / modify the domain entities) so explanations can refer to meaningful
user actions; after an edit the stored outcome is flagged stale until the
next solve.  One solve runs per session at a time; everything is re-derived
from documents, so replaying the edit history from the initial instance
reproduces the current one.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, HTTPException

from .baseline import greedy_cts
from .cli import _parse_fact_line  # shared fact-line grammar
from .cts import phase2_histogram, slot_labels
from .engine import Engine, SolveConfig, Status
from .explain import (
    ExplainError,
    NotUnsatError,
    contrast,
    extract_mus,
    justify,
    new_session,
    session_add_background,
)
from .formats import (
    FormatError,
    instance_kind,
    parse_instance,
    write_instance,
)
from .cts import decode_cts, encode_cts
from .ors import decode_ors, encode_ors
from .poac import decode_poac, encode_poac

__all__ = ["create_app"]

DEFAULT_TIME_LIMIT = 60.0


@dataclass
class _Session:
    id: str
    instance_doc: dict
    initial_doc: dict
    edits: list[dict] = field(default_factory=list)
    outcome_doc: Optional[dict] = None
    stale: bool = False
    background: list[str] = field(default_factory=list)
    history: list[list[str]] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    solving: bool = False

    def state_doc(self) -> dict:
        return {
            "id": self.id,
            "instance": self.instance_doc,
            "outcome": self.outcome_doc,
            "stale": self.stale,
            "background": list(self.background),
            "history": [list(h) for h in self.history],
            "edits": list(self.edits),
        }


def _encode(instance):
    kind = instance_kind(instance)
    if kind == "cts":
        model, table = encode_cts(instance)
        return kind, model, table, decode_cts
    if kind == "ors":
        model, table = encode_ors(instance)
        return kind, model, table, decode_ors
    model, table = encode_poac(instance)
    return kind, model, table, decode_poac


def _solution_doc(instance, schedule, status: str) -> dict:
    from .formats import write_solution

    return json.loads(write_solution(instance, schedule, status))


def _apply_edit(kind: str, doc: dict, op: dict) -> dict:
    """Apply one fixed-vocabulary patch op to an instance document."""
    out = json.loads(json.dumps(doc))
    name = op.get("op")
    collections = {
        "cts": {"patient": "patients", "resource": "resources"},
        "ors": {"registration": "registrations", "shift": "shifts"},
        "poac": {"patient": "patients"},
    }[kind]
    if name in {f"add_{e}" for e in collections}:
        entity = name[4:]
        item = op.get(entity)
        if not isinstance(item, dict):
            raise FormatError(f"{name} needs an object field {entity!r}")
        out[collections[entity]].append(item)
        if kind == "cts" and entity == "resource":
            room_id = item.get("room")
            rooms = {r["id"] for r in out["rooms"]}
            if room_id not in rooms:
                out["rooms"].append({"id": room_id, "resources": [item["id"]]})
            else:
                for room in out["rooms"]:
                    if room["id"] == room_id:
                        room["resources"].append(item["id"])
        return out
    if name in {f"remove_{e}" for e in collections}:
        entity = name[7:]
        key = collections[entity]
        wanted = op.get("id")
        before = len(out[key])
        out[key] = [item for item in out[key] if item["id"] != wanted]
        if len(out[key]) == before:
            raise FormatError(f"{name}: no {entity} with id {wanted!r}")
        if kind == "cts" and entity == "resource":
            for room in out["rooms"]:
                room["resources"] = [r for r in room["resources"] if r != wanted]
            out["rooms"] = [r for r in out["rooms"] if r["resources"]]
        return out
    if name in {f"modify_{e}" for e in collections}:
        entity = name[7:]
        key = collections[entity]
        wanted = op.get("id")
        fields = op.get("fields")
        if not isinstance(fields, dict):
            raise FormatError(f"{name} needs a 'fields' object")
        for item in out[key]:
            if item["id"] == wanted:
                for k, v in fields.items():
                    if k not in item:
                        raise FormatError(f"{name}: unknown field {k!r}")
                    item[k] = v
                return out
        raise FormatError(f"{name}: no {entity} with id {wanted!r}")
    if kind == "cts" and name == "set_staff_capacity":
        phase = op.get("phase")
        if phase not in ("registration", "blood_collection", "medical_check"):
            raise FormatError("set_staff_capacity needs a phase name")
        out["staff_capacity"][phase] = op.get("value")
        return out
    if kind == "ors" and name == "set_unit_beds":
        for unit in out["units"]:
            if unit["id"] == op.get("unit"):
                unit["beds_per_day"] = op.get("value")
                return out
        raise FormatError(f"set_unit_beds: no unit {op.get('unit')!r}")
    if kind == "poac" and name == "set_doctors":
        out["doctors_per_day"] = op.get("value")
        return out
    if kind == "poac" and name == "set_area_capacity":
        for area in out["areas"]:
            if area["id"] == op.get("area"):
                area["daily_capacity"] = op.get("value")
                return out
        raise FormatError(f"set_area_capacity: no area {op.get('area')!r}")
    raise FormatError(f"unknown edit op {name!r} for kind {kind}")


def create_app(state_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="clinsched service", version="0.1.0")
    sessions: dict[str, _Session] = {}
    store_lock = threading.Lock()

    def persist(session: _Session) -> None:
        if state_dir is None:
            return
        os.makedirs(state_dir, exist_ok=True)
        path = os.path.join(state_dir, f"{session.id}.json")
        doc = session.state_doc()
        doc["initial_instance"] = session.initial_doc
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
        os.replace(tmp, path)

    if state_dir is not None and os.path.isdir(state_dir):
        for fname in sorted(os.listdir(state_dir)):
            if not fname.endswith(".json"):
                continue
            with open(os.path.join(state_dir, fname)) as fh:
                doc = json.load(fh)
            session = _Session(
                id=doc["id"],
                instance_doc=doc["instance"],
                initial_doc=doc.get("initial_instance", doc["instance"]),
                edits=doc.get("edits", []),
                outcome_doc=doc.get("outcome"),
                stale=doc.get("stale", False),
                background=doc.get("background", []),
                history=doc.get("history", []),
            )
            sessions[session.id] = session

    def get_session(session_id: str) -> _Session:
        with store_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        return session

    def current_instance(session: _Session):
        return parse_instance(json.dumps(session.instance_doc))

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": len(sessions)}

    @app.post("/sessions", status_code=201)
    def create_session(body: dict):
        raw = body.get("instance")
        if raw is None:
            raise HTTPException(status_code=400, detail="body needs an 'instance'")
        try:
            instance = parse_instance(json.dumps(raw))
        except FormatError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        doc = json.loads(write_instance(instance))
        session = _Session(id=uuid.uuid4().hex[:12], instance_doc=doc, initial_doc=doc)
        with store_lock:
            sessions[session.id] = session
        persist(session)
        return {"id": session.id}

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        session = get_session(session_id)
        doc = session.state_doc()
        doc["charts"] = _charts(session)
        return doc

    def _charts(session: _Session) -> Optional[dict]:
        """Per-slot series for the chemotherapy histogram view; the service
        computes both series so the browser stays a thin client."""
        outcome = session.outcome_doc
        if (
            session.stale
            or outcome is None
            or session.instance_doc.get("kind") != "cts"
            or "patients" not in outcome
        ):
            return None
        from .formats import parse_solution

        instance = current_instance(session)
        schedule, _status = parse_solution(json.dumps(outcome), instance)
        baseline = greedy_cts(instance)
        return {
            "labels": slot_labels(instance),
            "exact": phase2_histogram(instance, schedule),
            "baseline": phase2_histogram(instance, baseline.schedule),
        }

    @app.post("/sessions/{session_id}/solve")
    def solve_session(session_id: str, body: Optional[dict] = None):
        session = get_session(session_id)
        limit = DEFAULT_TIME_LIMIT
        if body and "time_limit_s" in body:
            limit = float(body["time_limit_s"])
            if limit <= 0:
                raise HTTPException(status_code=400, detail="time limit must be positive")
        with session.lock:
            if session.solving:
                raise HTTPException(status_code=409, detail="a solve is already running")
            session.solving = True
        try:
            instance = current_instance(session)
            kind, model, table, decode = _encode(instance)
            outcome = Engine(model).solve(SolveConfig(time_limit_s=limit))
            if outcome.assignment is None:
                doc = {"status": outcome.status.value, "objective": None}
            else:
                schedule = decode(table, outcome.assignment)
                doc = _solution_doc(instance, schedule, outcome.status.value)
            with session.lock:
                session.outcome_doc = doc
                session.stale = False
            persist(session)
            return doc
        finally:
            with session.lock:
                session.solving = False

    @app.post("/sessions/{session_id}/edit")
    def edit_session(session_id: str, body: dict):
        session = get_session(session_id)
        ops = body.get("ops")
        if not isinstance(ops, list) or not ops:
            raise HTTPException(status_code=400, detail="body needs a non-empty 'ops' list")
        with session.lock:
            doc = session.instance_doc
            kind = doc.get("kind")
            try:
                for op in ops:
                    if not isinstance(op, dict):
                        raise FormatError("each op must be an object")
                    doc = _apply_edit(kind, doc, op)
                parse_instance(json.dumps(doc))  # semantic validation
            except (FormatError, KeyError, TypeError) as exc:
                raise HTTPException(status_code=400, detail=f"bad edit: {exc}")
            session.instance_doc = doc
            session.edits.extend(ops)
            session.stale = session.outcome_doc is not None
        persist(session)
        return session.state_doc()

    @app.post("/sessions/{session_id}/explain/unsat")
    def explain_unsat(session_id: str, body: Optional[dict] = None):
        session = get_session(session_id)
        instance = current_instance(session)
        kind, model, table, _ = _encode(instance)
        try:
            mus = extract_mus(model, SolveConfig(time_limit_s=DEFAULT_TIME_LIMIT))
        except NotUnsatError:
            raise HTTPException(status_code=400, detail="instance is satisfiable")
        except ExplainError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {
            "kind": "mus",
            "constraints": [
                {
                    "label": str(label),
                    "description": table.descriptions.get(label, str(label)),
                }
                for label in mus.sorted()
            ],
        }

    def _optimal_context(session: _Session):
        instance = current_instance(session)
        kind, model, table, decode = _encode(instance)
        outcome = Engine(model).solve(SolveConfig(time_limit_s=DEFAULT_TIME_LIMIT))
        if outcome.status is Status.UNSAT:
            raise HTTPException(status_code=400, detail="instance is infeasible")
        if outcome.status is not Status.OPTIMAL:
            raise HTTPException(status_code=409, detail="no proven optimum in time")
        return instance, model, table, outcome

    @app.post("/sessions/{session_id}/explain/why")
    def explain_why(session_id: str, body: dict):
        session = get_session(session_id)
        atom = body.get("atom")
        if not atom:
            raise HTTPException(status_code=400, detail="body needs an 'atom'")
        instance, model, table, outcome = _optimal_context(session)
        try:
            var, value = table.atom(atom)
        except Exception as exc:
            raise HTTPException(status_code=400, detail=f"bad atom: {exc}")
        if outcome.assignment.get(var) != value:
            raise HTTPException(
                status_code=400, detail=f"{atom} does not hold in the optimum"
            )
        graph = justify(model, outcome.assignment, [(var, value)])
        nodes = []
        for node in graph.nodes:
            if node.kind == "assignment":
                nodes.append(
                    {
                        "id": node.id,
                        "type": "assignment",
                        "atom": table.render_atom(node.var, node.value),
                        "status": node.status,
                    }
                )
            else:
                nodes.append(
                    {
                        "id": node.id,
                        "type": "fact",
                        "label": str(node.label),
                        "description": table.descriptions.get(
                            node.label, str(node.label)
                        ),
                    }
                )
        return {
            "kind": "justification",
            "roots": list(graph.roots),
            "nodes": nodes,
            "edges": [
                {"from": src, "to": list(dst)}
                for src, dst in sorted(graph.edges.items())
            ],
        }

    @app.post("/sessions/{session_id}/explain/contrast")
    def explain_contrast(session_id: str, body: dict):
        session = get_session(session_id)
        keep, instead = body.get("keep"), body.get("instead")
        if not keep or not instead:
            raise HTTPException(status_code=400, detail="body needs 'keep' and 'instead'")
        instance, model, table, outcome = _optimal_context(session)
        try:
            a = table.atom(keep)
            b = table.atom(instead)
            result = contrast(model, outcome.assignment, a, b)
        except ExplainError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except Exception as exc:
            raise HTTPException(status_code=400, detail=f"bad atom: {exc}")
        return {
            "kind": "contrast",
            "verdict": result.verdict,
            "original_objective": result.original_objective.as_list(),
            "alternative_objective": (
                None
                if result.alternative_objective is None
                else result.alternative_objective.as_list()
            ),
            "mus": (
                None
                if result.mus is None
                else [
                    {
                        "label": str(label),
                        "description": table.descriptions.get(label, str(label)),
                    }
                    for label in result.mus.sorted()
                ]
            ),
        }

    @app.post("/sessions/{session_id}/background")
    def add_background(session_id: str, body: dict):
        session = get_session(session_id)
        lines = body.get("facts")
        if not isinstance(lines, list) or not lines:
            raise HTTPException(status_code=400, detail="body needs a 'facts' list")
        instance = current_instance(session)
        kind, model, table, _ = _encode(instance)
        state = new_session(model)
        analysis = None
        with session.lock:
            all_lines = session.background + [str(l) for l in lines]
            try:
                facts = [_parse_fact_line(model, table, l) for l in all_lines]
            except Exception as exc:
                raise HTTPException(status_code=400, detail=f"bad fact: {exc}")
            analysis = session_add_background(state, facts)
            session.background = all_lines
            session.history.extend(
                [str(l), "sat" if analysis.sat else "unsat"] for l in lines
            )
        persist(session)
        return {
            "satisfiable": analysis.sat,
            "mus": (
                None
                if analysis.mus is None
                else [
                    {
                        "label": str(label),
                        "description": table.descriptions.get(label, str(label)),
                    }
                    for label in analysis.mus.sorted()
                ]
            ),
            "background": list(session.background),
        }

    return app
