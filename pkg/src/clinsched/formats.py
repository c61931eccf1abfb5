"""Document formats: instances, solutions, histogram CSV, explanations.

One self-describing JSON layout with an explicit format_version; writers are
canonical (sorted keys, two-space indent, trailing newline) so identical data
always serializes to identical bytes.  Parsing is strict: unknown fields are
errors, and diagnostics name the offending field path.
"""

from __future__ import annotations

import json
from typing import Any, Optional, Sequence, Union

from .cts import (
    CtsInstance,
    CtsPatient,
    CtsResource,
    CtsRoom,
    CtsSchedule,
    CtsPatientSchedule,
    validate_cts,
)
from .explain import ContrastResult, JustificationGraph, Mus
from .model import Name, ObjectiveVector
from .ors import (
    OrsAssignment,
    OrsInstance,
    OrsRegistration,
    OrsSchedule,
    OrsShift,
    OrsUnit,
    validate_ors,
)
from .poac import (
    PoacArea,
    PoacExam,
    PoacInstance,
    PoacPatient,
    PoacSchedule,
    validate_poac,
)

__all__ = [
    "FormatError",
    "FORMAT_VERSION",
    "Instance",
    "parse_instance",
    "write_instance",
    "instance_kind",
    "write_solution",
    "parse_solution",
    "write_histogram_csv",
    "write_mus_document",
    "write_justification_document",
    "write_contrast_document",
    "canonical_json",
]

FORMAT_VERSION = 1

Instance = Union[CtsInstance, OrsInstance, PoacInstance]


class FormatError(Exception):
    pass


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


class _Obj:
    """Strict field extraction with path-aware diagnostics."""

    def __init__(self, raw: Any, path: str):
        if not isinstance(raw, dict):
            raise FormatError(f"{path}: expected an object")
        self.raw = dict(raw)
        self.path = path

    def take(self, key: str, kind, optional: bool = False, default=None):
        if key not in self.raw:
            if optional:
                return default
            raise FormatError(f"{self.path}.{key}: missing required field")
        value = self.raw.pop(key)
        if value is None and optional:
            return default
        if kind is int and isinstance(value, bool):
            raise FormatError(f"{self.path}.{key}: expected an integer")
        if kind is not None and not isinstance(value, kind):
            raise FormatError(
                f"{self.path}.{key}: expected {getattr(kind, '__name__', kind)}"
            )
        return value

    def take_list(self, key: str, optional: bool = False):
        value = self.take(key, list, optional=optional, default=[])
        return value

    def done(self) -> None:
        if self.raw:
            extra = sorted(self.raw)[0]
            raise FormatError(f"{self.path}.{extra}: unknown field")


def instance_kind(instance: Instance) -> str:
    if isinstance(instance, CtsInstance):
        return "cts"
    if isinstance(instance, OrsInstance):
        return "ors"
    if isinstance(instance, PoacInstance):
        return "poac"
    raise FormatError(f"unknown instance type {type(instance).__name__}")


# -- instance documents ---------------------------------------------------------


def write_instance(instance: Instance) -> str:
    kind = instance_kind(instance)
    if kind == "cts":
        doc = _cts_doc(instance)
    elif kind == "ors":
        doc = _ors_doc(instance)
    else:
        doc = _poac_doc(instance)
    return canonical_json(doc)


def _cts_doc(x: CtsInstance) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "cts",
        "slots": x.slots,
        "slot_minutes": x.slot_minutes,
        "day_start": x.day_start,
        "staff_capacity": {
            "registration": x.staff_capacity[0],
            "blood_collection": x.staff_capacity[1],
            "medical_check": x.staff_capacity[2],
        },
        "patients": [
            {
                "id": p.id,
                "durations": list(p.durations),
                "preferred": p.preferred,
                "scalp_cooling": p.scalp_cooling,
                "isolation": p.isolation,
                "drug_ready_slot": p.drug_ready_slot,
            }
            for p in x.patients
        ],
        "resources": [
            {
                "id": r.id,
                "type": r.type,
                "room": r.room,
                "scalp_cooling": r.scalp_cooling,
            }
            for r in x.resources
        ],
        "rooms": [
            {"id": room.id, "resources": list(room.resources)} for room in x.rooms
        ],
    }


def _ors_doc(x: OrsInstance) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "ors",
        "horizon_days": x.horizon_days,
        "registrations": [
            {
                "id": r.id,
                "specialty": r.specialty,
                "duration": r.duration,
                "priority": r.priority,
                "scu": (
                    None
                    if r.scu_unit is None
                    else {"unit": r.scu_unit, "stay_days": r.scu_days}
                ),
            }
            for r in x.registrations
        ],
        "shifts": [
            {
                "id": s.id,
                "room": s.room,
                "day": s.day,
                "specialty": s.specialty,
                "length": s.length,
            }
            for s in x.shifts
        ],
        "units": [{"id": u.id, "beds_per_day": u.beds_per_day} for u in x.units],
    }


def _poac_doc(x: PoacInstance) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "poac",
        "days": x.days,
        "doctors_per_day": x.doctors_per_day,
        "patients": [
            {"id": p.id, "due_day": p.due_day, "exams": list(p.exams)}
            for p in x.patients
        ],
        "exams": [{"id": e.id, "area": e.area} for e in x.exams],
        "areas": [{"id": a.id, "daily_capacity": a.daily_capacity} for a in x.areas],
    }


def parse_instance(text: Union[str, bytes]) -> Instance:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    top = _Obj(raw, "$")
    version = top.take("format_version", int)
    if version != FORMAT_VERSION:
        raise FormatError(f"$.format_version: unsupported version {version}")
    kind = top.take("kind", str)
    if kind == "cts":
        instance = _parse_cts(top)
        errors = validate_cts(instance)
    elif kind == "ors":
        instance = _parse_ors(top)
        errors = validate_ors(instance)
    elif kind == "poac":
        instance = _parse_poac(top)
        errors = validate_poac(instance)
    else:
        raise FormatError(f"$.kind: unknown problem kind {kind!r}")
    if errors:
        raise FormatError(f"semantic error: {errors[0]}")
    return instance


def _parse_cts(top: _Obj) -> CtsInstance:
    slots = top.take("slots", int)
    slot_minutes = top.take("slot_minutes", int, optional=True, default=10)
    day_start = top.take("day_start", str, optional=True, default="07:40")
    caps = _Obj(top.take("staff_capacity", dict), "$.staff_capacity")
    capacity = (
        caps.take("registration", int),
        caps.take("blood_collection", int),
        caps.take("medical_check", int),
    )
    caps.done()
    patients = []
    for i, rp in enumerate(top.take_list("patients")):
        o = _Obj(rp, f"$.patients[{i}]")
        durations = o.take("durations", list)
        if len(durations) != 4 or not all(isinstance(d, int) for d in durations):
            raise FormatError(f"$.patients[{i}].durations: expected four integers")
        patients.append(
            CtsPatient(
                id=o.take("id", str),
                durations=tuple(durations),
                preferred=o.take("preferred", str),
                scalp_cooling=o.take("scalp_cooling", bool, optional=True, default=False),
                isolation=o.take("isolation", bool, optional=True, default=False),
                drug_ready_slot=o.take("drug_ready_slot", int, optional=True),
            )
        )
        o.done()
    resources = []
    for i, rr in enumerate(top.take_list("resources")):
        o = _Obj(rr, f"$.resources[{i}]")
        resources.append(
            CtsResource(
                id=o.take("id", str),
                type=o.take("type", str),
                room=o.take("room", str),
                scalp_cooling=o.take("scalp_cooling", bool, optional=True, default=False),
            )
        )
        o.done()
    rooms = []
    for i, rm in enumerate(top.take_list("rooms")):
        o = _Obj(rm, f"$.rooms[{i}]")
        rooms.append(CtsRoom(o.take("id", str), tuple(o.take("resources", list))))
        o.done()
    top.done()
    return CtsInstance(
        slots=slots,
        patients=tuple(patients),
        resources=tuple(resources),
        rooms=tuple(rooms),
        staff_capacity=capacity,
        slot_minutes=slot_minutes,
        day_start=day_start,
    )


def _parse_ors(top: _Obj) -> OrsInstance:
    horizon = top.take("horizon_days", int)
    regs = []
    for i, rr in enumerate(top.take_list("registrations")):
        o = _Obj(rr, f"$.registrations[{i}]")
        scu_raw = o.take("scu", dict, optional=True)
        scu_unit, scu_days = None, 0
        if scu_raw is not None:
            so = _Obj(scu_raw, f"$.registrations[{i}].scu")
            scu_unit = so.take("unit", str)
            scu_days = so.take("stay_days", int)
            so.done()
        regs.append(
            OrsRegistration(
                id=o.take("id", str),
                specialty=o.take("specialty", str),
                duration=o.take("duration", int),
                priority=o.take("priority", int),
                scu_unit=scu_unit,
                scu_days=scu_days,
            )
        )
        o.done()
    shifts = []
    for i, rs in enumerate(top.take_list("shifts")):
        o = _Obj(rs, f"$.shifts[{i}]")
        shifts.append(
            OrsShift(
                id=o.take("id", str),
                room=o.take("room", str),
                day=o.take("day", int),
                specialty=o.take("specialty", str),
                length=o.take("length", int),
            )
        )
        o.done()
    units = []
    for i, ru in enumerate(top.take_list("units", optional=True)):
        o = _Obj(ru, f"$.units[{i}]")
        units.append(OrsUnit(o.take("id", str), o.take("beds_per_day", int)))
        o.done()
    top.done()
    return OrsInstance(horizon, tuple(regs), tuple(shifts), tuple(units))


def _parse_poac(top: _Obj) -> PoacInstance:
    days = top.take("days", int)
    doctors = top.take("doctors_per_day", int)
    patients = []
    for i, rp in enumerate(top.take_list("patients")):
        o = _Obj(rp, f"$.patients[{i}]")
        patients.append(
            PoacPatient(
                o.take("id", str), o.take("due_day", int), tuple(o.take("exams", list))
            )
        )
        o.done()
    exams = []
    for i, re_ in enumerate(top.take_list("exams")):
        o = _Obj(re_, f"$.exams[{i}]")
        exams.append(PoacExam(o.take("id", str), o.take("area", str)))
        o.done()
    areas = []
    for i, ra in enumerate(top.take_list("areas")):
        o = _Obj(ra, f"$.areas[{i}]")
        areas.append(PoacArea(o.take("id", str), o.take("daily_capacity", int)))
        o.done()
    top.done()
    return PoacInstance(days, doctors, tuple(patients), tuple(exams), tuple(areas))


# -- solution documents ---------------------------------------------------------


def write_solution(instance: Instance, schedule, status: str) -> str:
    kind = instance_kind(instance)
    doc: dict = {
        "format_version": FORMAT_VERSION,
        "kind": f"{kind}-solution",
        "status": status,
        "objective": schedule.objective.as_list(),
    }
    if kind == "cts":
        doc["patients"] = [
            {
                "id": p.id,
                "phase_starts": list(p.phase_starts),
                "resource": p.resource,
            }
            for p in schedule.patients
        ]
    elif kind == "ors":
        doc["assignments"] = [
            {"id": a.id, "shift": a.shift} for a in schedule.assignments
        ]
    else:
        doc["days"] = [{"id": pid, "day": d} for pid, d in schedule.days]
        doc["activations"] = [
            {"area": a, "day": d} for a, d in schedule.activations
        ]
    return canonical_json(doc)


def parse_solution(text: Union[str, bytes], instance: Instance):
    """Read a solution document back into the instance's schedule type."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    kind = instance_kind(instance)
    top = _Obj(raw, "$")
    version = top.take("format_version", int)
    if version != FORMAT_VERSION:
        raise FormatError(f"$.format_version: unsupported version {version}")
    got = top.take("kind", str)
    if got != f"{kind}-solution":
        raise FormatError(f"$.kind: expected {kind}-solution, got {got!r}")
    status = top.take("status", str)
    objective = ObjectiveVector(top.take("objective", list))
    if kind == "cts":
        patients = []
        for i, rp in enumerate(top.take_list("patients")):
            o = _Obj(rp, f"$.patients[{i}]")
            starts = o.take("phase_starts", list)
            if len(starts) != 4:
                raise FormatError(f"$.patients[{i}].phase_starts: expected 4 entries")
            patients.append(
                CtsPatientSchedule(o.take("id", str), tuple(starts), o.take("resource", str))
            )
            o.done()
        schedule = CtsSchedule(tuple(patients), objective)
    elif kind == "ors":
        assignments = []
        for i, ra in enumerate(top.take_list("assignments")):
            o = _Obj(ra, f"$.assignments[{i}]")
            assignments.append(
                OrsAssignment(o.take("id", str), o.take("shift", str, optional=True))
            )
            o.done()
        schedule = OrsSchedule(tuple(assignments), objective)
    else:
        days = []
        for i, rd in enumerate(top.take_list("days")):
            o = _Obj(rd, f"$.days[{i}]")
            days.append((o.take("id", str), o.take("day", int)))
            o.done()
        acts = []
        for i, ra in enumerate(top.take_list("activations")):
            o = _Obj(ra, f"$.activations[{i}]")
            acts.append((o.take("area", str), o.take("day", int)))
            o.done()
        schedule = PoacSchedule(tuple(days), tuple(acts), objective)
    top.done()
    return schedule, status


# -- histogram CSV ---------------------------------------------------------------


def write_histogram_csv(
    labels: Sequence[str],
    baseline: Sequence[int],
    exact: Sequence[int],
) -> str:
    if not (len(labels) == len(baseline) == len(exact)):
        raise FormatError("histogram columns must have equal length")
    lines = ["slot,baseline,exact"]
    for label, b, e in zip(labels, baseline, exact):
        lines.append(f"{label},{b},{e}")
    return "\n".join(lines) + "\n"


# -- explanation documents --------------------------------------------------------


def _describe(label: Name, descriptions: Optional[dict]) -> str:
    if descriptions and label in descriptions:
        return descriptions[label]
    return str(label)


def write_mus_document(
    mus: Mus, descriptions: Optional[dict] = None, note: str = ""
) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "mus",
        "note": note,
        "constraints": [
            {"label": str(label), "description": _describe(label, descriptions)}
            for label in mus.sorted()
        ],
    }
    return canonical_json(doc)


def write_justification_document(
    graph: JustificationGraph,
    atom_renderer,
    descriptions: Optional[dict] = None,
) -> str:
    nodes = []
    for node in graph.nodes:
        if node.kind == "assignment":
            nodes.append(
                {
                    "id": node.id,
                    "type": "assignment",
                    "atom": atom_renderer(node.var, node.value),
                    "status": node.status,
                }
            )
        else:
            nodes.append(
                {
                    "id": node.id,
                    "type": "fact",
                    "label": str(node.label),
                    "description": _describe(node.label, descriptions),
                }
            )
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "justification",
        "roots": list(graph.roots),
        "nodes": nodes,
        "edges": [
            {"from": src, "to": list(dst)} for src, dst in sorted(graph.edges.items())
        ],
    }
    return canonical_json(doc)


def write_contrast_document(
    result: ContrastResult, descriptions: Optional[dict] = None
) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
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
                {"label": str(label), "description": _describe(label, descriptions)}
                for label in result.mus.sorted()
            ]
        ),
    }
    return canonical_json(doc)
