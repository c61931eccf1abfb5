"""Pre-operative assessment clinic scheduling.

Each patient gets one day, no later than their due day, on which they take
all required exams.  An exam happens in an exam area; hosting any patients in
an area on a day activates that (area, day), which consumes one doctor from
the day's shared pool and is the costly event to minimize.  Ties are broken
by scheduling patients early (sum of assigned day indices, level 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .model import ConstraintModel, Name, ObjectiveVector

__all__ = [
    "PoacError",
    "PoacPatient",
    "PoacExam",
    "PoacArea",
    "PoacInstance",
    "PoacSchedule",
    "PoacDecodeTable",
    "PoacVerifyReport",
    "validate_poac",
    "encode_poac",
    "decode_poac",
    "verify_poac",
]


class PoacError(Exception):
    pass


@dataclass(frozen=True)
class PoacPatient:
    id: str
    due_day: int
    exams: tuple[str, ...]


@dataclass(frozen=True)
class PoacExam:
    id: str
    area: str


@dataclass(frozen=True)
class PoacArea:
    id: str
    daily_capacity: int


@dataclass(frozen=True)
class PoacInstance:
    days: int
    doctors_per_day: int
    patients: tuple[PoacPatient, ...]
    exams: tuple[PoacExam, ...]
    areas: tuple[PoacArea, ...]


@dataclass(frozen=True)
class PoacSchedule:
    days: tuple[tuple[str, int], ...]  # (patient id, assigned day)
    activations: tuple[tuple[str, int], ...]  # (area id, day)
    objective: ObjectiveVector  # [activation count, sum of day indices]


@dataclass
class PoacVerifyReport:
    violations: list[str]
    objective: ObjectiveVector

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_poac(instance: PoacInstance) -> list[str]:
    errors: list[str] = []
    if instance.days < 1:
        errors.append("horizon must be >= 1 day")
    if instance.doctors_per_day < 0:
        errors.append("doctors_per_day must be >= 0")
    area_ids = [a.id for a in instance.areas]
    if len(set(area_ids)) != len(area_ids):
        errors.append("duplicate area ids")
    for a in instance.areas:
        if a.daily_capacity < 1:
            errors.append(f"area {a.id} capacity must be >= 1")
    exam_ids = [e.id for e in instance.exams]
    if len(set(exam_ids)) != len(exam_ids):
        errors.append("duplicate exam ids")
    for e in instance.exams:
        if e.area not in set(area_ids):
            errors.append(f"exam {e.id} references unknown area {e.area}")
    pat_ids = [p.id for p in instance.patients]
    if len(set(pat_ids)) != len(pat_ids):
        errors.append("duplicate patient ids")
    for p in instance.patients:
        if not (0 <= p.due_day < instance.days):
            errors.append(f"patient {p.id} due day outside the horizon")
        for e in p.exams:
            if e not in set(exam_ids):
                errors.append(f"patient {p.id} requires unknown exam {e}")
    return errors


@dataclass
class PoacDecodeTable:
    instance: PoacInstance
    day_vars: list[int]
    active_vars: dict[tuple[str, int], int]
    descriptions: dict[Name, str] = field(default_factory=dict)

    def atom(self, text: str) -> tuple[int, int]:
        """Map 'day(p1)=2' or 'active(a1,3)=1' to (var id, value)."""
        if "=" not in text:
            raise PoacError(f"atom must look like name=value: {text!r}")
        lhs, rhs = text.split("=", 1)
        name = Name.parse(lhs)
        if name.family == "day" and len(name.args) == 1:
            idx = {p.id: i for i, p in enumerate(self.instance.patients)}
            pid = str(name.args[0])
            if pid not in idx:
                raise PoacError(f"unknown patient in {text!r}")
            return self.day_vars[idx[pid]], int(rhs)
        if name.family == "active" and len(name.args) == 2:
            key = (str(name.args[0]), int(name.args[1]))
            if key not in self.active_vars:
                raise PoacError(f"unknown area/day in {text!r}")
            return self.active_vars[key], int(rhs)
        raise PoacError(f"unrecognized atom {text!r}")

    def render_atom(self, var: int, value: int) -> str:
        for i, p in enumerate(self.instance.patients):
            if var == self.day_vars[i]:
                return f"day({p.id})={value}"
        for (area, d), v in self.active_vars.items():
            if v == var:
                return f"active({area},{d})={value}"
        return f"var{var}={value}"


def _areas_of(instance: PoacInstance, patient: PoacPatient) -> list[str]:
    area_of = {e.id: e.area for e in instance.exams}
    seen: list[str] = []
    for e in patient.exams:
        a = area_of[e]
        if a not in seen:
            seen.append(a)
    return seen


def encode_poac(instance: PoacInstance) -> tuple[ConstraintModel, PoacDecodeTable]:
    """Day var per patient (0..due) plus a 0/1 activation var per (area, day);
    hosting a patient implies the activation, activations consume doctors."""
    errors = validate_poac(instance)
    if errors:
        raise PoacError("; ".join(errors))
    m = ConstraintModel()
    describe: dict[Name, str] = {}
    day_vars = [
        m.add_var(Name("day", (p.id,)), range(0, p.due_day + 1))
        for p in instance.patients
    ]
    active_vars: dict[tuple[str, int], int] = {}
    for a in instance.areas:
        for d in range(instance.days):
            active_vars[(a.id, d)] = m.add_var(Name("active", (a.id, d)), [0, 1])
    for i, p in enumerate(instance.patients):
        for area in _areas_of(instance, p):
            for d in range(0, p.due_day + 1):
                label = Name("activation-link", (p.id, area, d))
                m.add_implication(
                    label, day_vars[i], active_vars[(area, d)], {d}, {1}
                )
                describe[label] = (
                    f"patient {p.id} on day {d} needs area {area} active"
                )
    for a in instance.areas:
        users = [
            (i, p) for i, p in enumerate(instance.patients)
            if a.id in _areas_of(instance, p)
        ]
        for d in range(instance.days):
            scope = [day_vars[i] for i, p in users if d <= p.due_day]
            if len(scope) <= a.daily_capacity:
                continue
            label = Name("area-capacity", (a.id, d))
            m.add_count_leq(label, scope, a.daily_capacity, values={d}, removable=True)
            describe[label] = (
                f"area {a.id} hosts at most {a.daily_capacity} patients on day {d}"
            )
    for d in range(instance.days):
        scope = [active_vars[(a.id, d)] for a in instance.areas]
        if scope and len(scope) > instance.doctors_per_day:
            label = Name("doctor-limit", (d,))
            m.add_count_leq(
                label, scope, instance.doctors_per_day, values={1}, removable=True
            )
            describe[label] = (
                f"only {instance.doctors_per_day} doctor(s) can staff areas on day {d}"
            )
    for a in instance.areas:
        for d in range(instance.days):
            label = Name("activation-cost", (a.id, d))
            m.add_soft_membership(label, 1, 1, active_vars[(a.id, d)], {0})
            describe[label] = f"activating area {a.id} on day {d} costs 1 doctor slot"
    for i, p in enumerate(instance.patients):
        for k in range(0, p.due_day):
            label = Name("earliness", (p.id, k))
            m.add_soft_membership(label, 2, 1, day_vars[i], set(range(0, k + 1)))
            describe[label] = f"scheduling {p.id} after day {k} costs 1 at level 2"
    table = PoacDecodeTable(instance, day_vars, active_vars, describe)
    return m, table


def decode_poac(table: PoacDecodeTable, assignment: Mapping[int, int]) -> PoacSchedule:
    instance = table.instance
    days = tuple(
        (p.id, assignment[table.day_vars[i]])
        for i, p in enumerate(instance.patients)
    )
    activations = tuple(
        key for key, var in table.active_vars.items() if assignment[var] == 1
    )
    return PoacSchedule(
        days, activations, _objective_from_schedule(days, activations)
    )


def _objective_from_schedule(
    days: Sequence[tuple[str, int]], activations: Sequence[tuple[str, int]]
) -> ObjectiveVector:
    return ObjectiveVector([len(activations), sum(d for _, d in days)])


def verify_poac(instance: PoacInstance, schedule: PoacSchedule) -> PoacVerifyReport:
    """Independent re-check of due dates, activation consistency, area
    capacities and the daily doctor pool."""
    violations: list[str] = []
    by_id = {p.id: p for p in instance.patients}
    if {pid for pid, _ in schedule.days} != set(by_id):
        return PoacVerifyReport(
            ["schedule does not cover exactly the instance's patients"],
            ObjectiveVector([0, 0]),
        )
    active = set(schedule.activations)
    for aid, d in active:
        if aid not in {a.id for a in instance.areas} or not (0 <= d < instance.days):
            violations.append(f"activation of unknown area/day ({aid}, {d})")
    day_of = dict(schedule.days)
    per_area_day: dict[tuple[str, int], int] = {}
    for pid, d in schedule.days:
        p = by_id[pid]
        if d > p.due_day:
            violations.append(f"{pid}: assigned day {d} after due day {p.due_day}")
        if not (0 <= d < instance.days):
            violations.append(f"{pid}: assigned day {d} outside the horizon")
            continue
        for area in _areas_of(instance, p):
            if (area, d) not in active:
                violations.append(
                    f"{pid}: needs area {area} on day {d} but it is not active"
                )
            per_area_day[(area, d)] = per_area_day.get((area, d), 0) + 1
    caps = {a.id: a.daily_capacity for a in instance.areas}
    for (area, d), cnt in sorted(per_area_day.items()):
        if cnt > caps.get(area, 0):
            violations.append(
                f"area {area} day {d}: {cnt} patients exceed capacity {caps.get(area, 0)}"
            )
    for d in range(instance.days):
        cnt = sum(1 for aid, dd in active if dd == d)
        if cnt > instance.doctors_per_day:
            violations.append(
                f"day {d}: {cnt} active areas exceed {instance.doctors_per_day} doctor(s)"
            )
    return PoacVerifyReport(
        violations, _objective_from_schedule(schedule.days, schedule.activations)
    )
