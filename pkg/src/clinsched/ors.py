"""Operating-room scheduling with special-care-unit beds.

Waiting-list registrations (surgery + predicted duration + priority) are
packed into operating-room shifts.  A shift only accepts registrations of its
own specialty and the durations it hosts may not exceed its length.  Priority
1 registrations must all be placed; unplaced priority 2 and 3 registrations
are counted at lexicographic levels 1 and 2.  A registration may additionally
need a bed in a special care unit for a fixed number of days starting on the
surgery day; each unit has a daily bed count that caps how many concurrent
stays its beds can host.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .model import ConstraintModel, Name, ObjectiveVector

__all__ = [
    "OrsError",
    "OrsRegistration",
    "OrsShift",
    "OrsUnit",
    "OrsInstance",
    "OrsAssignment",
    "OrsSchedule",
    "OrsDecodeTable",
    "OrsVerifyReport",
    "validate_ors",
    "encode_ors",
    "decode_ors",
    "verify_ors",
    "strip_scu",
]

UNASSIGNED = "unassigned"


class OrsError(Exception):
    pass


@dataclass(frozen=True)
class OrsRegistration:
    id: str
    specialty: str
    duration: int  # minutes
    priority: int  # 1 (must be placed), 2, 3
    scu_unit: Optional[str] = None
    scu_days: int = 0


@dataclass(frozen=True)
class OrsShift:
    id: str
    room: str
    day: int
    specialty: str
    length: int  # minutes


@dataclass(frozen=True)
class OrsUnit:
    id: str
    beds_per_day: int


@dataclass(frozen=True)
class OrsInstance:
    horizon_days: int
    registrations: tuple[OrsRegistration, ...]
    shifts: tuple[OrsShift, ...]
    units: tuple[OrsUnit, ...] = ()


@dataclass(frozen=True)
class OrsAssignment:
    id: str
    shift: Optional[str]  # None = unassigned


@dataclass(frozen=True)
class OrsSchedule:
    assignments: tuple[OrsAssignment, ...]
    objective: ObjectiveVector  # [unassigned priority-2, unassigned priority-3]


@dataclass
class OrsVerifyReport:
    violations: list[str]
    objective: ObjectiveVector

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_ors(instance: OrsInstance) -> list[str]:
    errors: list[str] = []
    if instance.horizon_days < 1:
        errors.append("horizon must be >= 1 day")
    unit_ids = [u.id for u in instance.units]
    if len(set(unit_ids)) != len(unit_ids):
        errors.append("duplicate unit ids")
    for u in instance.units:
        if u.beds_per_day < 0:
            errors.append(f"unit {u.id} has negative bed count")
    shift_ids = [s.id for s in instance.shifts]
    if len(set(shift_ids)) != len(shift_ids):
        errors.append("duplicate shift ids")
    for s in instance.shifts:
        if s.length < 1:
            errors.append(f"shift {s.id} must have positive length")
        if not (0 <= s.day < instance.horizon_days):
            errors.append(f"shift {s.id} lies outside the horizon")
    reg_ids = [r.id for r in instance.registrations]
    if len(set(reg_ids)) != len(reg_ids):
        errors.append("duplicate registration ids")
    for r in instance.registrations:
        if r.duration < 1:
            errors.append(f"registration {r.id} must have positive duration")
        if r.priority not in (1, 2, 3):
            errors.append(f"registration {r.id} priority must be 1, 2 or 3")
        if r.scu_unit is not None:
            if r.scu_unit not in set(unit_ids):
                errors.append(f"registration {r.id} references unknown unit {r.scu_unit}")
            if r.scu_days < 1:
                errors.append(f"registration {r.id} stay must be >= 1 day")
        elif r.scu_days:
            errors.append(f"registration {r.id} has stay days but no unit")
    return errors


@dataclass
class OrsDecodeTable:
    instance: OrsInstance
    assign_vars: list[int]
    descriptions: dict[Name, str] = field(default_factory=dict)

    def atom(self, text: str) -> tuple[int, int]:
        """Map 'assign(r1)=s2' or 'assign(r1)=unassigned' to (var, value)."""
        if "=" not in text:
            raise OrsError(f"atom must look like assign(reg)=shift: {text!r}")
        lhs, rhs = text.split("=", 1)
        name = Name.parse(lhs)
        if name.family != "assign" or len(name.args) != 1:
            raise OrsError(f"unrecognized atom {text!r}")
        reg_index = {r.id: i for i, r in enumerate(self.instance.registrations)}
        rid = str(name.args[0])
        if rid not in reg_index:
            raise OrsError(f"unknown registration in {text!r}")
        rhs = rhs.strip()
        if rhs == UNASSIGNED:
            return self.assign_vars[reg_index[rid]], len(self.instance.shifts)
        shift_index = {s.id: i for i, s in enumerate(self.instance.shifts)}
        if rhs not in shift_index:
            raise OrsError(f"unknown shift in {text!r}")
        return self.assign_vars[reg_index[rid]], shift_index[rhs]

    def render_atom(self, var: int, value: int) -> str:
        for i, r in enumerate(self.instance.registrations):
            if var == self.assign_vars[i]:
                if value == len(self.instance.shifts):
                    return f"assign({r.id})={UNASSIGNED}"
                return f"assign({r.id})={self.instance.shifts[value].id}"
        return f"var{var}={value}"


def encode_ors(instance: OrsInstance) -> tuple[ConstraintModel, OrsDecodeTable]:
    """One assignment var per registration over all shifts plus an explicit
    'unassigned' value; specialty matching is a removable fact so it can show
    up in infeasibility explanations."""
    errors = validate_ors(instance)
    if errors:
        raise OrsError("; ".join(errors))
    m = ConstraintModel()
    describe: dict[Name, str] = {}
    shifts = instance.shifts
    n_shifts = len(shifts)
    unassigned = n_shifts
    # priority-1 registrations branch first: their placement is hard, so the
    # search settles them while the shifts are still empty
    order = sorted(
        range(len(instance.registrations)),
        key=lambda i: (instance.registrations[i].priority, i),
    )
    assign_vars = [0] * len(instance.registrations)
    for i in order:
        r = instance.registrations[i]
        assign_vars[i] = m.add_var(Name("assign", (r.id,)), range(n_shifts + 1))
    any_shift = set(range(n_shifts))
    for i, r in enumerate(instance.registrations):
        matching = {s for s in range(n_shifts) if shifts[s].specialty == r.specialty}
        label = Name("specialty", (r.id,))
        m.add_membership(
            label, assign_vars[i], matching | {unassigned}, removable=True, fact=True
        )
        describe[label] = (
            f"registration {r.id} requires a {r.specialty} shift"
        )
        if r.priority == 1:
            label = Name("assign-all-p1", (r.id,))
            m.add_membership(label, assign_vars[i], any_shift, removable=True)
            describe[label] = (
                f"registration {r.id} has priority 1 and must be placed"
            )
    for s, shift in enumerate(shifts):
        scope = []
        weights = []
        for i, r in enumerate(instance.registrations):
            if r.duration <= shift.length:
                scope.append(assign_vars[i])
                weights.append(r.duration)
            else:
                # cannot ever fit alone: forbid statically (structural)
                flabel = Name("too-long", (r.id, shift.id))
                m.add_forbid(flabel, (assign_vars[i],), (s,))
                describe[flabel] = (
                    f"registration {r.id} ({r.duration} min) cannot fit "
                    f"shift {shift.id} ({shift.length} min)"
                )
        if not scope:
            continue
        label = Name("capacity", (shift.id,))
        m.add_count_leq(
            label, scope, shift.length, values={s}, weights=weights, removable=True
        )
        describe[label] = (
            f"sum of durations in shift {shift.id} is capped at {shift.length} min"
        )
    for u in instance.units:
        needy = [
            (i, r) for i, r in enumerate(instance.registrations) if r.scu_unit == u.id
        ]
        if not needy:
            continue
        for d in range(instance.horizon_days):
            scope = []
            sets = []
            for i, r in needy:
                occupying = frozenset(
                    s
                    for s in range(n_shifts)
                    if d - r.scu_days + 1 <= shifts[s].day <= d
                )
                if occupying:
                    scope.append(assign_vars[i])
                    sets.append(occupying)
            if len(scope) <= u.beds_per_day:
                continue
            label = Name("scu-beds", (u.id, d))
            m.add_count_leq(
                label, scope, u.beds_per_day, member_sets=sets, removable=True
            )
            describe[label] = (
                f"unit {u.id} has {u.beds_per_day} bed(s) available on day {d}"
            )
    for i, r in enumerate(instance.registrations):
        if r.priority == 1:
            continue
        label = Name("placed", (r.id,))
        m.add_soft_membership(
            label, 1 if r.priority == 2 else 2, 1, assign_vars[i], any_shift
        )
        describe[label] = (
            f"leaving priority-{r.priority} registration {r.id} out costs 1 "
            f"at level {1 if r.priority == 2 else 2}"
        )
    table = OrsDecodeTable(instance, assign_vars, describe)
    return m, table


def decode_ors(table: OrsDecodeTable, assignment: Mapping[int, int]) -> OrsSchedule:
    instance = table.instance
    n_shifts = len(instance.shifts)
    out = []
    for i, r in enumerate(instance.registrations):
        v = assignment[table.assign_vars[i]]
        out.append(OrsAssignment(r.id, None if v == n_shifts else instance.shifts[v].id))
    out = tuple(out)
    return OrsSchedule(out, _objective_from_assignments(instance, out))


def _objective_from_assignments(
    instance: OrsInstance, assignments: Sequence[OrsAssignment]
) -> ObjectiveVector:
    by_id = {r.id: r for r in instance.registrations}
    un2 = sum(
        1 for a in assignments if a.shift is None and by_id[a.id].priority == 2
    )
    un3 = sum(
        1 for a in assignments if a.shift is None and by_id[a.id].priority == 3
    )
    return ObjectiveVector([un2, un3])


def verify_ors(instance: OrsInstance, schedule: OrsSchedule) -> OrsVerifyReport:
    """Independent re-check: capacity, specialty, priority-1 completeness and
    per-(unit, day) bed occupancy, plus a fresh objective recount."""
    violations: list[str] = []
    by_id = {r.id: r for r in instance.registrations}
    shift_by_id = {s.id: s for s in instance.shifts}
    if {a.id for a in schedule.assignments} != set(by_id):
        return OrsVerifyReport(
            ["schedule does not cover exactly the instance's registrations"],
            ObjectiveVector([0, 0]),
        )
    load: dict[str, int] = {s.id: 0 for s in instance.shifts}
    stays: dict[tuple[str, int], int] = {}
    for a in schedule.assignments:
        r = by_id[a.id]
        if a.shift is None:
            if r.priority == 1:
                violations.append(f"priority-1 registration {r.id} left unassigned")
            continue
        if a.shift not in shift_by_id:
            violations.append(f"{r.id}: unknown shift {a.shift}")
            continue
        shift = shift_by_id[a.shift]
        if shift.specialty != r.specialty:
            violations.append(
                f"{r.id}: specialty {r.specialty} does not match "
                f"shift {shift.id} ({shift.specialty})"
            )
        load[shift.id] += r.duration
        if r.scu_unit is not None:
            for d in range(shift.day, min(shift.day + r.scu_days, instance.horizon_days)):
                stays[(r.scu_unit, d)] = stays.get((r.scu_unit, d), 0) + 1
    for s in instance.shifts:
        if load[s.id] > s.length:
            violations.append(
                f"shift {s.id} overfilled: {load[s.id]} min > {s.length} min"
            )
    beds = {u.id: u.beds_per_day for u in instance.units}
    for (uid, d), cnt in sorted(stays.items()):
        if cnt > beds.get(uid, 0):
            violations.append(
                f"unit {uid} day {d}: {cnt} stays exceed {beds.get(uid, 0)} bed(s)"
            )
    return OrsVerifyReport(
        violations, _objective_from_assignments(instance, schedule.assignments)
    )


def strip_scu(instance: OrsInstance) -> OrsInstance:
    """Same instance with all special-care-unit requirements removed."""
    return OrsInstance(
        horizon_days=instance.horizon_days,
        registrations=tuple(
            OrsRegistration(r.id, r.specialty, r.duration, r.priority)
            for r in instance.registrations
        ),
        shifts=instance.shifts,
        units=instance.units,
    )
