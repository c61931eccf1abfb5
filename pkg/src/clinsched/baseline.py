"""Greedy reference schedulers.

These model the manual, first-come-first-served process the exact solver is
compared against: every patient (in arrival order) gets the earliest slots
that fit, and when the real therapy resources run out a fictitious "virtual"
resource absorbs the overflow, exactly the bookkeeping trick the comparison
targets.  A report with zero virtual resources is guaranteed to pass the
domain verifier; any shortfall, including horizon or staff overflow, is
routed through a virtual resource so the guarantee stays exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .cts import (
    CtsInstance,
    CtsPatient,
    CtsPatientSchedule,
    CtsSchedule,
    _objective_from_schedule,
    _phase_window,
)
from .ors import OrsAssignment, OrsInstance, OrsSchedule, _objective_from_assignments

__all__ = ["BaselineReport", "greedy_cts", "greedy_ors"]


@dataclass(frozen=True)
class BaselineReport:
    schedule: object  # CtsSchedule | OrsSchedule
    virtual_used: int
    feasible: bool  # true iff no virtual resource was needed


class _Tracker:
    """Mutable occupancy state for the greedy chemotherapy pass."""

    def __init__(self, instance: CtsInstance):
        self.instance = instance
        S = instance.slots
        self.staff = [[0] * S for _ in range(3)]
        self.res_busy = {r.id: [False] * S for r in instance.resources}
        self.room_of = {r.id: r.room for r in instance.resources}
        self.room_busy = {room.id: [0] * S for room in instance.rooms}
        self.iso_busy = {room.id: [0] * S for room in instance.rooms}

    def staff_fits(self, phase: int, start: int, dur: int) -> bool:
        cap = self.instance.staff_capacity[phase]
        row = self.staff[phase]
        return all(row[t] < cap for t in range(start, start + dur))

    def resource_fits(self, p: CtsPatient, rid: str, start: int, dur: int) -> bool:
        room = self.room_of[rid]
        for t in range(start, start + dur):
            if self.res_busy[rid][t]:
                return False
            if self.iso_busy[room][t]:
                return False  # an isolated patient owns the room
            if p.isolation and self.room_busy[room][t]:
                return False
        return True

    def commit(self, p: CtsPatient, starts, rid: Optional[str]) -> None:
        for phase in range(3):
            for t in range(starts[phase], starts[phase] + p.durations[phase]):
                if 0 <= t < self.instance.slots:
                    self.staff[phase][t] += 1
        if rid is not None and rid in self.res_busy:
            room = self.room_of[rid]
            for t in range(starts[3], starts[3] + p.durations[3]):
                self.res_busy[rid][t] = True
                self.room_busy[room][t] += 1
                if p.isolation:
                    self.iso_busy[room][t] += 1


def _earliest_staff_slot(tracker: _Tracker, phase: int, lo: int, dur: int) -> Optional[int]:
    S = tracker.instance.slots
    for s in range(lo, S - dur + 1):
        if tracker.staff_fits(phase, s, dur):
            return s
    return None


def greedy_cts(instance: CtsInstance) -> BaselineReport:
    """First-come-first-served: earliest feasible slot per phase, first free
    preferred-type resource, then any type, then a fresh virtual resource."""
    from .cts import CtsError, validate_cts

    errors = validate_cts(instance)
    if errors:
        raise CtsError("; ".join(errors))
    tracker = _Tracker(instance)
    out: list[CtsPatientSchedule] = []
    virtual = 0
    for p in instance.patients:
        placement = _greedy_place(tracker, p)
        if placement is None:
            # structural earliest placement on a fresh virtual resource;
            # staff capacity may overflow, which the virtual count flags
            d1, d2, d3, _ = p.durations
            s4 = max(d1 + d2 + d3, p.drug_ready_slot or 0)
            starts = (0, d1, d1 + d2, s4)
            virtual += 1
            rid = f"virtual-{p.preferred}-{virtual}"
            tracker.commit(p, starts, None)
            out.append(CtsPatientSchedule(p.id, starts, rid))
            continue
        starts, rid = placement
        if rid is None:
            virtual += 1
            rid = f"virtual-{p.preferred}-{virtual}"
            tracker.commit(p, starts, None)
        else:
            tracker.commit(p, starts, rid)
        out.append(CtsPatientSchedule(p.id, starts, rid))
    patients = tuple(out)
    objective = _objective_from_schedule(instance, patients, "starts")
    return BaselineReport(CtsSchedule(patients, objective), virtual, virtual == 0)


def _greedy_place(tracker: _Tracker, p: CtsPatient):
    """Earliest staff-feasible phases, then the therapy resource scan.

    Returns (starts, resource id) with resource id None when only a virtual
    resource can host the therapy, or None when even the phases cannot be
    placed inside the horizon.
    """
    instance = tracker.instance
    S = instance.slots
    d1, d2, d3, d4 = p.durations
    lo1, _ = _phase_window(p, 1, S)
    s1 = _earliest_staff_slot(tracker, 0, lo1, d1)
    if s1 is None or s1 + d1 + d2 + d3 + d4 > S:
        return None
    s2 = _earliest_staff_slot(tracker, 1, s1 + d1, d2)
    if s2 is None or s2 + d2 + d3 + d4 > S:
        return None
    s3 = _earliest_staff_slot(tracker, 2, s2 + d2, d3)
    if s3 is None or s3 + d3 + d4 > S:
        return None
    lo4 = max(s3 + d3, p.drug_ready_slot or 0)
    ordered = [r for r in instance.resources if r.type == p.preferred]
    ordered += [r for r in instance.resources if r.type != p.preferred]
    if p.scalp_cooling:
        ordered = [r for r in ordered if r.scalp_cooling]
    for s4 in range(lo4, S - d4 + 1):
        for r in ordered:
            if tracker.resource_fits(p, r.id, s4, d4):
                return (s1, s2, s3, s4), r.id
    if lo4 + d4 <= S:
        return (s1, s2, s3, lo4), None  # virtual resource takes it
    return None


def greedy_ors(instance: OrsInstance) -> BaselineReport:
    """First-fit by (priority, longest first) into matching-specialty shifts;
    a priority-1 overflow is infeasible and counted as a virtual shift."""
    from .ors import OrsError, validate_ors

    errors = validate_ors(instance)
    if errors:
        raise OrsError("; ".join(errors))
    order = sorted(
        range(len(instance.registrations)),
        key=lambda i: (
            instance.registrations[i].priority,
            -instance.registrations[i].duration,
            i,
        ),
    )
    remaining = {s.id: s.length for s in instance.shifts}
    stays: dict[tuple[str, int], int] = {}
    beds = {u.id: u.beds_per_day for u in instance.units}
    assigned: dict[str, Optional[str]] = {}
    virtual = 0
    for i in order:
        r = instance.registrations[i]
        placed = None
        for s in instance.shifts:
            if s.specialty != r.specialty or remaining[s.id] < r.duration:
                continue
            if r.scu_unit is not None:
                days = range(s.day, min(s.day + r.scu_days, instance.horizon_days))
                if any(
                    stays.get((r.scu_unit, d), 0) + 1 > beds.get(r.scu_unit, 0)
                    for d in days
                ):
                    continue
            placed = s
            break
        if placed is None:
            if r.priority == 1:
                virtual += 1  # the manual plan would open an overtime shift
            assigned[r.id] = None
            continue
        remaining[placed.id] -= r.duration
        if r.scu_unit is not None:
            for d in range(placed.day, min(placed.day + r.scu_days, instance.horizon_days)):
                stays[(r.scu_unit, d)] = stays.get((r.scu_unit, d), 0) + 1
        assigned[r.id] = placed.id
    assignments = tuple(
        OrsAssignment(r.id, assigned[r.id]) for r in instance.registrations
    )
    objective = _objective_from_assignments(instance, assignments)
    return BaselineReport(
        OrsSchedule(assignments, objective), virtual, virtual == 0
    )
