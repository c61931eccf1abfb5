"""Chemotherapy day-ward scheduling.

Each patient passes through four ordered phases: reception registration,
blood collection, medical check, therapy.  Phases 1-3 draw on per-phase staff
pools with per-slot capacities; the therapy phase occupies one bed or chair
exclusively.  Extensions: drugs that only become available later in the
morning, scalp-cooling equipment requirements, and patients who must be the
sole occupant of their room.

Objectives, most important first:
1. number of patients placed on a resource type other than their preferred
   one (bed vs chair);
2. the peak number of patients starting blood collection in the same slot
   (the per-slot in-progress count is available as an alternative metric).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .model import ConstraintModel, Name, ObjectiveVector

__all__ = [
    "CtsError",
    "CtsPatient",
    "CtsResource",
    "CtsRoom",
    "CtsInstance",
    "CtsPatientSchedule",
    "CtsSchedule",
    "CtsDecodeTable",
    "VerifyReport",
    "validate_cts",
    "encode_cts",
    "decode_cts",
    "verify_cts",
    "phase2_histogram",
    "phase2_occupancy",
    "slot_labels",
    "sufficiency_witness",
]

RESOURCE_TYPES = ("bed", "chair")
PHASE_NAMES = ("registration", "blood-collection", "medical-check", "therapy")


class CtsError(Exception):
    pass


@dataclass(frozen=True)
class CtsPatient:
    id: str
    durations: tuple[int, int, int, int]  # slots per phase
    preferred: str  # bed | chair
    scalp_cooling: bool = False
    isolation: bool = False
    drug_ready_slot: Optional[int] = None


@dataclass(frozen=True)
class CtsResource:
    id: str
    type: str  # bed | chair
    room: str
    scalp_cooling: bool = False


@dataclass(frozen=True)
class CtsRoom:
    id: str
    resources: tuple[str, ...]


@dataclass(frozen=True)
class CtsInstance:
    slots: int
    patients: tuple[CtsPatient, ...]
    resources: tuple[CtsResource, ...]
    rooms: tuple[CtsRoom, ...]
    staff_capacity: tuple[int, int, int]  # phases 1-3
    slot_minutes: int = 10
    day_start: str = "07:40"


@dataclass(frozen=True)
class CtsPatientSchedule:
    id: str
    phase_starts: tuple[int, int, int, int]
    resource: str


@dataclass(frozen=True)
class CtsSchedule:
    patients: tuple[CtsPatientSchedule, ...]
    objective: ObjectiveVector  # [wrong-resource count, phase-2 peak]


@dataclass
class VerifyReport:
    violations: list[str]
    objective: ObjectiveVector

    @property
    def ok(self) -> bool:
        return not self.violations


def _phase_window(p: CtsPatient, phase: int, slots: int) -> tuple[int, int]:
    """Inclusive earliest/latest start of `phase` (1-based) within the horizon."""
    before = sum(p.durations[: phase - 1])
    after = sum(p.durations[phase - 1 :])
    return before, slots - after


def validate_cts(instance: CtsInstance) -> list[str]:
    errors: list[str] = []
    if instance.slots < 1:
        errors.append("slots must be >= 1")
    if instance.slot_minutes < 1:
        errors.append("slot_minutes must be >= 1")
    if len(instance.staff_capacity) != 3 or any(c < 1 for c in instance.staff_capacity):
        errors.append("staff capacities must be three values >= 1")
    try:
        _parse_clock(instance.day_start)
    except CtsError as exc:
        errors.append(str(exc))
    res_ids = [r.id for r in instance.resources]
    if len(set(res_ids)) != len(res_ids):
        errors.append("duplicate resource ids")
    room_ids = [r.id for r in instance.rooms]
    if len(set(room_ids)) != len(room_ids):
        errors.append("duplicate room ids")
    room_members = {room.id: set(room.resources) for room in instance.rooms}
    seen_in_rooms: set[str] = set()
    for room in instance.rooms:
        for rid in room.resources:
            if rid not in set(res_ids):
                errors.append(f"room {room.id} lists unknown resource {rid}")
            if rid in seen_in_rooms:
                errors.append(f"resource {rid} appears in two rooms")
            seen_in_rooms.add(rid)
    for r in instance.resources:
        if r.type not in RESOURCE_TYPES:
            errors.append(f"resource {r.id} has unknown type {r.type}")
        if r.room not in room_members:
            errors.append(f"resource {r.id} references unknown room {r.room}")
        elif r.id not in room_members[r.room]:
            errors.append(f"resource {r.id} missing from its room {r.room}")
    pat_ids = [p.id for p in instance.patients]
    if len(set(pat_ids)) != len(pat_ids):
        errors.append("duplicate patient ids")
    if instance.patients and not instance.resources:
        errors.append("patients present but no therapy resources")
    for p in instance.patients:
        if len(p.durations) != 4 or any(d < 1 for d in p.durations):
            errors.append(f"patient {p.id} durations must be four values >= 1")
            continue
        if p.preferred not in RESOURCE_TYPES:
            errors.append(f"patient {p.id} has unknown preferred type {p.preferred}")
        if sum(p.durations) > instance.slots:
            errors.append(f"patient {p.id} cannot fit the {instance.slots}-slot day")
        if p.drug_ready_slot is not None:
            if not (0 <= p.drug_ready_slot < instance.slots):
                errors.append(f"patient {p.id} drug_ready_slot outside the day")
            elif p.drug_ready_slot + p.durations[3] > instance.slots:
                errors.append(f"patient {p.id} drug arrives too late to fit therapy")
    return errors


def _parse_clock(text: str) -> tuple[int, int]:
    parts = text.split(":")
    if len(parts) != 2 or not all(t.isdigit() for t in parts):
        raise CtsError(f"day_start must look like HH:MM, got {text!r}")
    h, m = int(parts[0]), int(parts[1])
    if not (0 <= h < 24 and 0 <= m < 60):
        raise CtsError(f"day_start out of range: {text!r}")
    return h, m


def slot_labels(instance: CtsInstance) -> list[str]:
    """Clock label of each slot start (default grid: 07:40, 07:50, ... 11:50)."""
    h, m = _parse_clock(instance.day_start)
    out = []
    total = h * 60 + m
    for _ in range(instance.slots):
        out.append(f"{total // 60 % 24:02d}:{total % 60:02d}")
        total += instance.slot_minutes
    return out


def _starts_peak_lower_bound(windows: Sequence[tuple[int, int]]) -> int:
    """Largest interval-density bound: any schedule placing one start per
    patient inside its window has a slot with at least this many starts."""
    if not windows:
        return 0
    lows = sorted({w[0] for w in windows})
    highs = sorted({w[1] for w in windows})
    best = 1
    for a in lows:
        for b in highs:
            if b < a:
                continue
            cnt = sum(1 for lo, hi in windows if a <= lo and hi <= b)
            need = -(-cnt // (b - a + 1))
            if need > best:
                best = need
    return best


def _occupancy_peak_lower_bound(
    windows: Sequence[tuple[int, int]], durations: Sequence[int]
) -> int:
    if not windows:
        return 0
    lows = sorted({w[0] for w in windows})
    highs = sorted({w[1] + d - 1 for w, d in zip(windows, durations)})
    best = 1
    for a in lows:
        for b in highs:
            if b < a:
                continue
            mass = sum(
                d
                for (lo, hi), d in zip(windows, durations)
                if a <= lo and hi + d - 1 <= b
            )
            need = -(-mass // (b - a + 1))
            if need > best:
                best = need
    return best


@dataclass
class CtsDecodeTable:
    instance: CtsInstance
    start_vars: list[tuple[int, int, int, int]]
    resource_vars: list[int]
    therapy_vars: list[int]
    peak_var: Optional[int]
    resource_order: list[list[int]]  # patient -> local value -> global resource index
    descriptions: dict[Name, str] = field(default_factory=dict)
    objective_mode: str = "starts"

    def atom(self, text: str) -> tuple[int, int]:
        """Map 'start(p1,2)=5' or 'resource(p1)=bed1' to (var id, model value)."""
        if "=" not in text:
            raise CtsError(f"atom must look like name=value: {text!r}")
        lhs, rhs = text.split("=", 1)
        name = Name.parse(lhs)
        pat_index = {p.id: i for i, p in enumerate(self.instance.patients)}
        if name.family == "start" and len(name.args) == 2:
            pid, phase = str(name.args[0]), int(name.args[1])
            if pid not in pat_index or not (1 <= phase <= 4):
                raise CtsError(f"unknown start atom {text!r}")
            return self.start_vars[pat_index[pid]][phase - 1], int(rhs)
        if name.family == "resource" and len(name.args) == 1:
            pid = str(name.args[0])
            if pid not in pat_index:
                raise CtsError(f"unknown patient in {text!r}")
            res_index = {r.id: g for g, r in enumerate(self.instance.resources)}
            if rhs.strip() not in res_index:
                raise CtsError(f"unknown resource in {text!r}")
            local = self.resource_order[pat_index[pid]].index(res_index[rhs.strip()])
            return self.resource_vars[pat_index[pid]], local
        raise CtsError(f"unrecognized atom {text!r}")

    def render_atom(self, var: int, value: int) -> str:
        """Inverse of `atom` for the vars a justification can surface."""
        resources = self.instance.resources
        for i, p in enumerate(self.instance.patients):
            if var in self.start_vars[i]:
                phase = self.start_vars[i].index(var) + 1
                return f"start({p.id},{phase})={value}"
            if var == self.resource_vars[i]:
                return f"resource({p.id})={resources[self.resource_order[i][value]].id}"
            if var == self.therapy_vars[i]:
                slot, g = divmod(value, len(resources))
                return f"therapy({p.id})={slot}@{resources[g].id}"
        if var == self.peak_var:
            return f"phase2-peak={value}"
        return f"var{var}={value}"


def encode_cts(
    instance: CtsInstance, objective_mode: str = "starts"
) -> tuple[ConstraintModel, CtsDecodeTable]:
    """Compile an instance onto the shared constraint catalog.

    Per patient: three phase-start vars, the therapy start var, a resource
    var (preferred-type resources take the low values so ascending search
    tries them first), and a combined (slot, resource) therapy var channeled
    from the last two, which carries the exclusivity and isolation windows.
    A shared peak var, bounded below by an interval-density argument and
    linked to the per-slot start counts, carries the balancing objective.
    """
    if objective_mode not in ("starts", "occupancy"):
        raise CtsError(f"unknown objective mode {objective_mode!r}")
    errors = validate_cts(instance)
    if errors:
        raise CtsError("; ".join(errors))
    m = ConstraintModel()
    S = instance.slots
    resources = instance.resources
    R = len(resources)
    describe: dict[Name, str] = {}

    start_vars: list[tuple[int, int, int, int]] = []
    resource_vars: list[int] = []
    therapy_vars: list[int] = []
    resource_order: list[list[int]] = []

    for p in instance.patients:
        ids = []
        for phase in range(1, 5):
            lo, hi = _phase_window(p, phase, S)
            ids.append(m.add_var(Name("start", (p.id, phase)), range(lo, hi + 1)))
        start_vars.append(tuple(ids))
        order = [g for g, r in enumerate(resources) if r.type == p.preferred]
        order += [g for g, r in enumerate(resources) if r.type != p.preferred]
        resource_order.append(order)
        resource_vars.append(m.add_var(Name("resource", (p.id,)), range(len(order))))
        lo4, hi4 = _phase_window(p, 4, S)
        therapy_vars.append(
            m.add_var(
                Name("therapy", (p.id,)),
                [s * R + g for s in range(lo4, hi4 + 1) for g in range(R)],
            )
        )

    n = len(instance.patients)
    peak_var: Optional[int] = None
    s2_windows = [_phase_window(p, 2, S) for p in instance.patients]
    if n:
        cap2 = instance.staff_capacity[1]
        peak_ub = min(n, cap2)
        if objective_mode == "starts":
            peak_lb = min(_starts_peak_lower_bound(s2_windows), peak_ub)
        else:
            peak_lb = min(
                _occupancy_peak_lower_bound(
                    s2_windows, [p.durations[1] for p in instance.patients]
                ),
                peak_ub,
            )
        peak_var = m.add_var(Name("phase2-peak"), range(0, peak_ub + 1))

    # structural constraints: orderings, channels
    for i, p in enumerate(instance.patients):
        s1, s2, s3, s4 = start_vars[i]
        for phase, (x, y) in enumerate(((s1, s2), (s2, s3), (s3, s4)), start=1):
            label = Name("phase-order", (p.id, phase))
            m.add_ordering(label, x, y, p.durations[phase - 1])
            describe[label] = (
                f"patient {p.id}: {PHASE_NAMES[phase - 1]} takes "
                f"{p.durations[phase - 1]} slot(s) and must finish before "
                f"{PHASE_NAMES[phase]} starts"
            )
        th = therapy_vars[i]
        lo4, hi4 = _phase_window(p, 4, S)
        for s in range(lo4, hi4 + 1):
            label = Name("therapy-slot-link", (p.id, s))
            m.add_implication(
                label, s4, th, {s}, {s * R + g for g in range(R)}
            )
            describe[label] = f"patient {p.id}: therapy var mirrors start slot {s}"
        for local, g in enumerate(resource_order[i]):
            label = Name("therapy-resource-link", (p.id, resources[g].id))
            m.add_implication(
                label, resource_vars[i], th, {local},
                {s * R + g for s in range(lo4, hi4 + 1)},
            )
            describe[label] = (
                f"patient {p.id}: therapy var mirrors resource {resources[g].id}"
            )

    # staff capacity per phase and slot
    for phase in (1, 2, 3):
        cap = instance.staff_capacity[phase - 1]
        for t in range(S):
            scope = []
            sets = []
            for i, p in enumerate(instance.patients):
                lo, hi = _phase_window(p, phase, S)
                d = p.durations[phase - 1]
                vals = frozenset(range(max(lo, t - d + 1), min(hi, t) + 1))
                if vals:
                    scope.append(start_vars[i][phase - 1])
                    sets.append(vals)
            if len(scope) <= cap:
                continue  # cannot be violated
            label = Name("staff-capacity", (PHASE_NAMES[phase - 1], t))
            m.add_count_leq(label, scope, cap, member_sets=sets, removable=True)
            describe[label] = (
                f"at most {cap} patients may be in {PHASE_NAMES[phase - 1]} "
                f"during slot {t}"
            )

    # therapy resource exclusivity
    for g, r in enumerate(resources):
        for t in range(S):
            scope = []
            sets = []
            for i, p in enumerate(instance.patients):
                lo4, hi4 = _phase_window(p, 4, S)
                d = p.durations[3]
                slots_here = range(max(lo4, t - d + 1), min(hi4, t) + 1)
                vals = frozenset(s * R + g for s in slots_here)
                if vals:
                    scope.append(therapy_vars[i])
                    sets.append(vals)
            if len(scope) <= 1:
                continue
            label = Name("resource-exclusive", (r.id, t))
            m.add_count_leq(label, scope, 1, member_sets=sets, removable=True)
            describe[label] = f"resource {r.id} hosts at most one therapy in slot {t}"

    # isolation: sole occupant of the room for the whole therapy
    room_resources = {
        room.id: [g for g, r in enumerate(resources) if r.room == room.id]
        for room in instance.rooms
    }
    for i, p in enumerate(instance.patients):
        if not p.isolation:
            continue
        lo4, hi4 = _phase_window(p, 4, S)
        d = p.durations[3]
        for room in instance.rooms:
            members = room_resources[room.id]
            if not members:
                continue
            for t in range(S):
                own = frozenset(
                    s * R + g
                    for s in range(max(lo4, t - d + 1), min(hi4, t) + 1)
                    for g in members
                )
                if not own:
                    continue
                scope = []
                sets = []
                for j, q in enumerate(instance.patients):
                    if j == i:
                        continue
                    qlo, qhi = _phase_window(q, 4, S)
                    qd = q.durations[3]
                    vals = frozenset(
                        s * R + g
                        for s in range(max(qlo, t - qd + 1), min(qhi, t) + 1)
                        for g in members
                    )
                    if vals:
                        scope.append(therapy_vars[j])
                        sets.append(vals)
                if not scope:
                    continue
                label = Name("isolation", (p.id, room.id, t))
                m.add_count_leq(
                    label, scope, 0, member_sets=sets,
                    guard=(therapy_vars[i], own), removable=True, fact=True,
                )
                describe[label] = (
                    f"patient {p.id} must be alone in room {room.id} "
                    f"during slot {t}"
                )

    # instance-given compatibilities
    for i, p in enumerate(instance.patients):
        if p.scalp_cooling:
            good = {
                local
                for local, g in enumerate(resource_order[i])
                if resources[g].scalp_cooling
            }
            label = Name("scalp-cooling", (p.id,))
            m.add_membership(
                label, resource_vars[i], good if good else {-1},
                removable=True, fact=True,
            )
            describe[label] = f"patient {p.id} needs a scalp-cooling resource"
        if p.drug_ready_slot is not None:
            lo4, hi4 = _phase_window(p, 4, S)
            good = {s for s in range(lo4, hi4 + 1) if s >= p.drug_ready_slot}
            label = Name("drug-ready", (p.id,))
            m.add_membership(
                label, start_vars[i][3], good if good else {-1},
                removable=True, fact=True,
            )
            describe[label] = (
                f"patient {p.id}'s drug is only available from slot "
                f"{p.drug_ready_slot}"
            )

    # peak linking and objective
    if peak_var is not None:
        peak_dom = m.vars[peak_var].domain
        if peak_lb > 0:
            label = Name("peak-lower-bound")
            m.add_membership(label, peak_var, {v for v in peak_dom if v >= peak_lb})
            describe[label] = (
                f"at least {peak_lb} concurrent blood-collection starts are "
                "unavoidable for this demand"
            )
        for t in range(S):
            scope = []
            sets = []
            for i, p in enumerate(instance.patients):
                lo, hi = _phase_window(p, 2, S)
                if objective_mode == "starts":
                    vals = frozenset({t}) if lo <= t <= hi else frozenset()
                else:
                    d = p.durations[1]
                    vals = frozenset(range(max(lo, t - d + 1), min(hi, t) + 1))
                if vals:
                    scope.append(start_vars[i][1])
                    sets.append(vals)
            if not scope:
                continue
            for k in peak_dom:
                if len(scope) <= k:
                    continue
                label = Name("peak-link", (t, k))
                m.add_count_leq(
                    label, scope, k, member_sets=sets, guard=(peak_var, {k})
                )
                describe[label] = (
                    f"a peak of {k} allows at most {k} blood-collection "
                    f"starts in slot {t}"
                )
        for k in range(1, peak_dom[-1] + 1):
            label = Name("peak-cost", (k,))
            m.add_soft_membership(
                label, 2, 1, peak_var, {v for v in peak_dom if v < k}
            )
            describe[label] = f"each unit of peak above {k - 1} costs 1 at level 2"

    for i, p in enumerate(instance.patients):
        npref = sum(1 for g in resource_order[i] if resources[g].type == p.preferred)
        label = Name("preferred-resource", (p.id,))
        m.add_soft_membership(
            label, 1, 1, resource_vars[i],
            set(range(npref)) if npref else {-1},
        )
        describe[label] = f"patient {p.id} prefers a {p.preferred}"

    table = CtsDecodeTable(
        instance=instance,
        start_vars=start_vars,
        resource_vars=resource_vars,
        therapy_vars=therapy_vars,
        peak_var=peak_var,
        resource_order=resource_order,
        descriptions=describe,
        objective_mode=objective_mode,
    )
    return m, table


def decode_cts(
    table: CtsDecodeTable, assignment: Mapping[int, int]
) -> CtsSchedule:
    """Read a solver assignment back into a schedule; the objective vector is
    recomputed from the schedule itself so it always matches the verifier."""
    instance = table.instance
    patients = []
    for i, p in enumerate(instance.patients):
        starts = tuple(assignment[v] for v in table.start_vars[i])
        local = assignment[table.resource_vars[i]]
        g = table.resource_order[i][local]
        patients.append(CtsPatientSchedule(p.id, starts, instance.resources[g].id))
    patients = tuple(patients)
    objective = _objective_from_schedule(instance, patients, table.objective_mode)
    return CtsSchedule(patients, objective)


def _objective_from_schedule(
    instance: CtsInstance,
    patients: Sequence[CtsPatientSchedule],
    mode: str,
) -> ObjectiveVector:
    types = {r.id: r.type for r in instance.resources}
    by_id = {p.id: p for p in instance.patients}
    wrong = sum(
        1
        for ps in patients
        if types.get(ps.resource) != by_id[ps.id].preferred
    )
    if mode == "starts":
        hist = _histogram(instance, patients, occupancy=False)
    else:
        hist = _histogram(instance, patients, occupancy=True)
    return ObjectiveVector([wrong, max(hist, default=0)])


def _histogram(
    instance: CtsInstance,
    patients: Sequence[CtsPatientSchedule],
    occupancy: bool,
) -> list[int]:
    by_id = {p.id: p for p in instance.patients}
    counts = [0] * instance.slots
    for ps in patients:
        s = ps.phase_starts[1]
        if occupancy:
            d = by_id[ps.id].durations[1]
            for t in range(max(0, s), min(instance.slots, s + d)):
                counts[t] += 1
        elif 0 <= s < instance.slots:
            counts[s] += 1
    return counts


def phase2_histogram(instance: CtsInstance, schedule: CtsSchedule) -> list[int]:
    """Per-slot count of blood-collection starts (sums to the patient count)."""
    return _histogram(instance, schedule.patients, occupancy=False)


def phase2_occupancy(instance: CtsInstance, schedule: CtsSchedule) -> list[int]:
    """Per-slot count of patients inside their blood-collection phase."""
    return _histogram(instance, schedule.patients, occupancy=True)


def verify_cts(
    instance: CtsInstance,
    schedule: CtsSchedule,
    objective_mode: str = "starts",
) -> VerifyReport:
    """Independent re-check of every hard rule plus a fresh objective count.

    Walks the schedule directly; shares nothing with the encoder or solver.
    """
    violations: list[str] = []
    by_id = {p.id: p for p in instance.patients}
    res_by_id = {r.id: r for r in instance.resources}
    if {ps.id for ps in schedule.patients} != set(by_id):
        return VerifyReport(
            ["schedule does not cover exactly the instance's patients"],
            ObjectiveVector([0, 0]),
        )
    S = instance.slots
    for ps in schedule.patients:
        p = by_id[ps.id]
        for phase in range(4):
            s = ps.phase_starts[phase]
            if s < 0 or s + p.durations[phase] > S:
                violations.append(
                    f"{p.id}: {PHASE_NAMES[phase]} leaves the day window"
                )
            if phase and ps.phase_starts[phase - 1] + p.durations[phase - 1] > s:
                violations.append(
                    f"{p.id}: {PHASE_NAMES[phase]} starts before "
                    f"{PHASE_NAMES[phase - 1]} finishes"
                )
        if ps.resource not in res_by_id:
            violations.append(f"{p.id}: unknown resource {ps.resource}")
            continue
        r = res_by_id[ps.resource]
        if p.scalp_cooling and not r.scalp_cooling:
            violations.append(f"{p.id}: needs scalp cooling, {r.id} has none")
        if p.drug_ready_slot is not None and ps.phase_starts[3] < p.drug_ready_slot:
            violations.append(
                f"{p.id}: therapy starts before the drug is ready "
                f"(slot {p.drug_ready_slot})"
            )
    # staff capacities
    for phase in (1, 2, 3):
        cap = instance.staff_capacity[phase - 1]
        counts = [0] * S
        for ps in schedule.patients:
            p = by_id[ps.id]
            s = ps.phase_starts[phase - 1]
            for t in range(max(0, s), min(S, s + p.durations[phase - 1])):
                counts[t] += 1
        for t, c in enumerate(counts):
            if c > cap:
                violations.append(
                    f"slot {t}: {c} patients in {PHASE_NAMES[phase - 1]} "
                    f"exceeds capacity {cap}"
                )
    # exclusive therapy resources
    intervals: dict[str, list[tuple[int, int, str]]] = {}
    for ps in schedule.patients:
        p = by_id[ps.id]
        s = ps.phase_starts[3]
        intervals.setdefault(ps.resource, []).append((s, s + p.durations[3], p.id))
    for rid, spans in intervals.items():
        spans.sort()
        for (a1, b1, p1), (a2, b2, p2) in zip(spans, spans[1:]):
            if a2 < b1:
                violations.append(
                    f"resource {rid}: therapies of {p1} and {p2} overlap"
                )
    # isolation: sole occupancy of the room
    room_of = {r.id: r.room for r in instance.resources}
    for ps in schedule.patients:
        p = by_id[ps.id]
        if not p.isolation or ps.resource not in room_of:
            continue
        room = room_of[ps.resource]
        a1, b1 = ps.phase_starts[3], ps.phase_starts[3] + p.durations[3]
        for other in schedule.patients:
            if other.id == ps.id or room_of.get(other.resource) != room:
                continue
            q = by_id[other.id]
            a2, b2 = other.phase_starts[3], other.phase_starts[3] + q.durations[3]
            if a1 < b2 and a2 < b1:
                violations.append(
                    f"{p.id}: isolation broken by {other.id} in room {room}"
                )
    objective = _objective_from_schedule(instance, schedule.patients, objective_mode)
    return VerifyReport(violations, objective)


def _fits(busy: list[int], start: int, dur: int, cap: int) -> bool:
    return all(busy[t] < cap for t in range(start, start + dur))


def sufficiency_witness(instance: CtsInstance) -> bool:
    """True when preferred capacity is sufficient in the counting sense (per
    type, resources >= patients preferring it) and a greedy pass places every
    patient on a preferred-type resource within the horizon."""
    for rtype in RESOURCE_TYPES:
        want = sum(1 for p in instance.patients if p.preferred == rtype)
        have = sum(1 for r in instance.resources if r.type == rtype)
        if want > have:
            return False
    S = instance.slots
    staff_busy = [[0] * S for _ in range(3)]
    res_busy: dict[str, list[int]] = {r.id: [0] * S for r in instance.resources}
    room_of = {r.id: r.room for r in instance.resources}
    room_busy: dict[str, list[int]] = {room.id: [0] * S for room in instance.rooms}
    iso_room: dict[str, list[int]] = {room.id: [0] * S for room in instance.rooms}
    for p in instance.patients:
        placed = False
        lo1, _ = _phase_window(p, 1, S)
        for s1 in range(lo1, S):
            if not _fits(staff_busy[0], s1, p.durations[0], instance.staff_capacity[0]):
                continue
            s2_min = s1 + p.durations[0]
            placement = _witness_rest(instance, p, s2_min, staff_busy, res_busy,
                                      room_of, room_busy, iso_room)
            if placement:
                s2, s3, s4, rid = placement
                for t in range(s1, s1 + p.durations[0]):
                    staff_busy[0][t] += 1
                for t in range(s2, s2 + p.durations[1]):
                    staff_busy[1][t] += 1
                for t in range(s3, s3 + p.durations[2]):
                    staff_busy[2][t] += 1
                for t in range(s4, s4 + p.durations[3]):
                    res_busy[rid][t] += 1
                    room_busy[room_of[rid]][t] += 1
                    if p.isolation:
                        iso_room[room_of[rid]][t] += 1
                placed = True
                break
        if not placed:
            return False
    return True


def _witness_rest(instance, p, s2_min, staff_busy, res_busy, room_of, room_busy, iso_room):
    S = instance.slots
    d1, d2, d3, d4 = p.durations
    for s2 in range(s2_min, S - d2 - d3 - d4 + 1):
        if not _fits(staff_busy[1], s2, d2, instance.staff_capacity[1]):
            continue
        for s3 in range(s2 + d2, S - d3 - d4 + 1):
            if not _fits(staff_busy[2], s3, d3, instance.staff_capacity[2]):
                continue
            lo4 = max(s3 + d3, p.drug_ready_slot or 0)
            for s4 in range(lo4, S - d4 + 1):
                for r in instance.resources:
                    if r.type != p.preferred:
                        continue
                    if p.scalp_cooling and not r.scalp_cooling:
                        continue
                    room = room_of[r.id]
                    ok = all(
                        res_busy[r.id][t] == 0
                        and (not p.isolation or room_busy[room][t] == 0)
                        and iso_room[room][t] == 0
                        for t in range(s4, s4 + d4)
                    )
                    if ok:
                        return s2, s3, s4, r.id
    return None
