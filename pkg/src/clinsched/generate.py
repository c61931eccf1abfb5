"""Seeded synthetic instances.

The hospital's real data cannot ship, so evaluation runs on deterministic
synthetic instances.  All randomness comes from SplitMix64 (pure 64-bit
integer arithmetic, identical on every platform); the same params always
produce byte-identical documents.

The tightness knob is a demand/capacity ratio with kind-specific units:

* cts:  patients preferring a resource type per resource of that type
        (<= 1.0 keeps the preferred-capacity sufficiency witness available);
* ors:  total surgery minutes over total shift minutes;
* poac: patients needing an area over that area's capacity x horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .cts import CtsInstance, CtsPatient, CtsResource, CtsRoom
from .ors import OrsInstance, OrsRegistration, OrsShift, OrsUnit
from .poac import PoacArea, PoacExam, PoacInstance, PoacPatient

__all__ = [
    "GenError",
    "SplitMix64",
    "CtsGenParams",
    "OrsGenParams",
    "PoacGenParams",
    "generate_cts",
    "generate_ors",
    "generate_poac",
    "generate",
]

_MASK = (1 << 64) - 1


class GenError(Exception):
    pass


class SplitMix64:
    """Counter-based 64-bit generator; stable across platforms and runs."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def randint(self, lo: int, hi: int) -> int:
        """Uniform-ish integer in [lo, hi]; modulo bias is negligible here."""
        if hi < lo:
            raise GenError(f"empty range [{lo}, {hi}]")
        return lo + self.next_u64() % (hi - lo + 1)

    def chance(self, percent: int) -> bool:
        return self.randint(0, 99) < percent

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]


@dataclass(frozen=True)
class CtsGenParams:
    seed: int
    patients: int = 20
    slots: int = 26
    tightness: float = 0.8
    staff_capacity: tuple[int, int, int] = (6, 5, 6)
    therapy_slots: tuple[int, int] = (3, 8)  # min/max therapy duration
    scalp_rate: int = 10  # percent
    isolation_rate: int = 5
    drug_ready_rate: int = 15
    ensure_feasible: bool = False


@dataclass(frozen=True)
class OrsGenParams:
    seed: int
    registrations: int = 30
    shift_minutes: tuple[int, int] = (300, 480)
    duration_minutes: tuple[int, int] = (60, 180)
    horizon_days: int = 5
    specialties: int = 2
    tightness: float = 1.0
    p1_share: int = 20  # percent
    scu_rate: int = 20  # percent of registrations needing a unit bed
    scu_beds: int = 2


@dataclass(frozen=True)
class PoacGenParams:
    seed: int
    patients: int = 20
    days: int = 5
    areas: int = 3
    exams_per_patient: tuple[int, int] = (1, 2)
    tightness: float = 0.8
    doctors_per_day: Optional[int] = None


def generate_cts(params: CtsGenParams) -> CtsInstance:
    if params.patients < 0 or params.slots < 1:
        raise GenError("patients must be >= 0 and slots >= 1")
    if params.tightness <= 0:
        raise GenError("tightness must be positive")
    lo_t, hi_t = params.therapy_slots
    if lo_t < 1 or hi_t < lo_t:
        raise GenError("therapy_slots must be a non-empty positive range")
    if 3 + hi_t > params.slots:
        raise GenError("therapy range does not fit the day")
    rng = SplitMix64(params.seed)
    patients = []
    for i in range(params.patients):
        d2 = rng.randint(1, 2)
        d4 = rng.randint(lo_t, hi_t)
        if 1 + d2 + 1 + d4 > params.slots:
            d2 = 1
            d4 = min(d4, params.slots - 3)
        preferred = "bed" if rng.chance(50) else "chair"
        scalp = rng.chance(params.scalp_rate)
        isolation = rng.chance(params.isolation_rate)
        drug = None
        if rng.chance(params.drug_ready_rate):
            latest = params.slots - d4
            drug = rng.randint(1, max(1, min(params.slots // 2, latest)))
        patients.append(
            CtsPatient(f"p{i + 1}", (1, d2, 1, d4), preferred, scalp, isolation, drug)
        )
    instance = _cts_with_resources(params, tuple(patients), 0)
    if params.ensure_feasible:
        from .baseline import greedy_cts

        extra = 0
        while not greedy_cts(instance).feasible:
            extra += 1
            if extra > 2 * max(1, params.patients):
                raise GenError("cannot repair instance to feasibility")
            instance = _cts_with_resources(params, tuple(patients), extra)
    return instance


def _cts_with_resources(params, patients, extra: int) -> CtsInstance:
    rng = SplitMix64(params.seed ^ 0xC75)
    resources = []
    for rtype in ("bed", "chair"):
        want = sum(1 for p in patients if p.preferred == rtype)
        count = max(1, math.ceil(want / params.tightness)) if want else 1
        count += (extra + 1) // 2  # feasibility repair adds alternating types
        needs_scalp = any(
            p.scalp_cooling and p.preferred == rtype for p in patients
        )
        for j in range(count):
            scalp = rng.chance(30) or (needs_scalp and j == 0)
            resources.append(
                CtsResource(f"{rtype}{j + 1}", rtype, "", scalp)
            )
    # two resources per room, deterministic pairing in id order
    rooms = []
    placed = []
    for idx in range(0, len(resources), 2):
        members = resources[idx : idx + 2]
        room_id = f"room{idx // 2 + 1}"
        rooms.append(CtsRoom(room_id, tuple(r.id for r in members)))
        for r in members:
            placed.append(CtsResource(r.id, r.type, room_id, r.scalp_cooling))
    return CtsInstance(
        slots=params.slots,
        patients=patients,
        resources=tuple(placed),
        rooms=tuple(rooms),
        staff_capacity=params.staff_capacity,
    )


def generate_ors(params: OrsGenParams) -> OrsInstance:
    if params.registrations < 0 or params.horizon_days < 1 or params.specialties < 1:
        raise GenError("bad ors size knobs")
    if params.tightness <= 0:
        raise GenError("tightness must be positive")
    rng = SplitMix64(params.seed)
    specialties = [f"spec{i + 1}" for i in range(params.specialties)]
    units = (OrsUnit("scu1", params.scu_beds),) if params.scu_rate > 0 else ()
    regs = []
    total_duration = 0
    for i in range(params.registrations):
        duration = rng.randint(*params.duration_minutes)
        total_duration += duration
        roll = rng.randint(0, 99)
        if roll < params.p1_share:
            priority = 1
        elif roll < params.p1_share + (100 - params.p1_share) // 2:
            priority = 2
        else:
            priority = 3
        scu_unit = None
        scu_days = 0
        if units and rng.chance(params.scu_rate):
            scu_unit = "scu1"
            scu_days = rng.randint(1, min(3, params.horizon_days))
        regs.append(
            OrsRegistration(
                f"r{i + 1}", rng.choice(specialties), duration, priority,
                scu_unit, scu_days,
            )
        )
    # build shifts per specialty proportional to its demand
    target_total = total_duration / params.tightness if regs else 0
    demand = {
        s: sum(r.duration for r in regs if r.specialty == s) for s in specialties
    }
    shifts = []
    day = 0
    for s in specialties:
        if not demand[s]:
            continue
        target = target_total * demand[s] / max(1, total_duration)
        built = 0.0
        while built < target:
            length = rng.randint(*params.shift_minutes)
            if built + length > target:
                length = max(60, int(target - built))
            shifts.append(
                OrsShift(f"s{len(shifts) + 1}", f"or{len(shifts) + 1}", day, s, length)
            )
            built += length
            day = (day + 1) % params.horizon_days
    return OrsInstance(params.horizon_days, tuple(regs), tuple(shifts), units)


def generate_poac(params: PoacGenParams) -> PoacInstance:
    if params.patients < 0 or params.days < 1 or params.areas < 1:
        raise GenError("bad poac size knobs")
    if params.tightness <= 0:
        raise GenError("tightness must be positive")
    rng = SplitMix64(params.seed)
    areas = [f"a{i + 1}" for i in range(params.areas)]
    exams = tuple(PoacExam(f"e{i + 1}", areas[i % len(areas)]) for i in range(2 * params.areas))
    patients = []
    for i in range(params.patients):
        lo, hi = params.exams_per_patient
        picked = set()
        for _ in range(rng.randint(lo, min(hi, len(exams)))):
            picked.add(rng.choice(exams).id)
        patients.append(
            PoacPatient(
                f"p{i + 1}",
                rng.randint(max(0, params.days // 2 - 1), params.days - 1),
                tuple(sorted(picked)),
            )
        )
    area_of = {e.id: e.area for e in exams}
    users = {
        a: sum(1 for p in patients if any(area_of[e] == a for e in p.exams))
        for a in areas
    }
    area_objs = tuple(
        PoacArea(a, max(1, math.ceil(users[a] / (params.tightness * params.days))))
        for a in areas
    )
    doctors = params.doctors_per_day
    if doctors is None:
        doctors = max(1, (3 * params.areas + 3) // 4)
    return PoacInstance(params.days, doctors, tuple(patients), exams, tuple(area_objs))


def generate(kind: str, params) -> object:
    if kind == "cts":
        return generate_cts(params)
    if kind == "ors":
        return generate_ors(params)
    if kind == "poac":
        return generate_poac(params)
    raise GenError(f"unknown kind {kind!r}")
