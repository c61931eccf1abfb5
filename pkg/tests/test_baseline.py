from clinsched.baseline import greedy_cts, greedy_ors
from clinsched.cts import CtsPatient, CtsResource, encode_cts, phase2_histogram, verify_cts
from clinsched.engine import SolveConfig, Status, solve
from clinsched.ors import OrsInstance, OrsRegistration, OrsShift, verify_ors

from test_cts import mk_instance

CFG = SolveConfig(time_limit_s=30)


def test_greedy_feasible_passes_verifier():
    patients = [
        CtsPatient("p1", (1, 1, 1, 2), "bed"),
        CtsPatient("p2", (1, 1, 1, 2), "chair"),
        CtsPatient("p3", (1, 2, 1, 2), "bed"),
    ]
    resources = [
        CtsResource("b1", "bed", "room1"),
        CtsResource("b2", "bed", "room1"),
        CtsResource("c1", "chair", "room2"),
    ]
    inst = mk_instance(patients, resources, slots=10, caps=(2, 2, 2))
    report = greedy_cts(inst)
    assert report.feasible and report.virtual_used == 0
    assert verify_cts(inst, report.schedule).ok


def test_greedy_peak_at_least_exact():
    patients = [CtsPatient(f"p{i}", (1, 1, 1, 1), "chair") for i in range(5)]
    resources = [CtsResource(f"c{i}", "chair", f"r{i}") for i in range(5)]
    inst = mk_instance(patients, resources, slots=10, caps=(5, 1, 5))
    report = greedy_cts(inst)
    assert report.feasible
    greedy_peak = max(phase2_histogram(inst, report.schedule))
    m, _ = encode_cts(inst)
    out = solve(m, CFG)
    assert out.status is Status.OPTIMAL
    exact_peak = out.objective.as_list()[1]
    assert exact_peak <= greedy_peak


def test_greedy_stacks_starts_on_crafted_toy():
    # capacity 5 at phase 1 lets greedy pile five registrations into slot 0,
    # then the single phase-2 nurse serializes them; the exact solver staggers
    # registrations so that phase-2 starts stay at peak 1 as well, but greedy
    # produces its peak-1 schedule only because capacity 1 forces it; with
    # capacity 2 the pile-up shows.
    patients = [CtsPatient(f"p{i}", (1, 1, 1, 1), "chair") for i in range(4)]
    resources = [CtsResource(f"c{i}", "chair", f"r{i}") for i in range(4)]
    inst = mk_instance(patients, resources, slots=8, caps=(4, 2, 4))
    report = greedy_cts(inst)
    assert report.feasible
    greedy_peak = max(phase2_histogram(inst, report.schedule))
    assert greedy_peak == 2  # greedy saturates the phase-2 capacity
    out = solve(encode_cts(inst)[0], CFG)
    assert out.objective.as_list()[1] == 1  # optimum spreads starts out
    assert out.objective.as_list()[1] < greedy_peak


def test_greedy_overflow_uses_virtual_resource():
    patients = [
        CtsPatient("p1", (1, 1, 1, 1), "chair"),
        CtsPatient("p2", (1, 1, 1, 1), "chair"),
    ]
    resources = [CtsResource("c1", "chair", "r1")]
    inst = mk_instance(patients, resources, slots=4, caps=(2, 2, 2))
    report = greedy_cts(inst)
    assert report.virtual_used >= 1
    assert not report.feasible


def test_greedy_respects_isolation():
    patients = [
        CtsPatient("iso", (1, 1, 1, 2), "bed", isolation=True),
        CtsPatient("reg", (1, 1, 1, 2), "bed"),
    ]
    resources = [
        CtsResource("b1", "bed", "shared"),
        CtsResource("b2", "bed", "shared"),
    ]
    inst = mk_instance(patients, resources, slots=10)
    report = greedy_cts(inst)
    assert report.feasible
    assert verify_cts(inst, report.schedule).ok


def test_greedy_ors_first_fit():
    regs = [
        OrsRegistration("r1", "surgery", 120, 2),
        OrsRegistration("r2", "surgery", 120, 2),
        OrsRegistration("r3", "surgery", 90, 2),
    ]
    inst = OrsInstance(1, tuple(regs), (OrsShift("s1", "or1", 0, "surgery", 300),))
    report = greedy_ors(inst)
    assert report.feasible
    assert verify_ors(inst, report.schedule).ok
    placed = [a for a in report.schedule.assignments if a.shift is not None]
    assert len(placed) == 2  # 120 + 120 fit, the 90 no longer does


def test_greedy_ors_p1_overflow_flagged():
    regs = [
        OrsRegistration("r1", "surgery", 200, 1),
        OrsRegistration("r2", "surgery", 200, 1),
    ]
    inst = OrsInstance(1, tuple(regs), (OrsShift("s1", "or1", 0, "surgery", 300),))
    report = greedy_ors(inst)
    assert not report.feasible
    assert report.virtual_used == 1


def test_exact_never_worse_than_feasible_greedy():
    from clinsched.generate import CtsGenParams, OrsGenParams, generate_cts, generate_ors
    from clinsched.ors import encode_ors

    for seed in range(8):
        inst = generate_cts(CtsGenParams(seed=seed, patients=6, tightness=0.8))
        report = greedy_cts(inst)
        if not report.feasible:
            continue
        out = solve(encode_cts(inst)[0], CFG)
        assert out.status is Status.OPTIMAL
        assert out.objective <= report.schedule.objective
    for seed in range(8):
        inst = generate_ors(OrsGenParams(seed=seed, registrations=8, tightness=1.1))
        report = greedy_ors(inst)
        if not report.feasible:
            continue
        out = solve(encode_ors(inst)[0], CFG)
        assert out.status is Status.OPTIMAL
        assert out.objective <= report.schedule.objective


def test_greedy_ors_prefers_high_priority():
    regs = [
        OrsRegistration("late", "surgery", 300, 3),
        OrsRegistration("urgent", "surgery", 300, 2),
    ]
    inst = OrsInstance(1, tuple(regs), (OrsShift("s1", "or1", 0, "surgery", 300),))
    report = greedy_ors(inst)
    got = {a.id: a.shift for a in report.schedule.assignments}
    assert got["urgent"] == "s1" and got["late"] is None
