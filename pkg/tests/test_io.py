import pytest

from clinsched.engine import SolveConfig, Status, solve
from clinsched.cts import encode_cts, sufficiency_witness
from clinsched.formats import (
    FormatError,
    parse_instance,
    parse_solution,
    write_histogram_csv,
    write_instance,
    write_mus_document,
    write_solution,
)
from clinsched.generate import (
    CtsGenParams,
    GenError,
    OrsGenParams,
    PoacGenParams,
    SplitMix64,
    generate,
    generate_cts,
    generate_ors,
    generate_poac,
)
from clinsched.explain import Mus
from clinsched.model import Name

CFG = SolveConfig(time_limit_s=30)


def test_splitmix64_reference_values():
    # reference stream for seed 1234567 (first three outputs of SplitMix64)
    rng = SplitMix64(1234567)
    got = [rng.next_u64() for _ in range(3)]
    assert got == [
        6457827717110365317,
        3203168211198807973,
        9817491932198370423,
    ]


@pytest.mark.parametrize("kind,params", [
    ("cts", CtsGenParams(seed=42, patients=8)),
    ("ors", OrsGenParams(seed=42, registrations=12)),
    ("poac", PoacGenParams(seed=42, patients=10)),
])
def test_generator_deterministic_bytes(kind, params):
    a = write_instance(generate(kind, params))
    b = write_instance(generate(kind, params))
    assert a == b


@pytest.mark.parametrize("kind,params", [
    ("cts", CtsGenParams(seed=7, patients=6)),
    ("ors", OrsGenParams(seed=7, registrations=9)),
    ("poac", PoacGenParams(seed=7, patients=7)),
])
def test_instance_round_trip(kind, params):
    instance = generate(kind, params)
    text = write_instance(instance)
    again = parse_instance(text)
    assert again == instance
    assert write_instance(again) == text


def test_parse_rejects_unknown_fields():
    text = write_instance(generate_cts(CtsGenParams(seed=1, patients=2)))
    import json

    doc = json.loads(text)
    doc["surprise"] = 1
    with pytest.raises(FormatError, match="surprise"):
        parse_instance(json.dumps(doc))


def test_parse_rejects_wrong_kind_tag():
    import json

    doc = json.loads(write_instance(generate_cts(CtsGenParams(seed=1, patients=2))))
    doc["kind"] = "laundry"
    with pytest.raises(FormatError, match="kind"):
        parse_instance(json.dumps(doc))


def test_parse_semantic_error_names_offender():
    import json

    doc = json.loads(
        write_instance(generate_poac(PoacGenParams(seed=3, patients=2)))
    )
    doc["exams"][0]["area"] = "ghost"
    with pytest.raises(FormatError, match="ghost"):
        parse_instance(json.dumps(doc))


def test_cts_tightness_low_gives_sufficiency():
    inst = generate_cts(CtsGenParams(seed=11, patients=20, tightness=0.5))
    assert sufficiency_witness(inst)


def test_ors_tightness_ratio_within_ten_percent():
    params = OrsGenParams(seed=5, registrations=30, tightness=1.5)
    inst = generate_ors(params)
    demand = sum(r.duration for r in inst.registrations)
    capacity = sum(s.length for s in inst.shifts)
    assert abs(demand / capacity - 1.5) <= 0.15


def test_ors_tight_instance_leaves_someone_out():
    from clinsched.ors import encode_ors

    inst = generate_ors(
        OrsGenParams(seed=5, registrations=6, tightness=1.5, p1_share=0, scu_rate=0)
    )
    out = solve(encode_ors(inst)[0], CFG)
    assert out.status is Status.OPTIMAL
    assert sum(out.objective.as_list()) >= 1


def test_poac_tightness_ratio():
    params = PoacGenParams(seed=9, patients=24, areas=2, days=4, tightness=1.0)
    inst = generate_poac(params)
    area_of = {e.id: e.area for e in inst.exams}
    for a in inst.areas:
        users = sum(
            1 for p in inst.patients if any(area_of[e] == a.id for e in p.exams)
        )
        if users >= 8:
            ratio = users / (a.daily_capacity * inst.days)
            assert abs(ratio - 1.0) <= 0.25


def test_generator_rejects_impossible_knobs():
    with pytest.raises(GenError):
        generate_cts(CtsGenParams(seed=1, patients=2, slots=4, therapy_slots=(3, 8)))
    with pytest.raises(GenError):
        generate_ors(OrsGenParams(seed=1, registrations=-1))
    with pytest.raises(GenError):
        generate_poac(PoacGenParams(seed=1, patients=1, tightness=0))


def test_solution_round_trip():
    from clinsched.cts import decode_cts

    inst = generate_cts(CtsGenParams(seed=2, patients=3, tightness=0.5))
    m, table = encode_cts(inst)
    out = solve(m, CFG)
    sched = decode_cts(table, out.assignment)
    text = write_solution(inst, sched, "optimal")
    parsed, status = parse_solution(text, inst)
    assert status == "optimal"
    assert parsed == sched
    assert write_solution(inst, parsed, status) == text


def test_histogram_csv_shapes():
    assert write_histogram_csv([], [], []) == "slot,baseline,exact\n"
    csv = write_histogram_csv(["07:40", "07:50"], [2, 0], [1, 1])
    assert csv.splitlines() == ["slot,baseline,exact", "07:40,2,1", "07:50,0,1"]
    with pytest.raises(FormatError):
        write_histogram_csv(["a"], [1, 2], [1])


def test_doc_fixtures_are_canonical():
    import pathlib

    fixtures = pathlib.Path(__file__).parent.parent / "docs" / "fixtures"
    for path in sorted(fixtures.glob("*-instance.json")):
        text = path.read_text()
        assert write_instance(parse_instance(text)) == text
    sol = (fixtures / "cts-solution.json").read_text()
    inst = parse_instance((fixtures / "cts-instance.json").read_text())
    schedule, status = parse_solution(sol, inst)
    assert write_solution(inst, schedule, status) == sol


def test_mus_document_lists_descriptions():
    mus = Mus(frozenset({Name("capacity", ("s1",)), Name("specialty", ("r1",))}))
    text = write_mus_document(mus, {Name("capacity", ("s1",)): "shift s1 is full"})
    import json

    doc = json.loads(text)
    assert doc["kind"] == "mus"
    assert len(doc["constraints"]) == 2
    by_label = {c["label"]: c["description"] for c in doc["constraints"]}
    assert by_label["capacity(s1)"] == "shift s1 is full"
