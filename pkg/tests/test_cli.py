import json
import subprocess
import sys

import pytest

from clinsched.cli import main
from clinsched.formats import parse_instance, parse_solution

RUN = [sys.executable, "-m", "clinsched.cli"]


def run_cli(*args, **kw):
    return subprocess.run(
        RUN + list(args), capture_output=True, text=True, timeout=120, **kw
    )


@pytest.fixture()
def cts_instance(tmp_path):
    path = tmp_path / "cts.json"
    code = main([
        "gen", "--kind", "cts", "--seed", "21", "--out", str(path),
        "--patients", "6", "--tightness", "0.7",
    ])
    assert code == 0
    return path


def test_gen_solve_verify_round_trip(tmp_path, cts_instance):
    sol = tmp_path / "sol.json"
    assert main(["solve", "--instance", str(cts_instance), "--out", str(sol)]) == 0
    instance = parse_instance(cts_instance.read_text())
    schedule, status = parse_solution(sol.read_text(), instance)
    assert status == "optimal"
    assert main(["verify", "--instance", str(cts_instance), "--solution", str(sol)]) == 0


def test_gen_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main([
            "gen", "--kind", "ors", "--seed", "5", "--out", str(out),
            "--registrations", "8",
        ]) == 0
    assert a.read_bytes() == b.read_bytes()


def _unsat_ors(tmp_path):
    doc = {
        "format_version": 1,
        "kind": "ors",
        "horizon_days": 1,
        "registrations": [
            {"id": "r1", "specialty": "surgery", "duration": 200, "priority": 1, "scu": None},
            {"id": "r2", "specialty": "surgery", "duration": 200, "priority": 1, "scu": None},
        ],
        "shifts": [
            {"id": "s1", "room": "or1", "day": 0, "specialty": "surgery", "length": 300}
        ],
        "units": [],
    }
    path = tmp_path / "unsat.json"
    path.write_text(json.dumps(doc))
    return path


def test_solve_unsat_exits_3_and_hints(tmp_path, capsys):
    path = _unsat_ors(tmp_path)
    out = tmp_path / "sol.json"
    code = main(["solve", "--instance", str(path), "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 3
    assert "explain-unsat" in captured.err
    assert not out.exists()  # no partial output on failure


def test_explain_unsat_writes_mus_document(tmp_path):
    path = _unsat_ors(tmp_path)
    out = tmp_path / "mus.json"
    code = main(["explain-unsat", "--instance", str(path), "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["kind"] == "mus"
    labels = {c["label"] for c in doc["constraints"]}
    assert "capacity(s1)" in labels
    assert {"assign-all-p1(r1)", "assign-all-p1(r2)"} <= labels


def test_explain_unsat_on_sat_instance_is_usage_error(tmp_path, cts_instance):
    code = main(["explain-unsat", "--instance", str(cts_instance)])
    assert code == 2


def test_explain_why_and_contrast(tmp_path):
    doc = {
        "format_version": 1,
        "kind": "ors",
        "horizon_days": 1,
        "registrations": [
            {"id": "r1", "specialty": "surgery", "duration": 200, "priority": 1, "scu": None},
            {"id": "r2", "specialty": "surgery", "duration": 150, "priority": 2, "scu": None},
        ],
        "shifts": [
            {"id": "s1", "room": "or1", "day": 0, "specialty": "surgery", "length": 300}
        ],
        "units": [],
    }
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(doc))
    why = tmp_path / "why.json"
    code = main([
        "explain-why", "--instance", str(path),
        "--atom", "assign(r2)=unassigned", "--out", str(why),
    ])
    assert code == 0
    graph = json.loads(why.read_text())
    assert graph["kind"] == "justification"
    assert graph["nodes"]
    con = tmp_path / "con.json"
    code = main([
        "explain-contrast", "--instance", str(path),
        "--keep", "assign(r2)=unassigned", "--instead", "assign(r2)=s1",
        "--out", str(con),
    ])
    assert code == 0
    cdoc = json.loads(con.read_text())
    assert cdoc["verdict"] == "alternative_infeasible"
    assert any("capacity" in c["label"] for c in cdoc["mus"])


def test_explain_why_atom_not_in_solution_is_usage_error(tmp_path, cts_instance):
    code = main([
        "explain-why", "--instance", str(cts_instance), "--atom", "start(p1,1)=99",
    ])
    assert code == 2


def test_interactive_session_via_subprocess(tmp_path):
    path = _unsat_ors(tmp_path)
    session = tmp_path / "session.json"
    proc = run_cli(
        "explain-unsat", "--instance", str(path), "--interactive",
        "--session", str(session),
        input="assign(r2) = unassigned\ndone\n",
    )
    assert proc.returncode == 0, proc.stderr
    # facts are added knowledge: the refreshed minimal reason now mentions them
    assert "still unsatisfiable" in proc.stdout
    assert "assign(r2) = unassigned" in proc.stdout
    saved = json.loads(session.read_text())
    assert saved["facts"] == ["assign(r2) = unassigned"]
    assert len(saved["history"]) == 1
    # replay: the saved session is loaded and re-applied
    proc2 = run_cli(
        "explain-unsat", "--instance", str(path), "--interactive",
        "--session", str(session),
        input="done\n",
    )
    assert proc2.returncode == 0
    assert "replayed fact" in proc2.stdout


def test_bench_small_run(tmp_path):
    out_dir = tmp_path / "bench"
    code = main([
        "bench", "--out-dir", str(out_dir), "--seeds", "2", "--seed-base", "100",
        "--patients", "8", "--tightness", "0.9", "--time-limit", "20",
        "--no-figures",
    ])
    assert code == 0
    summary = (out_dir / "summary.csv").read_text()
    assert summary.startswith("seed,patients,greedy_peak,exact_peak")
    assert len(summary.strip().splitlines()) == 3
    for seed in (100, 101):
        assert (out_dir / f"instance_{seed}.json").exists()
        assert (out_dir / f"solution_{seed}.json").exists()
        hist = (out_dir / f"histogram_{seed}.csv").read_text()
        assert hist.splitlines()[0] == "slot,baseline,exact"


def test_bench_renders_figures(tmp_path):
    out_dir = tmp_path / "bench"
    code = main([
        "bench", "--out-dir", str(out_dir), "--seeds", "1", "--seed-base", "100",
        "--patients", "6", "--tightness", "0.9", "--time-limit", "20",
    ])
    assert code == 0
    assert (out_dir / "histogram_100.png").stat().st_size > 1000
    assert (out_dir / "summary.png").stat().st_size > 1000


def test_env_var_time_limit_rejected_when_bad(tmp_path, cts_instance):
    proc = run_cli(
        "solve", "--instance", str(cts_instance), "--out", str(tmp_path / "s.json"),
        env={**__import__("os").environ, "CLINSCHED_TIME_LIMIT": "banana"},
    )
    assert proc.returncode != 0
