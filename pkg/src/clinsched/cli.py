"""Command-line interface.

Subcommands: gen, solve, verify, explain-unsat, explain-why,
explain-contrast, bench, serve.  Exit codes: 0 success, 2 bad input or
usage, 3 proven infeasibility on solve, 4 time limit without an incumbent.
Output files are written atomically, so a failing run leaves no partial
documents behind.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from typing import Optional

from .bench import run_cts_bench, write_atomic
from .cts import decode_cts, encode_cts, verify_cts
from .engine import Engine, SolveConfig, Status
from .explain import (
    BackgroundFact,
    ExplainError,
    NotUnsatError,
    SessionState,
    contrast,
    extract_mus,
    justify,
    new_session,
    session_add_background,
)
from .formats import (
    FormatError,
    canonical_json,
    instance_kind,
    parse_instance,
    parse_solution,
    write_contrast_document,
    write_instance,
    write_justification_document,
    write_mus_document,
    write_solution,
)
from .generate import (
    CtsGenParams,
    GenError,
    OrsGenParams,
    PoacGenParams,
    generate,
)
from .model import Name, ModelError
from .ors import decode_ors, encode_ors, verify_ors
from .poac import decode_poac, encode_poac, verify_poac

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNSAT = 3
EXIT_TIMEOUT = 4

TIME_LIMIT_ENV = "CLINSCHED_TIME_LIMIT"


def _default_time_limit() -> float:
    raw = os.environ.get(TIME_LIMIT_ENV)
    if raw is None:
        return 60.0
    try:
        value = float(raw)
    except ValueError:
        raise SystemExit(f"{TIME_LIMIT_ENV} must be a number, got {raw!r}")
    if value <= 0:
        raise SystemExit(f"{TIME_LIMIT_ENV} must be positive")
    return value


def _read_instance(path: str):
    try:
        with open(path) as fh:
            return parse_instance(fh.read())
    except OSError as exc:
        raise _Fail(EXIT_USAGE, f"cannot read instance: {exc}")
    except FormatError as exc:
        raise _Fail(EXIT_USAGE, f"bad instance document: {exc}")


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _encode_any(instance, phase2_metric: str = "starts"):
    kind = instance_kind(instance)
    if kind == "cts":
        model, table = encode_cts(instance, objective_mode=phase2_metric)
    elif kind == "ors":
        model, table = encode_ors(instance)
    else:
        model, table = encode_poac(instance)
    return kind, model, table


def _decode_any(kind: str, table, assignment):
    if kind == "cts":
        return decode_cts(table, assignment)
    if kind == "ors":
        return decode_ors(table, assignment)
    return decode_poac(table, assignment)


def _verify_any(instance, schedule, phase2_metric: str = "starts"):
    kind = instance_kind(instance)
    if kind == "cts":
        return verify_cts(instance, schedule, objective_mode=phase2_metric)
    if kind == "ors":
        return verify_ors(instance, schedule)
    return verify_poac(instance, schedule)


# -- subcommands ----------------------------------------------------------------


def _cmd_gen(args) -> int:
    if args.kind == "cts":
        params = CtsGenParams(
            seed=args.seed,
            patients=args.patients,
            slots=args.slots,
            tightness=args.tightness,
            ensure_feasible=args.ensure_feasible,
        )
    elif args.kind == "ors":
        params = OrsGenParams(
            seed=args.seed,
            registrations=args.registrations,
            horizon_days=args.horizon,
            tightness=args.tightness,
            p1_share=args.p1_share,
        )
    else:
        params = PoacGenParams(
            seed=args.seed,
            patients=args.patients,
            days=args.days,
            tightness=args.tightness,
        )
    try:
        instance = generate(args.kind, params)
    except GenError as exc:
        raise _Fail(EXIT_USAGE, f"cannot generate: {exc}")
    write_atomic(args.out, write_instance(instance))
    print(f"wrote {args.kind} instance to {args.out}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    instance = _read_instance(args.instance)
    kind, model, table = _encode_any(instance, args.phase2_metric)
    outcome = Engine(model).solve(SolveConfig(time_limit_s=args.time_limit))
    if outcome.status is Status.UNSAT:
        print(
            "no schedule exists for this instance; "
            "run explain-unsat for the minimal reason",
            file=sys.stderr,
        )
        return EXIT_UNSAT
    if outcome.status is Status.UNKNOWN_TIMEOUT:
        print(
            f"time limit {args.time_limit}s hit before any schedule was found",
            file=sys.stderr,
        )
        return EXIT_TIMEOUT
    schedule = _decode_any(kind, table, outcome.assignment)
    write_atomic(args.out, write_solution(instance, schedule, outcome.status.value))
    print(
        f"status={outcome.status.value} objective={schedule.objective.as_list()} "
        f"nodes={outcome.stats.nodes} time_ms={outcome.stats.wall_ms:.0f}"
    )
    print(f"wrote solution to {args.out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    instance = _read_instance(args.instance)
    try:
        with open(args.solution) as fh:
            schedule, status = parse_solution(fh.read(), instance)
    except OSError as exc:
        raise _Fail(EXIT_USAGE, f"cannot read solution: {exc}")
    except FormatError as exc:
        raise _Fail(EXIT_USAGE, f"bad solution document: {exc}")
    report = _verify_any(instance, schedule, args.phase2_metric)
    if report.violations:
        print(f"{len(report.violations)} violation(s):")
        for v in report.violations:
            print(f"  - {v}")
        return 1
    print(f"solution OK; objective={report.objective.as_list()}")
    return EXIT_OK


def _parse_fact_line(model, table, line: str) -> BackgroundFact:
    for op in ("<=", ">=", "!=", "="):
        if op in line:
            lhs, rhs = line.split(op, 1)
            lhs, rhs = lhs.strip(), rhs.strip()
            if op == "=" and not re.fullmatch(r"-?\d+", rhs):
                var, value = table.atom(f"{lhs}={rhs}")
                return BackgroundFact(var, "=", value)
            var = model.var_id(Name.parse(lhs))
            return BackgroundFact(var, op, int(rhs))
    raise ValueError(f"cannot parse fact {line!r}; use var = value (or != <= >=)")


def _session_doc(instance, session: SessionState, fact_lines: list[str]) -> str:
    return canonical_json(
        {
            "format_version": 1,
            "kind": "session",
            "instance": json.loads(write_instance(instance)),
            "facts": fact_lines,
            "history": [list(h) for h in session.history],
        }
    )


def _cmd_explain_unsat(args) -> int:
    instance = _read_instance(args.instance)
    kind, model, table = _encode_any(instance)
    config = SolveConfig(time_limit_s=args.time_limit)
    try:
        mus = extract_mus(model, config)
    except NotUnsatError:
        raise _Fail(EXIT_USAGE, "instance is satisfiable; nothing to explain")
    except ExplainError as exc:
        raise _Fail(EXIT_TIMEOUT, str(exc))
    text = write_mus_document(mus, table.descriptions)
    if args.out:
        write_atomic(args.out, text)
        print(f"wrote minimal unsatisfiable subset to {args.out}")
    print("minimal reason for infeasibility:")
    for label in mus.sorted():
        print(f"  - {table.descriptions.get(label, str(label))}")
    if not args.interactive:
        return EXIT_OK

    session = new_session(model)
    fact_lines: list[str] = []

    def describe(label: Name) -> str:
        if label.family == "background":
            idx = int(label.args[0])
            if 0 <= idx < len(fact_lines):
                return f"user fact: {fact_lines[idx]}"
        return table.descriptions.get(label, str(label))

    if args.session and os.path.exists(args.session):
        with open(args.session) as fh:
            saved = json.load(fh)
        for line in saved.get("facts", []):
            fact = _parse_fact_line(model, table, line)
            session_add_background(session, [fact], config)
            fact_lines.append(line)
            print(f"replayed fact: {line}")
    print("enter background facts (e.g. 'assign(r1) = unassigned'); blank line ends")
    while True:
        try:
            line = input("fact> ").strip()
        except EOFError:
            break
        if not line or line == "done":
            break
        try:
            fact = _parse_fact_line(model, table, line)
        except Exception as exc:  # keep the REPL alive on any bad input
            print(f"  cannot parse: {exc}")
            continue
        analysis = session_add_background(session, [fact], config)
        fact_lines.append(line)
        if analysis.sat:
            print("  with this background the model is satisfiable")
        else:
            print("  still unsatisfiable; minimal reason:")
            for label in analysis.mus.sorted():
                print(f"    - {describe(label)}")
        if args.session:
            write_atomic(args.session, _session_doc(instance, session, fact_lines))
    if args.session:
        write_atomic(args.session, _session_doc(instance, session, fact_lines))
        print(f"session saved to {args.session}")
    return EXIT_OK


def _solved_optimum(instance, args):
    kind, model, table = _encode_any(instance)
    outcome = Engine(model).solve(SolveConfig(time_limit_s=args.time_limit))
    if outcome.status is Status.UNSAT:
        raise _Fail(EXIT_UNSAT, "instance is infeasible; run explain-unsat")
    if outcome.status is not Status.OPTIMAL:
        raise _Fail(
            EXIT_TIMEOUT,
            "explanations need a proven optimum; raise --time-limit",
        )
    return kind, model, table, outcome


def _cmd_explain_why(args) -> int:
    instance = _read_instance(args.instance)
    kind, model, table, outcome = _solved_optimum(instance, args)
    try:
        var, value = table.atom(args.atom)
    except Exception as exc:  # noqa: BLE001
        raise _Fail(EXIT_USAGE, f"bad atom: {exc}")
    if outcome.assignment.get(var) != value:
        rendered = table.render_atom(var, outcome.assignment[var])
        raise _Fail(
            EXIT_USAGE,
            f"atom {args.atom} does not hold in the optimal schedule "
            f"(it has {rendered}); try explain-contrast",
        )
    config = SolveConfig(time_limit_s=args.time_limit)
    graph = justify(model, outcome.assignment, [(var, value)], config)
    text = write_justification_document(graph, table.render_atom, table.descriptions)
    if args.out:
        write_atomic(args.out, text)
        print(f"wrote justification to {args.out}")
    root = graph.nodes[graph.roots[0]]
    if root.status == "unforced":
        print(f"{args.atom} is a tie-break choice; an equally good schedule avoids it")
    else:
        print(f"{args.atom} holds because of:")
        for nid in graph.edges.get(root.id, ()):
            node = graph.nodes[nid]
            if node.kind == "fact":
                print(f"  - {table.descriptions.get(node.label, str(node.label))}")
            else:
                print(f"  - {table.render_atom(node.var, node.value)}")
    return EXIT_OK


def _cmd_explain_contrast(args) -> int:
    instance = _read_instance(args.instance)
    kind, model, table, outcome = _solved_optimum(instance, args)
    config = SolveConfig(time_limit_s=args.time_limit)
    try:
        var_a, val_a = table.atom(args.keep)
        var_b, val_b = table.atom(args.instead)
        result = contrast(
            model, outcome.assignment, (var_a, val_a), (var_b, val_b), config
        )
    except ExplainError as exc:
        raise _Fail(EXIT_USAGE, str(exc))
    except Exception as exc:  # noqa: BLE001
        raise _Fail(EXIT_USAGE, f"bad atom: {exc}")
    text = write_contrast_document(result, table.descriptions)
    if args.out:
        write_atomic(args.out, text)
        print(f"wrote contrast document to {args.out}")
    if result.verdict == "alternative_infeasible":
        print(f"{args.instead} is infeasible; blocking constraints:")
        for label in result.mus.sorted():
            print(f"  - {table.descriptions.get(label, str(label))}")
    elif result.verdict == "alternative_worse":
        print(
            f"{args.instead} degrades the objective from "
            f"{result.original_objective.as_list()} to "
            f"{result.alternative_objective.as_list()}"
        )
    else:
        print(f"{args.instead} is an equally good alternative (tie-break)")
    return EXIT_OK


def _cmd_bench(args) -> int:
    result = run_cts_bench(
        out_dir=args.out_dir,
        seeds=args.seeds,
        seed_base=args.seed_base,
        patients=args.patients,
        slots=args.slots,
        tightness=args.tightness,
        time_limit_s=args.time_limit,
        figures=not args.no_figures,
    )
    print(f"{'seed':>6} {'greedy':>7} {'exact':>6} {'status':>18} {'ms':>8} {'nodes':>9}")
    for r in result.rows:
        print(
            f"{r.seed:>6} {r.greedy_peak:>7} {r.exact_peak:>6} "
            f"{r.status:>18} {r.wall_ms:>8.0f} {r.nodes:>9}"
        )
    improved = sum(1 for r in result.rows if r.exact_peak < r.greedy_peak)
    print(
        f"exact peak <= greedy peak on {sum(1 for r in result.rows if r.exact_peak <= r.greedy_peak)}"
        f"/{len(result.rows)} instances; strictly better on {improved}"
    )
    print(f"documents and figures in {result.out_dir}")
    if result.regression:
        print("REGRESSION: exact solver peaked above the greedy baseline", file=sys.stderr)
        return 1
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(state_dir=args.state_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clinsched",
        description="Hospital scheduling: exact solving with explanations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    time_limit = _default_time_limit()

    p = sub.add_parser("gen", help="generate a seeded instance document")
    p.add_argument("--kind", choices=("cts", "ors", "poac"), required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--patients", type=int, default=20, help="cts/poac size")
    p.add_argument("--registrations", type=int, default=30, help="ors size")
    p.add_argument("--slots", type=int, default=26, help="cts day length")
    p.add_argument("--horizon", type=int, default=5, help="ors planning days")
    p.add_argument("--days", type=int, default=5, help="poac planning days")
    p.add_argument("--tightness", type=float, default=0.8)
    p.add_argument("--p1-share", type=int, default=20, help="ors priority-1 percent")
    p.add_argument("--ensure-feasible", action="store_true",
                   help="cts only: repair resources until the greedy pass fits")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="solve an instance to proven optimality")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--time-limit", type=float, default=time_limit)
    p.add_argument("--phase2-metric", choices=("starts", "occupancy"), default="starts")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("verify", help="re-check a solution document")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--phase2-metric", choices=("starts", "occupancy"), default="starts")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("explain-unsat", help="minimal reason for infeasibility")
    p.add_argument("--instance", required=True)
    p.add_argument("--out")
    p.add_argument("--time-limit", type=float, default=time_limit)
    p.add_argument("--interactive", action="store_true",
                   help="add background facts interactively and re-analyze")
    p.add_argument("--session", help="session file to persist/replay facts")
    p.set_defaults(func=_cmd_explain_unsat)

    p = sub.add_parser("explain-why", help="justify an assignment in the optimum")
    p.add_argument("--instance", required=True)
    p.add_argument("--atom", required=True, help="e.g. assign(r1)=s1")
    p.add_argument("--out")
    p.add_argument("--time-limit", type=float, default=time_limit)
    p.set_defaults(func=_cmd_explain_why)

    p = sub.add_parser("explain-contrast", help="why this value rather than that")
    p.add_argument("--instance", required=True)
    p.add_argument("--keep", required=True, help="atom holding in the optimum")
    p.add_argument("--instead", required=True, help="the alternative atom")
    p.add_argument("--out")
    p.add_argument("--time-limit", type=float, default=time_limit)
    p.set_defaults(func=_cmd_explain_contrast)

    p = sub.add_parser("bench", help="greedy baseline vs exact solver comparison")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seeds", type=int, default=30)
    p.add_argument("--seed-base", type=int, default=1000)
    p.add_argument("--patients", type=int, default=50)
    p.add_argument("--slots", type=int, default=26)
    p.add_argument("--tightness", type=float, default=0.9)
    p.add_argument("--time-limit", type=float, default=time_limit)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("serve", help="start the scheduling service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8711)
    p.add_argument("--state-dir", help="persist sessions to this directory")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (FormatError, GenError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
