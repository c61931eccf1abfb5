"""Explainability layer.

Answers three user questions about a scheduling model:

* why is there no schedule at all? -> minimal unsatisfiable subset (MUS) of
  the removable constraints, found by deletion-based shrinking;
* why does this assignment hold in the optimal schedule? -> a justification
  graph built by forbidding the assignment under the solution's objective
  bound and recursing on the unsat reasons until everything rests on facts;
* why this value rather than that one? -> a contrastive verdict, either a MUS
  showing the alternative is infeasible or the objective degradation it costs.

A session accumulates user-supplied background facts and re-runs the
unsatisfiability analysis after each addition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .engine import Engine, SolveConfig, Status
from .model import (
    Constraint,
    ConstraintModel,
    ImplicationParams,
    Kind,
    Name,
    ObjectiveVector,
    check_assignment,
)

__all__ = [
    "ExplainError",
    "NotUnsatError",
    "TargetNotInSolutionError",
    "SameAssignmentError",
    "AlreadyHoldsError",
    "Mus",
    "extract_mus",
    "verify_mus",
    "JustNode",
    "JustificationGraph",
    "justify",
    "verify_justification",
    "ContrastResult",
    "contrast",
    "BackgroundFact",
    "SessionState",
    "SessionAnalysis",
    "new_session",
    "session_add_background",
]

BASE_MODEL_LABEL = Name("base-model")


class ExplainError(Exception):
    pass


class NotUnsatError(ExplainError):
    pass


class TargetNotInSolutionError(ExplainError):
    pass


class SameAssignmentError(ExplainError):
    pass


class AlreadyHoldsError(ExplainError):
    pass


@dataclass(frozen=True)
class Mus:
    """Set of labels that is jointly unsatisfiable and 1-minimal."""

    labels: frozenset[Name]

    def sorted(self) -> list[Name]:
        return sorted(self.labels, key=str)


def _clone(model: ConstraintModel) -> ConstraintModel:
    out = ConstraintModel()
    out.vars = list(model.vars)
    out.hard = list(model.hard)
    out.soft = list(model.soft)
    out.removable = set(model.removable)
    out.facts = set(model.facts)
    out._labels = set(model._labels)
    out._name_to_id = dict(model._name_to_id)
    return out


def _decide(eng: Engine, enabled: set[Name], config: SolveConfig):
    out = eng.solve_decision(enabled, config)
    if out.status is Status.UNKNOWN_TIMEOUT:
        raise ExplainError("time limit hit during explanation solve")
    return out


def _shrink(eng: Engine, candidates: Sequence[Name], config: SolveConfig) -> frozenset[Name]:
    """Deletion-based MUS: drop candidates (in order) that are not needed."""
    keep = set(candidates)
    for label in candidates:
        trial = keep - {label}
        if _decide(eng, trial, config).status is Status.UNSAT:
            keep = trial
    return frozenset(keep)


def extract_mus(model: ConstraintModel, config: SolveConfig = SolveConfig()) -> Mus:
    """Minimal reason for unsatisfiability among the model's removable labels."""
    eng = Engine(model)
    candidates = [c.label for c in model.hard if c.label in model.removable]
    if _decide(eng, set(candidates), config).status is Status.SAT:
        raise NotUnsatError("model is satisfiable with all removable constraints enabled")
    return Mus(_shrink(eng, candidates, config))


def verify_mus(model: ConstraintModel, mus: Mus, config: SolveConfig = SolveConfig()) -> bool:
    """|mus|+1 decision calls: the set is unsat, every single removal is sat."""
    eng = Engine(model)
    if _decide(eng, set(mus.labels), config).status is not Status.UNSAT:
        return False
    for label in mus.labels:
        if _decide(eng, set(mus.labels) - {label}, config).status is not Status.SAT:
            return False
    return True


# -- justification -------------------------------------------------------------


@dataclass
class JustNode:
    id: int
    kind: str  # "assignment" | "fact"
    var: Optional[int] = None
    value: Optional[int] = None
    label: Optional[Name] = None
    status: str = "fact"  # assignment: supported | unforced | truncated


@dataclass
class JustificationGraph:
    nodes: list[JustNode]
    edges: dict[int, tuple[int, ...]]  # assignment node -> supporter node ids
    roots: tuple[int, ...]

    def validate(self) -> list[str]:
        problems: list[str] = []
        # acyclicity via DFS
        state: dict[int, int] = {}

        def visit(nid: int) -> bool:
            if state.get(nid) == 1:
                return False
            if state.get(nid) == 2:
                return True
            state[nid] = 1
            for child in self.edges.get(nid, ()):
                if not visit(child):
                    return False
            state[nid] = 2
            return True

        for node in self.nodes:
            if not visit(node.id):
                problems.append("cycle detected")
                break
        for node in self.nodes:
            children = self.edges.get(node.id, ())
            if node.kind == "fact":
                if children:
                    problems.append(f"fact node {node.id} has children")
            elif node.status == "supported":
                if not children:
                    problems.append(f"supported node {node.id} has no supporters")
            elif node.status in ("unforced", "truncated"):
                if children:
                    problems.append(f"{node.status} node {node.id} was expanded")
            else:
                problems.append(f"node {node.id} has unknown status {node.status}")
        return problems


def _atom_label(vid: int) -> Name:
    return Name("atom", (vid,))


def _objective_caps(
    model: ConstraintModel, objective: ObjectiveVector
) -> list[tuple[Name, Constraint]]:
    """Encode `level cost <= value` as weighted counts over the soft vars.

    Requires every soft violation to be a single-var membership (all the
    domain encoders emit that shape).
    """
    from .model import CountLeqParams

    caps: list[tuple[Name, Constraint]] = []
    by_level: dict[int, list] = {}
    for sc in model.soft:
        by_level.setdefault(sc.level, []).append(sc)
    padded = objective.padded(model.max_level)
    for level, softs in sorted(by_level.items()):
        scope = []
        member_sets = []
        weights = []
        for sc in softs:
            v = sc.violation
            if not (v.kind is Kind.IMPLICATION and len(v.scope) == 1):
                raise ExplainError(
                    "objective cap needs single-var membership softs; "
                    f"{sc.label} is {v.kind.value}"
                )
            var = v.scope[0]
            bad = frozenset(model.vars[var].domain) - v.params.then_values
            if not bad:
                continue  # soft can never be violated
            scope.append(var)
            member_sets.append(bad)
            weights.append(sc.weight)
        if not scope:
            continue
        label = Name("objective-cap", (level,))
        c = Constraint(
            label,
            Kind.AT_MOST_K_COUNT,
            tuple(scope),
            CountLeqParams(tuple(member_sets), tuple(weights), int(padded[level - 1]), None),
        )
        caps.append((label, c))
    return caps


def _augment_for_justification(
    model: ConstraintModel, solution: Mapping[int, int], objective: ObjectiveVector
) -> tuple[ConstraintModel, list[Name], list[Name]]:
    """Model copy with solution atoms and objective caps as removable labels."""
    aug = _clone(model)
    aug.removable = set(model.removable) | set(model.facts)
    atom_labels: list[Name] = []
    for v in model.vars:
        label = _atom_label(v.id)
        aug.add_membership(label, v.id, {solution[v.id]}, removable=True, fact=True)
        atom_labels.append(label)
    cap_labels: list[Name] = []
    for label, c in _objective_caps(model, objective):
        aug.hard.append(c)
        aug._labels.add(label)
        aug.removable.add(label)
        aug.facts.add(label)
        cap_labels.append(label)
    return aug, atom_labels, cap_labels


def justify(
    model: ConstraintModel,
    solution: Mapping[int, int],
    targets: Sequence[tuple[int, int]],
    config: SolveConfig = SolveConfig(),
    depth_cap: int = 32,
) -> JustificationGraph:
    """Justification graph for `targets` within an optimal `solution`.

    Each target is probed by forbidding its value while capping every
    objective level at the solution's cost; the MUS of that probe names the
    supporters.  Supporters that are themselves solution assignments are
    expanded recursively until only facts remain.  A target whose negation
    stays satisfiable at equal objective is a tie-break artifact and is marked
    unforced instead of being expanded.
    """
    violations, objective = check_assignment(model, solution)
    if violations:
        raise ExplainError(f"solution violates hard constraints: {violations[:3]}")
    for var, value in targets:
        if solution.get(var) != value:
            raise TargetNotInSolutionError(
                f"target {model.vars[var].name}={value} does not hold in the solution"
            )
    aug, atom_labels, cap_labels = _augment_for_justification(model, solution, objective)
    rule_labels = [
        c.label
        for c in model.hard
        if c.label in aug.removable and not str(c.label).startswith("atom(")
    ]

    nodes: list[JustNode] = []
    edges: dict[int, tuple[int, ...]] = {}
    memo: dict[tuple[int, int], int] = {}
    fact_ids: dict[Name, int] = {}

    def fact_node(label: Name) -> int:
        if label not in fact_ids:
            nid = len(nodes)
            nodes.append(JustNode(nid, "fact", label=label, status="fact"))
            fact_ids[label] = nid
        return fact_ids[label]

    def expand(var: int, value: int, path: frozenset[int], depth: int) -> int:
        key = (var, value)
        if key in memo:
            return memo[key]
        nid = len(nodes)
        nodes.append(JustNode(nid, "assignment", var=var, value=value, status="supported"))
        memo[key] = nid
        if depth > depth_cap:
            nodes[nid].status = "truncated"
            return nid
        probe = _clone(aug)
        probe.add_forbid(Name("probe", (len(path),)), (var,), (value,))
        # candidate order: atoms first so deletion prefers rule/fact supporters
        candidates = (
            [_atom_label(v.id) for v in model.vars if v.id != var and v.id not in path]
            + rule_labels
            + cap_labels
        )
        eng = Engine(probe)
        if _decide(eng, set(candidates), config).status is Status.SAT:
            nodes[nid].status = "unforced"
            return nid
        mus = _shrink(eng, candidates, config)
        supporters: list[int] = []
        for label in sorted(mus, key=str):
            if label.family == "atom":
                wid = int(label.args[0])
                supporters.append(expand(wid, solution[wid], path | {var}, depth + 1))
            else:
                supporters.append(fact_node(label))
        if not supporters:
            supporters.append(fact_node(BASE_MODEL_LABEL))
        edges[nid] = tuple(supporters)
        return nid

    roots = tuple(expand(var, value, frozenset(), 0) for var, value in targets)
    return JustificationGraph(nodes, edges, roots)


def verify_justification(
    model: ConstraintModel,
    solution: Mapping[int, int],
    graph: JustificationGraph,
    config: SolveConfig = SolveConfig(),
) -> list[str]:
    """Independent soundness check of a justification graph.

    For every expanded node, forcing its negation while enabling only its
    supporting labels (plus the objective caps) must be unsatisfiable.
    """
    problems = graph.validate()
    violations, objective = check_assignment(model, solution)
    if violations:
        problems.append("solution violates hard constraints")
        return problems
    aug, _atoms, cap_labels = _augment_for_justification(model, solution, objective)
    for node in graph.nodes:
        if node.kind != "assignment" or node.status != "supported":
            continue
        enable = set(cap_labels)
        for sid in graph.edges.get(node.id, ()):
            sn = graph.nodes[sid]
            if sn.kind == "assignment":
                enable.add(_atom_label(sn.var))
            elif sn.label != BASE_MODEL_LABEL:
                enable.add(sn.label)
        probe = _clone(aug)
        probe.add_forbid(Name("probe"), (node.var,), (node.value,))
        if _decide(Engine(probe), enable, config).status is not Status.UNSAT:
            problems.append(
                f"supporters of node {node.id} do not force the assignment"
            )
    return problems


# -- contrastive queries -------------------------------------------------------


@dataclass(frozen=True)
class ContrastResult:
    verdict: str  # alternative_infeasible | alternative_worse | alternative_equivalent
    original_objective: ObjectiveVector
    alternative_objective: Optional[ObjectiveVector] = None
    mus: Optional[Mus] = None


def contrast(
    model: ConstraintModel,
    solution: Mapping[int, int],
    a: tuple[int, int],
    b: tuple[int, int],
    config: SolveConfig = SolveConfig(),
) -> ContrastResult:
    """Why a rather than b: force b and report infeasibility or degradation."""
    if a == b:
        raise SameAssignmentError("alternative is identical to the original assignment")
    var_a, val_a = a
    var_b, val_b = b
    if solution.get(var_a) != val_a:
        raise TargetNotInSolutionError(
            f"{model.vars[var_a].name}={val_a} does not hold in the solution"
        )
    if solution.get(var_b) == val_b:
        raise AlreadyHoldsError(
            f"{model.vars[var_b].name}={val_b} already holds in the solution"
        )
    violations, original = check_assignment(model, solution)
    if violations:
        raise ExplainError(f"solution violates hard constraints: {violations[:3]}")
    forced = _clone(model)
    if val_b not in model.vars[var_b].domain:
        raise ExplainError(f"value {val_b} outside domain of {model.vars[var_b].name}")
    forced.add_membership(Name("contrast-force"), var_b, {val_b})
    eng = Engine(forced)
    outcome = eng.solve(config)
    if outcome.status is Status.UNSAT:
        candidates = [c.label for c in model.hard if c.label in model.removable or c.label in model.facts]
        probe = _clone(forced)
        probe.removable = set(model.removable) | set(model.facts)
        mus = _shrink(Engine(probe), candidates, config)
        return ContrastResult("alternative_infeasible", original, mus=Mus(mus))
    if outcome.status is not Status.OPTIMAL:
        raise ExplainError("time limit hit while optimizing the alternative")
    alt = outcome.objective
    if original < alt:
        return ContrastResult("alternative_worse", original, alternative_objective=alt)
    if original == alt:
        return ContrastResult("alternative_equivalent", original, alternative_objective=alt)
    raise ExplainError(
        "alternative beats the given solution; the solution was not optimal"
    )


# -- interactive background sessions -------------------------------------------


_FACT_OPS = ("=", "!=", "<=", ">=")


@dataclass(frozen=True)
class BackgroundFact:
    var: int
    op: str  # one of = != <= >=
    value: int

    def describe(self, model: ConstraintModel) -> str:
        return f"{model.vars[self.var].name} {self.op} {self.value}"


@dataclass
class SessionAnalysis:
    sat: bool
    mus: Optional[Mus] = None


@dataclass
class SessionState:
    model: ConstraintModel
    background: list[Constraint] = field(default_factory=list)
    history: list[tuple[str, str]] = field(default_factory=list)

    def augmented_model(self) -> ConstraintModel:
        aug = _clone(self.model)
        for c in self.background:
            aug.hard.append(c)
            aug._labels.add(c.label)
            aug.removable.add(c.label)
            aug.facts.add(c.label)
        return aug


def new_session(model: ConstraintModel) -> SessionState:
    return SessionState(model)


def _fact_constraint(model: ConstraintModel, label: Name, fact: BackgroundFact) -> Constraint:
    dom = model.vars[fact.var].domain
    if fact.op == "=":
        values = {fact.value}
    elif fact.op == "!=":
        values = {v for v in dom if v != fact.value}
    elif fact.op == "<=":
        values = {v for v in dom if v <= fact.value}
    elif fact.op == ">=":
        values = {v for v in dom if v >= fact.value}
    else:
        raise ExplainError(f"unknown fact operator {fact.op!r}")
    if not values:
        # impossible fact: keep the contradiction explicit via a membership
        # on a value outside the domain rather than rejecting the input
        values = {dom[0] - 1}
    return Constraint(
        label,
        Kind.IMPLICATION,
        (fact.var,),
        ImplicationParams(None, frozenset(values)),
    )


def session_add_background(
    session: SessionState,
    facts: Sequence[BackgroundFact],
    config: SolveConfig = SolveConfig(),
) -> SessionAnalysis:
    """Append user facts, then re-run the unsatisfiability analysis."""
    base = session.model
    for fact in facts:
        if not (0 <= fact.var < len(base.vars)):
            raise ExplainError(f"unknown var id {fact.var}")
        idx = len(session.background)
        label = Name("background", (idx,))
        existing = {c.label for c in base.hard} | {c.label for c in session.background}
        if label in existing:
            raise ExplainError(f"label collision for {label}")
        session.background.append(_fact_constraint(base, label, fact))
        session.history.append(("add " + fact.describe(base), "pending"))
    aug = session.augmented_model()
    eng = Engine(aug)
    candidates = [c.label for c in aug.hard if c.label in aug.removable]
    if _decide(eng, set(candidates), config).status is Status.SAT:
        analysis = SessionAnalysis(sat=True)
        outcome = "sat"
    else:
        mus = Mus(_shrink(eng, candidates, config))
        analysis = SessionAnalysis(sat=False, mus=mus)
        outcome = "unsat mus=[" + ", ".join(str(l) for l in mus.sorted()) + "]"
    for i in range(len(session.history) - len(facts), len(session.history)):
        session.history[i] = (session.history[i][0], outcome)
    return analysis
