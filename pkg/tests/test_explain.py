import itertools

import pytest
from hypothesis import given, settings

from clinsched.engine import Status, solve, solve_decision
from clinsched.explain import (
    AlreadyHoldsError,
    BackgroundFact,
    NotUnsatError,
    SameAssignmentError,
    TargetNotInSolutionError,
    contrast,
    extract_mus,
    justify,
    new_session,
    session_add_background,
    verify_mus,
)
from clinsched.model import ConstraintModel, Name, ObjectiveVector

from strategies import justifiable_models, models


def test_mus_unary_conflict():
    m = ConstraintModel()
    x = m.add_var("x", [0, 1])
    y = m.add_var("y", [0, 1])
    m.add_membership("x1", x, {1}, removable=True)
    m.add_membership("x0", x, {0}, removable=True)
    m.add_membership("y1", y, {1}, removable=True)
    mus = extract_mus(m)
    assert mus.labels == {Name("x1"), Name("x0")}
    assert verify_mus(m, mus)


def test_mus_on_sat_model_rejected():
    m = ConstraintModel()
    x = m.add_var("x", [0, 1])
    m.add_membership("x1", x, {1}, removable=True)
    with pytest.raises(NotUnsatError):
        extract_mus(m)


def _ors_two_p1_toy():
    """Two priority-1 registrations of 200 min, one 300-min shift."""
    m = ConstraintModel()
    r1 = m.add_var(Name("assign", ("r1",)), [0, 1])  # 0 = shift, 1 = unassigned
    r2 = m.add_var(Name("assign", ("r2",)), [0, 1])
    m.add_membership(Name("assign-all-p1", ("r1",)), r1, {0}, removable=True)
    m.add_membership(Name("assign-all-p1", ("r2",)), r2, {0}, removable=True)
    m.add_count_leq(
        Name("capacity", ("shift",)), [r1, r2], 300, values={0}, weights=(200, 200),
        removable=True,
    )
    return m


def test_mus_ors_toy_matches_subset_enumeration():
    m = _ors_two_p1_toy()
    labels = sorted(m.removable, key=str)
    # oracle: all minimal unsat subsets by exhaustive subset enumeration
    unsat = set()
    for r in range(len(labels) + 1):
        for combo in itertools.combinations(labels, r):
            if solve_decision(m, set(combo)).status is Status.UNSAT:
                unsat.add(frozenset(combo))
    minimal = {
        s for s in unsat if all(s - {l} not in unsat for l in s)
    }
    assert minimal == {frozenset(labels)}  # all three needed together
    mus = extract_mus(m)
    assert mus.labels in minimal
    assert verify_mus(m, mus)


@settings(max_examples=50, deadline=None)
@given(m=models(max_vars=3, max_hard=5, max_soft=0, removable_fraction=True))
def test_mus_is_minimal_on_random_unsat_models(m):
    removable = sorted(m.removable, key=str)
    if not removable:
        return
    if solve_decision(m, set(removable)).status is not Status.UNSAT:
        return
    mus = extract_mus(m)
    assert verify_mus(m, mus)
    # cross-check against enumeration of all minimal unsat subsets
    unsat = set()
    for r in range(len(removable) + 1):
        for combo in itertools.combinations(removable, r):
            if solve_decision(m, set(combo)).status is Status.UNSAT:
                unsat.add(frozenset(combo))
    minimal = {s for s in unsat if all(s - {l} not in unsat for l in s)}
    assert mus.labels in minimal


def test_justify_fact_implication():
    m = ConstraintModel()
    f = m.add_var("f", [1])
    x = m.add_var("x", [0, 1])
    m.add_membership("fact-f", f, {1}, fact=True)
    m.add_implication("f-implies-x", f, x, {1}, {1}, removable=True)
    out = solve(m)
    assert out.status is Status.OPTIMAL and out.assignment[x] == 1
    graph = justify(m, out.assignment, [(x, 1)])
    assert graph.validate() == []
    root = graph.nodes[graph.roots[0]]
    assert root.status == "supported"
    supporter_labels = {
        graph.nodes[i].label
        for i in graph.edges[root.id]
        if graph.nodes[i].kind == "fact"
    }
    assert Name("f-implies-x") in supporter_labels or Name("fact-f") in supporter_labels


def test_justify_rejects_target_not_in_solution():
    m = ConstraintModel()
    x = m.add_var("x", [0, 1])
    m.add_membership("x1", x, {1})
    out = solve(m)
    with pytest.raises(TargetNotInSolutionError):
        justify(m, out.assignment, [(x, 0)])


def test_justify_marks_tie_break_unforced():
    m = ConstraintModel()
    x = m.add_var("x", [0, 1])  # nothing constrains x
    out = solve(m)
    graph = justify(m, out.assignment, [(x, out.assignment[x])])
    assert graph.nodes[graph.roots[0]].status == "unforced"
    assert graph.validate() == []


def test_verify_justification_accepts_sound_graphs():
    from clinsched.explain import verify_justification

    m = ConstraintModel()
    f = m.add_var("f", [1])
    x = m.add_var("x", [0, 1])
    m.add_membership("fact-f", f, {1}, fact=True)
    m.add_implication("f-implies-x", f, x, {1}, {1}, removable=True)
    out = solve(m)
    graph = justify(m, out.assignment, [(x, 1)])
    assert verify_justification(m, out.assignment, graph) == []


def test_justify_objective_cap_supports_preference():
    # one patient, two resources; preference soft makes resource 0 the optimum
    m = ConstraintModel()
    r = m.add_var("resource", [0, 1])
    m.add_soft_membership("prefers-0", 1, 1, r, {0})
    out = solve(m)
    assert out.assignment[r] == 0 and out.objective == ObjectiveVector([0])
    graph = justify(m, out.assignment, [(r, 0)])
    root = graph.nodes[graph.roots[0]]
    assert root.status == "supported"
    labels = {graph.nodes[i].label for i in graph.edges[root.id]}
    assert Name("objective-cap", (1,)) in labels


def test_justify_recurses_into_atom_supporters():
    # exactly-one over (x, y): the optimum pins x=0 only because y=1; the
    # supporter is y's assignment, which itself is a tie-break (unforced)
    m = ConstraintModel()
    x = m.add_var("x", [0, 1])
    y = m.add_var("y", [0, 1])
    m.add_exactly_one("one-of", (x, y), values={1}, removable=True)
    out = solve(m)
    assert out.assignment == {x: 0, y: 1}
    graph = justify(m, out.assignment, [(x, 0)])
    assert graph.validate() == []
    root = graph.nodes[graph.roots[0]]
    assert root.status == "supported"
    kinds = {graph.nodes[i].kind for i in graph.edges[root.id]}
    assert kinds == {"assignment", "fact"}
    child = next(
        graph.nodes[i]
        for i in graph.edges[root.id]
        if graph.nodes[i].kind == "assignment"
    )
    assert (child.var, child.value) == (y, 1)
    assert child.status == "unforced"
    assert child.id not in graph.edges  # never expanded
    # a zero-depth cap truncates the same child instead
    capped = justify(m, out.assignment, [(x, 0)], depth_cap=0)
    assert capped.validate() == []
    croot = capped.nodes[capped.roots[0]]
    cchild = next(
        capped.nodes[i]
        for i in capped.edges[croot.id]
        if capped.nodes[i].kind == "assignment"
    )
    assert cchild.status == "truncated"


@settings(max_examples=60, deadline=None)
@given(m=justifiable_models())
def test_justification_sound_on_random_models(m):
    from clinsched.explain import verify_justification
    from clinsched.engine import SolveConfig, solve as engine_solve

    out = engine_solve(m, SolveConfig(time_limit_s=30))
    if out.status is not Status.OPTIMAL:
        return
    targets = [(0, out.assignment[0])]
    graph = justify(m, out.assignment, targets)
    assert verify_justification(m, out.assignment, graph) == []


def test_contrast_infeasible_alternative():
    m = ConstraintModel()
    x = m.add_var("x", [0, 1, 2])
    m.add_membership("no-two", x, {0, 1}, removable=True)
    m.add_soft_membership("prefer-one", 1, 1, x, {1})
    out = solve(m)
    assert out.assignment[x] == 1
    res = contrast(m, out.assignment, (x, 1), (x, 2))
    assert res.verdict == "alternative_infeasible"
    assert res.mus is not None and Name("no-two") in res.mus.labels


def test_contrast_worse_alternative():
    m = ConstraintModel()
    x = m.add_var("x", [0, 1])
    m.add_soft_membership("prefer-one", 1, 1, x, {1})
    out = solve(m)
    res = contrast(m, out.assignment, (x, 1), (x, 0))
    assert res.verdict == "alternative_worse"
    assert res.original_objective == ObjectiveVector([0])
    assert res.alternative_objective == ObjectiveVector([1])
    # verdict consistency: re-solving the forced model reproduces the vector
    forced = ConstraintModel()
    y = forced.add_var("x", [0, 1])
    forced.add_soft_membership("prefer-one", 1, 1, y, {1})
    forced.add_membership("force", y, {0})
    assert solve(forced).objective == res.alternative_objective


def test_contrast_equivalent_alternative():
    m = ConstraintModel()
    x = m.add_var("x", [0, 1])
    out = solve(m)
    res = contrast(m, out.assignment, (x, 0), (x, 1))
    assert res.verdict == "alternative_equivalent"


def test_contrast_same_assignment_rejected():
    m = ConstraintModel()
    x = m.add_var("x", [0, 1])
    out = solve(m)
    with pytest.raises(SameAssignmentError):
        contrast(m, out.assignment, (x, 0), (x, 0))


def test_contrast_already_holding_alternative_rejected():
    m = ConstraintModel()
    x = m.add_var("x", [0, 1])
    y = m.add_var("y", [0, 1])
    out = solve(m)
    with pytest.raises(AlreadyHoldsError):
        contrast(m, out.assignment, (x, 0), (y, out.assignment[y]))


def test_session_consistent_fact_stays_sat():
    m = ConstraintModel()
    x = m.add_var("x", [0, 1])
    session = new_session(m)
    analysis = session_add_background(session, [BackgroundFact(x, "=", 1)])
    assert analysis.sat


def test_session_contradicting_fact_yields_mus():
    m = ConstraintModel()
    x = m.add_var("x", [0, 1])
    m.add_membership("x-is-one", x, {1}, removable=True)
    session = new_session(m)
    analysis = session_add_background(session, [BackgroundFact(x, "=", 0)])
    assert not analysis.sat
    assert analysis.mus.labels == {Name("x-is-one"), Name("background", (0,))}


def test_session_history_preserves_order():
    m = ConstraintModel()
    x = m.add_var("x", [0, 1, 2])
    session = new_session(m)
    session_add_background(session, [BackgroundFact(x, ">=", 1)])
    session_add_background(session, [BackgroundFact(x, "<=", 1)])
    assert len(session.history) == 2
    assert session.history[0][0].startswith("add x >= 1")
    assert session.history[1][0].startswith("add x <= 1")
    aug = session.augmented_model()
    assert solve(aug).assignment == {x: 1}
