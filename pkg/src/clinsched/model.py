"""Finite-domain constraint models shared by all three hospital schedulers.

A model holds integer-domain variables, labeled hard constraints and leveled
soft constraints.  Labels are structured names (family plus argument tuple) so
that infeasibility explanations can point at recognizable rules.  The seven
constraint kinds below are the complete catalog; every scheduling rule the
encoders emit is expressed in terms of them.

Soft constraints are violation-reified: the weight is paid at the given level
iff the attached constraint is violated.  Levels are compared
lexicographically, level 1 first.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence, Union

__all__ = [
    "Arg",
    "Name",
    "Kind",
    "Var",
    "ValueSetParams",
    "LinearLeqParams",
    "OrderingParams",
    "CountLeqParams",
    "ImplicationParams",
    "ForbidParams",
    "Constraint",
    "SoftConstraint",
    "ConstraintModel",
    "ObjectiveVector",
    "Defect",
    "ModelError",
    "EmptyDomainError",
    "DuplicateLabelError",
    "UnknownVarError",
    "MalformedParamsError",
    "PartialAssignmentError",
    "constraint_satisfied",
    "check_assignment",
    "validate_model",
]

Arg = Union[str, int]


class ModelError(Exception):
    """Base error for inconsistent model construction or queries."""


class EmptyDomainError(ModelError):
    pass


class DuplicateLabelError(ModelError):
    pass


class UnknownVarError(ModelError):
    pass


class MalformedParamsError(ModelError):
    pass


class PartialAssignmentError(ModelError):
    pass


_NAME_RE = re.compile(r"^\s*([A-Za-z_][\w.+-]*)\s*(?:\(\s*(.*?)\s*\))?\s*$")


@dataclass(frozen=True)
class Name:
    """Structured identifier: family plus argument tuple, e.g. start(p1,2)."""

    family: str
    args: tuple[Arg, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.family
        return "%s(%s)" % (self.family, ",".join(str(a) for a in self.args))

    def key(self) -> str:
        return str(self)

    @staticmethod
    def parse(text: str) -> "Name":
        m = _NAME_RE.match(text)
        if not m:
            raise ModelError(f"cannot parse name: {text!r}")
        family, raw_args = m.group(1), m.group(2)
        if raw_args is None or raw_args == "":
            return Name(family)
        args: list[Arg] = []
        for tok in raw_args.split(","):
            tok = tok.strip()
            if re.fullmatch(r"-?\d+", tok):
                args.append(int(tok))
            else:
                args.append(tok)
        return Name(family, tuple(args))


def as_name(value: Union[str, Name]) -> Name:
    return value if isinstance(value, Name) else Name.parse(value)


class Kind(Enum):
    EXACTLY_ONE = "exactly_one"
    AT_MOST_ONE = "at_most_one"
    LINEAR_LEQ = "linear_leq"
    ORDERING = "ordering"
    AT_MOST_K_COUNT = "at_most_k_count"
    IMPLICATION = "implication"
    FORBID = "forbid"


@dataclass(frozen=True)
class Var:
    id: int
    name: Name
    domain: tuple[int, ...]  # strictly ascending, non-empty


@dataclass(frozen=True)
class ValueSetParams:
    """EXACTLY_ONE / AT_MOST_ONE: how many scope vars take a value in `values`."""

    values: frozenset[int]


@dataclass(frozen=True)
class LinearLeqParams:
    """sum(coeffs[i] * value(scope[i])) <= bound, coeffs non-negative."""

    coeffs: tuple[int, ...]
    bound: int


@dataclass(frozen=True)
class OrderingParams:
    """scope [x, y]: value(x) + offset <= value(y), offset >= 0."""

    offset: int


@dataclass(frozen=True)
class CountLeqParams:
    """AT_MOST_K_COUNT: sum of weights[i] over scope vars with value(scope[i])
    in member_sets[i] is at most k.

    The base catalog semantics (one shared value set, unit weights) is the
    common case; per-var sets, weights and an optional activation guard are
    the generalized form the encoders need for occupancy windows, duration
    loads and peak reification.  When `guard` is set to (var, values), the
    bound applies only if the guard var takes a value in `values`.
    """

    member_sets: tuple[frozenset[int], ...]
    weights: tuple[int, ...]
    k: int
    guard: Optional[tuple[int, frozenset[int]]] = None


@dataclass(frozen=True)
class ImplicationParams:
    """scope [y]: value(y) in then_values (membership), or
    scope [x, y]: value(x) in if_values implies value(y) in then_values."""

    if_values: Optional[frozenset[int]]
    then_values: frozenset[int]


@dataclass(frozen=True)
class ForbidParams:
    """scope [x1..xn]: the tuple (value(x1)..value(xn)) != values."""

    values: tuple[int, ...]


Params = Union[
    ValueSetParams,
    LinearLeqParams,
    OrderingParams,
    CountLeqParams,
    ImplicationParams,
    ForbidParams,
]

_PARAMS_TYPE = {
    Kind.EXACTLY_ONE: ValueSetParams,
    Kind.AT_MOST_ONE: ValueSetParams,
    Kind.LINEAR_LEQ: LinearLeqParams,
    Kind.ORDERING: OrderingParams,
    Kind.AT_MOST_K_COUNT: CountLeqParams,
    Kind.IMPLICATION: ImplicationParams,
    Kind.FORBID: ForbidParams,
}


@dataclass(frozen=True)
class Constraint:
    label: Name
    kind: Kind
    scope: tuple[int, ...]
    params: Params


@dataclass(frozen=True)
class SoftConstraint:
    label: Name
    level: int  # 1 = most important
    weight: int
    violation: Constraint  # cost paid iff this constraint is violated


class ObjectiveVector:
    """Per-level costs, level 1 first; comparison pads with trailing zeros."""

    __slots__ = ("costs",)

    def __init__(self, costs: Iterable[int] = ()):
        self.costs = tuple(int(c) for c in costs)

    def _norm(self) -> tuple[int, ...]:
        c = self.costs
        n = len(c)
        while n and c[n - 1] == 0:
            n -= 1
        return c[:n]

    def padded(self, n: int) -> tuple[int, ...]:
        return self.costs + (0,) * max(0, n - len(self.costs))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ObjectiveVector):
            return NotImplemented
        return self._norm() == other._norm()

    def __lt__(self, other: "ObjectiveVector") -> bool:
        n = max(len(self.costs), len(other.costs))
        return self.padded(n) < other.padded(n)

    def __le__(self, other: "ObjectiveVector") -> bool:
        return self == other or self < other

    def __gt__(self, other: "ObjectiveVector") -> bool:
        return not self <= other

    def __ge__(self, other: "ObjectiveVector") -> bool:
        return not self < other

    def __hash__(self) -> int:
        return hash(self._norm())

    def __repr__(self) -> str:
        return f"ObjectiveVector({list(self.costs)})"

    def as_list(self) -> list[int]:
        return list(self.costs)


@dataclass(frozen=True)
class Defect:
    code: str
    detail: str


class ConstraintModel:
    """Mutable during construction; treat as immutable once handed to a solver."""

    def __init__(self) -> None:
        self.vars: list[Var] = []
        self.hard: list[Constraint] = []
        self.soft: list[SoftConstraint] = []
        self.removable: set[Name] = set()
        self.facts: set[Name] = set()
        self._labels: set[Name] = set()
        self._name_to_id: dict[str, int] = {}

    # -- variables ---------------------------------------------------------

    def add_var(self, name: Union[str, Name], domain: Iterable[int]) -> int:
        name = as_name(name)
        dom = tuple(sorted(set(int(v) for v in domain)))
        if not dom:
            raise EmptyDomainError(f"empty domain for var {name}")
        key = name.key()
        if key in self._name_to_id:
            raise DuplicateLabelError(f"duplicate var name {name}")
        vid = len(self.vars)
        self.vars.append(Var(vid, name, dom))
        self._name_to_id[key] = vid
        return vid

    def var_id(self, name: Union[str, Name]) -> int:
        key = as_name(name).key()
        if key not in self._name_to_id:
            raise UnknownVarError(f"unknown var {key}")
        return self._name_to_id[key]

    def var(self, vid: int) -> Var:
        return self.vars[vid]

    # -- constraints --------------------------------------------------------

    def _check_scope(self, scope: Sequence[int], allow_dup: bool = False) -> tuple[int, ...]:
        scope = tuple(int(v) for v in scope)
        if not scope:
            raise MalformedParamsError("empty scope")
        if not allow_dup and len(set(scope)) != len(scope):
            raise MalformedParamsError(f"duplicate var ids in scope {scope}")
        for v in scope:
            if not (0 <= v < len(self.vars)):
                raise UnknownVarError(f"scope references unknown var id {v}")
        return scope

    def _validate_params(self, kind: Kind, scope: tuple[int, ...], params: Params) -> None:
        if not isinstance(params, _PARAMS_TYPE[kind]):
            raise MalformedParamsError(
                f"{kind.value} expects {_PARAMS_TYPE[kind].__name__}, got {type(params).__name__}"
            )
        if kind in (Kind.EXACTLY_ONE, Kind.AT_MOST_ONE):
            if not params.values:
                raise MalformedParamsError(f"{kind.value} needs a non-empty value set")
        elif kind is Kind.LINEAR_LEQ:
            if len(params.coeffs) != len(scope):
                raise MalformedParamsError("coeffs length must match scope")
            if any(c < 0 for c in params.coeffs):
                raise MalformedParamsError("linear_leq coefficients must be non-negative")
        elif kind is Kind.ORDERING:
            if len(scope) != 2:
                raise MalformedParamsError("ordering scope must be [x, y]")
            if params.offset < 0:
                raise MalformedParamsError("ordering offset must be >= 0")
        elif kind is Kind.AT_MOST_K_COUNT:
            if len(params.member_sets) != len(scope):
                raise MalformedParamsError("member_sets length must match scope")
            if any(not s for s in params.member_sets):
                raise MalformedParamsError("member sets must be non-empty")
            if len(params.weights) != len(scope):
                raise MalformedParamsError("weights length must match scope")
            if any(w < 1 for w in params.weights):
                raise MalformedParamsError("weights must be positive")
            if params.k < 0:
                raise MalformedParamsError("k must be >= 0")
            if params.guard is not None:
                gvar, gvals = params.guard
                if not (0 <= gvar < len(self.vars)):
                    raise UnknownVarError(f"guard references unknown var id {gvar}")
                if gvar in scope:
                    raise MalformedParamsError("guard var may not appear in scope")
                if not gvals:
                    raise MalformedParamsError("guard value set must be non-empty")
        elif kind is Kind.IMPLICATION:
            if len(scope) == 1:
                if params.if_values is not None:
                    raise MalformedParamsError("membership form takes no if_values")
            elif len(scope) == 2:
                if not params.if_values:
                    raise MalformedParamsError("conditional form needs non-empty if_values")
            else:
                raise MalformedParamsError("implication scope must have 1 or 2 vars")
            if not params.then_values:
                raise MalformedParamsError("then_values must be non-empty")
        elif kind is Kind.FORBID:
            if len(params.values) != len(scope):
                raise MalformedParamsError("forbid tuple length must match scope")

    def make_constraint(
        self,
        label: Union[str, Name],
        kind: Kind,
        scope: Sequence[int],
        params: Params,
    ) -> Constraint:
        """Validate and build a constraint without adding it (soft violations)."""
        label = as_name(label)
        # counting entries may repeat a var (each entry counts separately)
        scope = self._check_scope(scope, allow_dup=kind is Kind.AT_MOST_K_COUNT)
        self._validate_params(kind, scope, params)
        return Constraint(label, kind, scope, params)

    def add_constraint(
        self,
        label: Union[str, Name],
        kind: Kind,
        scope: Sequence[int],
        params: Params,
        *,
        removable: bool = False,
        fact: bool = False,
    ) -> Constraint:
        c = self.make_constraint(label, kind, scope, params)
        if c.label in self._labels:
            raise DuplicateLabelError(f"duplicate constraint label {c.label}")
        self.hard.append(c)
        self._labels.add(c.label)
        if removable:
            self.removable.add(c.label)
        if fact:
            self.facts.add(c.label)
        return c

    # Convenience builders, one per catalog kind.

    def add_exactly_one(self, label, scope, values=(1,), **flags) -> Constraint:
        return self.add_constraint(
            label, Kind.EXACTLY_ONE, scope, ValueSetParams(frozenset(values)), **flags
        )

    def add_at_most_one(self, label, scope, values=(1,), **flags) -> Constraint:
        return self.add_constraint(
            label, Kind.AT_MOST_ONE, scope, ValueSetParams(frozenset(values)), **flags
        )

    def add_linear_leq(self, label, scope, coeffs, bound, **flags) -> Constraint:
        return self.add_constraint(
            label, Kind.LINEAR_LEQ, scope, LinearLeqParams(tuple(coeffs), int(bound)), **flags
        )

    def add_ordering(self, label, x, y, offset, **flags) -> Constraint:
        return self.add_constraint(
            label, Kind.ORDERING, (x, y), OrderingParams(int(offset)), **flags
        )

    def add_count_leq(
        self,
        label,
        scope,
        k,
        values=None,
        member_sets=None,
        weights=None,
        guard=None,
        **flags,
    ) -> Constraint:
        scope = tuple(scope)
        if (values is None) == (member_sets is None):
            raise MalformedParamsError("pass exactly one of values / member_sets")
        if values is not None:
            sets = tuple(frozenset(values) for _ in scope)
        else:
            sets = tuple(frozenset(s) for s in member_sets)
        w = tuple(weights) if weights is not None else (1,) * len(scope)
        g = (int(guard[0]), frozenset(guard[1])) if guard is not None else None
        return self.add_constraint(
            label, Kind.AT_MOST_K_COUNT, scope, CountLeqParams(sets, w, int(k), g), **flags
        )

    def add_implication(self, label, x, y, if_values, then_values, **flags) -> Constraint:
        return self.add_constraint(
            label,
            Kind.IMPLICATION,
            (x, y),
            ImplicationParams(frozenset(if_values), frozenset(then_values)),
            **flags,
        )

    def add_membership(self, label, var, values, **flags) -> Constraint:
        return self.add_constraint(
            label, Kind.IMPLICATION, (var,), ImplicationParams(None, frozenset(values)), **flags
        )

    def add_forbid(self, label, scope, values, **flags) -> Constraint:
        return self.add_constraint(
            label, Kind.FORBID, scope, ForbidParams(tuple(int(v) for v in values)), **flags
        )

    # -- soft constraints ----------------------------------------------------

    def add_soft(self, label, level: int, weight: int, violation: Constraint) -> SoftConstraint:
        label = as_name(label)
        if level < 1:
            raise MalformedParamsError("soft level must be >= 1")
        if weight < 1:
            raise MalformedParamsError("soft weight must be >= 1")
        if label in self._labels:
            raise DuplicateLabelError(f"duplicate soft label {label}")
        sc = SoftConstraint(label, int(level), int(weight), violation)
        self.soft.append(sc)
        self._labels.add(label)
        return sc

    def add_soft_membership(self, label, level, weight, var, good_values) -> SoftConstraint:
        """Cost paid iff `var` takes a value outside `good_values`."""
        label = as_name(label)
        violation = self.make_constraint(
            label, Kind.IMPLICATION, (var,), ImplicationParams(None, frozenset(good_values))
        )
        return self.add_soft(label, level, weight, violation)

    # -- queries -------------------------------------------------------------

    @property
    def max_level(self) -> int:
        return max((s.level for s in self.soft), default=0)

    def hard_by_label(self) -> dict[Name, Constraint]:
        return {c.label: c for c in self.hard}

    def search_space(self) -> int:
        n = 1
        for v in self.vars:
            n *= len(v.domain)
        return n


def constraint_satisfied(c: Constraint, value_of: Sequence[int]) -> bool:
    """Evaluate one constraint against a total assignment (indexed by var id)."""
    kind = c.kind
    if kind is Kind.EXACTLY_ONE:
        return sum(1 for v in c.scope if value_of[v] in c.params.values) == 1
    if kind is Kind.AT_MOST_ONE:
        return sum(1 for v in c.scope if value_of[v] in c.params.values) <= 1
    if kind is Kind.LINEAR_LEQ:
        total = sum(co * value_of[v] for co, v in zip(c.params.coeffs, c.scope))
        return total <= c.params.bound
    if kind is Kind.ORDERING:
        x, y = c.scope
        return value_of[x] + c.params.offset <= value_of[y]
    if kind is Kind.AT_MOST_K_COUNT:
        p = c.params
        if p.guard is not None:
            gvar, gvals = p.guard
            if value_of[gvar] not in gvals:
                return True
        total = sum(
            w for w, s, v in zip(p.weights, p.member_sets, c.scope) if value_of[v] in s
        )
        return total <= p.k
    if kind is Kind.IMPLICATION:
        p = c.params
        if len(c.scope) == 1:
            return value_of[c.scope[0]] in p.then_values
        x, y = c.scope
        return value_of[x] not in p.if_values or value_of[y] in p.then_values
    if kind is Kind.FORBID:
        return any(value_of[v] != t for v, t in zip(c.scope, c.params.values))
    raise MalformedParamsError(f"unknown kind {kind}")


def check_assignment(
    model: ConstraintModel, assignment: Mapping[int, int]
) -> tuple[list[Name], ObjectiveVector]:
    """Independent verifier: violated hard labels plus the soft objective vector.

    Pure function of (model, assignment); the solver never calls it, so it can
    serve as the oracle side of every round-trip test.
    """
    n = len(model.vars)
    if set(assignment.keys()) != set(range(n)):
        raise PartialAssignmentError(
            f"assignment must cover exactly var ids 0..{n - 1}"
        )
    value_of = [0] * n
    for vid, val in assignment.items():
        if val not in model.vars[vid].domain:
            raise ModelError(
                f"value {val} outside domain of var {model.vars[vid].name}"
            )
        value_of[vid] = val
    violations = [c.label for c in model.hard if not constraint_satisfied(c, value_of)]
    levels = model.max_level
    costs = [0] * levels
    for sc in model.soft:
        if not constraint_satisfied(sc.violation, value_of):
            costs[sc.level - 1] += sc.weight
    return violations, ObjectiveVector(costs)


def validate_model(model: ConstraintModel) -> list[Defect]:
    """Re-check structural invariants; returns an empty list for a sound model."""
    defects: list[Defect] = []
    seen_ids = set()
    for i, v in enumerate(model.vars):
        if v.id != i:
            defects.append(Defect("NonDenseIds", f"var at position {i} has id {v.id}"))
        if not v.domain:
            defects.append(Defect("EmptyDomain", f"var {v.name} has empty domain"))
        elif any(a >= b for a, b in zip(v.domain, v.domain[1:])):
            defects.append(Defect("UnsortedDomain", f"var {v.name} domain not ascending"))
        seen_ids.add(v.id)
    labels: set[Name] = set()
    n = len(model.vars)

    def check_constraint(c: Constraint, where: str) -> None:
        for v in c.scope:
            if not (0 <= v < n):
                defects.append(Defect("DanglingVar", f"{where} {c.label} references var {v}"))
        if c.kind is not Kind.AT_MOST_K_COUNT and len(set(c.scope)) != len(c.scope):
            defects.append(Defect("DuplicateScopeVar", f"{where} {c.label}"))
        try:
            model._validate_params(c.kind, c.scope, c.params)
        except ModelError as exc:
            defects.append(Defect("MalformedParams", f"{where} {c.label}: {exc}"))

    for c in model.hard:
        if c.label in labels:
            defects.append(Defect("DuplicateLabel", str(c.label)))
        labels.add(c.label)
        check_constraint(c, "hard")
    for sc in model.soft:
        if sc.label in labels:
            defects.append(Defect("DuplicateLabel", str(sc.label)))
        labels.add(sc.label)
        if sc.level < 1 or sc.weight < 1:
            defects.append(Defect("MalformedParams", f"soft {sc.label} level/weight"))
        check_constraint(sc.violation, "soft")
    hard_labels = {c.label for c in model.hard}
    for lbl in model.removable:
        if lbl not in hard_labels:
            defects.append(Defect("DanglingRemovable", str(lbl)))
    for lbl in model.facts:
        if lbl not in hard_labels:
            defects.append(Defect("DanglingFact", str(lbl)))
    return defects
