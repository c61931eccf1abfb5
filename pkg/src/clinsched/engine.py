"""Exact finite-domain solver.

Depth-first branch and bound with forward-checking propagation over the seven
constraint kinds, lexicographic optimization by sequential level descent, and
assumption-controlled activation of removable constraints (the primitive that
infeasibility explanations call repeatedly).

Determinism contract: variables branch in ascending id order, values in
ascending order, and the returned optimal assignment is the lexicographically
smallest one achieving the proven optimal objective vector.  A vectorized
exhaustive oracle (`brute_force`) provides the same contract for small models.
"""

from __future__ import annotations

import sys
import time
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import (
    Constraint,
    ConstraintModel,
    Kind,
    Name,
    ObjectiveVector,
    constraint_satisfied,
    validate_model,
)

__all__ = [
    "EngineError",
    "InvalidModelError",
    "SpaceTooLargeError",
    "NotRemovableError",
    "Status",
    "SolveConfig",
    "SolveStats",
    "SolveOutcome",
    "DecisionOutcome",
    "Engine",
    "solve",
    "solve_decision",
    "brute_force",
    "BRUTE_FORCE_SPACE_LIMIT",
]

BRUTE_FORCE_SPACE_LIMIT = 1_000_000


class EngineError(Exception):
    pass


class InvalidModelError(EngineError):
    pass


class SpaceTooLargeError(EngineError):
    pass


class NotRemovableError(EngineError):
    pass


class Status(Enum):
    OPTIMAL = "optimal"
    FEASIBLE_TIMEOUT = "feasible_timeout"
    UNSAT = "unsat"
    UNKNOWN_TIMEOUT = "unknown_timeout"
    SAT = "sat"


@dataclass(frozen=True)
class SolveConfig:
    """Search budget.  Var order (ascending id) and value order (ascending)
    are fixed by the determinism contract and not configurable."""

    time_limit_s: float = 60.0

    def __post_init__(self) -> None:
        if self.time_limit_s <= 0:
            raise ValueError("time limit must be positive")


@dataclass
class SolveStats:
    nodes: int = 0
    wall_ms: float = 0.0


@dataclass
class SolveOutcome:
    status: Status
    assignment: Optional[dict[int, int]]
    objective: Optional[ObjectiveVector]
    stats: SolveStats


@dataclass
class DecisionOutcome:
    status: Status
    assignment: Optional[dict[int, int]]
    stats: SolveStats


class _Timeout(Exception):
    pass


# Trigger tags; counting constraints encode the entry position in the tag.
_MEMBER = 0
_GUARD = 1
_IF_HIT = 2
_THEN_MISS = 3
_MATCH = 4
_ENTRY_BASE = 16


class _CVar:
    __slots__ = ("values", "full", "n")

    def __init__(self, values: tuple[int, ...]):
        self.values = values
        self.n = len(values)
        self.full = (1 << self.n) - 1

    def mask_of(self, vals: Iterable[int]) -> int:
        m = 0
        for v in vals:
            i = bisect_left(self.values, v)
            if i < self.n and self.values[i] == v:
                m |= 1 << i
        return m

    def mask_ge(self, value: int) -> int:
        i = bisect_left(self.values, value)
        return self.full & ~((1 << i) - 1)

    def mask_le(self, value: int) -> int:
        i = bisect_right(self.values, value)
        return (1 << i) - 1


def _min_val(cv: _CVar, mask: int) -> int:
    return cv.values[(mask & -mask).bit_length() - 1]


def _max_val(cv: _CVar, mask: int) -> int:
    return cv.values[mask.bit_length() - 1]


class _CC:
    """Compiled constraint base: registered triggers fire during assignment."""

    __slots__ = ("cid", "source")

    def root(self, s: "_Search") -> bool:
        return True

    def fire(self, s: "_Search", tag: int, var: int, cur: int) -> bool:
        return True

    def tristate(self, s: "_Search") -> int:
        """-1 definitely violated, +1 definitely satisfied, 0 unknown."""
        return 0


class _CCount(_CC):
    """Weighted membership count <= k; entries may repeat a var."""

    __slots__ = ("entries", "k", "guard_var", "guard_mask", "exactly", "slot",
                 "max_weight")

    def __init__(self, entries, k, guard_var, guard_mask, exactly):
        self.entries = entries  # tuple of (var, member mask, weight)
        self.k = k
        self.guard_var = guard_var  # -1 when unguarded
        self.guard_mask = guard_mask
        self.exactly = exactly
        self.max_weight = max((w for _x, _m, w in entries), default=0)

    def root(self, s: "_Search") -> bool:
        if self.guard_var < 0:
            for x, mask, w in self.entries:
                if w > self.k and not s.prune(x, mask):
                    return False
        return True

    def _prune_members(self, s: "_Search", cur: int, cnt: int) -> bool:
        """Remove member values that no longer fit under the bound."""
        for x, mask, w in self.entries:
            if x <= cur:
                continue  # already assigned; its membership is in the count
            if cnt + w > self.k and not s.prune(x, mask):
                return False
        return True

    def fire(self, s: "_Search", tag: int, var: int, cur: int) -> bool:
        st = s.cstate
        if tag == _GUARD:
            s.set_state(self.slot + 1, 1)
            cnt = st[self.slot]
            if cnt > self.k:
                return False
            if cnt + self.max_weight > self.k:
                return self._prune_members(s, cur, cnt)
            return True
        # member assignment; entry position is encoded in the tag
        cnt = st[self.slot] + self.entries[tag - _ENTRY_BASE][2]
        s.set_state(self.slot, cnt)
        if self.guard_var < 0 or st[self.slot + 1]:
            if cnt > self.k:
                return False
            if cnt + self.max_weight > self.k:
                return self._prune_members(s, cur, cnt)
            return True
        if cnt > self.k:
            # contrapositive: the guard cannot hold any more
            return s.prune(self.guard_var, self.guard_mask)
        return True

    def tristate(self, s: "_Search") -> int:
        forced = 0
        possible = 0
        forced_cnt = 0
        possible_cnt = 0
        for x, m, w in self.entries:
            d = s.dom[x]
            if d & m:
                possible += w
                possible_cnt += 1
                if d & ~m == 0:
                    forced += w
                    forced_cnt += 1
        if self.exactly:
            if forced_cnt > 1 or possible_cnt == 0:
                return -1
            if forced_cnt == 1 and possible_cnt == 1:
                return 1
            return 0
        if self.guard_var >= 0:
            g = s.dom[self.guard_var]
            guard_true = g & ~self.guard_mask == 0
            guard_false = g & self.guard_mask == 0
            if guard_false:
                return 1
            if possible <= self.k:
                return 1
            if guard_true and forced > self.k:
                return -1
            return 0
        if forced > self.k:
            return -1
        if possible <= self.k:
            return 1
        return 0


class _COrdering(_CC):
    __slots__ = ("x", "y", "offset")

    def __init__(self, x, y, offset):
        self.x, self.y, self.offset = x, y, offset

    def root(self, s: "_Search") -> bool:
        cvx, cvy = s.eng.cvars[self.x], s.eng.cvars[self.y]
        hi = _max_val(cvy, s.dom[self.y]) - self.offset
        if not s.keep(self.x, cvx.mask_le(hi)):
            return False
        lo = _min_val(cvx, s.dom[self.x]) + self.offset
        return s.keep(self.y, cvy.mask_ge(lo))

    def fire(self, s: "_Search", tag: int, var: int, cur: int) -> bool:
        if var == self.x:
            v = s.vals[self.x] + self.offset
            return s.keep(self.y, s.eng.cvars[self.y].mask_ge(v))
        v = s.vals[self.y] - self.offset
        return s.keep(self.x, s.eng.cvars[self.x].mask_le(v))

    def tristate(self, s: "_Search") -> int:
        cvx, cvy = s.eng.cvars[self.x], s.eng.cvars[self.y]
        dx, dy = s.dom[self.x], s.dom[self.y]
        if _min_val(cvx, dx) + self.offset > _max_val(cvy, dy):
            return -1
        if _max_val(cvx, dx) + self.offset <= _min_val(cvy, dy):
            return 1
        return 0


class _CImplication(_CC):
    __slots__ = ("x", "y", "if_mask", "then_mask", "unary")

    def __init__(self, x, y, if_mask, then_mask, unary):
        self.x, self.y = x, y
        self.if_mask = if_mask
        self.then_mask = then_mask
        self.unary = unary

    def root(self, s: "_Search") -> bool:
        if self.unary:
            return s.keep(self.y, self.then_mask)
        return True

    def fire(self, s: "_Search", tag: int, var: int, cur: int) -> bool:
        if tag == _IF_HIT:
            return s.keep(self.y, self.then_mask)
        # y just assigned: if outside then_values the antecedent must be false
        if s.dom[self.y] & self.then_mask:
            return True
        return s.prune(self.x, self.if_mask)

    def tristate(self, s: "_Search") -> int:
        dy = s.dom[self.y]
        if self.unary:
            if dy & self.then_mask == 0:
                return -1
            if dy & ~self.then_mask == 0:
                return 1
            return 0
        dx = s.dom[self.x]
        if dx & self.if_mask == 0 or dy & ~self.then_mask == 0:
            return 1
        if dx & ~self.if_mask == 0 and dy & self.then_mask == 0:
            return -1
        return 0


class _CLinear(_CC):
    __slots__ = ("scope", "coeffs", "bound", "root_mins", "slot")

    def __init__(self, scope, coeffs, bound, root_mins):
        self.scope = scope
        self.coeffs = coeffs
        self.bound = bound
        self.root_mins = root_mins

    def _prune_tail(self, s: "_Search", cur: int) -> bool:
        fixed = s.cstate[self.slot]
        rem = 0
        for pos, x in enumerate(self.scope):
            if x > cur:
                rem += self.coeffs[pos] * self.root_mins[pos]
        if fixed + rem > self.bound:
            return False
        for pos, x in enumerate(self.scope):
            if x <= cur or self.coeffs[pos] == 0:
                continue
            slack = self.bound - fixed - (rem - self.coeffs[pos] * self.root_mins[pos])
            cv = s.eng.cvars[x]
            if not s.keep(x, cv.mask_le(slack // self.coeffs[pos])):
                return False
        return True

    def root(self, s: "_Search") -> bool:
        return self._prune_tail(s, -1)

    def fire(self, s: "_Search", tag: int, var: int, cur: int) -> bool:
        pos = self.scope.index(var)
        s.set_state(self.slot, s.cstate[self.slot] + self.coeffs[pos] * s.vals[var])
        return self._prune_tail(s, cur)

    def tristate(self, s: "_Search") -> int:
        lo = hi = 0
        for pos, x in enumerate(self.scope):
            cv = s.eng.cvars[x]
            d = s.dom[x]
            lo += self.coeffs[pos] * _min_val(cv, d)
            hi += self.coeffs[pos] * _max_val(cv, d)
        if lo > self.bound:
            return -1
        if hi <= self.bound:
            return 1
        return 0


class _CForbid(_CC):
    __slots__ = ("scope", "tuple_vidx", "slot")

    def __init__(self, scope, tuple_vidx):
        self.scope = scope
        self.tuple_vidx = tuple_vidx  # value index of the forbidden value per var

    def root(self, s: "_Search") -> bool:
        if len(self.scope) == 1:
            return s.prune(self.scope[0], 1 << self.tuple_vidx[0])
        return True

    def fire(self, s: "_Search", tag: int, var: int, cur: int) -> bool:
        cnt = s.cstate[self.slot] + 1
        s.set_state(self.slot, cnt)
        n = len(self.scope)
        if cnt == n:
            return False
        if cnt == n - 1:
            pending = [pos for pos, x in enumerate(self.scope) if x > cur]
            if len(pending) == 1:
                pos = pending[0]
                return s.prune(self.scope[pos], 1 << self.tuple_vidx[pos])
        return True

    def tristate(self, s: "_Search") -> int:
        all_single_match = True
        for pos, x in enumerate(self.scope):
            d = s.dom[x]
            bit = 1 << self.tuple_vidx[pos]
            if d & bit == 0:
                return 1
            if d != bit:
                all_single_match = False
        return -1 if all_single_match else 0


class _CTrue(_CC):
    """Constraint that can never be violated given the var's domain."""

    __slots__ = ()

    def tristate(self, s: "_Search") -> int:
        return 1


class Engine:
    """Compiled model; reusable for many solve / decision calls."""

    def __init__(self, model: ConstraintModel):
        defects = validate_model(model)
        if defects:
            raise InvalidModelError(
                "; ".join(f"{d.code}: {d.detail}" for d in defects[:5])
            )
        self.model = model
        self.n = len(model.vars)
        self.cvars = [_CVar(v.domain) for v in model.vars]
        # triggers[var][value_index] -> list of (cc_id, tag); always[var] fires
        # on any assignment of var (keeps registration memory linear)
        self.triggers: list[dict[int, list[tuple[int, int]]]] = [dict() for _ in range(self.n)]
        self.always: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        self.ccs: list[_CC] = []
        self.exactly_ids: list[int] = []
        self.state_size = 0
        self.hard_cc_ids: list[int] = []
        self.label_to_cc: dict[Name, int] = {}
        for c in model.hard:
            cid = self._compile(c, register=True)
            self.hard_cc_ids.append(cid)
            self.label_to_cc[c.label] = cid
        # softs: fast path for unary memberships, generic tristate otherwise
        self.levels = model.max_level
        self.soft_members: list[list[tuple[int, int, int]]] = [[] for _ in range(self.levels)]
        self.soft_generic: list[list[tuple[int, int, Constraint]]] = [[] for _ in range(self.levels)]
        for sc in model.soft:
            v = sc.violation
            if v.kind is Kind.IMPLICATION and len(v.scope) == 1:
                var = v.scope[0]
                mask = self.cvars[var].mask_of(v.params.then_values)
                self.soft_members[sc.level - 1].append((var, mask, sc.weight))
            else:
                cid = self._compile(v, register=False)
                self.soft_generic[sc.level - 1].append((cid, sc.weight, v))

    def _register(self, var: int, vidx: int, cid: int, tag: int) -> None:
        self.triggers[var].setdefault(vidx, []).append((cid, tag))

    def _register_always(self, var: int, cid: int, tag: int) -> None:
        self.always[var].append((cid, tag))

    def _add_cc(self, cc: _CC, source: Constraint, state_slots: int) -> int:
        cc.cid = len(self.ccs)
        cc.source = source
        if state_slots:
            cc.slot = self.state_size
            self.state_size += state_slots
        self.ccs.append(cc)
        return cc.cid

    def _compile(self, c: Constraint, register: bool) -> int:
        kind = c.kind
        if kind in (Kind.EXACTLY_ONE, Kind.AT_MOST_ONE, Kind.AT_MOST_K_COUNT):
            if kind is Kind.AT_MOST_K_COUNT:
                p = c.params
                sets, weights, k = p.member_sets, p.weights, p.k
                guard = p.guard
                exactly = False
            else:
                sets = tuple(c.params.values for _ in c.scope)
                weights = (1,) * len(c.scope)
                k = 1
                guard = None
                exactly = kind is Kind.EXACTLY_ONE
            masks = tuple(self.cvars[x].mask_of(s) for x, s in zip(c.scope, sets))
            if guard is not None:
                gvar, gvals = guard
                gmask = self.cvars[gvar].mask_of(gvals)
                if gmask == 0:
                    cid = self._add_cc(_CTrue(), c, 0)
                    return cid  # guard can never hold
            else:
                gvar, gmask = -1, 0
            entries = tuple(
                (x, m, w) for x, m, w in zip(c.scope, masks, weights)
            )
            cc = _CCount(entries, k, gvar, gmask, exactly)
            cid = self._add_cc(cc, c, 2)
            if register:
                for pos, (x, m, _w) in enumerate(entries):
                    while m:
                        lsb = m & -m
                        m ^= lsb
                        self._register(x, lsb.bit_length() - 1, cid, _ENTRY_BASE + pos)
                if gvar >= 0:
                    gm = gmask
                    while gm:
                        lsb = gm & -gm
                        gm ^= lsb
                        self._register(gvar, lsb.bit_length() - 1, cid, _GUARD)
                if exactly:
                    self.exactly_ids.append(cid)
            return cid
        if kind is Kind.ORDERING:
            x, y = c.scope
            cc = _COrdering(x, y, c.params.offset)
            cid = self._add_cc(cc, c, 0)
            if register:
                self._register_always(x, cid, _IF_HIT)
                self._register_always(y, cid, _THEN_MISS)
            return cid
        if kind is Kind.IMPLICATION:
            p = c.params
            if len(c.scope) == 1:
                y = c.scope[0]
                then_mask = self.cvars[y].mask_of(p.then_values)
                cc = _CImplication(y, y, 0, then_mask, True)
                return self._add_cc(cc, c, 0)
            x, y = c.scope
            if_mask = self.cvars[x].mask_of(p.if_values)
            then_mask = self.cvars[y].mask_of(p.then_values)
            if if_mask == 0:
                return self._add_cc(_CTrue(), c, 0)
            cc = _CImplication(x, y, if_mask, then_mask, False)
            cid = self._add_cc(cc, c, 0)
            if register:
                m = if_mask
                while m:
                    lsb = m & -m
                    m ^= lsb
                    self._register(x, lsb.bit_length() - 1, cid, _IF_HIT)
                self._register_always(y, cid, _THEN_MISS)
            return cid
        if kind is Kind.LINEAR_LEQ:
            root_mins = tuple(self.cvars[x].values[0] for x in c.scope)
            cc = _CLinear(c.scope, c.params.coeffs, c.params.bound, root_mins)
            cid = self._add_cc(cc, c, 1)
            if register:
                for pos, x in enumerate(c.scope):
                    if c.params.coeffs[pos] != 0:
                        self._register_always(x, cid, _MEMBER)
            return cid
        if kind is Kind.FORBID:
            vidx = []
            for x, t in zip(c.scope, c.params.values):
                cv = self.cvars[x]
                i = bisect_left(cv.values, t)
                if i >= cv.n or cv.values[i] != t:
                    return self._add_cc(_CTrue(), c, 0)  # tuple value unreachable
                vidx.append(i)
            cc = _CForbid(c.scope, tuple(vidx))
            cid = self._add_cc(cc, c, 1)
            if register:
                for pos, x in enumerate(c.scope):
                    self._register(x, vidx[pos], cid, _MATCH)
            return cid
        raise InvalidModelError(f"unknown kind {kind}")

    def active_flags(self, enabled: Optional[set[Name]] = None) -> list[bool]:
        """Hard-constraint activation; removable constraints follow `enabled`."""
        flags = [True] * len(self.ccs)
        if enabled is None:
            return flags
        for c, cid in zip(self.model.hard, self.hard_cc_ids):
            if c.label in self.model.removable:
                flags[cid] = c.label in enabled
        return flags

    def solve(self, config: SolveConfig = SolveConfig()) -> SolveOutcome:
        """Lexicographic optimization by level descent, then a final dive for
        the lexicographically smallest optimal assignment."""
        t0 = time.monotonic()
        deadline = t0 + config.time_limit_s
        active = self.active_flags(None)
        total_nodes = 0
        incumbent_vals: Optional[list[int]] = None
        incumbent_vec: Optional[tuple[int, ...]] = None
        caps: list[int] = []

        def stats() -> SolveStats:
            return SolveStats(total_nodes, (time.monotonic() - t0) * 1000.0)

        def timeout_outcome() -> SolveOutcome:
            if incumbent_vals is None:
                return SolveOutcome(Status.UNKNOWN_TIMEOUT, None, None, stats())
            return SolveOutcome(
                Status.FEASIBLE_TIMEOUT,
                _as_assignment(incumbent_vals),
                ObjectiveVector(incumbent_vec),
                stats(),
            )

        for level in range(1, self.levels + 1):
            s = _Search(self, active, deadline)
            s.caps = caps
            s.opt_level = level
            if incumbent_vec is not None:
                s.best_val = incumbent_vec[level - 1]
            s.run()
            total_nodes += s.nodes
            if s.best_assignment is not None:
                incumbent_vals = s.best_assignment
                incumbent_vec = s.best_vector
            if s.timed_out:
                return timeout_outcome()
            if incumbent_vals is None:
                return SolveOutcome(Status.UNSAT, None, None, stats())
            caps.append(s.best_val)

        # Final dive: first solution meeting all caps is the lex-smallest optimum.
        s = _Search(self, active, deadline)
        s.caps = caps
        s.stop_first = True
        s.run()
        total_nodes += s.nodes
        if s.timed_out:
            return timeout_outcome()
        if s.best_assignment is None:
            return SolveOutcome(Status.UNSAT, None, None, stats())
        return SolveOutcome(
            Status.OPTIMAL,
            _as_assignment(s.best_assignment),
            ObjectiveVector(s.best_vector),
            stats(),
        )

    def solve_decision(
        self,
        enabled: Iterable[Name],
        config: SolveConfig = SolveConfig(),
    ) -> DecisionOutcome:
        """Pure feasibility under an activation set; soft constraints ignored."""
        enabled = set(enabled)
        for lbl in enabled:
            if lbl not in self.model.removable:
                raise NotRemovableError(f"label {lbl} is not removable")
        t0 = time.monotonic()
        s = _Search(self, self.active_flags(enabled), t0 + config.time_limit_s)
        s.stop_first = True
        s.run()
        stats = SolveStats(s.nodes, (time.monotonic() - t0) * 1000.0)
        if s.timed_out:
            return DecisionOutcome(Status.UNKNOWN_TIMEOUT, None, stats)
        if s.best_assignment is None:
            return DecisionOutcome(Status.UNSAT, None, stats)
        return DecisionOutcome(Status.SAT, _as_assignment(s.best_assignment), stats)


class _Search:
    """One DFS run over a compiled model with a fixed activation set."""

    def __init__(self, eng: Engine, active: list[bool], deadline: float):
        self.eng = eng
        self.active = active
        self.deadline = deadline
        self.n = eng.n
        self.dom = [cv.full for cv in eng.cvars]
        self.vals = [0] * self.n
        self.cstate = [0] * eng.state_size
        self.trail: list[tuple[int, int, int]] = []  # (tag, index, old)
        self.nodes = 0
        # run parameters
        self.caps: list[int] = []
        self.opt_level = 0  # 0 = pure decision
        self.best_val: Optional[int] = None
        self.best_assignment: Optional[list[int]] = None
        self.best_vector: Optional[tuple[int, ...]] = None
        self.stop_first = False
        self.stopped = False
        self.timed_out = False

    # -- domain/state edits with trail --------------------------------------

    def prune(self, var: int, mask: int) -> bool:
        """Remove `mask` values from var's domain; False on wipeout."""
        old = self.dom[var]
        new = old & ~mask
        if new == old:
            return True
        self.trail.append((0, var, old))
        self.dom[var] = new
        return new != 0

    def keep(self, var: int, mask: int) -> bool:
        """Intersect var's domain with `mask`; False on wipeout."""
        old = self.dom[var]
        new = old & mask
        if new == old:
            return True
        self.trail.append((0, var, old))
        self.dom[var] = new
        return new != 0

    def set_state(self, idx: int, value: int) -> None:
        self.trail.append((1, idx, self.cstate[idx]))
        self.cstate[idx] = value

    def undo_to(self, mark: int) -> None:
        trail = self.trail
        dom = self.dom
        cstate = self.cstate
        while len(trail) > mark:
            tag, idx, old = trail.pop()
            if tag == 0:
                dom[idx] = old
            else:
                cstate[idx] = old

    # -- propagation ---------------------------------------------------------

    def root_propagate(self) -> bool:
        ccs = self.eng.ccs
        for cid in self.eng.hard_cc_ids:
            if self.active[cid] and not ccs[cid].root(self):
                return False
        return True

    def assign(self, var: int, vidx: int) -> bool:
        old = self.dom[var]
        bit = 1 << vidx
        if old != bit:
            self.trail.append((0, var, old))
            self.dom[var] = bit
        self.vals[var] = self.eng.cvars[var].values[vidx]
        ccs = self.eng.ccs
        active = self.active
        for cid, tag in self.eng.triggers[var].get(vidx, ()):
            if active[cid] and not ccs[cid].fire(self, tag, var, var):
                return False
        for cid, tag in self.eng.always[var]:
            if active[cid] and not ccs[cid].fire(self, tag, var, var):
                return False
        return True

    # -- objective bounds ----------------------------------------------------

    def level_lb(self, level: int) -> int:
        """Certain cost at `level` given current domains (sound lower bound)."""
        lb = 0
        dom = self.dom
        for var, mask, w in self.eng.soft_members[level - 1]:
            if dom[var] & mask == 0:
                lb += w
        for cid, w, _c in self.eng.soft_generic[level - 1]:
            if self.eng.ccs[cid].tristate(self) == -1:
                lb += w
        return lb

    def bounds_ok(self) -> bool:
        for lvl, cap in enumerate(self.caps, start=1):
            if self.level_lb(lvl) > cap:
                return False
        if self.opt_level and self.best_val is not None:
            if self.level_lb(self.opt_level) >= self.best_val:
                return False
        return True

    def leaf_costs(self) -> list[int]:
        costs = [0] * self.eng.levels
        dom = self.dom
        vals = self.vals
        for lvl in range(self.eng.levels):
            total = 0
            for var, mask, w in self.eng.soft_members[lvl]:
                if dom[var] & mask == 0:
                    total += w
            for _cid, w, c in self.eng.soft_generic[lvl]:
                if not constraint_satisfied(c, vals):
                    total += w
            costs[lvl] = total
        return costs

    # -- search --------------------------------------------------------------

    def run(self) -> None:
        if self.n * 4 + 200 > sys.getrecursionlimit():
            sys.setrecursionlimit(self.n * 4 + 400)
        try:
            if self.root_propagate() and self.bounds_ok():
                self._rec(0)
        except _Timeout:
            self.timed_out = True

    def _rec(self, i: int) -> None:
        if i == self.n:
            self._leaf()
            return
        m = self.dom[i]
        while m:
            lsb = m & -m
            m ^= lsb
            vidx = lsb.bit_length() - 1
            self.nodes += 1
            if (self.nodes & 63) == 0 and time.monotonic() > self.deadline:
                raise _Timeout()
            mark = len(self.trail)
            if self.assign(i, vidx) and self.bounds_ok():
                self._rec(i + 1)
            self.undo_to(mark)
            if self.stopped:
                return

    def _leaf(self) -> None:
        # complete-assignment validation for EXACTLY_ONE (count must reach 1)
        for cid in self.eng.exactly_ids:
            if self.active[cid] and self.cstate[self.eng.ccs[cid].slot] != 1:
                return
        costs = self.leaf_costs()
        for lvl, cap in enumerate(self.caps, start=1):
            if costs[lvl - 1] > cap:
                return
        if self.opt_level:
            c = costs[self.opt_level - 1]
            if self.best_val is not None and c >= self.best_val:
                return
            self.best_val = c
        self.best_assignment = self.vals[:]
        self.best_vector = tuple(costs)
        if self.stop_first:
            self.stopped = True


def _as_assignment(vals: Sequence[int]) -> dict[int, int]:
    return {i: v for i, v in enumerate(vals)}


def solve(model: ConstraintModel, config: SolveConfig = SolveConfig()) -> SolveOutcome:
    return Engine(model).solve(config)


def solve_decision(
    model: ConstraintModel,
    enabled: Iterable[Name],
    config: SolveConfig = SolveConfig(),
) -> DecisionOutcome:
    return Engine(model).solve_decision(enabled, config)


# -- exhaustive oracle --------------------------------------------------------

_CHUNK = 1 << 14


def _np_satisfied(c: Constraint, cols: list[np.ndarray], nrows: int) -> np.ndarray:
    kind = c.kind
    if kind in (Kind.EXACTLY_ONE, Kind.AT_MOST_ONE):
        vals = sorted(c.params.values)
        acc = np.zeros(nrows, dtype=np.int64)
        for v in c.scope:
            acc += np.isin(cols[v], vals)
        return acc == 1 if kind is Kind.EXACTLY_ONE else acc <= 1
    if kind is Kind.LINEAR_LEQ:
        acc = np.zeros(nrows, dtype=np.int64)
        for co, v in zip(c.params.coeffs, c.scope):
            acc += co * cols[v]
        return acc <= c.params.bound
    if kind is Kind.ORDERING:
        x, y = c.scope
        return cols[x] + c.params.offset <= cols[y]
    if kind is Kind.AT_MOST_K_COUNT:
        p = c.params
        acc = np.zeros(nrows, dtype=np.int64)
        for w, s, v in zip(p.weights, p.member_sets, c.scope):
            acc += w * np.isin(cols[v], sorted(s))
        ok = acc <= p.k
        if p.guard is not None:
            gvar, gvals = p.guard
            ok = ok | ~np.isin(cols[gvar], sorted(gvals))
        return ok
    if kind is Kind.IMPLICATION:
        p = c.params
        if len(c.scope) == 1:
            return np.isin(cols[c.scope[0]], sorted(p.then_values))
        x, y = c.scope
        return ~np.isin(cols[x], sorted(p.if_values)) | np.isin(
            cols[y], sorted(p.then_values)
        )
    if kind is Kind.FORBID:
        hit = np.ones(nrows, dtype=bool)
        for v, t in zip(c.scope, c.params.values):
            hit &= cols[v] == t
        return ~hit
    raise InvalidModelError(f"unknown kind {kind}")


def brute_force(model: ConstraintModel) -> SolveOutcome:
    """Exhaustive enumeration oracle, vectorized; guard: space <= 10^6.

    Returns the same status, objective vector and (lexicographically smallest
    optimal) assignment contract as `solve`, by a mechanism that shares none
    of the solver's propagation machinery.
    """
    t0 = time.monotonic()
    defects = validate_model(model)
    if defects:
        raise InvalidModelError(
            "; ".join(f"{d.code}: {d.detail}" for d in defects[:5])
        )
    space = model.search_space()
    if space > BRUTE_FORCE_SPACE_LIMIT:
        raise SpaceTooLargeError(f"search space {space} exceeds {BRUTE_FORCE_SPACE_LIMIT}")
    n = len(model.vars)
    radices = [len(v.domain) for v in model.vars]
    strides = [1] * n
    for i in range(n - 2, -1, -1):
        strides[i] = strides[i + 1] * radices[i + 1]
    domains = [np.array(v.domain, dtype=np.int64) for v in model.vars]
    levels = model.max_level
    best_vec: Optional[tuple[int, ...]] = None
    best_assign: Optional[tuple[int, ...]] = None
    for start in range(0, space, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, space), dtype=np.int64)
        nrows = len(idx)
        cols = [domains[i][(idx // strides[i]) % radices[i]] for i in range(n)]
        feasible = np.ones(nrows, dtype=bool)
        for c in model.hard:
            feasible &= _np_satisfied(c, cols, nrows)
            if not feasible.any():
                break
        if not feasible.any():
            continue
        costs = [np.zeros(nrows, dtype=np.int64) for _ in range(levels)]
        for sc in model.soft:
            viol = ~_np_satisfied(sc.violation, cols, nrows)
            costs[sc.level - 1] += sc.weight * viol
        f_idx = np.nonzero(feasible)[0]
        if levels:
            keys = tuple(costs[lvl][f_idx] for lvl in range(levels - 1, -1, -1))
            pick = f_idx[np.lexsort(keys)[0]]  # stable: ties keep ascending order
        else:
            pick = f_idx[0]
        vec = tuple(int(costs[lvl][pick]) for lvl in range(levels))
        if best_vec is None or vec < best_vec:
            best_vec = vec
            best_assign = tuple(int(cols[i][pick]) for i in range(n))
    stats = SolveStats(space, (time.monotonic() - t0) * 1000.0)
    if best_vec is None:
        return SolveOutcome(Status.UNSAT, None, None, stats)
    return SolveOutcome(
        Status.OPTIMAL,
        {i: v for i, v in enumerate(best_assign)},
        ObjectiveVector(best_vec),
        stats,
    )
