"""Healthcare scheduling suite: chemotherapy day ward, operating rooms with
special-care-unit beds, and pre-operative assessment clinic, solved exactly on
a shared finite-domain constraint core with an explainability layer."""

from .model import (
    ConstraintModel,
    Constraint,
    SoftConstraint,
    Kind,
    Name,
    ObjectiveVector,
    Var,
    check_assignment,
    constraint_satisfied,
    validate_model,
)
from .engine import (
    Engine,
    SolveConfig,
    SolveOutcome,
    DecisionOutcome,
    Status,
    brute_force,
    solve,
    solve_decision,
)

__version__ = "0.1.0"
