"""pdeeplearn: STRIPS action-model acquisition from plan traces.

The pipeline enumerates every admissible candidate action model, mines
stable sequential action-pair rules from traces, prunes candidates with
action-pair constraints, screens sampled models with a planner, and picks
the model whose encoding lets an LSTM label next actions best.
"""

from .core import (
    ActionModel,
    ActionModelEntry,
    ActionSignature,
    DomainSchema,
    GroundAction,
    GroundAtom,
    LiftedPredicateRef,
    PlanTrace,
    PredicateSchema,
    State,
    apply,
    is_applicable,
    validate_trace,
)
from .pddl import ProblemSpec, parse_domain, parse_problem, parse_traces, serialize_model

__version__ = "0.1.0"

__all__ = [
    "ActionModel",
    "ActionModelEntry",
    "ActionSignature",
    "DomainSchema",
    "GroundAction",
    "GroundAtom",
    "LiftedPredicateRef",
    "PlanTrace",
    "PredicateSchema",
    "ProblemSpec",
    "State",
    "apply",
    "is_applicable",
    "parse_domain",
    "parse_problem",
    "parse_traces",
    "serialize_model",
    "validate_trace",
    "__version__",
]
