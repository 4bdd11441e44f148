"""pstest: P Algebra terms, closed-system semantics, observers and equivalence checks."""
from .terms import (
    EMPTY,
    OMEGA,
    Condition,
    EvolutionRule,
    MembraneContent,
    MembraneNode,
    Multiset,
    ObserverTemplate,
    RuleSchema,
    expand_rule_schemas,
    relabel_membranes,
    validate_observer,
    validate_system,
)
from .semantics import SemanticsMode, enabled_selections, system_steps
from .explorer import Bounds, DEFAULT_BOUNDS, Lts, explore, state_key, traces_bounded
from .testing import Result, RunningTest, Verdict, compose_running_test, may_check, must_check, success_states
from .equivalence import bisim_bounded, suite_compare, trace_equiv_bounded
from .dsl import DslError, SourceSpec, load_spec, parse_spec, serialize_spec

__version__ = "0.1.0"
