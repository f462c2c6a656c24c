"""Static interaction analysis for aspect-oriented state machine models.

Aspects are compiled into graph-transformation rules; critical pair
analysis over those rules reports which aspects may conflict with or
depend on one another, without weaving them into a base model.
"""
__version__ = "0.1.0"

from .aspects import Aspect, CompiledAspect, Concern, compile, compile_all, load_concerns
from .cpa import CriticalPair, PairVerdict, analyze_pair, analyze_rules, conflicts, dependencies
from .errors import AspectraError
from .graph import Edge, Graph, Morphism, Vertex, canonical_form, find_monomorphisms, is_isomorphic
from .rules import Rule, apply, find_matches, weave
from .statechart import StateMachine, flatten, validate

__all__ = [
    "Aspect", "AspectraError", "CompiledAspect", "Concern", "CriticalPair", "Edge", "Graph",
    "Morphism", "PairVerdict", "Rule", "StateMachine", "Vertex", "analyze_pair", "analyze_rules",
    "apply", "canonical_form", "compile", "compile_all", "conflicts", "dependencies",
    "find_matches", "find_monomorphisms", "flatten", "is_isomorphic", "load_concerns", "validate",
    "weave",
]
