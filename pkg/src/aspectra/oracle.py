"""Brute-force interaction classifier that weaves aspect pairs both ways.

Two woven models are equal when their flattened graphs are isomorphic.
The classifier needs a base model, which is exactly what the critical
pair analysis avoids; it exists to cross-check that analysis.
"""
from __future__ import annotations

from dataclasses import dataclass

from .graph import Graph, is_isomorphic
from .rules import weave
from .statechart import StateMachine, flatten

CLASSIFICATIONS = (
    "independent",
    "a1_depends_on_a2",
    "a2_depends_on_a1",
    "a1_disables_a2",
    "a2_disables_a1",
    "divergent_unclassified",
)

_MIRROR = {
    "independent": "independent",
    "a1_depends_on_a2": "a2_depends_on_a1",
    "a2_depends_on_a1": "a1_depends_on_a2",
    "a1_disables_a2": "a2_disables_a1",
    "a2_disables_a1": "a1_disables_a2",
    "divergent_unclassified": "divergent_unclassified",
}


def mirror(classification: str) -> str:
    """The classification of the same pair with the aspects swapped."""
    return _MIRROR[classification]


@dataclass(frozen=True)
class WeaveOutcome:
    m1: Graph
    m2: Graph
    m12: Graph
    m21: Graph


@dataclass(frozen=True)
class OracleVerdict:
    first: str
    second: str
    classification: str
    evidence: dict  # which of the isomorphism tests held

    def to_dict(self):
        return {
            "first": self.first,
            "second": self.second,
            "classification": self.classification,
            "evidence": dict(self.evidence),
        }


@dataclass(frozen=True)
class Discrepancy:
    aspect_a: str
    aspect_b: str
    oracle: str
    cpa_summary: str

    def to_dict(self):
        return {"aspect_a": self.aspect_a, "aspect_b": self.aspect_b,
                "oracle": self.oracle, "cpa_summary": self.cpa_summary}


def base_graph(base) -> Graph:
    return base if isinstance(base, Graph) else flatten(base)


def weave_aspect(base, aspect, log=None) -> Graph:
    """Flatten ``base`` (unless already a graph) and weave ``aspect`` into it."""
    return weave(aspect.rules, base_graph(base), log)


def outcome(base, a1, a2) -> WeaveOutcome:
    g = base_graph(base)
    m1 = weave(a1.rules, g)
    m2 = weave(a2.rules, g)
    return WeaveOutcome(m1, m2, weave(a2.rules, m1), weave(a1.rules, m2))


def _same(g, h) -> bool:
    return is_isomorphic(g, h) is not None


def classify_outcome(w: WeaveOutcome) -> tuple[str, dict]:
    evidence = {
        "m12_iso_m21": _same(w.m12, w.m21),
        "m12_iso_m2": _same(w.m12, w.m2),
        "m21_iso_m1": _same(w.m21, w.m1),
        "m12_iso_m1": _same(w.m12, w.m1),
        "m21_iso_m2": _same(w.m21, w.m2),
    }
    order = (
        ("m12_iso_m21", "independent"),
        ("m12_iso_m2", "a1_depends_on_a2"),
        ("m21_iso_m1", "a2_depends_on_a1"),
        ("m12_iso_m1", "a1_disables_a2"),
        ("m21_iso_m2", "a2_disables_a1"),
    )
    for test, label in order:
        if evidence[test]:
            return label, evidence
    return "divergent_unclassified", evidence


def classify_pair(base, a1, a2) -> OracleVerdict:
    label, evidence = classify_outcome(outcome(base, a1, a2))
    return OracleVerdict(a1.name, a2.name, label, evidence)


def _cpa_summary(matrix, a, b) -> str:
    parts = []
    for x, y in ((a, b), (b, a)):
        c = matrix.cell(x, y)
        parts.append(f"{x}->{y}: {len(c.conflicts)} conflicts, {len(c.dependencies)} dependencies"
                     + (", undecided" if c.undecided else ""))
    return "; ".join(parts)


def cross_check(base, compiled, matrix) -> list[Discrepancy]:
    """Pairs the matrix calls non-interacting but the oracle does not.

    Only that direction is checked: the analysis reports potential
    interactions, which the base model may never trigger.
    """
    names = [c.name for c in compiled]
    if set(names) != set(matrix.aspects):
        raise ValueError("the matrix was not built from these aspects")
    g = base_graph(base)
    out = []
    for i, a in enumerate(compiled):
        for b in compiled[i + 1:]:
            if not (matrix.cell(a.name, b.name).empty and matrix.cell(b.name, a.name).empty):
                continue
            v = classify_pair(g, a, b)
            if v.classification != "independent":
                out.append(Discrepancy(a.name, b.name, v.classification, _cpa_summary(matrix, a.name, b.name)))
    return out


def load_base(doc) -> StateMachine | Graph:
    """A base model document: a state machine, or an already flat graph."""
    if isinstance(doc, dict) and "vertices" in doc:
        return Graph.from_dict(doc)
    return StateMachine.from_dict(doc)
