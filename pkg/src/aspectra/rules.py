"""Graph-transformation rules with negative application conditions.

Rule application follows the double-pushout discipline: a match whose
deletion would leave dangling host edges is rejected, never repaired.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

from .errors import FormatError, InvalidMatch, RuleError
from .graph import Edge, Graph, Morphism, Vertex, _dot_body, dot_quote, find_monomorphisms, has_extension


@dataclass(frozen=True)
class RuleDelta:
    deleted: frozenset
    created: frozenset
    preserved: frozenset


@dataclass(frozen=True, eq=False)
class Rule:
    """Production ``lhs -> rhs``; shared ids form the preserved interface.

    Each NAC is a supergraph of ``lhs`` (same ids); its extra elements must
    not be present around a match for the rule to apply.
    """

    name: str
    lhs: Graph
    rhs: Graph
    nacs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "nacs", tuple(self.nacs))
        if not self.name:
            raise RuleError("rule name must be nonempty")
        for vid in set(self.lhs.vertices) & set(self.rhs.vertices):
            if self.lhs.vertex(vid) != self.rhs.vertex(vid):
                raise RuleError(f"{self.name}: preserved vertex {vid!r} differs between lhs and rhs")
        for eid in set(self.lhs.edges) & set(self.rhs.edges):
            if self.lhs.edge(eid) != self.rhs.edge(eid):
                raise RuleError(f"{self.name}: preserved edge {eid!r} differs between lhs and rhs")
        if set(self.lhs.vertices) & set(self.rhs.edges) or set(self.lhs.edges) & set(self.rhs.vertices):
            raise RuleError(f"{self.name}: an id names a vertex on one side and an edge on the other")
        for i, nac in enumerate(self.nacs):
            for vid, x in self.lhs.vertices.items():
                if nac.vertices.get(vid) != x:
                    raise RuleError(f"{self.name}: NAC {i} does not contain lhs vertex {vid!r}")
            for eid, x in self.lhs.edges.items():
                if nac.edges.get(eid) != x:
                    raise RuleError(f"{self.name}: NAC {i} does not contain lhs edge {eid!r}")

    @cached_property
    def delta(self) -> RuleDelta:
        return delta(self)

    def nac_only(self, i) -> frozenset:
        return self.nacs[i].element_ids() - self.lhs.element_ids()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "nacs": [n.to_dict() for n in self.nacs],
        }

    @classmethod
    def from_dict(cls, doc, where="rule") -> "Rule":
        if not isinstance(doc, Mapping) or "name" not in doc:
            raise FormatError("expected a rule object with a 'name'", where)
        try:
            return cls(
                str(doc["name"]),
                Graph.from_dict(doc.get("lhs", {}), f"{where}.lhs"),
                Graph.from_dict(doc.get("rhs", {}), f"{where}.rhs"),
                tuple(Graph.from_dict(n, f"{where}.nacs[{i}]") for i, n in enumerate(doc.get("nacs", []))),
            )
        except RuleError as exc:
            raise FormatError(str(exc), where) from None

    def to_dot(self) -> str:
        return rule_to_dot(self)


@dataclass(frozen=True, eq=False)
class Match:
    rule: Rule
    embedding: Morphism


def delta(rule: Rule) -> RuleDelta:
    left, right = rule.lhs.element_ids(), rule.rhs.element_ids()
    return RuleDelta(frozenset(left - right), frozenset(right - left), frozenset(left & right))


def _nacs_hold(rule, host, vmap, emap) -> bool:
    return not any(has_extension(nac, host, vmap, emap) for nac in rule.nacs)


def _dangling_ok(rule, host, vmap, emap) -> bool:
    doomed_edges = {emap[e] for e in rule.delta.deleted if e in rule.lhs.edges}
    for v in rule.delta.deleted:
        if v in rule.lhs.vertices and not host.incident(vmap[v]) <= doomed_edges:
            return False
    return True


def applicable(rule: Rule, host: Graph, vmap, emap) -> bool:
    """NAC and dangling conditions for an embedding of ``rule.lhs``."""
    return _nacs_hold(rule, host, vmap, emap) and _dangling_ok(rule, host, vmap, emap)


def find_matches(rule: Rule, host: Graph) -> list[Match]:
    return [
        Match(rule, m)
        for m in find_monomorphisms(rule.lhs, host)
        if applicable(rule, host, m.vmap, m.emap)
    ]


def fresh_id(base, taken) -> str:
    if base not in taken:
        return base
    n = 1
    while f"{base}#{n}" in taken:
        n += 1
    return f"{base}#{n}"


def rewrite(rule: Rule, host: Graph, vmap, emap) -> tuple[Graph, Morphism]:
    """Apply ``rule`` at an already-validated embedding.

    Returns the result graph and the comatch ``rhs -> result``.
    """
    d = rule.delta
    removed = {vmap[x] for x in d.deleted if x in vmap} | {emap[x] for x in d.deleted if x in emap}
    taken = set(host.element_ids())
    cvmap = {x: vmap[x] for x in rule.rhs.vertices if x in vmap}
    cemap = {x: emap[x] for x in rule.rhs.edges if x in emap}
    new_vertices, new_edges = [], []
    for vid, x in rule.rhs.vertices.items():
        if vid in d.created:
            nid = fresh_id(vid, taken)
            taken.add(nid)
            cvmap[vid] = nid
            new_vertices.append(Vertex(nid, x.kind, x.attrs))
    for eid, x in rule.rhs.edges.items():
        if eid in d.created:
            nid = fresh_id(eid, taken)
            taken.add(nid)
            cemap[eid] = nid
            new_edges.append(Edge(nid, cvmap[x.src], cvmap[x.tgt], x.label))
    result = host.edit(removed, new_vertices, new_edges)
    return result, Morphism(rule.rhs, result, cvmap, cemap)


def apply(rule: Rule, host: Graph, match: Match) -> Graph:
    """Apply ``rule`` at ``match``; the host is left untouched."""
    m = match.embedding
    if m.source is not rule.lhs and m.source != rule.lhs:
        raise InvalidMatch(f"{rule.name}: match is not an embedding of this rule's lhs")
    probe = Morphism(rule.lhs, host, m.vmap, m.emap)
    problems = probe.problems()
    if problems:
        raise InvalidMatch(f"{rule.name}: {problems[0]}")
    if not _nacs_hold(rule, host, m.vmap, m.emap):
        raise InvalidMatch(f"{rule.name}: a negative application condition is violated")
    if not _dangling_ok(rule, host, m.vmap, m.emap):
        raise InvalidMatch(f"{rule.name}: deletion would leave dangling edges")
    return rewrite(rule, host, m.vmap, m.emap)[0]


@dataclass
class WeaveStep:
    rule: str
    image: tuple
    applied: bool
    reason: str = ""


def weave(rules, host: Graph, log: list | None = None) -> Graph:
    """Single-pass weaving.

    All matches of all rules are computed on the original ``host`` (rule
    order, then match order) and applied one after another.  A match that an
    earlier application invalidated is skipped and recorded in ``log``.
    """
    pending = [(rule, m) for rule in rules for m in find_matches(rule, host)]
    g = host
    for rule, match in pending:
        vm, em = match.embedding.vmap, match.embedding.emap
        step = WeaveStep(rule.name, match.embedding.key(), False)
        if not all(x in g.vertices for x in vm.values()) or not all(x in g.edges for x in em.values()):
            step.reason = "image deleted"
        elif not _nacs_hold(rule, g, vm, em):
            step.reason = "NAC violated"
        elif not _dangling_ok(rule, g, vm, em):
            step.reason = "dangling"
        else:
            g = rewrite(rule, g, vm, em)[0]
            step.applied = True
        if log is not None:
            log.append(step)
    return g


def rule_to_dot(rule: Rule) -> str:
    """lhs and rhs side by side; NAC-only elements dashed and marked X."""
    lines = [f"digraph {dot_quote(rule.name)} {{", "  rankdir=LR;"]
    for side, g in (("lhs", rule.lhs), ("rhs", rule.rhs)):
        lines.append(f"  subgraph {dot_quote('cluster_' + side)} {{")
        lines.append(f"  label={dot_quote(side.upper())};")
        lines.extend(_dot_body(g, prefix=f"{side}/"))
        if side == "lhs":
            for i, nac in enumerate(rule.nacs):
                extra = nac.subgraph(rule.nac_only(i) | rule.lhs.element_ids())
                for x in extra.vertices.values():
                    if x.id in rule.lhs.vertices:
                        continue
                    lines.append(
                        f"  {dot_quote(f'lhs/nac{i}/{x.id}')} [label={dot_quote('X ' + (x.name or x.id))},"
                        " style=dashed];"
                    )
                for x in extra.edges.values():
                    if x.id in rule.lhs.edges:
                        continue
                    src = f"lhs/{x.src}" if x.src in rule.lhs.vertices else f"lhs/nac{i}/{x.src}"
                    tgt = f"lhs/{x.tgt}" if x.tgt in rule.lhs.vertices else f"lhs/nac{i}/{x.tgt}"
                    lines.append(
                        f"  {dot_quote(src)} -> {dot_quote(tgt)} [label={dot_quote('X ' + x.label)},"
                        " style=dashed];"
                    )
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
