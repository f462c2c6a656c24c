"""Critical pair analysis for rules that create and delete graph elements.

Four kinds of interaction are detected between an ordered rule pair
``(p1, p2)``, each on a minimal gluing of two of the rules' graphs:

=========================  ==========  ==========================================
kind                       gluing      p1 ...
=========================  ==========  ==========================================
conflict_delete_use        L1 + L2     deletes something p2 needs
conflict_produce_forbid    R1 + N2     creates something a NAC of p2 forbids
dependency_produce_use     R1 + L2     creates something p2 needs
dependency_delete_forbid   L1 + N2     deletes something a NAC of p2 forbids
=========================  ==========  ==========================================
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .errors import OverlapCapExceeded
from .graph import Edge, Graph, Morphism, Vertex, canonical_form, enumerate_overlaps
from .rules import Rule, applicable, rewrite

CONFLICT_KINDS = ("conflict_delete_use", "conflict_produce_forbid")
DEPENDENCY_KINDS = ("dependency_produce_use", "dependency_delete_forbid")
KINDS = CONFLICT_KINDS + DEPENDENCY_KINDS

DEFAULT_CAP = 100_000


@dataclass(frozen=True, eq=False)
class CriticalPair:
    first: str
    second: str
    kind: str
    overlap: Graph
    witness: frozenset
    embeddings: tuple
    roles: tuple

    def key(self) -> bytes:
        """Canonical form of the overlap annotated with witness and embeddings."""
        marks = {}
        for side, (m, role) in enumerate(zip(self.embeddings, self.roles), 1):
            for src, img in list(m.vmap.items()) + list(m.emap.items()):
                marks.setdefault(img, []).append(f"{side}:{role}:{src}")
        def note(i):
            return ",".join(sorted(marks.get(i, []))) + ("!" if i in self.witness else "")
        g = self.overlap
        annotated = Graph(
            [Vertex(v.id, v.kind, v.attrs + (("\x00mark", note(v.id)),)) for v in g.vertices.values()],
            [Edge(e.id, e.src, e.tgt, f"{e.label}\x00{note(e.id)}") for e in g.edges.values()],
        )
        return f"{self.first}\x00{self.second}\x00{self.kind}\x00".encode() + canonical_form(annotated)

    def to_dict(self) -> dict:
        return {
            "first": self.first,
            "second": self.second,
            "kind": self.kind,
            "overlap": self.overlap.to_dict(),
            "witness": sorted(self.witness),
            "embeddings": [
                {"role": r, "vmap": dict(sorted(m.vmap.items())), "emap": dict(sorted(m.emap.items()))}
                for m, r in zip(self.embeddings, self.roles)
            ],
        }

    @classmethod
    def from_dict(cls, doc) -> "CriticalPair":
        overlap = Graph.from_dict(doc["overlap"], "overlap")
        embeddings, roles = [], []
        for item in doc["embeddings"]:
            vmap, emap = dict(item["vmap"]), dict(item["emap"])
            # the source graph is the preimage of the embedding, recoverable exactly
            source = Graph(
                [Vertex(a, overlap.vertex(b).kind, overlap.vertex(b).attrs) for a, b in vmap.items()],
                [_preimage_edge(overlap, a, b, vmap) for a, b in emap.items()],
            )
            embeddings.append(Morphism(source, overlap, vmap, emap))
            roles.append(item["role"])
        return cls(
            doc["first"], doc["second"], doc["kind"], overlap,
            frozenset(doc["witness"]), tuple(embeddings), tuple(roles),
        )


def _preimage_edge(overlap, a, b, vmap):
    inv = {v: k for k, v in vmap.items()}
    e = overlap.edge(b)
    return Edge(a, inv[e.src], inv[e.tgt], e.label)


@dataclass
class PairVerdict:
    first: str
    second: str
    conflicts: list = field(default_factory=list)
    dependencies: list = field(default_factory=list)
    undecided: bool = False

    @property
    def interacts(self):
        return bool(self.conflicts or self.dependencies)


def role_graph(rule: Rule, role: str) -> Graph:
    if role == "lhs":
        return rule.lhs
    if role == "rhs":
        return rule.rhs
    if role.startswith("nac:"):
        return rule.nacs[int(role[4:])]
    raise ValueError(f"unknown rule role {role!r}")


def _images(m: Morphism, ids) -> set:
    out = set()
    for x in ids:
        if x in m.vmap:
            out.add(m.vmap[x])
        elif x in m.emap:
            out.add(m.emap[x])
    return out


def _undo(p1: Rule, h: Graph, comatch: Morphism):
    """Reverse ``p1`` on ``h`` given ``rhs -> h``.

    Returns ``(G, vmap, emap)`` with the lhs embedding into ``G``, or ``None``
    if a created vertex cannot be removed without leaving dangling edges.
    """
    d = p1.delta
    created = _images(comatch, d.created)
    for x in d.created:
        if x in comatch.vmap and not h.incident(comatch.vmap[x]) <= created:
            return None
    vmap = {x: comatch.vmap[x] for x in p1.lhs.vertices if x in comatch.vmap}
    emap = {x: comatch.emap[x] for x in p1.lhs.edges if x in comatch.emap}
    taken = set(h.element_ids())
    add_v, add_e = [], []
    for x, v in p1.lhs.vertices.items():
        if x in d.deleted:
            nid = _fresh(f"0:{x}", taken)
            vmap[x] = nid
            add_v.append(Vertex(nid, v.kind, v.attrs))
    for x, e in p1.lhs.edges.items():
        if x in d.deleted:
            nid = _fresh(f"0:{x}", taken)
            emap[x] = nid
            add_e.append(Edge(nid, vmap[e.src], vmap[e.tgt], e.label))
    return h.edit(created, add_v, add_e), vmap, emap


def _fresh(base, taken):
    n, cand = 0, base
    while cand in taken:
        n += 1
        cand = f"{base}#{n}"
    taken.add(cand)
    return cand


def _restrict(m: Morphism, g: Graph):
    return (
        {x: m.vmap[x] for x in g.vertices},
        {x: m.emap[x] for x in g.edges},
    )


def _witness(kind, p1: Rule, p2: Rule, role2: str, ov: Graph, a: Morphism, b: Morphism):
    """Witness set if ``(ov, a, b)`` realises ``kind``, else ``None``."""
    d1 = p1.delta
    if kind == "conflict_delete_use":
        w = _images(a, d1.deleted) & b.image()
        if w and applicable(p1, ov, a.vmap, a.emap) and applicable(p2, ov, b.vmap, b.emap):
            return w
        return None
    if kind == "dependency_produce_use":
        w = _images(a, d1.created) & b.image()
        if not w:
            return None
        pre = _undo(p1, ov, a)
        if pre is None:
            return None
        g, vm, em = pre
        if applicable(p1, g, vm, em) and applicable(p2, ov, b.vmap, b.emap):
            return w
        return None
    nac_only = p2.nac_only(int(role2[4:]))
    if kind == "conflict_produce_forbid":
        created = _images(a, d1.created)
        w = created & _images(b, nac_only)
        if not w or _images(b, p2.lhs.element_ids()) & created:
            return None
        pre = _undo(p1, ov, a)
        if pre is None:
            return None
        g, vm, em = pre
        vm2, em2 = _restrict(b, p2.lhs)
        if applicable(p1, g, vm, em) and applicable(p2, g, vm2, em2):
            return w
        return None
    if kind == "dependency_delete_forbid":
        deleted = _images(a, d1.deleted)
        w = deleted & _images(b, nac_only)
        if not w or _images(b, p2.lhs.element_ids()) & deleted:
            return None
        if not applicable(p1, ov, a.vmap, a.emap):
            return None
        h, _ = rewrite(p1, ov, a.vmap, a.emap)
        vm2, em2 = _restrict(b, p2.lhs)
        if applicable(p2, h, vm2, em2):
            return w
        return None
    raise ValueError(f"unknown critical pair kind {kind!r}")


_PLAN = {
    "conflict_delete_use": ("lhs", "lhs"),
    "conflict_produce_forbid": ("rhs", "nac"),
    "dependency_produce_use": ("rhs", "lhs"),
    "dependency_delete_forbid": ("lhs", "nac"),
}


def _pairs_of_kind(kind, p1: Rule, p2: Rule, cap) -> list[CriticalPair]:
    role1, role2 = _PLAN[kind]
    roles2 = [f"nac:{i}" for i in range(len(p2.nacs))] if role2 == "nac" else [role2]
    d1 = p1.delta
    # without anything to delete/create in p1 no gluing can carry a witness
    if kind in ("conflict_delete_use", "dependency_delete_forbid") and not d1.deleted:
        return []
    if kind in ("conflict_produce_forbid", "dependency_produce_use") and not d1.created:
        return []
    found = []
    for r2 in roles2:
        g1, g2 = role_graph(p1, role1), role_graph(p2, r2)
        for ov, a, b in enumerate_overlaps(g1, g2, cap):
            w = _witness(kind, p1, p2, r2, ov, a, b)
            if w:
                found.append(CriticalPair(p1.name, p2.name, kind, ov, frozenset(w), (a, b), (role1, r2)))
    return found


def _dedupe(pairs):
    out, seen = [], set()
    for cp in pairs:
        k = cp.key()
        if k not in seen:
            seen.add(k)
            out.append(cp)
    return out


def conflicts(p1: Rule, p2: Rule, cap: int = DEFAULT_CAP) -> list[CriticalPair]:
    """Minimal situations in which applying ``p1`` disables ``p2``."""
    return _dedupe(
        _pairs_of_kind("conflict_delete_use", p1, p2, cap)
        + _pairs_of_kind("conflict_produce_forbid", p1, p2, cap)
    )


def dependencies(p1: Rule, p2: Rule, cap: int = DEFAULT_CAP) -> list[CriticalPair]:
    """Minimal situations in which applying ``p1`` enables ``p2``."""
    return _dedupe(
        _pairs_of_kind("dependency_produce_use", p1, p2, cap)
        + _pairs_of_kind("dependency_delete_forbid", p1, p2, cap)
    )


def check_pair(cp: CriticalPair, p1: Rule, p2: Rule) -> bool:
    """Re-verify a stored critical pair against its two rules."""
    if (cp.first, cp.second) != (p1.name, p2.name) or cp.kind not in KINDS or not cp.witness:
        return False
    role1, role2 = cp.roles
    a, b = cp.embeddings
    a = Morphism(role_graph(p1, role1), cp.overlap, a.vmap, a.emap)
    b = Morphism(role_graph(p2, role2), cp.overlap, b.vmap, b.emap)
    if not a.is_valid() or not b.is_valid():
        return False
    if a.image() | b.image() != cp.overlap.element_ids():
        return False
    return _witness(cp.kind, p1, p2, role2, cp.overlap, a, b) == set(cp.witness)


def analyze_pair(p1: Rule, p2: Rule, cap: int = DEFAULT_CAP) -> PairVerdict:
    try:
        return PairVerdict(p1.name, p2.name, conflicts(p1, p2, cap), dependencies(p1, p2, cap))
    except OverlapCapExceeded:
        return PairVerdict(p1.name, p2.name, undecided=True)


_WORKER_RULES: dict = {}


def _init_worker(rules):
    _WORKER_RULES.clear()
    _WORKER_RULES.update({r.name: r for r in rules})


def _run_chunk(args):
    chunk, cap = args
    return [analyze_pair(_WORKER_RULES[a], _WORKER_RULES[b], cap) for a, b in chunk]


def analyze_rules(rules, cap: int = DEFAULT_CAP, pairs=None, jobs: int = 1,
                  stats: dict | None = None) -> dict:
    """Verdicts for ordered rule pairs, keyed by ``(first, second)`` names.

    ``pairs`` restricts the analysis to the given name pairs; by default
    every ordered pair of distinct rules is analysed.  A pair whose overlap
    enumeration hits ``cap`` is returned as undecided instead of aborting.
    ``stats["rule_pairs"]`` counts the pair analyses performed.
    """
    by_name = {}
    for r in rules:
        if r.name in by_name:
            raise ValueError(f"duplicate rule name {r.name!r}")
        by_name[r.name] = r
    if pairs is None:
        names = [r.name for r in rules]
        pairs = [(a, b) for a in names for b in names if a != b]
    else:
        pairs = list(pairs)
    jobs = max(1, jobs or os.cpu_count() or 1)
    if jobs == 1 or len(pairs) < 2:
        results = [analyze_pair(by_name[a], by_name[b], cap) for a, b in pairs]
    else:
        size = max(1, len(pairs) // (jobs * 4))
        chunks = [(pairs[i:i + size], cap) for i in range(0, len(pairs), size)]
        with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(list(rules),)) as pool:
            results = [v for part in pool.map(_run_chunk, chunks) for v in part]
    if stats is not None:
        stats["rule_pairs"] = stats.get("rule_pairs", 0) + len(results)
    return {(v.first, v.second): v for v in results}


def verdicts_to_list(verdicts) -> list[dict]:
    """Flat export: one record per critical pair."""
    out = []
    for key in verdicts:
        v = verdicts[key]
        for cp in v.conflicts + v.dependencies:
            d = cp.to_dict()
            out.append({k: d[k] for k in ("first", "second", "kind", "overlap", "witness")})
    return out
