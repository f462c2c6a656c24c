"""Typed, attributed, directed multigraphs and the matching machinery on them.

Graphs are immutable.  Element ids are strings; vertex ids and edge ids
share one namespace per graph so that "element id" is unambiguous.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterator, Mapping

from .errors import FormatError, GraphError, OverlapCapExceeded

VERTEX_KINDS = ("state", "initial", "final", "config")
CONFIG_SEP = "|"

DOT_SHAPES = {"final": "doublecircle", "initial": "point", "config": "box", "state": "ellipse"}


@dataclass(frozen=True)
class Vertex:
    id: str
    kind: str = "state"
    attrs: tuple = ()

    def __post_init__(self):
        if self.kind not in VERTEX_KINDS:
            raise GraphError(f"vertex {self.id!r}: unknown kind {self.kind!r}")
        attrs = self.attrs.items() if isinstance(self.attrs, Mapping) else self.attrs
        object.__setattr__(self, "attrs", tuple(sorted((str(k), str(v)) for k, v in attrs)))
        if self.kind == "config" and CONFIG_SEP not in self.name:
            raise GraphError(f"config vertex {self.id!r} needs a {CONFIG_SEP!r}-joined name")

    def attr(self, key, default=None):
        for k, v in self.attrs:
            if k == key:
                return v
        return default

    @property
    def name(self) -> str:
        return self.attr("name", "")

    @property
    def signature(self):
        """What a matched vertex must agree on: kind plus every attribute."""
        return (self.kind, self.attrs)


@dataclass(frozen=True)
class Edge:
    id: str
    src: str
    tgt: str
    label: str = ""


class Graph:
    """A finite directed multigraph with typed, attributed vertices."""

    __slots__ = ("_v", "_e", "_out", "_in", "_cache")

    def __init__(self, vertices=(), edges=()):
        v: dict[str, Vertex] = {}
        for x in vertices:
            if x.id in v:
                raise GraphError(f"duplicate vertex id {x.id!r}")
            v[x.id] = x
        e: dict[str, Edge] = {}
        out: dict[str, list[str]] = {k: [] for k in v}
        inc: dict[str, list[str]] = {k: [] for k in v}
        for x in edges:
            if x.id in e or x.id in v:
                raise GraphError(f"duplicate element id {x.id!r}")
            if x.src not in v or x.tgt not in v:
                raise GraphError(f"edge {x.id!r} dangles ({x.src!r} -> {x.tgt!r})")
            e[x.id] = x
            out[x.src].append(x.id)
            inc[x.tgt].append(x.id)
        self._v = v
        self._e = e
        self._out = {k: tuple(ids) for k, ids in out.items()}
        self._in = {k: tuple(ids) for k, ids in inc.items()}
        self._cache = {}

    @property
    def vertices(self) -> Mapping[str, Vertex]:
        return MappingProxyType(self._v)

    @property
    def edges(self) -> Mapping[str, Edge]:
        return MappingProxyType(self._e)

    def vertex(self, vid) -> Vertex:
        return self._v[vid]

    def edge(self, eid) -> Edge:
        return self._e[eid]

    def out_edges(self, vid):
        return tuple(self._e[i] for i in self._out[vid])

    def in_edges(self, vid):
        return tuple(self._e[i] for i in self._in[vid])

    def incident(self, vid) -> set[str]:
        return set(self._out[vid]) | set(self._in[vid])

    def __contains__(self, element_id):
        return element_id in self._v or element_id in self._e

    def element_ids(self) -> frozenset:
        return frozenset(self._v) | frozenset(self._e)

    def is_empty(self):
        return not self._v

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self._v == other._v and self._e == other._e

    def __hash__(self):
        return hash((frozenset(self._v.values()), frozenset(self._e.values())))

    def __repr__(self):
        return f"Graph(|V|={len(self._v)}, |E|={len(self._e)})"

    def edit(self, remove=(), add_vertices=(), add_edges=()) -> "Graph":
        """Return a copy without the ``remove`` ids and with the additions."""
        remove = set(remove)
        return Graph(
            [x for k, x in self._v.items() if k not in remove] + list(add_vertices),
            [x for k, x in self._e.items() if k not in remove] + list(add_edges),
        )

    def subgraph(self, element_ids) -> "Graph":
        keep = set(element_ids)
        return Graph(
            [x for k, x in self._v.items() if k in keep],
            [x for k, x in self._e.items() if k in keep],
        )

    def find_by_name(self, name) -> list[Vertex]:
        return [x for x in self._v.values() if x.name == name]

    # indexes used by the matcher; safe to cache because graphs are immutable
    def _signature_index(self):
        idx = self._cache.get("sig")
        if idx is None:
            idx = {}
            for vid in sorted(self._v):
                idx.setdefault(self._v[vid].signature, []).append(vid)
            self._cache["sig"] = idx
        return idx

    def _edge_index(self):
        idx = self._cache.get("edges")
        if idx is None:
            idx = {}
            for eid in sorted(self._e):
                x = self._e[eid]
                idx.setdefault((x.src, x.tgt, x.label), []).append(eid)
            self._cache["edges"] = idx
        return idx

    def to_dict(self) -> dict:
        return {
            "vertices": [
                {"id": x.id, "kind": x.kind, "attrs": dict(x.attrs)} for x in self._v.values()
            ],
            "edges": [
                {"id": x.id, "src": x.src, "tgt": x.tgt, "label": x.label} for x in self._e.values()
            ],
        }

    @classmethod
    def from_dict(cls, doc, where="graph") -> "Graph":
        if not isinstance(doc, Mapping):
            raise FormatError("expected an object with 'vertices' and 'edges'", where)
        vertices, edges = [], []
        for i, item in enumerate(doc.get("vertices", [])):
            w = f"{where}.vertices[{i}]"
            try:
                vertices.append(Vertex(str(item["id"]), item.get("kind", "state"), item.get("attrs", {})))
            except KeyError as exc:
                raise FormatError(f"missing field {exc}", w) from None
            except (GraphError, AttributeError, TypeError) as exc:
                raise FormatError(str(exc), w) from None
        for i, item in enumerate(doc.get("edges", [])):
            w = f"{where}.edges[{i}]"
            try:
                edges.append(Edge(str(item["id"]), str(item["src"]), str(item["tgt"]), str(item.get("label", ""))))
            except KeyError as exc:
                raise FormatError(f"missing field {exc}", w) from None
            except (AttributeError, TypeError) as exc:
                raise FormatError(str(exc), w) from None
        try:
            return cls(vertices, edges)
        except GraphError as exc:
            raise FormatError(str(exc), where) from None

    def to_dot(self, name="G") -> str:
        lines = [f"digraph {dot_quote(name)} {{"]
        lines.extend(_dot_body(self, prefix=""))
        lines.append("}")
        return "\n".join(lines) + "\n"


def dot_quote(s) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _dot_body(g, prefix, style_of=None):
    style_of = style_of or (lambda _id: "")
    for x in g.vertices.values():
        label = x.name or x.id
        extra = style_of(x.id)
        lines = f"  {dot_quote(prefix + x.id)} [label={dot_quote(label)}, shape={DOT_SHAPES[x.kind]}{extra}];"
        yield lines
    for x in g.edges.values():
        extra = style_of(x.id)
        yield (
            f"  {dot_quote(prefix + x.src)} -> {dot_quote(prefix + x.tgt)}"
            f" [label={dot_quote(x.label)}{extra}];"
        )


@dataclass(frozen=True, eq=False)
class Morphism:
    """A structure-preserving injective map ``source -> target``."""

    source: Graph
    target: Graph
    vmap: Mapping[str, str]
    emap: Mapping[str, str]

    def __call__(self, element_id):
        if element_id in self.vmap:
            return self.vmap[element_id]
        return self.emap[element_id]

    def image(self) -> frozenset:
        return frozenset(self.vmap.values()) | frozenset(self.emap.values())

    def key(self):
        return (
            tuple(self.vmap[k] for k in sorted(self.source.vertices)),
            tuple(self.emap[k] for k in sorted(self.source.edges)),
        )

    def problems(self) -> list[str]:
        """Every way in which this map fails to be a monomorphism."""
        out = []
        s, t = self.source, self.target
        if set(self.vmap) != set(s.vertices):
            out.append("vertex map is not total")
        if set(self.emap) != set(s.edges):
            out.append("edge map is not total")
        if len(set(self.vmap.values())) != len(self.vmap):
            out.append("vertex map is not injective")
        if len(set(self.emap.values())) != len(self.emap):
            out.append("edge map is not injective")
        for a, b in self.vmap.items():
            if a not in s.vertices or b not in t.vertices:
                out.append(f"vertex {a!r} -> {b!r} is out of range")
            elif s.vertex(a).signature != t.vertex(b).signature:
                out.append(f"vertex {a!r} -> {b!r} changes kind or attributes")
        for a, b in self.emap.items():
            if a not in s.edges or b not in t.edges:
                out.append(f"edge {a!r} -> {b!r} is out of range")
                continue
            ea, eb = s.edge(a), t.edge(b)
            if ea.label != eb.label:
                out.append(f"edge {a!r} -> {b!r} changes label")
            if self.vmap.get(ea.src) != eb.src or self.vmap.get(ea.tgt) != eb.tgt:
                out.append(f"edge {a!r} -> {b!r} does not commute with the vertex map")
        return out

    def is_valid(self) -> bool:
        return not self.problems()

    def is_bijective(self) -> bool:
        return (
            len(self.vmap) == len(self.target.vertices)
            and len(self.emap) == len(self.target.edges)
        )


# --- matching -------------------------------------------------------------


def _match_order(pattern, free, placed, candidates):
    """Greedy connectivity-first order for the free pattern vertices."""
    placed = set(placed)
    remaining = set(free)
    order = []
    while remaining:
        def score(p):
            links = sum(1 for i in pattern.incident(p) for q in _endpoints(pattern.edge(i)) if q in placed)
            return (-links, len(candidates[p]), p)

        best = min(remaining, key=score)
        order.append(best)
        placed.add(best)
        remaining.discard(best)
    return order


def _endpoints(e):
    return (e.src, e.tgt)


def _feasible(pattern, host_edges, vmap, p):
    """Host has enough parallel edges for every pattern edge touching ``p``."""
    need = {}
    for eid in pattern.incident(p):
        e = pattern.edge(eid)
        if e.src in vmap and e.tgt in vmap:
            key = (vmap[e.src], vmap[e.tgt], e.label)
            need[key] = need.get(key, 0) + 1
    return all(len(host_edges.get(k, ())) >= n for k, n in need.items())


def _search(pattern, host, vseed=None, eseed=None) -> Iterator[tuple[dict, dict]]:
    """Yield every monomorphism ``pattern -> host`` extending the seeds."""
    vseed = dict(vseed or {})
    eseed = dict(eseed or {})
    sig = host._signature_index()
    hedges = host._edge_index()
    for p, h in vseed.items():
        if h not in host.vertices or pattern.vertex(p).signature != host.vertex(h).signature:
            return
    if len(set(vseed.values())) != len(vseed):
        return
    free = [p for p in sorted(pattern.vertices) if p not in vseed]
    candidates = {p: sig.get(pattern.vertex(p).signature, ()) for p in free}
    if any(not c for c in candidates.values()):
        return
    if len(free) + len(vseed) > len(host.vertices):
        return
    for p in vseed:
        if not _feasible(pattern, hedges, vseed, p):
            return
    order = _match_order(pattern, free, vseed, candidates)

    # seeded edges must sit in the group their endpoints dictate
    taken_edges = set()
    for pe, he in eseed.items():
        a, b = pattern.edge(pe), host.edges.get(he)
        if b is None or a.label != b.label or vseed.get(a.src) != b.src or vseed.get(a.tgt) != b.tgt:
            return
        taken_edges.add(he)
    if len(taken_edges) != len(eseed):
        return
    free_edges = [e for e in sorted(pattern.edges) if e not in eseed]

    vmap = dict(vseed)
    used = set(vseed.values())

    def assign_edges():
        groups = {}
        for eid in free_edges:
            e = pattern.edge(eid)
            groups.setdefault((vmap[e.src], vmap[e.tgt], e.label), []).append(eid)
        options = []
        for key, pids in groups.items():
            avail = [h for h in hedges.get(key, ()) if h not in taken_edges]
            if len(avail) < len(pids):
                return
            options.append([list(zip(pids, perm)) for perm in itertools.permutations(avail, len(pids))])
        for combo in itertools.product(*options):
            emap = dict(eseed)
            for pairs in combo:
                emap.update(pairs)
            yield dict(vmap), emap

    def rec(i):
        if i == len(order):
            yield from assign_edges()
            return
        p = order[i]
        for h in candidates[p]:
            if h in used:
                continue
            vmap[p] = h
            if _feasible(pattern, hedges, vmap, p):
                used.add(h)
                yield from rec(i + 1)
                used.discard(h)
            del vmap[p]

    yield from rec(0)


def find_monomorphisms(pattern: Graph, host: Graph) -> list[Morphism]:
    """All injective, label/kind/attribute-preserving embeddings of ``pattern``.

    Sorted by the host ids assigned to the pattern's vertices (then edges),
    taken in pattern-id order.
    """
    found = [Morphism(pattern, host, v, e) for v, e in _search(pattern, host)]
    found.sort(key=Morphism.key)
    return found


def has_extension(pattern: Graph, host: Graph, vmap, emap) -> bool:
    """Whether the partial map ``vmap``/``emap`` extends to all of ``pattern``."""
    for _ in _search(pattern, host, vmap, emap):
        return True
    return False


def extensions(pattern: Graph, host: Graph, vmap, emap) -> list[Morphism]:
    found = [Morphism(pattern, host, v, e) for v, e in _search(pattern, host, vmap, emap)]
    found.sort(key=Morphism.key)
    return found


# --- isomorphism and canonical labelling ----------------------------------


def _digest(obj) -> str:
    return hashlib.blake2b(repr(obj).encode(), digest_size=10).hexdigest()


def _refine(g: Graph, colors: dict) -> dict:
    """Colour refinement until the partition stops splitting."""
    n = len(set(colors.values()))
    while True:
        new = {}
        for v in g.vertices:
            outs = sorted((e.label, colors[e.tgt]) for e in g.out_edges(v))
            ins = sorted((e.label, colors[e.src]) for e in g.in_edges(v))
            new[v] = _digest((colors[v], outs, ins))
        m = len(set(new.values()))
        colors = new
        if m == n:
            return colors
        n = m


def _initial_colors(g: Graph) -> dict:
    return {v: _digest(x.signature) for v, x in g.vertices.items()}


def _histogram(g: Graph):
    return sorted(_refine(g, _initial_colors(g)).values())


def _twins(g: Graph, u, v) -> bool:
    """True when swapping ``u`` and ``v`` is an automorphism of ``g``."""
    if g.vertex(u).signature != g.vertex(v).signature:
        return False

    def profile(x, y):
        outs, ins, between, loops = [], [], [], []
        for e in g.out_edges(x):
            if e.tgt == x:
                loops.append(e.label)
            elif e.tgt == y:
                between.append(("out", e.label))
            else:
                outs.append((e.label, e.tgt))
        for e in g.in_edges(x):
            if e.src == y:
                between.append(("in", e.label))
            elif e.src != x:
                ins.append((e.label, e.src))
        return sorted(outs), sorted(ins), sorted(between), sorted(loops)

    return profile(u, v) == profile(v, u)


def _encode(g: Graph, order) -> bytes:
    pos = {v: i for i, v in enumerate(order)}
    verts = [[g.vertex(v).kind, list(map(list, g.vertex(v).attrs))] for v in order]
    edges = sorted([pos[e.src], pos[e.tgt], e.label] for e in g.edges.values())
    return json.dumps([verts, edges], separators=(",", ":")).encode()


def canonical_form(g: Graph) -> bytes:
    """A byte string equal for two graphs iff they are isomorphic.

    Individualisation-refinement: refine colours, then branch on every member
    of the first non-singleton cell (skipping interchangeable twins) and keep
    the smallest encoding among the discrete leaves.
    """
    best = None

    def rec(colors):
        nonlocal best
        cells = {}
        for v, c in colors.items():
            cells.setdefault(c, []).append(v)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = sorted(cells[c])
                break
        if target is None:
            cert = _encode(g, sorted(colors, key=colors.get))
            if best is None or cert < best:
                best = cert
            return
        explored = []
        for v in target:
            if any(_twins(g, v, u) for u in explored):
                continue
            explored.append(v)
            split = dict(colors)
            split[v] = _digest(("*", colors[v]))
            rec(_refine(g, split))

    rec(_refine(g, _initial_colors(g)))
    return best


def is_isomorphic(g: Graph, h: Graph) -> Morphism | None:
    """A bijective structure-preserving morphism ``g -> h``, or ``None``."""
    if len(g.vertices) != len(h.vertices) or len(g.edges) != len(h.edges):
        return None
    if _histogram(g) != _histogram(h):
        return None
    for vmap, emap in _search(g, h):
        return Morphism(g, h, vmap, emap)
    return None


# --- overlaps -------------------------------------------------------------


def enumerate_overlaps(g1: Graph, g2: Graph, cap: int = 100_000):
    """Every jointly surjective gluing of ``g1`` and ``g2``.

    Returns ``(overlap, e1, e2)`` triples.  Vertices are identified only when
    kind and attributes agree; once endpoints are identified, equally
    labelled edges between them are identified too (pairwise, in id order).
    Overlap ids are ``1:x`` / ``2:y`` for unshared elements and ``1:x=2:y``
    for identified ones.  Because each overlap is determined by its set of
    identified pairs, that set doubles as the canonical key of the overlap
    together with its two embeddings.

    Raises :class:`OverlapCapExceeded` when more than ``cap`` would result.
    """
    v1 = sorted(g1.vertices)
    sig2 = g2._signature_index()
    compat = {a: sig2.get(g1.vertex(a).signature, []) for a in v1}
    e2_index = g2._edge_index()
    results = []
    seen = set()

    def build(phi):
        vmap1, vmap2 = {}, {}
        verts = []
        for a in v1:
            x = g1.vertex(a)
            oid = f"1:{a}={'2:' + phi[a]}" if a in phi else f"1:{a}"
            vmap1[a] = oid
            if a in phi:
                vmap2[phi[a]] = oid
            verts.append(Vertex(oid, x.kind, x.attrs))
        for b in sorted(g2.vertices):
            if b not in vmap2:
                x = g2.vertex(b)
                vmap2[b] = f"2:{b}"
                verts.append(Vertex(vmap2[b], x.kind, x.attrs))
        epairs = {}
        used2 = set()
        for a in sorted(g1.edges):
            e = g1.edge(a)
            if e.src in phi and e.tgt in phi:
                for b in e2_index.get((phi[e.src], phi[e.tgt], e.label), ()):
                    if b not in used2:
                        epairs[a] = b
                        used2.add(b)
                        break
        key = (tuple(sorted(phi.items())), tuple(sorted(epairs.items())))
        if key in seen:
            return
        seen.add(key)
        emap1, emap2 = {}, {}
        edges = []
        for a in sorted(g1.edges):
            e = g1.edge(a)
            oid = f"1:{a}=2:{epairs[a]}" if a in epairs else f"1:{a}"
            emap1[a] = oid
            if a in epairs:
                emap2[epairs[a]] = oid
            edges.append(Edge(oid, vmap1[e.src], vmap1[e.tgt], e.label))
        for b in sorted(g2.edges):
            if b not in emap2:
                e = g2.edge(b)
                emap2[b] = f"2:{b}"
                edges.append(Edge(emap2[b], vmap2[e.src], vmap2[e.tgt], e.label))
        ov = Graph(verts, edges)
        results.append((ov, Morphism(g1, ov, vmap1, emap1), Morphism(g2, ov, vmap2, emap2)))
        if len(results) > cap:
            raise OverlapCapExceeded(cap)

    phi: dict[str, str] = {}
    used: set[str] = set()

    def rec(i):
        if i == len(v1):
            build(phi)
            return
        a = v1[i]
        rec(i + 1)
        for b in compat[a]:
            if b in used:
                continue
            phi[a] = b
            used.add(b)
            rec(i + 1)
            used.discard(b)
            del phi[a]

    rec(0)
    return results


def quotient_key(overlap_triple) -> tuple:
    """Identification set of an overlap triple (its canonical key)."""
    _, e1, e2 = overlap_triple
    inv2 = {}
    for k, v in list(e2.vmap.items()) + list(e2.emap.items()):
        inv2[v] = k
    pairs = []
    for k, v in list(e1.vmap.items()) + list(e1.emap.items()):
        if v in inv2:
            pairs.append((k, inv2[v]))
    return tuple(sorted(pairs))
