import itertools
import json
import random

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aspectra.errors import FormatError, GraphError, OverlapCapExceeded
from aspectra.graph import (
    Edge, Graph, Morphism, Vertex, canonical_form, enumerate_overlaps, find_monomorphisms,
    is_isomorphic, quotient_key,
)
from aspectra.statechart import flatten

from conftest import V


def random_graph(rng, n, m, names="ab", labels="xy", prefix=""):
    vs = [Vertex(f"{prefix}v{i}", "state", {"name": rng.choice(names)}) for i in range(n)]
    es = []
    for j in range(m if n else 0):
        es.append(Edge(f"{prefix}e{j}", rng.choice(vs).id, rng.choice(vs).id, rng.choice(labels)))
    return Graph(vs, es)


def permuted(g, rng):
    ids = list(g.vertices)
    new = ids[:]
    rng.shuffle(new)
    ren = {a: f"p{b}" for a, b in zip(ids, new)}
    return Graph(
        [Vertex(ren[v.id], v.kind, v.attrs) for v in g.vertices.values()],
        [Edge(f"q{e.id}", ren[e.src], ren[e.tgt], e.label) for e in g.edges.values()],
    ), ren


def brute_force_count(p, h):
    """Count injective embeddings by trying every vertex and edge assignment."""
    pv, hv = list(p.vertices), list(h.vertices)
    pe, he = list(p.edges), list(h.edges)
    count = 0
    for vimg in itertools.permutations(hv, len(pv)):
        vmap = dict(zip(pv, vimg))
        if any(p.vertex(a).signature != h.vertex(b).signature for a, b in vmap.items()):
            continue
        for eimg in itertools.permutations(he, len(pe)):
            ok = all(
                h.edge(b).src == vmap[p.edge(a).src]
                and h.edge(b).tgt == vmap[p.edge(a).tgt]
                and h.edge(b).label == p.edge(a).label
                for a, b in zip(pe, eimg)
            )
            count += ok
    return count


def to_nx(g):
    x = nx.MultiDiGraph()
    for v in g.vertices.values():
        x.add_node(v.id, sig=v.signature)
    for e in g.edges.values():
        x.add_edge(e.src, e.tgt, label=e.label)
    return x


def nx_isomorphic(g, h):
    return nx.is_isomorphic(
        to_nx(g), to_nx(h),
        node_match=lambda a, b: a["sig"] == b["sig"],
        edge_match=lambda a, b: sorted(d["label"] for d in a.values()) == sorted(d["label"] for d in b.values()),
    )


class TestConstruction:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(GraphError):
            Graph([V("a"), V("a")])

    def test_vertex_and_edge_share_namespace(self):
        with pytest.raises(GraphError):
            Graph([V("a"), V("b")], [Edge("a", "a", "b")])

    def test_dangling_edge_rejected(self):
        with pytest.raises(GraphError):
            Graph([V("a")], [Edge("e", "a", "zz")])

    def test_unknown_kind(self):
        with pytest.raises(GraphError):
            Vertex("a", "blob")

    def test_config_needs_separator(self):
        with pytest.raises(GraphError):
            Vertex("c", "config", {"name": "plain"})

    def test_attrs_normalised(self):
        assert Vertex("a", "state", {"z": 1, "name": "a"}) == Vertex("a", "state", [("name", "a"), ("z", "1")])

    def test_edit_and_subgraph(self):
        g = Graph([V("a"), V("b")], [Edge("e", "a", "b", "x")])
        h = g.edit(remove={"e"}, add_vertices=[V("c")], add_edges=[Edge("f", "b", "c")])
        assert set(h.vertices) == {"a", "b", "c"} and set(h.edges) == {"f"}
        assert set(g.edges) == {"e"}
        assert set(g.subgraph({"a", "b", "e"}).edges) == {"e"}
        assert g.incident("a") == {"e"}

    def test_round_trip(self):
        g = random_graph(random.Random(1), 5, 7)
        assert Graph.from_dict(json.loads(json.dumps(g.to_dict()))) == g

    @pytest.mark.parametrize("doc, where", [
        ({"vertices": [{"kind": "state"}], "edges": []}, "vertices[0]"),
        ({"vertices": [], "edges": [{"id": "e", "src": "a", "tgt": "b"}]}, "dangles"),
        ([], "graph"),
    ])
    def test_from_dict_errors(self, doc, where):
        with pytest.raises(FormatError) as info:
            Graph.from_dict(doc)
        assert where in str(info.value)

    def test_dot(self):
        g = Graph([V("a"), Vertex("c", "config", {"name": "x|y"})], [Edge("e", "a", "c", "go")])
        text = g.to_dot()
        assert text.startswith("digraph") and '"a" -> "c"' in text and "box" in text


class TestMatching:
    def test_single_vertex_finds_idle(self, atm_model):
        g = flatten(atm_model)
        found = find_monomorphisms(Graph([Vertex("p", "state", {"name": "idle"})]), g)
        assert [m.vmap["p"] for m in found] == ["idle"]

    def test_parallel_edges_need_distinct_images(self):
        p = Graph([V("a"), V("b")], [Edge("e1", "a", "b", "x"), Edge("e2", "a", "b", "x")])
        h1 = Graph([V("a"), V("b")], [Edge("h", "a", "b", "x")])
        h2 = Graph([V("a"), V("b")], [Edge("h", "a", "b", "x"), Edge("k", "a", "b", "x")])
        assert find_monomorphisms(p, h1) == []
        assert len(find_monomorphisms(p, h2)) == 2

    def test_empty_pattern_matches_once(self):
        assert len(find_monomorphisms(Graph(), Graph([V("a")]))) == 1

    def test_labels_and_attributes_respected(self):
        p = Graph([V("a", "n1"), V("b", "n2")], [Edge("e", "a", "b", "x")])
        h = Graph([V("u", "n1"), V("w", "n2")], [Edge("f", "u", "w", "y")])
        assert find_monomorphisms(p, h) == []

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6))
    def test_count_agrees_with_brute_force(self, seed):
        rng = random.Random(seed)
        p = random_graph(rng, rng.randint(1, 3), rng.randint(0, 3))
        h = random_graph(rng, rng.randint(1, 5), rng.randint(0, 5), prefix="h")
        found = find_monomorphisms(p, h)
        assert len(found) == brute_force_count(p, h)
        assert all(m.is_valid() for m in found)
        assert len({m.key() for m in found}) == len(found)

    def test_morphism_problems(self):
        p = Graph([V("a")])
        h = Graph([V("b", "other")])
        assert Morphism(p, h, {"a": "b"}, {}).problems()


class TestIsomorphism:
    def test_permuted_atm(self, atm_model):
        g = flatten(atm_model)
        h, ren = permuted(g, random.Random(7))
        m = is_isomorphic(g, h)
        assert m is not None and m.is_bijective()
        # configs are interchangeable only where their structure is; names pin them down here
        assert all(m.vmap[v] == ren[v] for v in g.vertices)
        assert canonical_form(g) == canonical_form(h)

    def test_different_counts(self):
        assert is_isomorphic(Graph([V("a")]), Graph([V("a"), V("b")])) is None

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 10**6))
    def test_agrees_with_networkx_and_canonical_form(self, seed):
        rng = random.Random(seed)
        n = rng.randint(1, 8)
        g = random_graph(rng, n, rng.randint(0, 2 * n), names="ab", labels="xy")
        if rng.random() < 0.5:
            h, _ = permuted(g, rng)
        else:
            h = random_graph(rng, n, len(g.edges), names="ab", labels="xy", prefix="h")
        expected = nx_isomorphic(g, h)
        assert (is_isomorphic(g, h) is not None) == expected
        assert (canonical_form(g) == canonical_form(h)) == expected

    def test_regular_graph_symmetry(self):
        # two directed 6-cycles vs one 12-cycle: colour refinement alone cannot separate them
        def cycles(sizes, prefix):
            vs, es, k = [], [], 0
            for s in sizes:
                ids = [f"{prefix}{k + i}" for i in range(s)]
                vs += [V(i, "n") for i in ids]
                es += [Edge(f"{a}>", a, ids[(j + 1) % s], "x") for j, a in enumerate(ids)]
                k += s
            return Graph(vs, es)
        g, h = cycles([6, 6], "a"), cycles([12], "b")
        assert is_isomorphic(g, h) is None
        assert canonical_form(g) != canonical_form(h)
        assert canonical_form(g) == canonical_form(cycles([6, 6], "z"))


class TestOverlaps:
    def test_disjoint_and_glued(self):
        g1 = Graph([V("a", "n")])
        g2 = Graph([V("b", "n")])
        ovs = enumerate_overlaps(g1, g2)
        assert sorted(len(o.vertices) for o, _, _ in ovs) == [1, 2]

    def test_incompatible_vertices_never_glued(self):
        ovs = enumerate_overlaps(Graph([V("a", "n")]), Graph([V("b", "m")]))
        assert len(ovs) == 1

    def test_edges_identified_with_endpoints(self):
        g = Graph([V("a", "n"), V("b", "m")], [Edge("e", "a", "b", "x")])
        h = Graph([V("c", "n"), V("d", "m")], [Edge("f", "c", "d", "x")])
        ovs = enumerate_overlaps(g, h)
        assert len(ovs) == 4
        full = [o for o, _, _ in ovs if len(o.vertices) == 2]
        assert len(full) == 1 and len(full[0].edges) == 1

    def test_embeddings_valid_and_keys_unique(self):
        rng = random.Random(3)
        g = random_graph(rng, 3, 3)
        h = random_graph(rng, 3, 3, prefix="h")
        ovs = enumerate_overlaps(g, h)
        for o, e1, e2 in ovs:
            assert e1.is_valid() and e2.is_valid()
            assert e1.image() | e2.image() == o.element_ids()
        assert len({quotient_key(t) for t in ovs}) == len(ovs)

    def test_cap(self):
        g = Graph([V(f"a{i}", "n") for i in range(4)])
        with pytest.raises(OverlapCapExceeded):
            enumerate_overlaps(g, g, cap=10)
