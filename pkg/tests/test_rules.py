import random

import pytest

from aspectra.errors import FormatError, InvalidMatch, RuleError
from aspectra.graph import Edge, Graph, Morphism
from aspectra.rules import Match, Rule, apply, find_matches, fresh_id, rule_to_dot, weave

from conftest import V, prune_and_link_host


def test_delta(prune_rule):
    d = prune_rule.delta
    assert d.deleted == {"d", "e3"}
    assert d.created == {"e4"}
    assert {"a", "b", "c", "e1", "e2"} <= d.preserved


def test_apply_creates_and_deletes(prune_rule):
    host = prune_and_link_host()
    [m] = find_matches(prune_rule, host)
    out = apply(prune_rule, host, m)
    assert "d" not in out.vertices and "h3" not in out.edges
    e4 = out.edge("e4")
    assert (e4.src, e4.tgt, e4.label) == ("c", "a", "z")
    assert "d" in host.vertices  # host untouched


def test_nac_blocks(prune_rule):
    host = prune_and_link_host(with_forbidden_edge=True)
    assert find_matches(prune_rule, host) == []
    m = Morphism(prune_rule.lhs, host, {k: k for k in "abcd"}, {"e1": "h1", "e2": "h2", "e3": "h3"})
    with pytest.raises(InvalidMatch, match="negative"):
        apply(prune_rule, host, Match(prune_rule, m))


def test_dangling_rejected(prune_rule):
    host = prune_and_link_host().edit(add_edges=[Edge("extra", "f", "d", "q")])
    assert find_matches(prune_rule, host) == []


def test_invalid_embedding_rejected(prune_rule):
    host = prune_and_link_host()
    m = Morphism(prune_rule.lhs, host, {k: k for k in "abcd"}, {"e1": "h2", "e2": "h1", "e3": "h3"})
    with pytest.raises(InvalidMatch):
        apply(prune_rule, host, Match(prune_rule, m))


def test_fresh_ids():
    assert fresh_id("x", {"y"}) == "x"
    assert fresh_id("x", {"x", "x#1"}) == "x#2"


def test_created_ids_do_not_clash():
    r = Rule("mk", Graph([V("a")]), Graph([V("a"), V("n")], [Edge("e", "a", "n", "go")]))
    host = Graph([V("a"), V("n", "other")], [Edge("e", "a", "n", "x")])
    [m] = find_matches(r, host)
    out = apply(r, host, m)
    assert {"n#1", "e#1"} <= out.element_ids()


def test_rule_validation():
    with pytest.raises(RuleError):
        Rule("", Graph(), Graph())
    with pytest.raises(RuleError):
        Rule("r", Graph([V("a")]), Graph([V("a", "renamed")]))
    with pytest.raises(RuleError):
        Rule("r", Graph([V("a")]), Graph(), (Graph([V("b")]),))


def test_round_trip(prune_rule):
    again = Rule.from_dict(prune_rule.to_dict())
    assert again.to_dict() == prune_rule.to_dict()
    with pytest.raises(FormatError):
        Rule.from_dict({"name": "r", "lhs": {"vertices": [{"id": "a"}]}, "rhs": {"vertices": [{"id": "a", "attrs": {"q": 1}}]}})


def test_dot_marks_nac(prune_rule):
    text = rule_to_dot(prune_rule)
    assert "cluster_lhs" in text and "cluster_rhs" in text
    assert "X w" in text and "dashed" in text


def test_weave_single_pass_skips_invalidated():
    # two rules both delete the same vertex; the second match is skipped
    lhs = Graph([V("a"), V("b")], [Edge("e", "a", "b", "x")])
    kill = Rule("kill", lhs, Graph([V("a")]))
    host = Graph([V("a"), V("b")], [Edge("e", "a", "b", "x")])
    log = []
    out = weave([kill, kill], host, log)
    assert "b" not in out.vertices
    assert [s.applied for s in log] == [True, False]
    assert log[1].reason == "image deleted"


def test_weave_does_not_rematch_created_elements():
    grow = Rule("grow", Graph([V("a")]), Graph([V("a"), V("n", "a")], [Edge("e", "a", "n", "x")]))
    out = weave([grow], Graph([V("a")]))
    assert len(out.vertices) == 2


def random_host(rng, n):
    vs = [V(f"v{i}", rng.choice("ab")) for i in range(n)]
    es = [Edge(f"h{j}", rng.choice(vs).id, rng.choice(vs).id, rng.choice("xy")) for j in range(rng.randint(0, 2 * n))]
    return Graph(vs, es)


def random_rule(rng, name):
    n = rng.randint(1, 3)
    vs = [V(f"p{i}", rng.choice("ab")) for i in range(n)]
    es = [Edge(f"q{j}", rng.choice(vs).id, rng.choice(vs).id, rng.choice("xy")) for j in range(rng.randint(0, 2))]
    lhs = Graph(vs, es)
    keep_v = [v for v in vs if rng.random() < 0.7]
    keep_ids = {v.id for v in keep_v}
    keep_e = [e for e in es if e.src in keep_ids and e.tgt in keep_ids and rng.random() < 0.7]
    new = [V("nv", rng.choice("ab"))] if rng.random() < 0.5 else []
    ends = [v.id for v in keep_v + new]
    new_e = [Edge("ne", rng.choice(ends), rng.choice(ends), rng.choice("xy"))] if ends and rng.random() < 0.6 else []
    return Rule(name, lhs, Graph(keep_v + new, keep_e + new_e))


def test_no_dangling_edges_after_any_apply():
    rng = random.Random(11)
    applied = 0
    for _ in range(300):
        host = random_host(rng, rng.randint(1, 6))
        r = random_rule(rng, "r")
        for m in find_matches(r, host):
            out = apply(r, host, m)
            applied += 1
            for e in out.edges.values():
                assert e.src in out.vertices and e.tgt in out.vertices
    assert applied > 50
