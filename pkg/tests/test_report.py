import json

import pytest

from aspectra import report as rep
from aspectra.aspects import Aspect, compile
from aspectra.cpa import analyze_rules
from aspectra.errors import DuplicateAspectName, FormatError, UnknownFormat, UnparseableRuleName

from conftest import load_data


@pytest.fixture(scope="module")
def atm_matrix(atm_compiled):
    return rep.analyze_aspects(atm_compiled)


def adder(name, src, tgt, event, new_state=None):
    doc = {
        "name": name,
        "pointcut": {"states": [{"id": "s", "name": src}, {"id": "t", "name": tgt}], "transitions": [],
                     "xor_groups": [], "exposed": ["s", "t"]},
        "advice": {"create_states": [], "create_transitions": [{"source": "s", "target": "t", "event": event}],
                   "delete": []},
    }
    if new_state:
        doc["advice"]["create_states"] = [{"id": "n", "name": new_state}]
        doc["advice"]["create_transitions"] = [{"source": "s", "target": "n", "event": event}]
    return compile(Aspect.from_dict(doc))


def user(name, src, tgt, event):
    doc = {
        "name": name,
        "pointcut": {"states": [{"id": "s", "name": src}, {"id": "t", "name": tgt}],
                     "transitions": [{"source": "s", "target": "t", "event": event}],
                     "xor_groups": [], "exposed": ["s", "t"]},
        "advice": {"create_states": [], "create_transitions": [{"source": "t", "target": "s", "event": "back"}],
                   "delete": []},
    }
    return compile(Aspect.from_dict(doc))


def test_parse_rule_name():
    assert rep.parse_rule_name("CW-S-A5-R12") == ("CW-S-A5", 12)
    for bad in ("A1", "A1-R0", "A1-Rx", "-R1"):
        with pytest.raises(UnparseableRuleName):
            rep.parse_rule_name(bad)


def test_atm_cells(atm_matrix):
    assert atm_matrix.cell("A3", "A4").conflicts
    assert atm_matrix.conflicting("A4", "A3")
    assert atm_matrix.depends_on("A2", "A1")
    assert atm_matrix.rule_pair_count == 11 * 11 - (9 + 9 + 1 + 16)
    assert atm_matrix.cell("A1", "A1").empty


def test_diagonal_dropped(atm_compiled):
    rules = atm_compiled[3].rules
    verdicts = analyze_rules(rules)
    m = rep.aggregate(atm_compiled, verdicts)
    assert all(c.empty for c in m.cells.values()) and m.rule_pair_count == 0


def test_unknown_aspect_in_verdicts(atm_compiled):
    verdicts = analyze_rules(atm_compiled[0].rules + atm_compiled[1].rules)
    with pytest.raises(UnparseableRuleName):
        rep.aggregate(atm_compiled[:1], verdicts)


def test_joinpoint_tree_atm(atm_matrix):
    tree = rep.joinpoint_tree(atm_matrix)
    both = [n for n in tree.nodes.values() if set(n.aspects) == {"A3", "A4"}]
    assert both
    assert any(e.label == "diagnostic" for n in both for e in n.overlap.edges.values())
    assert all(len(n.aspects) >= 2 for n in tree.nodes.values())


def test_joinpoint_tree_empty_and_disjoint():
    assert rep.joinpoint_tree({}).nodes == {}
    pairs = [adder("P", "a", "b", "x"), user("Q", "a", "b", "x"), adder("R", "c", "d", "y", "zz"),
             user("S", "c", "zz", "y")]
    m = rep.analyze_aspects(pairs)
    assert len(rep.joinpoint_tree(m).nodes) == 2


def test_incremental_equals_full(atm_compiled, atm_matrix):
    stats = {}
    base = rep.analyze_aspects(atm_compiled[:3])
    grown = rep.incremental_update(base, atm_compiled[:3], atm_compiled[3], stats=stats)
    assert stats["rule_pairs"] == 2 * 4 * 7
    assert rep.render(grown, None, "document") == rep.render(atm_matrix, None, "document")
    for k, c in base.cells.items():
        assert grown.cells[k] is c
    with pytest.raises(DuplicateAspectName):
        rep.incremental_update(grown, atm_compiled, atm_compiled[0])


def test_incremental_silent_aspect(atm_compiled, atm_matrix):
    lone = adder("Z", "nowhere", "else", "q")
    grown = rep.incremental_update(atm_matrix, atm_compiled, lone)
    assert all(grown.cell("Z", a).empty and grown.cell(a, "Z").empty for a in atm_matrix.aspects)


def test_table(atm_matrix):
    lines = rep.render(atm_matrix, None, "table").decode().splitlines()
    assert lines[0].split() == ["aspect", "A1", "A2", "A3", "A4"]
    grid = {row.split()[0]: row.split()[1:] for row in lines[1:]}
    assert grid["A3"][3] == "C" and grid["A4"][2] == "C"
    assert grid["A2"][0] == "D" and grid["A1"][1] == "."
    assert grid["A1"][0] == "-"


def test_glyph_both_and_undecided():
    m = rep._empty_matrix(["P", "Q"])
    m.cells[("P", "Q")].undecided_pairs.append(("P-R1", "Q-R1"))
    assert rep.glyph(m, "P", "Q") == "?"
    p, q = adder("P", "a", "b", "x"), user("Q", "a", "b", "x")
    m = rep.analyze_aspects([p, q])
    assert rep.glyph(m, "Q", "P") == "D"


def test_empty_matrix_header_only():
    m = rep.analyze_aspects([])
    assert rep.render(m, None, "table") == b"aspect\n"
    assert rep.render(m, None, "csv") == b"first,second,conflicts,dependencies,undecided\n"


def test_csv_round_trip(atm_matrix):
    text = rep.render(atm_matrix, None, "csv").decode()
    assert rep.parse_csv(text) == atm_matrix.summary()
    with pytest.raises(FormatError):
        rep.parse_csv("a,b\n")


def test_document_round_trip(atm_matrix):
    text = rep.render(atm_matrix, None, "document")
    doc = json.loads(text)
    assert doc["dependency_matrix"]["A2"]["A1"]["pairs"]
    assert not doc["dependency_matrix"]["A1"]["A2"]["pairs"]
    assert doc["meta"]["rule_pair_count"] == 86
    m, tree = rep.from_document(doc)
    assert rep.render(m, tree, "document") == text
    with pytest.raises(FormatError):
        rep.from_document({"aspects": ["A"]})


def test_dot(atm_matrix):
    text = rep.render(atm_matrix, None, "dot").decode()
    assert '"A3" -> "A4" [color=red' in text and '"A2" -> "A1" [color=blue' in text


def test_unknown_format(atm_matrix):
    with pytest.raises(UnknownFormat):
        rep.render(atm_matrix, None, "xml")


def test_broad_dependency_fixture():
    from aspectra.aspects import compile_all, load_concerns

    compiled = compile_all(load_concerns(load_data("pots_broad.aspects.json")))
    m = rep.analyze_aspects(compiled)
    providers = [b for b in m.aspects if b != "CFB-S" and m.depends_on("CFB-S", b)]
    assert providers == ["TWC-S", "CND-S", "OCS-S", "RC-S"]
