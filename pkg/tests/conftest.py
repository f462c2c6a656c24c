import json
from importlib import resources

import pytest

from aspectra.aspects import compile_all, load_concerns
from aspectra.graph import Edge, Graph, Vertex
from aspectra.rules import Rule
from aspectra.statechart import StateMachine


def data_path(name):
    return resources.files("aspectra") / "data" / name


def load_data(name):
    return json.loads(data_path(name).read_text())


@pytest.fixture(scope="session")
def atm_model():
    return StateMachine.from_dict(load_data("atm.model.json"))


@pytest.fixture(scope="session")
def atm_compiled():
    return compile_all(load_concerns(load_data("atm.aspects.json")))


@pytest.fixture(scope="session")
def pots_model():
    return StateMachine.from_dict(load_data("pots.model.json"))


def V(vid, name=None, kind="state"):
    return Vertex(vid, kind, {"name": name or vid})


def prune_and_link_rule():
    """Deletes ``d`` (with ``e3``), creates ``e4``; forbidden if ``b -> c`` exists."""
    a, b, c, d = V("a"), V("b"), V("c"), V("d")
    kept = [Edge("e1", "a", "b", "x"), Edge("e2", "a", "c", "x")]
    lhs = Graph([a, b, c, d], kept + [Edge("e3", "a", "d", "y")])
    rhs = Graph([a, b, c], kept + [Edge("e4", "c", "a", "z")])
    nac = Graph([a, b, c, d], list(lhs.edges.values()) + [Edge("nac", "b", "c", "w")])
    return Rule("prune", lhs, rhs, (nac,))


def prune_and_link_host(with_forbidden_edge=False):
    edges = [Edge("h1", "a", "b", "x"), Edge("h2", "a", "c", "x"), Edge("h3", "a", "d", "y"),
             Edge("h4", "b", "f", "x")]
    if with_forbidden_edge:
        edges.append(Edge("h5", "b", "c", "w"))
    return Graph([V("a"), V("b"), V("c"), V("d"), V("f")], edges)


@pytest.fixture
def prune_rule():
    return prune_and_link_rule()


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
