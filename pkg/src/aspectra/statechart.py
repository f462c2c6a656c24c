"""State machines and their flattening into plain graphs.

Flattening rules:

* a sequential (non-orthogonal) composite disappears; entering it means
  entering its region's initial substate, leaving it means leaving from
  any of its substates;
* an orthogonal composite becomes one ``config`` vertex per combination of
  region substates, named ``top|...|bottom``;
* a fork becomes a single edge into the config that combines its targets.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

from .errors import FlattenError, FormatError
from .graph import CONFIG_SEP, Edge, Graph, Vertex

STATE_KINDS = ("simple", "composite", "initial", "final")
TRANSITION_KINDS = ("simple", "fork", "join")
UNSUPPORTED_TRANSITION_FIELDS = ("guard", "action", "effect", "trigger_guard")


@dataclass
class Region:
    initial: str
    states: list = field(default_factory=list)


@dataclass
class State:
    id: str
    kind: str = "simple"
    orthogonal: bool = False
    regions: list = field(default_factory=list)


@dataclass
class Transition:
    source: str
    targets: list
    event: str
    kind: str = "simple"
    sources: list = field(default_factory=list)  # join only


@dataclass
class StateMachine:
    name: str
    states: list = field(default_factory=list)
    transitions: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "states": [_state_to_dict(s) for s in self.states],
            "transitions": [
                {"source": t.source, "targets": list(t.targets), "event": t.event, "kind": t.kind}
                | ({"sources": list(t.sources)} if t.sources else {})
                for t in self.transitions
            ],
        }

    @classmethod
    def from_dict(cls, doc) -> "StateMachine":
        if not isinstance(doc, Mapping):
            raise FormatError("expected a model object", "model")
        for key in ("name", "states", "transitions"):
            if key not in doc:
                raise FormatError(f"missing field {key!r}", "model")
        states = [_state_from_dict(s, f"states[{i}]") for i, s in enumerate(doc["states"])]
        transitions = []
        for i, t in enumerate(doc["transitions"]):
            where = f"transitions[{i}]"
            if not isinstance(t, Mapping):
                raise FormatError("expected an object", where)
            for bad in UNSUPPORTED_TRANSITION_FIELDS:
                if bad in t:
                    raise FormatError(f"{bad!r} is not supported", where)
            try:
                targets = t["targets"] if "targets" in t else [t["target"]]
                transitions.append(Transition(
                    str(t["source"]), [str(x) for x in targets], str(t["event"]),
                    str(t.get("kind", "simple")), [str(x) for x in t.get("sources", [])],
                ))
            except KeyError as exc:
                raise FormatError(f"missing field {exc}", where) from None
        return cls(str(doc["name"]), states, transitions)


def _state_to_dict(s: State) -> dict:
    d = {"id": s.id, "kind": s.kind}
    if s.kind == "composite":
        d["orthogonal"] = s.orthogonal
        d["regions"] = [
            {"initial": r.initial, "states": [_state_to_dict(x) for x in r.states]} for r in s.regions
        ]
    return d


def _state_from_dict(doc, where) -> State:
    if not isinstance(doc, Mapping):
        raise FormatError("expected a state object", where)
    if "id" not in doc:
        raise FormatError("missing field 'id'", where)
    if "history" in doc or doc.get("kind") in ("history", "shallow_history", "deep_history"):
        raise FormatError("history pseudo-states are not supported", where)
    for bad in ("entry", "exit", "do"):
        if bad in doc:
            raise FormatError(f"{bad!r} actions are not supported", where)
    regions = []
    for j, r in enumerate(doc.get("regions", [])):
        rw = f"{where}.regions[{j}]"
        if not isinstance(r, Mapping) or "initial" not in r:
            raise FormatError("region needs an 'initial'", rw)
        regions.append(Region(
            str(r["initial"]),
            [_state_from_dict(x, f"{rw}.states[{k}]") for k, x in enumerate(r.get("states", []))],
        ))
    return State(str(doc["id"]), str(doc.get("kind", "simple")), bool(doc.get("orthogonal", False)), regions)


@dataclass(frozen=True)
class Diagnostic:
    element: str
    reason: str

    def __str__(self):
        return f"{self.element}: {self.reason}"


class _Index:
    """Parent links and lookups over a machine's state tree."""

    def __init__(self, sm: StateMachine):
        self.states: dict[str, State] = {}
        self.parent: dict[str, tuple] = {}  # id -> (composite id, region index) or None
        self.duplicates: list[str] = []
        self._walk(sm.states, None)

    def _walk(self, states, parent):
        for s in states:
            if s.id in self.states:
                self.duplicates.append(s.id)
                continue
            self.states[s.id] = s
            self.parent[s.id] = parent
            for k, r in enumerate(s.regions):
                self._walk(r.states, (s.id, k))

    def orthogonal_owner(self, sid):
        p = self.parent.get(sid)
        if p and self.states[p[0]].orthogonal:
            return p
        return None


def validate(sm: StateMachine) -> list[Diagnostic]:
    """Every violated well-formedness condition; empty when flattenable."""
    out = []
    idx = _Index(sm)
    for d in idx.duplicates:
        out.append(Diagnostic(d, "duplicate state id"))
    for sid, s in idx.states.items():
        if s.kind not in STATE_KINDS:
            out.append(Diagnostic(sid, f"unknown state kind {s.kind!r}"))
            continue
        if s.kind != "composite":
            if s.regions:
                out.append(Diagnostic(sid, f"{s.kind} states cannot have regions"))
            if s.orthogonal:
                out.append(Diagnostic(sid, "only composite states can be orthogonal"))
            continue
        if not s.regions:
            out.append(Diagnostic(sid, "composite state without regions"))
        if s.orthogonal and len(s.regions) < 2:
            out.append(Diagnostic(sid, "orthogonal states need at least two regions"))
        if not s.orthogonal and len(s.regions) > 1:
            out.append(Diagnostic(sid, "several regions require orthogonal=true"))
        for k, r in enumerate(s.regions):
            ids = [x.id for x in r.states]
            if r.initial not in ids:
                out.append(Diagnostic(f"{sid}.regions[{k}]", f"initial {r.initial!r} is not a state of this region"))
            for x in r.states:
                if x.kind == "initial":
                    out.append(Diagnostic(x.id, "initial pseudo-states inside regions are not supported; use the region's 'initial'"))
                if s.orthogonal and x.kind == "composite":
                    out.append(Diagnostic(x.id, "composite states inside orthogonal regions are not supported"))
    top_initials = [s.id for s in sm.states if s.kind == "initial"]
    if len(top_initials) != 1:
        out.append(Diagnostic(sm.name, f"expected exactly one top-level initial state, found {len(top_initials)}"))
    for i, t in enumerate(sm.transitions):
        tid = f"transitions[{i}]"
        if t.kind not in TRANSITION_KINDS:
            out.append(Diagnostic(tid, f"unknown transition kind {t.kind!r}"))
            continue
        if not t.event:
            out.append(Diagnostic(tid, "transition without event"))
        for ref in [t.source, *t.targets, *t.sources]:
            if ref not in idx.states:
                out.append(Diagnostic(tid, f"undeclared state {ref!r}"))
        if any(ref not in idx.states for ref in [t.source, *t.targets, *t.sources]):
            continue
        if idx.states[t.source].kind == "final":
            out.append(Diagnostic(tid, "final states have no outgoing transitions"))
        for x in t.targets:
            if idx.states[x].kind == "initial":
                out.append(Diagnostic(tid, "initial states have no incoming transitions"))
        if t.kind == "simple" and len(t.targets) != 1:
            out.append(Diagnostic(tid, "simple transitions have exactly one target"))
        if t.kind == "fork":
            out.extend(_check_fork(idx, tid, t))
        if t.kind == "simple" and len(t.targets) == 1:
            a, b = idx.orthogonal_owner(t.source), idx.orthogonal_owner(t.targets[0])
            if a and b and a[0] == b[0] and a[1] != b[1]:
                out.append(Diagnostic(tid, "transition crosses regions of an orthogonal state"))
    return out


def _check_fork(idx, tid, t):
    if len(t.targets) < 2:
        return [Diagnostic(tid, "fork needs at least two targets")]
    owners = [idx.orthogonal_owner(x) for x in t.targets]
    if any(o is None for o in owners) or len({o[0] for o in owners}) != 1:
        return [Diagnostic(tid, "fork targets must be substates of one orthogonal state")]
    if len({o[1] for o in owners}) != len(owners):
        return [Diagnostic(tid, "fork targets must lie in distinct regions")]
    return []


def configurations(composite: State) -> list[str]:
    """Config names of an orthogonal state, in region-declaration product order."""
    if not composite.orthogonal:
        raise ValueError(f"{composite.id!r} is not orthogonal")
    per_region = [[x.id for x in r.states] for r in composite.regions]
    return [CONFIG_SEP.join(combo) for combo in itertools.product(*per_region)]


def _config_vid(owner, name):
    return f"{owner}:{name}"


_VERTEX_KIND = {"simple": "state", "initial": "initial", "final": "final"}


def flatten(sm: StateMachine, prune_unreachable: bool = False) -> Graph:
    """Flatten ``sm`` into a graph of state, config and pseudo-state vertices.

    With ``prune_unreachable`` config vertices that cannot be reached from
    the initial state are dropped.
    """
    problems = validate(sm)
    joins = [p for p in sm.transitions if p.kind == "join"]
    if joins:
        raise FlattenError("join transitions are not supported")
    if problems:
        raise FlattenError("; ".join(map(str, problems)))
    idx = _Index(sm)
    vertices: dict[str, Vertex] = {}

    def add_leaves(states, in_orthogonal):
        for s in states:
            if s.kind == "composite":
                if s.orthogonal:
                    for name in configurations(s):
                        vid = _config_vid(s.id, name)
                        vertices[vid] = Vertex(vid, "config", {"name": name})
                else:
                    add_leaves(s.regions[0].states, False)
            elif not in_orthogonal:
                vertices[s.id] = Vertex(s.id, _VERTEX_KIND[s.kind], {"name": s.id})

    add_leaves(sm.states, False)

    def config_with(owner_id, picks):
        owner = idx.states[owner_id]
        parts = [picks.get(k, r.initial) for k, r in enumerate(owner.regions)]
        return _config_vid(owner_id, CONFIG_SEP.join(parts))

    def entry(sid):
        s = idx.states[sid]
        if s.kind == "composite":
            if s.orthogonal:
                return config_with(sid, {})
            return entry(s.regions[0].initial)
        own = idx.orthogonal_owner(sid)
        if own:
            return config_with(own[0], {own[1]: sid})
        return sid

    def members(sid):
        s = idx.states[sid]
        if s.kind == "composite":
            if s.orthogonal:
                return [_config_vid(sid, n) for n in configurations(s)]
            return [v for x in s.regions[0].states for v in members(x.id)]
        own = idx.orthogonal_owner(sid)
        if own:
            owner = idx.states[own[0]]
            return [
                _config_vid(own[0], n) for n in configurations(owner)
                if n.split(CONFIG_SEP)[own[1]] == sid
            ]
        return [sid]

    edges = []
    for i, t in enumerate(sm.transitions):
        pairs = []
        if t.kind == "fork":
            own = idx.orthogonal_owner(t.targets[0])
            target = config_with(own[0], {idx.orthogonal_owner(x)[1]: x for x in t.targets})
            pairs = [(src, target) for src in members(t.source)]
        else:
            s, d = t.source, t.targets[0]
            so, do = idx.orthogonal_owner(s), idx.orthogonal_owner(d)
            if so and do and so == do:
                owner = idx.states[so[0]]
                for name in configurations(owner):
                    parts = name.split(CONFIG_SEP)
                    if parts[so[1]] == s:
                        parts[so[1]] = d
                        pairs.append((_config_vid(so[0], name), _config_vid(so[0], CONFIG_SEP.join(parts))))
            else:
                pairs = [(src, entry(d)) for src in members(s)]
        for k, (a, b) in enumerate(pairs):
            eid = f"t{i}" if len(pairs) == 1 else f"t{i}.{k}"
            edges.append(Edge(eid, a, b, t.event))

    g = Graph(vertices.values(), edges)
    if prune_unreachable:
        g = _prune(g)
    return g


def _prune(g: Graph) -> Graph:
    seen = [v for v, x in g.vertices.items() if x.kind == "initial"]
    reach = set(seen)
    while seen:
        v = seen.pop()
        for e in g.out_edges(v):
            if e.tgt not in reach:
                reach.add(e.tgt)
                seen.append(e.tgt)
    drop = {v for v, x in g.vertices.items() if x.kind == "config" and v not in reach}
    drop |= {e for v in drop for e in g.incident(v)}
    return g.edit(drop)


def direct_encoding(sm: StateMachine) -> Graph:
    """One vertex per state and one edge per transition, no flattening."""
    idx = _Index(sm)
    return Graph(
        [Vertex(s.id, _VERTEX_KIND.get(s.kind, "state"), {"name": s.id}) for s in idx.states.values()],
        [Edge(f"t{i}", t.source, t.targets[0], t.event) for i, t in enumerate(sm.transitions)],
    )
