"""Aspects (pointcut + advice) and their compilation into rule sets.

A pointcut names states and transitions of a flattened model.  Two
constructs multiply the number of rules an aspect compiles to:

* a reference to a substate of an orthogonal state matches one config
  vertex, so it expands into one rule per config containing that substate;
* an xor group of alternative transitions expands into one rule per
  alternative, each with NACs forbidding the other alternatives.

Compilation never looks at a base model: member references carry the
region structure of their orthogonal state with them.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

from .errors import CompileError, DuplicateAspectName, ExpansionOverflow, FormatError
from .graph import CONFIG_SEP, Edge, Graph, Vertex
from .rules import Rule

DEFAULT_MAX_VARIANTS = 4096


@dataclass(frozen=True)
class CompositeDecl:
    """Region structure of an orthogonal state, restated inside a pattern."""

    name: str
    regions: tuple  # tuple of tuples of state ids, top region first
    initials: tuple

    def region_of(self, state) -> int:
        for k, r in enumerate(self.regions):
            if state in r:
                return k
        raise CompileError(f"{state!r} is not a substate of {self.name!r}")

    def configs_with(self, members) -> list[str]:
        fixed = {}
        for m in members:
            k = self.region_of(m)
            if k in fixed:
                raise CompileError(f"{fixed[k]!r} and {m!r} share a region of {self.name!r}")
            fixed[k] = m
        choices = [[fixed[k]] if k in fixed else list(r) for k, r in enumerate(self.regions)]
        return [CONFIG_SEP.join(c) for c in itertools.product(*choices)]

    def fork_config(self, targets) -> str:
        fixed = {self.region_of(t): t for t in targets}
        return CONFIG_SEP.join(fixed.get(k, init) for k, init in enumerate(self.initials))

    def to_dict(self):
        return {
            "name": self.name,
            "regions": [{"initial": i, "states": list(r)} for i, r in zip(self.initials, self.regions)],
        }

    @classmethod
    def from_dict(cls, doc, where):
        try:
            regions, initials = [], []
            for r in doc["regions"]:
                if isinstance(r, Mapping):
                    states = [str(x) for x in r["states"]]
                    initials.append(str(r.get("initial", states[0])))
                else:
                    states = [str(x) for x in r]
                    initials.append(states[0])
                regions.append(tuple(states))
            if len(regions) < 2:
                raise FormatError("an orthogonal state needs at least two regions", where)
            return cls(str(doc["name"]), tuple(regions), tuple(initials))
        except (KeyError, IndexError, TypeError) as exc:
            raise FormatError(f"bad composite declaration ({exc})", where) from None


@dataclass(frozen=True)
class StateRef:
    """One pointcut state: plain, a sequential composite, or a config member."""

    id: str
    name: str
    kind: str = "state"
    substates: tuple = ()
    composite: CompositeDecl | None = None
    members: tuple = ()

    @property
    def is_member(self):
        return self.composite is not None

    @property
    def is_sequential(self):
        return bool(self.substates)

    def to_dict(self):
        d = {"id": self.id}
        if self.is_member:
            d["composite"] = self.composite.to_dict()
            d["members"] = list(self.members)
            return d
        d["name"] = self.name
        if self.kind != "state":
            d["kind"] = self.kind
        if self.substates:
            d["substates"] = list(self.substates)
        return d


@dataclass(frozen=True)
class EdgePattern:
    id: str
    source: str
    target: str
    event: str


@dataclass
class Pattern:
    states: list = field(default_factory=list)
    transitions: list = field(default_factory=list)
    xor_groups: list = field(default_factory=list)
    exposed: list = field(default_factory=list)


@dataclass(frozen=True)
class CreatedState:
    id: str
    name: str
    kind: str = "state"


@dataclass(frozen=True)
class CreatedTransition:
    source: str
    target: str
    event: str
    kind: str = "simple"


@dataclass
class Advice:
    create_states: list = field(default_factory=list)
    create_transitions: list = field(default_factory=list)
    delete: list = field(default_factory=list)


@dataclass
class Aspect:
    name: str
    pointcut: Pattern
    advice: Advice

    def to_dict(self) -> dict:
        p, a = self.pointcut, self.advice
        return {
            "name": self.name,
            "pointcut": {
                "states": [s.to_dict() for s in p.states],
                "transitions": [
                    {"id": t.id, "source": t.source, "target": t.target, "event": t.event}
                    for t in p.transitions
                ],
                "xor_groups": [list(g) for g in p.xor_groups],
                "exposed": list(p.exposed),
            },
            "advice": {
                "create_states": [
                    {"id": s.id, "name": s.name, "kind": s.kind} for s in a.create_states
                ],
                "create_transitions": [
                    {"source": t.source, "target": t.target, "event": t.event, "kind": t.kind}
                    for t in a.create_transitions
                ],
                "delete": list(a.delete),
            },
        }

    @classmethod
    def from_dict(cls, doc, where="aspect") -> "Aspect":
        if not isinstance(doc, Mapping):
            raise FormatError("expected an aspect object", where)
        try:
            name = str(doc["name"])
            pc, adv = doc.get("pointcut", {}), doc.get("advice", {})
            states = []
            for i, s in enumerate(pc.get("states", [])):
                w = f"{where}.pointcut.states[{i}]"
                if isinstance(s, str):
                    states.append(StateRef(s, s))
                elif "composite" in s:
                    members = s.get("members") or ([s["member"]] if "member" in s else [])
                    if not members:
                        raise FormatError("member reference needs 'members'", w)
                    states.append(StateRef(
                        str(s["id"]), CONFIG_SEP.join(members), "config", (),
                        CompositeDecl.from_dict(s["composite"], f"{w}.composite"),
                        tuple(str(m) for m in members),
                    ))
                else:
                    states.append(StateRef(
                        str(s["id"]), str(s.get("name", s["id"])), str(s.get("kind", "state")),
                        tuple(str(x) for x in s.get("substates", ())),
                    ))
            transitions = [
                EdgePattern(str(t.get("id", f"t{i}")), str(t["source"]), str(t["target"]), str(t["event"]))
                for i, t in enumerate(pc.get("transitions", []))
            ]
            xor_groups = [[int(i) for i in g] for g in pc.get("xor_groups", [])]
            exposed = [str(x) for x in pc.get("exposed", [])]
            created = []
            for s in adv.get("create_states", []):
                if isinstance(s, str):
                    created.append(CreatedState(s, s))
                else:
                    created.append(CreatedState(str(s["id"]), str(s.get("name", s["id"])), str(s.get("kind", "state"))))
            ctrans = []
            for t in adv.get("create_transitions", []):
                target = t["target"] if "target" in t else t["targets"]
                if isinstance(target, list):
                    raise FormatError("use one pointcut reference as 'target' (forks target a member reference)", where)
                ctrans.append(CreatedTransition(str(t["source"]), str(target), str(t["event"]), str(t.get("kind", "simple"))))
            delete = [str(x) for x in adv.get("delete", [])]
        except KeyError as exc:
            raise FormatError(f"missing field {exc}", where) from None
        except (TypeError, AttributeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(str(exc), where) from None
        return cls(name, Pattern(states, transitions, xor_groups, exposed), Advice(created, ctrans, delete))


@dataclass
class Concern:
    name: str
    aspects: list = field(default_factory=list)

    def to_dict(self):
        return {"name": self.name, "aspects": [a.to_dict() for a in self.aspects]}


@dataclass
class CompiledAspect:
    name: str
    rules: list

    def to_dict(self):
        return {"name": self.name, "rules": [r.to_dict() for r in self.rules]}

    @classmethod
    def from_dict(cls, doc, where="aspect"):
        if not isinstance(doc, Mapping) or "name" not in doc:
            raise FormatError("expected a compiled aspect with 'name' and 'rules'", where)
        return cls(str(doc["name"]), [Rule.from_dict(r, f"{where}.rules[{i}]") for i, r in enumerate(doc.get("rules", []))])


def load_concerns(doc) -> list[Concern]:
    """Accept a concern, a list of concerns, ``{"concerns": [...]}`` or one aspect."""
    if isinstance(doc, Mapping) and "concerns" in doc:
        doc = doc["concerns"]
    if isinstance(doc, Mapping) and "pointcut" in doc:
        a = Aspect.from_dict(doc)
        return [Concern(a.name, [a])]
    if isinstance(doc, Mapping):
        doc = [doc]
    if not isinstance(doc, list):
        raise FormatError("expected a concern or a list of concerns", "concerns")
    out = []
    for i, c in enumerate(doc):
        w = f"concerns[{i}]"
        if not isinstance(c, Mapping) or "aspects" not in c:
            raise FormatError("a concern needs 'name' and 'aspects'", w)
        out.append(Concern(
            str(c.get("name", f"concern{i}")),
            [Aspect.from_dict(a, f"{w}.aspects[{j}]") for j, a in enumerate(c["aspects"])],
        ))
    return out


def compiled_to_dict(compiled) -> dict:
    return {"aspects": [c.to_dict() for c in compiled]}


def compiled_from_dict(doc) -> list[CompiledAspect]:
    if not isinstance(doc, Mapping) or "aspects" not in doc:
        raise FormatError("expected {'aspects': [...]} of compiled rule sets", "rules")
    return [CompiledAspect.from_dict(a, f"aspects[{i}]") for i, a in enumerate(doc["aspects"])]


# --- compilation ----------------------------------------------------------


def _check(aspect: Aspect):
    p, a = aspect.pointcut, aspect.advice
    where = aspect.name
    refs = {}
    for s in p.states:
        if s.id in refs:
            raise CompileError(f"{where}: duplicate pointcut state id {s.id!r}")
        refs[s.id] = s
        if s.is_member:
            s.composite.configs_with(s.members)
        if s.kind not in ("state", "initial", "final", "config"):
            raise CompileError(f"{where}: state {s.id!r} has unknown kind {s.kind!r}")
    tids = set()
    for t in p.transitions:
        if t.id in tids or t.id in refs:
            raise CompileError(f"{where}: duplicate pointcut element id {t.id!r}")
        tids.add(t.id)
        for end in (t.source, t.target):
            if end not in refs:
                raise CompileError(f"{where}: transition {t.id!r} refers to unknown state {end!r}")
            if refs[end].is_sequential:
                raise CompileError(
                    f"{where}: transition {t.id!r} attaches to sequential state {end!r}; reference a substate"
                )
    seen = set()
    for g in p.xor_groups:
        if len(g) < 2:
            raise CompileError(f"{where}: xor group {g} needs at least two alternatives")
        for i in g:
            if not 0 <= i < len(p.transitions):
                raise CompileError(f"{where}: xor group refers to transition #{i}, which does not exist")
            if i in seen:
                raise CompileError(f"{where}: transition #{i} is in two xor groups")
            seen.add(i)
    for x in p.exposed:
        if x not in refs and x not in tids:
            raise CompileError(f"{where}: exposed element {x!r} is not in the pointcut")
    created = {}
    for s in a.create_states:
        if s.id in refs or s.id in tids or s.id in created:
            raise CompileError(f"{where}: created state id {s.id!r} is already in use")
        if s.kind not in ("state", "initial", "final"):
            raise CompileError(f"{where}: created state {s.id!r} has unknown kind {s.kind!r}")
        created[s.id] = s
    usable = set(p.exposed) | set(created)
    for t in a.create_transitions:
        for end in (t.source, t.target):
            if end not in usable:
                raise CompileError(f"{where}: advice uses {end!r}, which is neither exposed nor created")
        if t.kind not in ("simple", "fork"):
            raise CompileError(f"{where}: advice transition kind {t.kind!r} is not supported")
        if t.kind == "fork":
            ref = refs.get(t.target)
            if ref is None or not ref.is_member or len(ref.members) < 2:
                raise CompileError(
                    f"{where}: a fork must target a member reference naming substates of two or more regions"
                )
    for x in a.delete:
        if x not in p.exposed:
            raise CompileError(f"{where}: deleted element {x!r} is not exposed")
    return refs, created


def _exclusions(p: Pattern, refs, chosen_alternatives):
    """Configs a chosen alternative may not bind: those matching a sibling too."""
    excluded = {}
    for group, i in chosen_alternatives:
        ti = p.transitions[i]
        for j in group:
            if j == i:
                continue
            tj = p.transitions[j]
            if tj.event != ti.event:
                continue
            for mine, theirs, other_i, other_j in (
                (ti.target, tj.target, ti.source, tj.source),
                (ti.source, tj.source, ti.target, tj.target),
            ):
                a, b = refs[mine], refs[theirs]
                if other_i == other_j and a.is_member and b.is_member and a.composite == b.composite and mine != theirs:
                    excluded.setdefault(mine, set()).update(b.composite.configs_with(b.members))
    return excluded


def _vertex_for(ref: StateRef, config=None) -> Vertex:
    if ref.is_member:
        return Vertex(f"c:{config}", "config", {"name": config})
    return Vertex(f"s:{ref.name}", ref.kind, {"name": ref.name})


def _ref_vertices(ref: StateRef, config=None) -> list[Vertex]:
    if ref.is_sequential:
        return [Vertex(f"s:{x}", "state", {"name": x}) for x in ref.substates]
    return [_vertex_for(ref, config)]


def _variants(aspect: Aspect, refs, max_variants):
    p = aspect.pointcut
    in_xor = {i for g in p.xor_groups for i in g}
    fork_targets = {t.target for t in aspect.advice.create_transitions if t.kind == "fork"}
    plans = []
    total = 0
    for choice in itertools.product(*p.xor_groups):
        chosen = set(choice)
        active = [i for i in range(len(p.transitions)) if i not in in_xor or i in chosen]
        inactive = [i for i in sorted(in_xor) if i not in chosen]
        used_active = {e for i in active for e in (p.transitions[i].source, p.transitions[i].target)}
        used_inactive = {e for i in inactive for e in (p.transitions[i].source, p.transitions[i].target)}
        present = [s for s in p.states if s.id in used_active or s.id not in used_inactive]
        excluded = _exclusions(p, refs, list(zip(p.xor_groups, choice)))
        axes = []
        for s in present:
            if not s.is_member:
                continue
            if s.id in fork_targets:
                configs = [s.composite.fork_config(s.members)]
            else:
                configs = [c for c in s.composite.configs_with(s.members) if c not in excluded.get(s.id, ())]
            axes.append((s.id, configs))
        n = 1
        for _, configs in axes:
            n *= len(configs)
        total += n
        if total > max_variants:
            raise ExpansionOverflow(f"{aspect.name}: more than {max_variants} rule variants")
        plans.append((active, inactive, present, axes))
    return plans


def compile(aspect: Aspect, max_variants: int = DEFAULT_MAX_VARIANTS) -> CompiledAspect:
    """Compile ``aspect`` into rules named ``{aspect}-R{k}``, k counting from 1."""
    refs, created = _check(aspect)
    p, adv = aspect.pointcut, aspect.advice
    rules = []
    for active, inactive, present, axes in _variants(aspect, refs, max_variants):
        present_ids = {s.id for s in present}
        for needed in [x for t in adv.create_transitions for x in (t.source, t.target)] + list(adv.delete):
            if needed in refs and needed not in present_ids:
                raise CompileError(f"{aspect.name}: advice uses {needed!r}, which only some xor alternatives match")
        for combo in itertools.product(*(configs for _, configs in axes)):
            binding = {sid: c for (sid, _), c in zip(axes, combo)}
            rules.append(_build_rule(
                f"{aspect.name}-R{len(rules) + 1}", p, adv, refs, created, active, inactive, present, binding,
            ))
    if not rules:
        raise CompileError(f"{aspect.name}: pointcut expands to no rules")
    return CompiledAspect(aspect.name, rules)


def _build_rule(name, p, adv, refs, created, active, inactive, present, binding) -> Rule:
    verts: dict[str, Vertex] = {}
    refvert: dict[str, list[str]] = {}
    for s in present:
        vs = _ref_vertices(s, binding.get(s.id))
        for v in vs:
            verts.setdefault(v.id, v)
        refvert[s.id] = [v.id for v in vs]
    edges = [
        Edge(f"p:{p.transitions[i].id}", refvert[p.transitions[i].source][0],
             refvert[p.transitions[i].target][0], p.transitions[i].event)
        for i in active
    ]
    lhs = Graph(verts.values(), edges)

    nacs = []
    for i in inactive:
        t = p.transitions[i]
        ends = []
        for end in (t.source, t.target):
            if end in refvert:
                ends.append([verts[refvert[end][0]]])
            elif refs[end].is_member:
                ref = refs[end]
                ends.append([_vertex_for(ref, c) for c in ref.composite.configs_with(ref.members)])
            else:
                ends.append([_vertex_for(refs[end])])
        for src, tgt in itertools.product(*ends):
            extra = {v.id: v for v in (src, tgt) if v.id not in verts}
            nacs.append(Graph(
                list(verts.values()) + list(extra.values()),
                edges + [Edge(f"n:{t.id}", src.id, tgt.id, t.event)],
            ))

    tids = {t.id: f"p:{t.id}" for t in p.transitions}
    doomed = set()
    for x in adv.delete:
        if x in tids:
            doomed.add(tids[x])
        else:
            doomed.update(refvert[x])
    for v in list(doomed):
        if v in lhs.vertices:
            doomed |= lhs.incident(v)
    new_vertices = [Vertex(f"n:{s.id}", s.kind, {"name": s.name}) for s in adv.create_states]
    endpoint = {**refvert, **{s.id: [f"n:{s.id}"] for s in adv.create_states}}
    new_edges = []
    for k, t in enumerate(adv.create_transitions):
        srcs, tgts = endpoint[t.source], endpoint[t.target]
        if any(v in doomed for v in srcs + tgts):
            raise CompileError(f"{name}: advice connects to a state it deletes")
        pairs = list(itertools.product(srcs, tgts))
        for j, (a, b) in enumerate(pairs):
            eid = f"a:{k}" if len(pairs) == 1 else f"a:{k}.{j}"
            new_edges.append(Edge(eid, a, b, t.event))
    rhs = lhs.edit(doomed, new_vertices, new_edges)
    return Rule(name, lhs, rhs, tuple(nacs))


def compile_all(concerns, max_variants: int = DEFAULT_MAX_VARIANTS) -> list[CompiledAspect]:
    seen = set()
    out = []
    for c in concerns:
        for a in c.aspects:
            if a.name in seen:
                raise DuplicateAspectName(f"aspect name {a.name!r} is used twice")
            seen.add(a.name)
            out.append(compile(a, max_variants))
    return out


def expected_rule_count(aspect: Aspect) -> int:
    """Config multiplicities times xor sizes, ignoring sibling exclusions."""
    p = aspect.pointcut
    fork_targets = {t.target for t in aspect.advice.create_transitions if t.kind == "fork"}
    n = 1
    for s in p.states:
        if s.is_member and s.id not in fork_targets:
            n *= len(s.composite.configs_with(s.members))
    for g in p.xor_groups:
        n *= len(g)
    return n
