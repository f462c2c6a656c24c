"""Seeded generators of small state machines and aspects for property runs."""
from __future__ import annotations

import random

from .aspects import Advice, Aspect, CompositeDecl, CreatedState, CreatedTransition, EdgePattern, Pattern, StateRef
from .statechart import Region, State, StateMachine, Transition

EVENTS = ("a", "b", "c", "d")


def random_statechart(rng: random.Random, max_states: int = 10) -> StateMachine:
    """A valid machine with at most ``max_states`` states (pseudo-states excluded).

    About a third of the machines contain one orthogonal composite with two
    regions of two substates each.
    """
    orthogonal = rng.random() < 0.35 and max_states >= 6
    n_plain = rng.randint(2, max_states - (4 if orthogonal else 0))
    plain = [f"s{i}" for i in range(n_plain)]
    states = [State("init", "initial")] + [State(s) for s in plain]
    regions = []
    if orthogonal:
        regions = [["u0", "u1"], ["w0", "w1"]]
        states.append(State("Par", "composite", True, [Region(r[0], [State(x) for x in r]) for r in regions]))
    transitions = [Transition("init", [plain[0]], "start")]
    for _ in range(rng.randint(n_plain, 2 * n_plain + 2)):
        a, b = rng.choice(plain), rng.choice(plain)
        transitions.append(Transition(a, [b], rng.choice(EVENTS)))
    if orthogonal:
        transitions.append(Transition(rng.choice(plain), ["Par"], rng.choice(EVENTS)))
        transitions.append(Transition("Par", [rng.choice(plain)], rng.choice(EVENTS)))
        for r in regions:
            transitions.append(Transition(r[0], [r[1]], rng.choice(EVENTS)))
    return StateMachine("random", states, transitions)


def _composite_decl(sm: StateMachine):
    for s in sm.states:
        if s.kind == "composite" and s.orthogonal:
            return CompositeDecl(
                s.id, tuple(tuple(x.id for x in r.states) for r in s.regions), tuple(r.initial for r in s.regions)
            )
    return None


def random_additive_aspect(rng: random.Random, sm: StateMachine, name: str, pool=("n0", "n1")) -> Aspect:
    """An aspect that only creates elements.

    Pointcut states are drawn from the machine's plain states plus ``pool``,
    names that other aspects may create, so dependencies occur regularly.
    """
    plain = [s.id for s in sm.states if s.kind == "simple"]
    decl = _composite_decl(sm)
    refs = []
    for i in range(rng.randint(1, 2)):
        nm = rng.choice(plain + list(pool))
        refs.append(StateRef(f"p{i}", nm))
    if decl is not None and rng.random() < 0.4:
        k = rng.randrange(len(decl.regions))
        refs.append(StateRef("m", "", "config", (), decl, (rng.choice(decl.regions[k]),)))
    # plain refs of the same name are one vertex; keep one of each
    seen, uniq = set(), []
    for r in refs:
        key = r.name if not r.is_member else ("m",)
        if key not in seen:
            seen.add(key)
            uniq.append(r)
    refs = uniq
    transitions, xor = [], []
    if len(refs) >= 2 and rng.random() < 0.5:
        a, b = rng.sample(refs, 2)
        transitions.append(EdgePattern("t0", a.id, b.id, rng.choice(EVENTS)))
        if rng.random() < 0.4:
            transitions.append(EdgePattern("t1", a.id, b.id, rng.choice(EVENTS)))
            xor.append([0, 1])
    exposed = [r.id for r in refs]
    created = []
    if rng.random() < 0.6:
        created.append(CreatedState("x", rng.choice(list(pool) + plain)))
    ends = exposed + [c.id for c in created]
    ctrans = [
        CreatedTransition(rng.choice(ends), rng.choice(ends), rng.choice(EVENTS))
        for _ in range(rng.randint(0 if created else 1, 2))
    ]
    return Aspect(name, Pattern(refs, transitions, xor, exposed), Advice(created, ctrans, []))


def pots_like_aspects(n: int = 40, seed: int = 0, offset: int = 0) -> list[Aspect]:
    """``n`` feature-style aspects of two rules each (one xor of two alternatives).

    Names are ``F{offset}``, ``F{offset+1}``, ... State names come from a
    shared vocabulary so that interactions are common but not universal.
    """
    rng = random.Random(seed)
    vocab = ["idle", "dialing", "ringing", "talking", "busy", "held"]
    events = ["off_hook", "on_hook", "dial", "answer", "flash"]
    out = []
    for i in range(offset, offset + n):
        a, b, c = rng.sample(vocab, 3)
        e1, e2 = rng.sample(events, 2)
        refs = [StateRef("a", a), StateRef("b", b)]
        if rng.random() < 0.5:
            refs.append(StateRef("c", c))  # required to exist, not connected
        pattern = Pattern(
            refs,
            [EdgePattern("t0", "a", "b", e1), EdgePattern("t1", "a", "b", e2)],
            [[0, 1]],
            ["a", "b"],
        )
        created = [CreatedState("x", rng.choice(vocab))] if rng.random() < 0.5 else []
        target = "x" if created else "b"
        advice = Advice(created, [CreatedTransition("a", target, rng.choice(events))], [])
        out.append(Aspect(f"F{i}", pattern, advice))
    return out
