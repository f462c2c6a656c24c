"""Aspect-level interaction matrices built from rule-level CPA verdicts.

Cell ``(A, B)`` collects every critical pair whose first rule belongs to A
and whose second rule belongs to B, so a conflict there means "applying A
first can disable B" and a dependency means "B can depend on A".  Pairs of
rules from the same aspect are never analysed.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from dataclasses import dataclass, field

from . import __version__
from .cpa import DEFAULT_CAP, CriticalPair, analyze_rules
from .errors import DuplicateAspectName, FormatError, UnknownFormat, UnparseableRuleName
from .graph import Graph, canonical_form, dot_quote

FORMATS = ("table", "csv", "document", "dot")
_RULE_NAME = re.compile(r"^(.+)-R([1-9][0-9]*)$")


def parse_rule_name(name: str) -> tuple[str, int]:
    m = _RULE_NAME.match(name)
    if not m:
        raise UnparseableRuleName(f"rule name {name!r} is not of the form '<aspect>-R<k>'")
    return m.group(1), int(m.group(2))


@dataclass
class Cell:
    conflicts: list = field(default_factory=list)
    dependencies: list = field(default_factory=list)
    undecided_pairs: list = field(default_factory=list)

    @property
    def undecided(self) -> bool:
        return bool(self.undecided_pairs)

    @property
    def empty(self) -> bool:
        return not (self.conflicts or self.dependencies or self.undecided_pairs)


@dataclass
class InteractionMatrix:
    aspects: list
    cells: dict
    rule_pair_count: int = 0

    def cell(self, first, second) -> Cell:
        if first == second:
            return Cell()
        return self.cells[(first, second)]

    def conflicting(self, a, b) -> bool:
        """Symmetric summary: a conflict in either application order."""
        return bool(self.cell(a, b).conflicts or self.cell(b, a).conflicts)

    def depends_on(self, dependent, provider) -> bool:
        return bool(self.cell(provider, dependent).dependencies)

    def undecided(self, a, b) -> bool:
        return self.cell(a, b).undecided or self.cell(b, a).undecided

    def summary(self) -> dict:
        return {
            (a, b): (len(c.conflicts), len(c.dependencies), c.undecided)
            for (a, b), c in sorted(self.cells.items(), key=lambda kv: self._order(kv[0]))
        }

    def undecided_pairs(self) -> list:
        return [p for k in self._sorted_keys() for p in self.cells[k].undecided_pairs]

    def _order(self, key):
        pos = {a: i for i, a in enumerate(self.aspects)}
        return pos[key[0]], pos[key[1]]

    def _sorted_keys(self):
        return sorted(self.cells, key=self._order)


@dataclass
class JoinpointNode:
    overlap: Graph
    aspects: dict  # aspect name -> sorted rule names


@dataclass
class JoinpointTree:
    nodes: dict  # short digest of the overlap's canonical form -> JoinpointNode


def _empty_matrix(aspects) -> InteractionMatrix:
    return InteractionMatrix(list(aspects), {(a, b): Cell() for a in aspects for b in aspects if a != b})


def _rule_order(name):
    a, k = parse_rule_name(name)
    return a, k


def aggregate(compiled, verdicts) -> InteractionMatrix:
    """Fold rule-pair verdicts into an aspect-by-aspect matrix."""
    names = [c.name for c in compiled]
    m = _empty_matrix(names)
    known = set(names)
    for key in sorted(verdicts, key=lambda k: (_rule_order(k[0]), _rule_order(k[1]))):
        v = verdicts[key]
        a, _ = parse_rule_name(v.first)
        b, _ = parse_rule_name(v.second)
        if a == b:
            continue
        if a not in known or b not in known:
            raise UnparseableRuleName(f"rule pair {v.first}/{v.second} names an aspect outside the analysed set")
        c = m.cells[(a, b)]
        c.conflicts.extend(v.conflicts)
        c.dependencies.extend(v.dependencies)
        if v.undecided:
            c.undecided_pairs.append((v.first, v.second))
        m.rule_pair_count += 1
    return m


def inter_aspect_pairs(compiled, only=None) -> list[tuple[str, str]]:
    """Ordered rule pairs across distinct aspects; with ``only``, those touching it."""
    out = []
    for ca in compiled:
        for cb in compiled:
            if ca.name == cb.name:
                continue
            if only is not None and only not in (ca.name, cb.name):
                continue
            out.extend((r1.name, r2.name) for r1 in ca.rules for r2 in cb.rules)
    return out


def analyze_aspects(compiled, cap: int = DEFAULT_CAP, jobs: int = 1, stats=None) -> InteractionMatrix:
    rules = [r for c in compiled for r in c.rules]
    verdicts = analyze_rules(rules, cap, pairs=inter_aspect_pairs(compiled), jobs=jobs, stats=stats)
    return aggregate(compiled, verdicts)


def incremental_update(matrix: InteractionMatrix, compiled, new_aspect, cap: int = DEFAULT_CAP,
                       jobs: int = 1, stats=None) -> InteractionMatrix:
    """Extend ``matrix`` with ``new_aspect``, analysing only pairs that involve it."""
    if new_aspect.name in matrix.aspects:
        raise DuplicateAspectName(f"aspect {new_aspect.name!r} is already in the matrix")
    if [c.name for c in compiled] != list(matrix.aspects):
        raise ValueError("compiled aspects do not match the matrix")
    everything = list(compiled) + [new_aspect]
    rules = [r for c in everything for r in c.rules]
    verdicts = analyze_rules(rules, cap, pairs=inter_aspect_pairs(everything, only=new_aspect.name),
                             jobs=jobs, stats=stats)
    fresh = aggregate(everything, verdicts)
    for key, cell in matrix.cells.items():
        fresh.cells[key] = cell
    fresh.rule_pair_count += matrix.rule_pair_count
    return fresh


def _all_pairs(source):
    if isinstance(source, InteractionMatrix):
        for k in source._sorted_keys():
            c = source.cells[k]
            yield from c.conflicts
            yield from c.dependencies
        return
    for key in sorted(source, key=lambda k: (_rule_order(k[0]), _rule_order(k[1]))):
        v = source[key]
        yield from v.conflicts
        yield from v.dependencies


def overlap_digest(g: Graph) -> str:
    return hashlib.sha256(canonical_form(g)).hexdigest()[:16]


def joinpoint_tree(source) -> JoinpointTree:
    """Group critical pairs of distinct aspects by the shape of their overlap.

    ``source`` is a rule-pair verdict map or an :class:`InteractionMatrix`.
    """
    nodes: dict[str, JoinpointNode] = {}
    for cp in _all_pairs(source):
        a, _ = parse_rule_name(cp.first)
        b, _ = parse_rule_name(cp.second)
        if a == b:
            continue
        key = overlap_digest(cp.overlap)
        node = nodes.setdefault(key, JoinpointNode(cp.overlap, {}))
        for asp, rule in ((a, cp.first), (b, cp.second)):
            rules = node.aspects.setdefault(asp, [])
            if rule not in rules:
                rules.append(rule)
    for node in nodes.values():
        node.aspects = {k: sorted(v, key=_rule_order) for k, v in sorted(node.aspects.items())}
    return JoinpointTree(dict(sorted(nodes.items())))


# --- documents ------------------------------------------------------------


def _cell_doc(pairs, undecided):
    return {"pairs": [cp.to_dict() for cp in pairs], "undecided": undecided}


def to_document(matrix: InteractionMatrix, tree: JoinpointTree | None = None) -> dict:
    """Report document; ``dependency_matrix[X][Y]`` lists how X depends on Y."""
    if tree is None:
        tree = joinpoint_tree(matrix)
    conflict, dependency = {}, {}
    for a in matrix.aspects:
        conflict[a], dependency[a] = {}, {}
        for b in matrix.aspects:
            if a == b:
                continue
            c = matrix.cells[(a, b)]
            conflict[a][b] = _cell_doc(c.conflicts, c.undecided)
            back = matrix.cells[(b, a)]
            dependency[a][b] = _cell_doc(back.dependencies, back.undecided)
    return {
        "aspects": list(matrix.aspects),
        "conflict_matrix": conflict,
        "dependency_matrix": dependency,
        "joinpoint_tree": {
            k: {"overlap": n.overlap.to_dict(), "aspects": n.aspects} for k, n in tree.nodes.items()
        },
        "meta": {
            "rule_pair_count": matrix.rule_pair_count,
            "undecided_pairs": [list(p) for p in matrix.undecided_pairs()],
            "engine_version": __version__,
        },
    }


def from_document(doc) -> tuple[InteractionMatrix, JoinpointTree]:
    try:
        aspects = [str(a) for a in doc["aspects"]]
        m = _empty_matrix(aspects)
        for a in aspects:
            for b in aspects:
                if a == b:
                    continue
                m.cells[(a, b)].conflicts = [
                    CriticalPair.from_dict(p) for p in doc["conflict_matrix"][a][b]["pairs"]
                ]
                # dependency_matrix is keyed by the dependent aspect
                m.cells[(b, a)].dependencies = [
                    CriticalPair.from_dict(p) for p in doc["dependency_matrix"][a][b]["pairs"]
                ]
        for first, second in doc["meta"]["undecided_pairs"]:
            a, _ = parse_rule_name(first)
            b, _ = parse_rule_name(second)
            m.cells[(a, b)].undecided_pairs.append((first, second))
        m.rule_pair_count = int(doc["meta"]["rule_pair_count"])
        tree = JoinpointTree({
            k: JoinpointNode(Graph.from_dict(n["overlap"], f"joinpoint_tree.{k}"),
                             {a: list(r) for a, r in n["aspects"].items()})
            for k, n in doc["joinpoint_tree"].items()
        })
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed report document ({exc!r})", "report") from None
    return m, tree


def dumps_document(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# --- rendering ------------------------------------------------------------


def glyph(matrix: InteractionMatrix, row, col) -> str:
    """Table glyph for ``row`` against ``col``; D means row depends on col."""
    if row == col:
        return "-"
    g = ("C" if matrix.conflicting(row, col) else "") + ("D" if matrix.depends_on(row, col) else "")
    if g:
        return g
    return "?" if matrix.undecided(row, col) else "."


def render_table(matrix: InteractionMatrix) -> str:
    names = matrix.aspects
    width = max([len(n) for n in names] + [len("aspect"), 2])
    lines = [" ".join(["aspect".ljust(width)] + [n.rjust(width) for n in names]).rstrip()]
    for r in names:
        lines.append(" ".join([r.ljust(width)] + [glyph(matrix, r, c).rjust(width) for c in names]))
    return "\n".join(lines) + "\n"


CSV_HEADER = ["first", "second", "conflicts", "dependencies", "undecided"]


def render_csv(matrix: InteractionMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for (a, b), (nc, nd, und) in matrix.summary().items():
        w.writerow([a, b, nc, nd, int(und)])
    return buf.getvalue()


def parse_csv(text: str) -> dict:
    """Inverse of :func:`render_csv` on the summary fields."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CSV_HEADER:
        raise FormatError(f"expected header {','.join(CSV_HEADER)}", "csv")
    out = {}
    for n, row in enumerate(rows[1:], 2):
        if len(row) != len(CSV_HEADER):
            raise FormatError(f"expected {len(CSV_HEADER)} fields", f"csv line {n}")
        out[(row[0], row[1])] = (int(row[2]), int(row[3]), row[4] == "1")
    return out


def render_dot(matrix: InteractionMatrix) -> str:
    lines = ["digraph interactions {"]
    for a in matrix.aspects:
        lines.append(f"  {dot_quote(a)};")
    for a, b in matrix._sorted_keys():
        c = matrix.cells[(a, b)]
        if c.conflicts:
            lines.append(f"  {dot_quote(a)} -> {dot_quote(b)} [color=red, label={dot_quote(f'conflict x{len(c.conflicts)}')}];")
        if c.dependencies:
            # drawn from the dependent aspect to the one it relies on
            lines.append(f"  {dot_quote(b)} -> {dot_quote(a)} [color=blue, label={dot_quote(f'depends x{len(c.dependencies)}')}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def render(matrix: InteractionMatrix, tree: JoinpointTree | None = None, format: str = "table") -> bytes:
    if format == "table":
        text = render_table(matrix)
    elif format == "csv":
        text = render_csv(matrix)
    elif format in ("document", "json"):
        text = dumps_document(to_document(matrix, tree))
    elif format == "dot":
        text = render_dot(matrix)
    else:
        raise UnknownFormat(f"unknown report format {format!r}; choose from {', '.join(FORMATS)}")
    return text.encode()
