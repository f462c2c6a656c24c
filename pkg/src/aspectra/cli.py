"""Command-line interface.

Exit codes: 0 success, 1 internal error, 2 invalid input, 3 discrepancy
found (``oracle --against``) or conflict found (``analyze --fail-on-conflict``).
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from . import report as rep
from .aspects import DEFAULT_MAX_VARIANTS, CompiledAspect, compile, compile_all, compiled_from_dict, compiled_to_dict, load_concerns
from .cpa import DEFAULT_CAP
from .errors import AspectraError, FormatError
from .graph import Graph
from .oracle import classify_pair, cross_check, load_base
from .rules import rule_to_dot
from .statechart import StateMachine, flatten, validate

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_FINDING = 0, 1, 2, 3
ENV_CAP = "ASPECTRA_MAX_OVERLAPS"


class InputError(Exception):
    """Bad command-line usage; maps to exit code 2."""


@dataclass
class RunConfig:
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    max_overlaps: int = DEFAULT_CAP
    formats: tuple = ("json",)
    seed: int = 0

    def __post_init__(self):
        if self.jobs < 1:
            raise InputError("--jobs must be at least 1")
        if self.max_overlaps < 1:
            raise InputError("--max-overlaps must be at least 1")

    @classmethod
    def from_args(cls, args):
        cap = args.max_overlaps
        if cap is None:
            env = os.environ.get(ENV_CAP)
            try:
                cap = int(env) if env else DEFAULT_CAP
            except ValueError:
                raise InputError(f"{ENV_CAP} must be an integer, got {env!r}") from None
        jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
        return cls(jobs, cap, (args.format,) if args.format else (), args.seed)


# --- io helpers -----------------------------------------------------------


def read_json(path):
    try:
        text = sys.stdin.read() if str(path) == "-" else Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", str(path)) from None


def emit(data, out=None):
    if isinstance(data, str):
        data = data.encode()
    if out in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(out).write_bytes(data)


def dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_model(path) -> StateMachine:
    return StateMachine.from_dict(read_json(path))


def _is_compiled(doc) -> bool:
    return (
        isinstance(doc, dict) and "aspects" in doc and "pointcut" not in doc and "name" not in doc
        and all(isinstance(a, dict) and "rules" in a for a in doc["aspects"])
    )


def load_compiled(path, max_variants=DEFAULT_MAX_VARIANTS) -> list[CompiledAspect]:
    """Compiled rule sets, or aspects/concerns compiled on the fly."""
    doc = read_json(path)
    if _is_compiled(doc):
        return compiled_from_dict(doc)
    return compile_all(load_concerns(doc), max_variants)


# --- commands -------------------------------------------------------------


def cmd_flatten(args, cfg):
    sm = load_model(args.model)
    problems = validate(sm)
    if problems:
        for p in problems:
            print(f"{args.model}: {p}", file=sys.stderr)
        return EXIT_INPUT
    g = flatten(sm, prune_unreachable=args.prune)
    fmt = args.format or "json"
    if fmt == "dot":
        emit(g.to_dot(sm.name), args.out)
    elif fmt == "json":
        emit(dump(g.to_dict()), args.out)
    else:
        raise InputError(f"flatten writes json or dot, not {fmt}")
    return EXIT_OK


def cmd_compile(args, cfg):
    concerns = load_concerns(read_json(args.aspects))
    compiled = compile_all(concerns, args.max_variants)
    fmt = args.format or "json"
    if fmt == "dot":
        text = "".join(rule_to_dot(r) for c in compiled for r in c.rules)
    elif fmt == "json":
        text = dump(compiled_to_dict(compiled))
    else:
        raise InputError(f"compile writes json or dot, not {fmt}")
    if args.stats:
        counts = " ".join(f"{c.name}:{len(c.rules)}" for c in compiled)
        print(f"{counts} total:{sum(len(c.rules) for c in compiled)}".strip())
        if args.out:
            emit(text, args.out)
    else:
        emit(text, args.out)
    return EXIT_OK


def _report_format(fmt):
    fmt = fmt or "json"
    return "document" if fmt == "json" else fmt


def cmd_analyze(args, cfg):
    compiled = load_compiled(args.input)
    stats = {"rule_pairs": 0}
    if args.baseline or args.added:
        if not (args.baseline and args.added):
            raise InputError("--baseline and --added go together")
        matrix, _ = rep.from_document(read_json(args.baseline))
        if [c.name for c in compiled] != list(matrix.aspects):
            raise InputError("the baseline report was not built from these aspects")
        for new in load_compiled(args.added):
            matrix = rep.incremental_update(matrix, compiled, new, cfg.max_overlaps, cfg.jobs, stats)
            compiled = compiled + [new]
    else:
        matrix = rep.analyze_aspects(compiled, cfg.max_overlaps, cfg.jobs, stats)
    tree = rep.joinpoint_tree(matrix)
    fmt = _report_format(args.format)
    if fmt not in rep.FORMATS:
        raise InputError(f"unknown report format {args.format!r}")
    emit(rep.render(matrix, tree, fmt), args.out)
    if args.figures:
        from .plotting import save_figures

        for p in save_figures(matrix, args.figures):
            print(f"wrote {p}", file=sys.stderr)
    if args.stats:
        print(f"rule pairs analysed: {stats['rule_pairs']}", file=sys.stderr)
    undecided = matrix.undecided_pairs()
    if undecided:
        print(f"warning: {len(undecided)} rule pairs undecided (overlap cap {cfg.max_overlaps})", file=sys.stderr)
    if args.fail_on_conflict and any(c.conflicts for c in matrix.cells.values()):
        return EXIT_FINDING
    return EXIT_OK


def _soundness_harness(count, seed):
    from .synthetic import random_additive_aspect, random_statechart

    violations = silent = 0
    for i in range(count):
        rng = random.Random(seed * 1_000_003 + i)
        sm = random_statechart(rng)
        pair = [compile(random_additive_aspect(rng, sm, n)) for n in ("X", "Y")]
        m = rep.analyze_aspects(pair)
        if m.cell("X", "Y").empty and m.cell("Y", "X").empty:
            silent += 1
            v = classify_pair(sm, *pair)
            if v.classification != "independent":
                violations += 1
                print(f"case {i}: analysis silent but oracle says {v.classification}")
    print(f"cases: {count} silent: {silent} violations: {violations}")
    return EXIT_FINDING if violations else EXIT_OK


def cmd_oracle(args, cfg):
    if args.random is not None:
        return _soundness_harness(args.random, cfg.seed)
    if not (args.model and args.aspects):
        raise InputError("oracle needs MODEL and ASPECTS (or --random N)")
    base = load_base(read_json(args.model))
    if isinstance(base, StateMachine):
        problems = validate(base)
        if problems:
            raise InputError("; ".join(map(str, problems)))
    compiled = load_compiled(args.aspects)
    by_name = {c.name: c for c in compiled}
    if args.pair:
        names = [x.strip() for x in args.pair.split(",")]
        if len(names) != 2:
            raise InputError("--pair takes two aspect names: A,B")
        if names[0] == names[1]:
            raise InputError("--pair needs two distinct aspects")
        for n in names:
            if n not in by_name:
                raise InputError(f"unknown aspect {n!r}")
        pairs = [(by_name[names[0]], by_name[names[1]])]
    elif args.all or args.against:
        pairs = [(a, b) for i, a in enumerate(compiled) for b in compiled[i + 1:]]
    else:
        raise InputError("choose --pair A,B or --all")
    g = base if isinstance(base, Graph) else flatten(base)
    verdicts = [classify_pair(g, a, b) for a, b in pairs]
    discrepancies = None
    if args.against:
        matrix, _ = rep.from_document(read_json(args.against))
        discrepancies = cross_check(g, compiled, matrix)
    if (args.format or "table") == "json":
        doc = {"verdicts": [v.to_dict() for v in verdicts]}
        if discrepancies is not None:
            doc["discrepancies"] = [d.to_dict() for d in discrepancies]
        emit(dump(doc), args.out)
    else:
        lines = [f"{v.first} {v.second} {v.classification}" for v in verdicts]
        for d in discrepancies or []:
            lines.append(f"DISCREPANCY {d.aspect_a} {d.aspect_b} oracle={d.oracle} ({d.cpa_summary})")
        if discrepancies is not None:
            lines.append(f"discrepancies: {len(discrepancies)}")
        emit("\n".join(lines) + "\n", args.out)
    return EXIT_FINDING if discrepancies else EXIT_OK


def cmd_export(args, cfg):
    doc = read_json(args.input)
    fmt = args.format or "dot"
    if isinstance(doc, dict) and "conflict_matrix" in doc:
        matrix, tree = rep.from_document(doc)
        if fmt == "png":
            if not args.out:
                raise InputError("png export needs --out DIR")
            from .plotting import save_figures

            for p in save_figures(matrix, args.out):
                print(f"wrote {p}", file=sys.stderr)
            return EXIT_OK
        emit(rep.render(matrix, tree, _report_format(fmt)), args.out)
        return EXIT_OK
    if fmt != "dot":
        raise InputError("graphs, models and rules export to dot only")
    if _is_compiled(doc):
        emit("".join(rule_to_dot(r) for c in compiled_from_dict(doc) for r in c.rules), args.out)
    elif isinstance(doc, dict) and "vertices" in doc:
        emit(Graph.from_dict(doc).to_dot(), args.out)
    elif isinstance(doc, dict) and "states" in doc:
        sm = StateMachine.from_dict(doc)
        problems = validate(sm)
        if problems:
            raise InputError("; ".join(map(str, problems)))
        emit(flatten(sm).to_dot(sm.name), args.out)
    else:
        raise InputError("cannot tell what kind of document this is")
    return EXIT_OK


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv", "table", "dot", "png"])
    common.add_argument("--out", help="output file (default: standard output)")
    common.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")
    common.add_argument("--max-overlaps", type=int, help=f"overlap cap per rule pair (default {DEFAULT_CAP}, or ${ENV_CAP})")
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="aspectra", description="Detect interactions between state-machine aspects.")
    p.add_argument("--version", action="version", version=f"aspectra {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("flatten", parents=[common], help="flatten a state machine into a graph")
    s.add_argument("model")
    s.add_argument("--prune", action="store_true", help="drop unreachable config vertices")
    s.set_defaults(func=cmd_flatten)

    s = sub.add_parser("compile", parents=[common], help="compile aspects into rules")
    s.add_argument("aspects")
    s.add_argument("--stats", action="store_true", help="print rule counts per aspect")
    s.add_argument("--max-variants", type=int, default=DEFAULT_MAX_VARIANTS)
    s.set_defaults(func=cmd_compile)

    s = sub.add_parser("analyze", parents=[common], help="pairwise critical pair analysis")
    s.add_argument("input", help="compiled rules or aspects")
    s.add_argument("--baseline", help="existing report to extend")
    s.add_argument("--added", help="aspects to add to the baseline")
    s.add_argument("--figures", help="directory for heatmap PNGs")
    s.add_argument("--fail-on-conflict", action="store_true")
    s.add_argument("--stats", action="store_true", help="print the number of rule pairs analysed")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("oracle", parents=[common], help="classify aspect pairs by weaving both orders")
    s.add_argument("model", nargs="?")
    s.add_argument("aspects", nargs="?")
    s.add_argument("--pair")
    s.add_argument("--all", action="store_true")
    s.add_argument("--against", help="report whose silent pairs must be independent")
    s.add_argument("--random", type=int, metavar="N", help="run N seeded random soundness cases instead")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("export", parents=[common], help="convert a report, rule set, graph or model")
    s.add_argument("input")
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = RunConfig.from_args(args)
        return args.func(args, cfg)
    except (InputError, AspectraError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - last resort
        print(f"internal error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
