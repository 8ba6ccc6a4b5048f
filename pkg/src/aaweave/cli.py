"""Command-line entry point.

Subcommands: ``weave`` (apply aspects or cascade manifests to a base
assembly), ``simulate`` (replay an event script), ``bench`` (workload
sweep to CSV), ``analyze`` (configuration counts and cost bounds) and
``validate`` (lint aspect sources).

Exit codes: 0 success, 1 usage error, 2 parse or validation error,
3 weave failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis, sim
from .language import AaSyntaxError, parse_aa
from .merge import CallWithoutOriginal, DelegateClash
from .model import assembly_from_json, assembly_to_json, to_dot
from .weaver import Cascade, NameCollision, reweave, union

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_WEAVE = 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_assembly(path: str):
    try:
        return assembly_from_json(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"cannot read assembly {path!r}") from None
    except (json.JSONDecodeError, Exception) as exc:  # model errors included
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: {exc}") from None


def _load_aa(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"cannot read aspect {path!r}") from None
    return parse_aa(text, path=path)


def load_cascade_manifest(path: str) -> Cascade:
    """Manifest JSON: {"name", "namespace", "cycles": [["file.aa", ...], ...]}.

    Cycle entries are aspect paths relative to the manifest, or objects
    {"file": ..., "namespace": ...} to pin an aspect's own namespace.
    """
    manifest_path = Path(path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"cannot read cascade manifest {path!r}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    cycles = []
    for rank in manifest.get("cycles", ()):
        aas = []
        for entry in rank:
            if isinstance(entry, str):
                file_name, namespace = entry, None
            else:
                file_name, namespace = entry["file"], entry.get("namespace")
            aa = _load_aa(str(manifest_path.parent / file_name))
            if namespace is not None:
                aa = aa.with_namespace(namespace)
            aas.append(aa)
        cycles.append(tuple(aas))
    return Cascade(
        name=manifest.get("name", manifest_path.stem),
        namespace=manifest.get("namespace", ""),
        cycles=tuple(cycles),
    )


def _gather_cascades(args) -> list[Cascade]:
    cascades = []
    if getattr(args, "cascade", None):
        cascades.extend(load_cascade_manifest(p) for p in args.cascade)
    if getattr(args, "aa", None):
        aas = tuple(_load_aa(p) for p in args.aa)
        cascades.append(Cascade("mono", "", (aas,)))
    if not cascades:
        raise UsageError("give at least one --aa or --cascade")
    return cascades


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_weave(args) -> int:
    base = _load_assembly(args.base)
    cascades = _gather_cascades(args)
    selection = set(args.select) if args.select else None
    woven, instructions, reports = reweave(base, base, cascades, selection)
    failed = [r for r in reports if r.failure]
    if failed:
        for r in failed:
            print(f"weave failed in cycle {r.cycle}: {r.failure}", file=sys.stderr)
        return EXIT_WEAVE
    _write(args.out, assembly_to_json(woven) + "\n")
    if args.dot:
        Path(args.dot).write_text(to_dot(woven), encoding="utf-8")
    if args.report:
        payload = {"cycles": [r.to_json_dict() for r in reports], "instructions": len(instructions)}
        Path(args.report).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_simulate(args) -> int:
    base = _load_assembly(args.base)
    cascades = _gather_cascades(args)
    try:
        script = sim.parse_script(Path(args.script).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"cannot read script {args.script!r}") from None
    trace = sim.run_scenario(base, cascades, script, weave_duration_ms=args.weave_duration)
    payload = json.dumps(trace.to_json_dict(), indent=2) + "\n"
    _write(args.trace, payload)
    weaves = sum(1 for r in trace.records if r.triggered)
    print(f"{len(trace.records)} events, {weaves} weaves", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    start, stop, step = args.sweep
    rows = sim.run_bench(
        joinpoints=range(start, stop + 1, step),
        p_values=tuple(args.p),
        repetitions=args.reps,
        aa_count=args.aa_count,
        rules_per_aa=args.rules_per_aa,
        seed=args.seed,
    )
    _write(args.csv, sim.bench_rows_to_csv(rows))
    return EXIT_OK


def cmd_analyze(args) -> int:
    result: dict = {}
    if args.fit:
        import csv as csv_mod

        try:
            with open(args.fit, newline="", encoding="utf-8") as handle:
                rows = list(csv_mod.DictReader(handle))
        except FileNotFoundError:
            raise InputError(f"cannot read benchmark CSV {args.fit!r}") from None
        try:
            a1, a2, residual = analysis.fit_cost_model_from_rows(rows)
        except (KeyError, ValueError) as exc:
            raise InputError(f"{args.fit}: not a benchmark CSV ({exc})") from None
        print(json.dumps({"a1": a1, "a2": a2, "rms_residual_us": residual}, indent=2))
        return EXIT_OK
    if args.shape:
        try:
            shape_doc = json.loads(Path(args.shape).read_text(encoding="utf-8"))
        except (FileNotFoundError, json.JSONDecodeError) as exc:
            raise InputError(f"{args.shape}: {exc}") from None
        shape = analysis.CascadeShape(tuple(shape_doc["M"]), tuple(shape_doc["R"]))
        result["multi_configurations"] = analysis.count_cascade_configurations(shape)
        mono = analysis.count_mono_configurations(
            sum(shape.per_cycle_aas) - sum(shape.per_cycle_producers), args.p_a
        )
        result["mono_configurations"] = int(mono) if float(mono).is_integer() else mono
        result["shape"] = {"M": list(shape.per_cycle_aas), "R": list(shape.per_cycle_producers)}
        print(json.dumps(result, indent=2))
        return EXIT_OK

    cascades = _gather_cascades(args)
    combined = cascades[0]
    for extra in cascades[1:]:
        combined = union(combined, extra)
    shape = analysis.derive_shape(combined)
    groups = analysis.dependency_groups(combined)
    card_app0 = 1
    nb_jpoint = 0
    if args.base:
        base = _load_assembly(args.base)
        card_app0 = len(base.components) + len(base.bindings)
        nb_jpoint = sum(len(c.ports) for c in base.components.values())
    per_cycle_rules = analysis.nb_rules_per_cycle(combined)
    pointcut_sizes = [len(aa.advice_params) for rank in combined.cycles for aa in rank]
    per_cycle = [(n, card_app0) for n in per_cycle_rules]
    mono = analysis.mono_collapse_count(combined, args.p_a)
    result = {
        "aspects": sum(shape.per_cycle_aas),
        "shape": {"M": list(shape.per_cycle_aas), "R": list(shape.per_cycle_producers)},
        "dependency_groups": [sorted(g) for g in groups],
        "multi_configurations": analysis.count_cascade_configurations(shape),
        "mono_configurations": int(mono) if float(mono).is_integer() else mono,
        "nb_rules_total": sum(per_cycle_rules),
        "nb_rules_per_cycle": per_cycle_rules,
        "merge_bound_mono": analysis.merge_upper_bound_mono(sum(per_cycle_rules), card_app0),
        "merge_bound_multi": analysis.merge_upper_bound_multi(per_cycle),
        "combinations_mono": analysis.combination_count_mono(nb_jpoint, pointcut_sizes),
        "combinations_multi": analysis.combination_count_multi(nb_jpoint, pointcut_sizes),
    }
    print(json.dumps(result, indent=2))
    return EXIT_OK


def cmd_validate(args) -> int:
    from .language import Instantiate

    status = EXIT_OK
    for path in args.aa:
        try:
            aa = _load_aa(path)
        except AaSyntaxError as exc:
            print(str(exc), file=sys.stderr)
            status = EXIT_INVALID
            continue
        used = {ref.base for rule in aa.rules if not isinstance(rule, Instantiate) for ref in _rule_refs(rule)}
        for local in aa.locals:
            if local not in used:
                print(f"{path}: note: {local!r} is instantiated but never linked", file=sys.stderr)
        print(f"{path}: ok ({aa.name}, {len(aa.pointcut)} pointcut rules, {len(aa.rules)} advice rules)")
    return status


def _rule_refs(rule):
    from .language import Link, PortExpr, Rewrite
    from .optree import iter_refs

    refs = []
    if isinstance(rule, Link):
        refs.append(rule.source)
        refs.extend(r for r in iter_refs(rule.tree) if isinstance(r, PortExpr))
    elif isinstance(rule, Rewrite):
        refs.append(rule.target)
        refs.extend(r for r in iter_refs(rule.tree) if isinstance(r, PortExpr))
    return refs


def _sweep(text: str) -> tuple[int, int, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("sweep must be start:stop:step")
    start, stop, step = (int(p) for p in parts)
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError("sweep must be start:stop:step with step > 0")
    return start, stop, step


def build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="aaweave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    weave = sub.add_parser("weave", help="weave aspects over a base assembly")
    weave.add_argument("--base", required=True, help="base assembly JSON")
    weave.add_argument("--aa", action="append", help="aspect source (repeatable, mono-cycle)")
    weave.add_argument("--cascade", action="append", help="cascade manifest JSON (repeatable)")
    weave.add_argument("--select", action="append", help="enable only these aspects")
    weave.add_argument("--out", help="write final assembly JSON here (default stdout)")
    weave.add_argument("--dot", help="also write a DOT rendering")
    weave.add_argument("--report", help="also write the weave report JSON")
    weave.set_defaults(fn=cmd_weave)

    simulate = sub.add_parser("simulate", help="replay an event script")
    simulate.add_argument("--base", required=True)
    simulate.add_argument("--aa", action="append")
    simulate.add_argument("--cascade", action="append")
    simulate.add_argument("--script", required=True, help="JSONL event script")
    simulate.add_argument("--trace", help="write the trace JSON here (default stdout)")
    simulate.add_argument("--weave-duration", type=int, default=0, help="logical weave busy window (ms)")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.set_defaults(fn=cmd_simulate)

    bench = sub.add_parser("bench", help="run the workload sweep")
    bench.add_argument("--sweep", type=_sweep, default=(0, 120, 20), help="joinpoints start:stop:step")
    bench.add_argument("--p", action="append", type=float, default=None, help="conflict probability (repeatable)")
    bench.add_argument("--reps", type=int, default=3)
    bench.add_argument("--aa-count", type=int, default=12)
    bench.add_argument("--rules-per-aa", type=int, default=2)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--csv", help="write CSV here (default stdout)")
    bench.set_defaults(fn=cmd_bench)

    analyze = sub.add_parser("analyze", help="configuration counts and cost bounds")
    analyze.add_argument("--cascade", action="append")
    analyze.add_argument("--aa", action="append")
    analyze.add_argument("--shape", help="shape JSON {\"M\": [...], \"R\": [...]} instead of manifests")
    analyze.add_argument("--base", help="base assembly, for joinpoint and size figures")
    analyze.add_argument("--p-a", type=float, default=0.0, help="duplication probability")
    analyze.add_argument("--fit", help="fit the duration model from a benchmark CSV")
    analyze.set_defaults(fn=cmd_analyze)

    validate = sub.add_parser("validate", help="lint aspect sources")
    validate.add_argument("--aa", action="append", required=True)
    validate.set_defaults(fn=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "bench" and args.p is None:
            args.p = [0.0, 0.33, 0.5]
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except AaSyntaxError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    except (InputError, sim.ScriptError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    except (DelegateClash, CallWithoutOriginal, NameCollision) as exc:
        print(f"weave failed: {exc}", file=sys.stderr)
        return EXIT_WEAVE


if __name__ == "__main__":
    sys.exit(main())
