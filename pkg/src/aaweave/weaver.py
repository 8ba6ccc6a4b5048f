"""End-to-end weaving: mono-cycle, cascaded multi-cycle, union, re-weave.

A weave never mutates its input assembly.  Every cycle runs match ->
combine -> instantiate -> merge -> lower on its input and applies the
resulting instructions; cascades fold cycles in rank order, so each cycle
sees everything earlier cycles produced.  Withdrawal is recomputation: the
target configuration is always rewoven from the aspect-free base and the
difference against the currently deployed assembly is emitted as
instructions.

Aspects inside one cycle are processed in a canonical order, which
together with the symmetric merge operator makes results independent of
how callers happen to order their aspect sets.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

from .language import AspectOfAssembly
from .matching import (
    GLOBAL_NAMESPACE,
    FreshNames,
    Visibility,
    collect_joinpoints,
    combinations,
    instantiate_advice,
    match_pointcut,
)
from .merge import DelegateClash, detect_conflicts, lower, merge_group
from .model import Assembly, Instruction, apply_instructions, diff


class NameCollision(Exception):
    """Two distinct aspects share a (namespace, name) pair."""


@dataclass(frozen=True)
class Cascade:
    """An ordered list of unordered aspect sets, one set per weaving cycle."""

    name: str
    namespace: str = GLOBAL_NAMESPACE
    cycles: tuple[tuple[AspectOfAssembly, ...], ...] = ()

    def resolved(self) -> list[list[tuple[AspectOfAssembly, str]]]:
        """Per-cycle (aspect, effective namespace) pairs."""
        out = []
        for rank in self.cycles:
            out.append([(aa, aa.namespace if aa.namespace is not None else self.namespace) for aa in rank])
        return out

    def aa_names(self) -> set[str]:
        return {aa.name for rank in self.cycles for aa in rank}


@dataclass
class WeaveReport:
    cycle: int = 0
    applied: list[tuple[str, int, int]] = field(default_factory=list)  # (aa, cycle, combinations)
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (aa, reason)
    conflict_groups: int = 0
    conflict_fraction: float = 0.0
    merge_ops: int = 0
    durations_us: dict[str, float] = field(default_factory=dict)
    # (aspect, producer) pairs where a pointcut bound another aspect's
    # product; cross-cascade triggering is surfaced here, not policed.
    cross_aspect_matches: list[tuple[str, str]] = field(default_factory=list)
    failure: str | None = None

    def total_us(self) -> float:
        return sum(self.durations_us.values())

    def to_json_dict(self) -> dict:
        return {
            "cycle": self.cycle,
            "applied": [
                {"aa": aa, "cycle": cycle, "combinations": n} for aa, cycle, n in self.applied
            ],
            "skipped": [{"aa": aa, "reason": reason} for aa, reason in self.skipped],
            "conflict_groups": self.conflict_groups,
            "conflict_fraction": round(self.conflict_fraction, 6),
            "merge_ops": self.merge_ops,
            "durations_us": {k: round(v, 3) for k, v in self.durations_us.items()},
            "cross_aspect_matches": [
                {"aa": aa, "producer": producer} for aa, producer in self.cross_aspect_matches
            ],
            "failure": self.failure,
        }


def _now_us() -> float:
    return time.perf_counter_ns() / 1000.0


def _weave_cycle(
    base: Assembly,
    pairs: list[tuple[AspectOfAssembly, str]],
    cycle_index: int,
    fresh: FreshNames,
) -> tuple[Assembly, WeaveReport]:
    report = WeaveReport(cycle=cycle_index)
    durations = {"match": 0.0, "combine": 0.0, "factory": 0.0, "merge": 0.0, "lower": 0.0}
    weaving_names = {aa.name for aa, _ in pairs}
    instances = []
    joinpoints_by_ns: dict[str, list] = {}
    match_cache_by_ns: dict[str, dict] = {}

    for aa, namespace in sorted(pairs, key=lambda p: (p[1], p[0].name)):
        t0 = _now_us()
        joinpoints = joinpoints_by_ns.get(namespace)
        if joinpoints is None:
            vis = Visibility(cycle_index, namespace)
            joinpoints = collect_joinpoints(base, vis, weaving_names)
            joinpoints_by_ns[namespace] = joinpoints
            match_cache_by_ns[namespace] = {}
        candidates = match_pointcut(joinpoints, aa, match_cache_by_ns[namespace])
        durations["match"] += _now_us() - t0

        t0 = _now_us()
        combos = combinations(candidates)
        durations["combine"] += _now_us() - t0
        if not combos:
            dry = sorted(v for v, js in candidates.items() if not js)
            report.skipped.append((aa.name, f"no joinpoint for {', '.join(dry)}"))
            continue

        t0 = _now_us()
        for combo in combos:
            instances.append(
                instantiate_advice(aa, combo, fresh, cycle=cycle_index, namespace=namespace)
            )
        durations["factory"] += _now_us() - t0
        report.applied.append((aa.name, cycle_index, len(combos)))
        crossed = {
            (aa.name, jp.provenance.aa_name)
            for combo in combos
            for jp in combo.assignment.values()
            if jp.provenance is not None and jp.provenance.aa_name != aa.name
        }
        report.cross_aspect_matches.extend(sorted(crossed))

    t0 = _now_us()
    groups, plan = detect_conflicts(base, instances, cycle=cycle_index)
    try:
        for group in groups:
            plan.groups[group.anchor] = merge_group(group)
            report.merge_ops += len(group.trees) - 1
    except DelegateClash as clash:
        durations["merge"] += _now_us() - t0
        report.durations_us = durations
        report.failure = str(clash)
        return base, report
    durations["merge"] += _now_us() - t0

    conflicts = sum(1 for g in groups if g.is_conflict())
    anchors = len(groups) + len(plan.plain_bindings)
    report.conflict_groups = conflicts
    report.conflict_fraction = conflicts / anchors if anchors else 0.0

    t0 = _now_us()
    instructions = lower(plan, fresh, cycle=cycle_index)
    result = apply_instructions(base, instructions)
    durations["lower"] += _now_us() - t0
    report.durations_us = durations
    return result, report


def weave_cycle(
    base: Assembly,
    aas,
    cycle_index: int = 0,
    namespace: str = GLOBAL_NAMESPACE,
    fresh: FreshNames | None = None,
) -> tuple[Assembly, WeaveReport]:
    """One mono-cycle weave of an aspect set over a base assembly."""
    fresh = fresh or FreshNames(taken=base.components)
    pairs = [(aa, aa.namespace if aa.namespace is not None else namespace) for aa in aas]
    return _weave_cycle(base, _dedupe(pairs), cycle_index, fresh)


def _dedupe(pairs) -> list[tuple[AspectOfAssembly, str]]:
    """The input is a set: repeats collapse, same-name different bodies clash."""
    seen: dict[tuple[str, str], AspectOfAssembly] = {}
    out = []
    for aa, ns in pairs:
        key = (ns, aa.name)
        prior = seen.get(key)
        if prior is None:
            seen[key] = aa
            out.append((aa, ns))
        elif prior != aa:
            raise NameCollision(f"aspect {aa.name!r} defined twice in namespace {ns!r}")
    return out


def weave_cascade(base: Assembly, cascades) -> tuple[Assembly, list[WeaveReport]]:
    """Fold all cascades cycle by cycle; same-rank sets weave together.

    A failing cycle aborts the fold: the output of the cycles before it is
    returned together with the failure report.
    """
    resolved = [c.resolved() for c in cascades]
    depth = max((len(r) for r in resolved), default=0)
    reports: list[WeaveReport] = []
    fresh = FreshNames(taken=base.components)
    current = base
    for i in range(depth):
        rank = [pair for r in resolved if i < len(r) for pair in r[i]]
        current, report = _weave_cycle(current, _dedupe(rank), i, fresh)
        reports.append(report)
        if report.failure:
            break
    return current, reports


def union(ca: Cascade, cb: Cascade) -> Cascade:
    """Rank-wise set union.

    Aspects keep their effective namespace: ones that inherited it from
    their cascade get it pinned when the union's own namespace would
    resolve differently.
    """
    result_ns = ca.namespace if ca.namespace == cb.namespace else GLOBAL_NAMESPACE
    ra, rb = ca.resolved(), cb.resolved()
    depth = max(len(ra), len(rb))
    cycles: list[tuple[AspectOfAssembly, ...]] = []
    for i in range(depth):
        merged: dict[tuple[str, str], AspectOfAssembly] = {}
        for r in (ra, rb):
            if i < len(r):
                for aa, ns in r[i]:
                    resolved_ns = aa.namespace if aa.namespace is not None else result_ns
                    pinned = aa if resolved_ns == ns else aa.with_namespace(ns)
                    key = (ns, aa.name)
                    prior = merged.get(key)
                    if prior is not None and prior != pinned:
                        raise NameCollision(
                            f"aspect {aa.name!r} defined twice in namespace {ns!r}"
                        )
                    merged[key] = pinned
        cycles.append(tuple(merged[k] for k in sorted(merged)))
    return Cascade(f"{ca.name}+{cb.name}", result_ns, tuple(cycles))


def select_aspects(cascades, selection) -> list[Cascade]:
    """Restrict cascades to the enabled aspect names (None keeps all)."""
    if selection is None:
        return list(cascades)
    out = []
    for c in cascades:
        cycles = tuple(tuple(aa for aa in rank if aa.name in selection) for rank in c.cycles)
        out.append(replace(c, cycles=cycles))
    return out


def reweave(
    current: Assembly,
    base: Assembly,
    cascades,
    selection=None,
) -> tuple[Assembly, list[Instruction], list[WeaveReport]]:
    """Recompute the target from the aspect-free base and diff against
    what is deployed, so withdrawing an aspect removes exactly its
    contributions."""
    target, reports = weave_cascade(base, select_aspects(cascades, selection))
    return target, diff(current, target), reports
