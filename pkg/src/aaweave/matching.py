"""Joinpoint collection, pointcut matching and the advice factory.

A joinpoint is one port of one component, with the component's metadata
along for filter evaluation.  Matching an aspect yields candidate
joinpoints per variable; the cartesian product of the candidates gives the
combinations and every combination turns into one grounded advice
instance, with fresh names for instantiated components.

Visibility encodes the staging rules for cascades: base components are
always eligible, woven components only when they were woven in a strictly
earlier cycle and their namespace is the global one or the requester's
own.  Nothing woven in the current cycle is ever matchable.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .language import AspectOfAssembly, Instantiate, Link, PortExpr, Rewrite
from .model import PROVIDED, REQUIRED, Component, PortRef, PortSpec, Woven
from .optree import OperatorTree, iter_refs, map_leaves

GLOBAL_NAMESPACE = ""


@dataclass(frozen=True)
class Joinpoint:
    port: PortRef
    metadata: dict
    provenance: Woven | None = None

    def key(self) -> tuple:
        return self.port.key()


@dataclass(frozen=True, slots=True)
class Visibility:
    cycle_index: int = 0
    requesting_namespace: str = GLOBAL_NAMESPACE


@dataclass(frozen=True)
class Combination:
    assignment: dict[str, Joinpoint]


@dataclass(frozen=True, slots=True)
class GroundLink:
    source: PortRef
    tree: OperatorTree


@dataclass(frozen=True, slots=True)
class GroundRewrite:
    target: PortRef
    tree: OperatorTree


@dataclass(frozen=True)
class AdviceInstance:
    aa_name: str
    namespace: str
    combination: Combination
    components: tuple[Component, ...]
    grounded_rules: tuple[GroundLink | GroundRewrite, ...]


class FreshNames:
    """Per-stem counters for fresh component ids, skipping taken ids."""

    def __init__(self, taken=()):
        self._taken = set(taken)
        self._counters: dict[str, int] = {}

    def fresh(self, stem: str) -> str:
        n = self._counters.get(stem, 0)
        while True:
            n += 1
            candidate = f"{stem}{n}"
            if candidate not in self._taken:
                break
        self._counters[stem] = n
        self._taken.add(candidate)
        return candidate


def collect_joinpoints(assembly, vis: Visibility, currently_weaving=frozenset()) -> list[Joinpoint]:
    out: list[Joinpoint] = []
    for cid in sorted(assembly.components):
        c = assembly.components[cid]
        p = c.provenance
        if p is not None:
            if p.aa_name in currently_weaving:
                continue
            if p.cycle >= vis.cycle_index:
                continue
            if p.namespace not in (GLOBAL_NAMESPACE, vis.requesting_namespace):
                continue
        for port in sorted(c.ports, key=lambda s: (s.direction, s.name)):
            out.append(Joinpoint(PortRef(cid, port.name, port.direction), c.metadata, p))
    return out


def match_pointcut(joinpoints, aa: AspectOfAssembly, _cache: dict | None = None) -> dict[str, list[Joinpoint]]:
    """Candidate joinpoints per pointcut variable, in canonical order.

    ``_cache`` may be shared across aspects matched against the same
    joinpoint list; rules repeated verbatim are then evaluated once.
    """
    out: dict[str, list[Joinpoint]] = {}
    for rule in aa.pointcut:
        cache_key = (rule.pattern, rule.filters)
        if _cache is not None and cache_key in _cache:
            out[rule.variable] = _cache[cache_key]
            continue
        matched = []
        by_component: dict[str, bool] = {}
        for jp in joinpoints:
            cid = jp.port.component_id
            ok = by_component.get(cid)
            if ok is None:
                ok = rule.pattern.matches_component(cid)
                by_component[cid] = ok
            if not ok:
                continue
            if not rule.pattern.matches_port(jp.port.port_name, jp.port.direction):
                continue
            if rule.filters and not all(f.evaluate(jp.metadata) for f in rule.filters):
                continue
            matched.append(jp)
        out[rule.variable] = matched
        if _cache is not None:
            _cache[cache_key] = matched
    return out


def combinations(candidates: dict[str, list[Joinpoint]]) -> list[Combination]:
    """Full cartesian product over variables; empty when any variable is dry.

    An aspect with no variables yields exactly one empty combination.
    """
    variables = sorted(candidates)
    out = []
    for choice in itertools.product(*(candidates[v] for v in variables)):
        out.append(Combination(dict(zip(variables, choice))))
    return out


@dataclass(frozen=True)
class _FactoryPlan:
    """Per-aspect grounding plan, computed once and stashed on the aspect."""

    inits: tuple[Instantiate, ...]
    local_ports: dict[str, tuple[PortSpec, ...]]
    arrows: tuple[tuple[type, PortExpr, OperatorTree], ...]


def _factory_plan(aa: AspectOfAssembly) -> _FactoryPlan:
    plan = aa.__dict__.get("_factory_plan")
    if plan is not None:
        return plan
    inits = tuple(r for r in aa.rules if isinstance(r, Instantiate))
    local_ports: dict[str, set[PortSpec]] = {r.local_name: set() for r in inits}

    def note_local(expr: PortExpr, direction: str) -> None:
        if expr.base in local_ports and expr.port:
            local_ports[expr.base].add(PortSpec(expr.port, direction))

    arrows = []
    for rule in aa.rules:
        match rule:
            case Instantiate():
                continue
            case Link(source=src, tree=tree):
                note_local(src, REQUIRED)
                for ref in iter_refs(tree):
                    note_local(ref, PROVIDED)
                arrows.append((GroundLink, src, tree))
            case Rewrite(target=tgt, tree=tree):
                note_local(tgt, PROVIDED)
                for ref in iter_refs(tree):
                    note_local(ref, PROVIDED)
                arrows.append((GroundRewrite, tgt, tree))
    plan = _FactoryPlan(
        inits,
        {
            name: tuple(sorted(specs, key=lambda s: (s.direction, s.name)))
            for name, specs in local_ports.items()
        },
        tuple(arrows),
    )
    object.__setattr__(aa, "_factory_plan", plan)
    return plan


def instantiate_advice(
    aa: AspectOfAssembly,
    combination: Combination,
    fresh: FreshNames,
    *,
    cycle: int = 0,
    namespace: str | None = None,
) -> AdviceInstance:
    """Ground one combination: substitute variables, allocate fresh ids.

    Instantiated components get a port list inferred from how the advice
    itself touches them; ports referenced only by later aspects surface
    when those bindings are applied.
    """
    ns = namespace if namespace is not None else (aa.namespace or GLOBAL_NAMESPACE)
    prov = Woven(aa.name, cycle, ns)
    plan = _factory_plan(aa)
    local_ids = {rule.local_name: fresh.fresh(rule.local_name) for rule in plan.inits}
    assignment = combination.assignment

    def ground(expr: PortExpr) -> PortRef:
        local = local_ids.get(expr.base)
        if local is not None:
            return PortRef(local, expr.port, REQUIRED if expr.required else PROVIDED)
        jp = assignment[expr.base].port
        if expr.port is None:
            return jp
        return PortRef(jp.component_id, expr.port, REQUIRED if expr.required else PROVIDED)

    grounded = tuple(
        kind(ground(expr), map_leaves(tree, ground)) for kind, expr, tree in plan.arrows
    )
    components = tuple(
        Component(
            id=local_ids[rule.local_name],
            type_name=rule.type_name,
            properties=dict(rule.init_props),
            metadata={"type": rule.type_name},
            ports=plan.local_ports[rule.local_name],
            provenance=prov,
        )
        for rule in plan.inits
    )
    return AdviceInstance(aa.name, ns, combination, components, grounded)
