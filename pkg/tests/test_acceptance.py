"""Acceptance gate: one test per shipped guarantee, each printing a verdict.

Run with ``pytest tests/test_acceptance.py -s`` to see the verdict lines.
"""
import itertools
import json
import random
import statistics
import time

from aaweave.analysis import merge_upper_bound_mono, merge_upper_bound_multi, nb_rules
from aaweave.cli import main
from aaweave.merge import _merge_cached, merge, normalize
from aaweave.model import canonical_equal, provided
from aaweave.optree import CALL, NOP, If, Leaf, Par, Seq, sort_key
from aaweave.sim import (
    WorkloadSpec,
    continuum_workload,
    generate_workload,
    run_bench,
    spearman_rho,
)
from aaweave.weaver import Cascade, reweave, weave_cascade, weave_cycle


def _verdict(number: int, name: str, ok: bool, detail: str = "") -> None:
    state = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {number} {name}: {state}{suffix}")
    assert ok, f"criterion {number} {name}{suffix}"


# ---------------------------------------------------------------------------
# 1. merge algebra laws

LEAVES = [Leaf(provided(c, "p")) for c in "abc"]
CONDS = [provided("c1", "t"), provided("c2", "t")]


def _exhaustive_corpus():
    atoms = LEAVES + [NOP, CALL]
    raw = list(atoms)
    for cond in CONDS:
        for a in atoms:
            for b in atoms:
                raw.append(If(cond, a, b))
    for a in atoms:
        for b in atoms:
            raw.append(Seq((a, b)))
            raw.append(Par((a, b)))
    corpus, seen = [], set()
    for tree in raw:
        n = normalize(tree)
        key = sort_key(n)
        if key not in seen:
            seen.add(key)
            corpus.append(n)
    return corpus


def _random_tree(rng: random.Random, depth: int):
    kinds = ["leaf", "nop", "call"]
    if depth > 0:
        kinds += ["if", "seq", "par"] * 2
    kind = rng.choice(kinds)
    if kind == "leaf":
        return rng.choice(LEAVES)
    if kind == "nop":
        return NOP
    if kind == "call":
        return CALL
    if kind == "if":
        return If(rng.choice(CONDS), _random_tree(rng, depth - 1), _random_tree(rng, depth - 1))
    children = tuple(_random_tree(rng, depth - 1) for _ in range(rng.randint(2, 3)))
    return Seq(children) if kind == "seq" else Par(children)


def test_criterion_1_merge_algebra_laws():
    started = time.perf_counter()
    violations = 0

    corpus = _exhaustive_corpus()
    assert len(corpus) == 86
    for t in corpus:
        if merge(t, t) != t:
            violations += 1
    for a, b in itertools.combinations(corpus, 2):
        if _merge_cached(a, b) != _merge_cached(b, a):
            violations += 1
    for a, b, c in itertools.combinations_with_replacement(corpus, 3):
        if _merge_cached(_merge_cached(a, b), c) != _merge_cached(a, _merge_cached(b, c)):
            violations += 1

    rng = random.Random(20260811)
    pool = [normalize(_random_tree(rng, 4)) for _ in range(1000)]
    for t in pool:
        if merge(t, t) != t:
            violations += 1
    for _ in range(5000):
        a, b = rng.choice(pool), rng.choice(pool)
        if _merge_cached(a, b) != _merge_cached(b, a):
            violations += 1
    for _ in range(5000):
        a, b, c = rng.choice(pool), rng.choice(pool), rng.choice(pool)
        if _merge_cached(_merge_cached(a, b), c) != _merge_cached(a, _merge_cached(b, c)):
            violations += 1

    elapsed = time.perf_counter() - started
    _verdict(
        1,
        "merge algebra laws",
        violations == 0 and elapsed < 60.0,
        f"{violations} violations, {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# 2. canonical worked merge


def test_criterion_2_canonical_merge_example():
    light_on = Leaf(provided("light", "on"))
    threshold = provided("threshold", "IsReached")
    got = merge(light_on, If(threshold, NOP, CALL))
    _verdict(2, "leaf x if(nop, call) reproduction", got == If(threshold, NOP, light_on))


# ---------------------------------------------------------------------------
# 3. order independence


def test_criterion_3_order_independence(fixtures_dir, hospital_base, mono_cascade, scenario_cascade):
    from aaweave.language import parse_aa

    failures = 0

    hospital_aas = list(mono_cascade.cycles[0])
    reference, _ = weave_cycle(hospital_base, hospital_aas)
    for perm in itertools.permutations(hospital_aas):
        woven, _ = weave_cycle(hospital_base, list(perm))
        if not canonical_equal(reference, woven):
            failures += 1

    for seed in range(50):
        spec = WorkloadSpec(
            seed=seed, joinpoint_count=8, aa_count=4, rules_per_aa=2, conflict_probability=0.33
        )
        assembly, cascades = generate_workload(spec)
        aas = list(cascades[0].cycles[0])
        reference, _ = weave_cycle(assembly, aas)
        for perm in itertools.permutations(aas):
            woven, _ = weave_cycle(assembly, list(perm))
            if not canonical_equal(reference, woven):
                failures += 1

    reference, _ = weave_cascade(hospital_base, [scenario_cascade])
    for perm1 in itertools.permutations(scenario_cascade.cycles[1]):
        for perm2 in itertools.permutations(scenario_cascade.cycles[2]):
            shuffled = Cascade("s", "", (scenario_cascade.cycles[0], tuple(perm1), tuple(perm2)))
            woven, _ = weave_cascade(hospital_base, [shuffled])
            if not canonical_equal(reference, woven):
                failures += 1

    _verdict(3, "permutation-independent weaving", failures == 0, f"{failures} mismatches")


# ---------------------------------------------------------------------------
# 4. scenario configuration counts


def test_criterion_4_scenario_configuration_counts(fixtures_dir, capsys):
    code = main(["analyze", "--cascade", str(fixtures_dir / "scenario.cascade.json")])
    out = capsys.readouterr().out
    doc = json.loads(out)
    ok = code == 0 and doc["multi_configurations"] == 32 and doc["mono_configurations"] == 4
    with capsys.disabled():
        _verdict(
            4,
            "scenario configuration counts",
            ok,
            f"multi={doc['multi_configurations']}, mono={doc['mono_configurations']}",
        )


# ---------------------------------------------------------------------------
# 5. cost inequalities


def _splits(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _splits(total - head, parts - 1):
            yield (head,) + rest


def test_criterion_5_cost_inequalities():
    violations = 0
    for card in (1, 2, 5):
        for total in range(13):
            for parts in (2, 3):
                for split in _splits(total, parts):
                    multi = merge_upper_bound_multi([(r, card) for r in split])
                    if multi > merge_upper_bound_mono(total, card):
                        violations += 1
    for nb_jpoint in range(2, 11):
        for parts in (2, 3):
            for sizes in itertools.product(range(1, 4), repeat=parts):
                s = sum(nb_jpoint**k for k in sizes)
                prod = 1
                for k in sizes:
                    prod *= nb_jpoint**k
                if s > prod:
                    violations += 1

    bound_breaches = 0
    for seed in range(100):
        spec = WorkloadSpec(
            seed=seed,
            joinpoint_count=20,
            aa_count=6,
            rules_per_aa=2,
            conflict_probability=0.33,
            cycles=1 if seed < 50 else 2,
        )
        assembly, cascades = generate_workload(spec)
        _, reports = weave_cascade(assembly, cascades)
        aas = [aa for rank in cascades[0].cycles for aa in rank]
        card0 = len(assembly.components) + len(assembly.bindings)
        measured = sum(r.merge_ops for r in reports)
        if measured > merge_upper_bound_mono(nb_rules(aas), card0):
            bound_breaches += 1
        per_cycle = [(nb_rules(rank), card0) for rank in cascades[0].cycles]
        if any(
            r.merge_ops > merge_upper_bound_mono(nb_rules(rank), card0)
            for r, rank in zip(reports, cascades[0].cycles)
        ) or measured > merge_upper_bound_multi(per_cycle):
            bound_breaches += 1

    _verdict(
        5,
        "cost inequalities",
        violations == 0 and bound_breaches == 0,
        f"{violations} analytic, {bound_breaches} measured breaches",
    )


# ---------------------------------------------------------------------------
# 6. field-trial-scale latency


def test_criterion_6_field_trial_latency():
    assembly, cascades = continuum_workload()
    aas = [aa for rank in cascades[0].cycles for aa in rank]
    woven, reports = weave_cascade(assembly, cascades)
    instances = sum(n for r in reports for _, _, n in r.applied)
    fraction = reports[0].conflict_fraction

    durations_ms = []
    for _ in range(30):
        t0 = time.perf_counter_ns()
        weave_cascade(assembly, cascades)
        durations_ms.append((time.perf_counter_ns() - t0) / 1e6)
    median_ms = statistics.median(durations_ms)

    ok = (
        len(aas) == 18
        and nb_rules(aas) == 25
        and len(assembly.components) == 17
        and instances == 25
        and 0.30 <= fraction <= 0.40
        and median_ms < 50.0
    )
    _verdict(
        6,
        "field-trial-scale latency",
        ok,
        f"median={median_ms:.2f}ms, instances={instances}, conflict fraction={fraction:.3f}",
    )


# ---------------------------------------------------------------------------
# 7. withdrawal correctness


def test_criterion_7_withdrawal(hospital_base, mono_cascade):
    from aaweave.model import apply_instructions

    full, _ = weave_cascade(hospital_base, [mono_cascade])
    names = mono_cascade.aa_names()

    reduced_target, instrs, _ = reweave(full, hospital_base, [mono_cascade], names - {"brightness_light"})
    withdrawn = apply_instructions(full, instrs)
    scratch_reduced, _ = weave_cascade(
        hospital_base,
        [Cascade("r", "", tuple(tuple(a for a in rank if a.name != "brightness_light") for rank in mono_cascade.cycles))],
    )
    ok_withdraw = withdrawn == reduced_target and canonical_equal(withdrawn, scratch_reduced)

    restored_target, instrs2, _ = reweave(withdrawn, hospital_base, [mono_cascade], names)
    restored = apply_instructions(withdrawn, instrs2)
    ok_restore = canonical_equal(restored, full)

    _verdict(7, "withdrawal and re-selection", ok_withdraw and ok_restore)


# ---------------------------------------------------------------------------
# 8. namespace isolation


def _marker_cascade(tag: str, namespace: str) -> Cascade:
    from aaweave.language import parse_aa

    maker = parse_aa(
        "Pointcut:\n  hub := /hub.^tick/\nAdvice:\n"
        f"schema make_{tag}(hub):\n  marker : 'test.Marker';\n  hub -> (marker.in)\n"
    )
    prober = parse_aa(
        "Pointcut:\n  m := /marker[:digit:].in/\nAdvice:\n"
        f"schema probe_{tag}(m):\n  probe : 'test.Probe';\n  probe.^out -> (m)\n"
    )
    return Cascade(tag, namespace, ((maker,), (prober,)))


def test_criterion_8_namespace_isolation():
    from aaweave.model import Assembly, Component, PortSpec, REQUIRED

    base = Assembly.build([Component("hub", "test.Hub", ports=(PortSpec("tick", REQUIRED),))], [])
    cascades = [_marker_cascade("a", "nsA"), _marker_cascade("b", "nsB"), _marker_cascade("g", "")]
    woven, _ = weave_cascade(base, cascades)

    violations = 0
    reach: dict[str, set[str]] = {}
    for b in woven.bindings:
        if b.source.port_name != "out":
            continue
        prober_ns = woven.components[b.source.component_id].provenance.namespace
        marker_ns = woven.components[b.target.component_id].provenance.namespace
        reach.setdefault(prober_ns, set()).add(marker_ns)
        if marker_ns not in ("", prober_ns):
            violations += 1
    # every private cascade reached the global marker, and only its own
    for ns in ("nsA", "nsB"):
        if reach.get(ns) != {"", ns}:
            violations += 1
    if reach.get("") != {""}:
        violations += 1
    _verdict(8, "namespace isolation", violations == 0, f"{violations} violations")


# ---------------------------------------------------------------------------
# 9. benchmark shape


def test_criterion_9_bench_shape():
    # Minimum over repetitions is the noise-robust per-point estimate.
    rows = run_bench(joinpoints=range(0, 121, 30), p_values=(0.33,), repetitions=7)
    by_j: dict[int, list[dict]] = {}
    for row in rows:
        by_j.setdefault(row["joinpoints"], []).append(row)
    js = sorted(by_j)
    fastest = {j: min(by_j[j], key=lambda r: r["total_us"]) for j in js}
    totals = [fastest[j]["total_us"] for j in js]
    top = fastest[js[-1]]
    merge_share = top["merge_us"] / top["total_us"]
    rho = spearman_rho(js, totals)
    _verdict(
        9,
        "benchmark shape",
        merge_share >= 0.5 and rho > 0.9,
        f"merge share={merge_share:.1%} at {js[-1]} joinpoints, spearman={rho:.3f}",
    )
