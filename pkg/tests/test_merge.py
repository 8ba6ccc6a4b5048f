import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aaweave.language import parse_aa
from aaweave.matching import FreshNames, Visibility, collect_joinpoints, combinations, instantiate_advice, match_pointcut
from aaweave.merge import (
    CallWithoutOriginal,
    DelegateClash,
    RewriteGroup,
    detect_conflicts,
    lower,
    merge,
    merge_group,
    normalize,
    _merge_cached,
)
from aaweave.model import (
    PROVIDED,
    REQUIRED,
    AddBinding,
    AddComponent,
    Assembly,
    Binding,
    Component,
    PortSpec,
    RemoveBinding,
    apply_instructions,
    provided,
    required,
)
from aaweave.optree import CALL, NOP, Delegate, If, Leaf, Par, Seq, sort_key

light_on = Leaf(provided("light", "on"))
shutter_open = Leaf(provided("shutter", "open"))
a, b, c = (Leaf(provided(x, "p")) for x in "abc")
c1, c2 = provided("cond1", "t"), provided("cond2", "t")
threshold = provided("threshold", "IsReached")


# ---------------------------------------------------------------------------
# directed merge examples


def test_nop_absorbs():
    assert merge(NOP, light_on) == NOP


def test_call_is_neutral():
    assert merge(CALL, light_on) == light_on


def test_distinct_leaves_become_parallel():
    assert merge(a, b) == Par((a, b))


def test_leaf_into_if_with_nop_and_call_branches():
    # The canonical worked example: the original interaction is absorbed in
    # the then branch and survives via call in the else branch.
    got = merge(light_on, If(threshold, NOP, CALL))
    assert got == If(threshold, NOP, light_on)


def test_equal_conditions_merge_pointwise():
    got = merge(If(c1, a, b), If(c1, c, NOP))
    assert got == If(c1, merge(a, c), NOP)


def test_unequal_conditions_nest():
    got = merge(If(c1, a, b), If(c2, c, NOP))
    expected = If(
        c1,
        If(c2, merge(a, c), NOP),
        If(c2, merge(b, c), NOP),
    )
    assert got == expected
    assert merge(If(c2, c, NOP), If(c1, a, b)) == expected


def test_idempotency_examples():
    for tree in (a, NOP, CALL, Par((a, b)), Seq((a, b)), If(c1, a, b), Delegate(a)):
        assert merge(tree, tree) == normalize(tree)


def test_seq_is_atomic():
    s1, s2 = Seq((a, b)), Seq((b, a))
    assert merge(s1, s1) == s1
    assert merge(s1, s2) == Par(tuple(sorted((s1, s2), key=sort_key)))
    assert merge(s1, c) == Par((c, s1))


# ---------------------------------------------------------------------------
# delegate behavior


def test_delegate_wins_over_plain_trees():
    d = Delegate(a)
    assert merge(d, b) == d
    assert merge(d, Seq((a, b))) == d
    assert merge(d, Par((b, c))) == d
    assert merge(NOP, d) == NOP
    assert merge(CALL, d) == d
    assert merge(If(c1, a, b), d) == If(c1, merge(a, d), merge(b, d))


def test_delegate_clash_is_symmetric_and_deterministic():
    with pytest.raises(DelegateClash) as e1:
        merge(Delegate(a), Delegate(b))
    with pytest.raises(DelegateClash) as e2:
        merge(Delegate(b), Delegate(a))
    assert str(e1.value) == str(e2.value)


def test_delegate_clash_propagates_from_group():
    group = RewriteGroup(required("s", "p"), (Delegate(a), Delegate(b), c), ())
    with pytest.raises(DelegateClash):
        merge_group(group)


# ---------------------------------------------------------------------------
# normalize


def test_par_flattening_and_sorting():
    assert normalize(Par((Par((b, a)), c))) == Par((a, b, c))


def test_par_dedupe_collapses_to_single_child():
    assert normalize(Par((a, a))) == a


def test_call_eliminated_among_par_siblings():
    assert normalize(Par((CALL, a))) == a
    assert normalize(Par((CALL, a))) == merge(CALL, a)


def test_nop_kept_inert_inside_par():
    assert normalize(Par((NOP, a))) == Par((a, NOP))


def test_seq_flattens_but_keeps_order():
    assert normalize(Seq((Seq((b, a)), c))) == Seq((b, a, c))


@settings(max_examples=300, deadline=None)
@given(st.deferred(lambda: trees(3)))
def test_normalize_is_idempotent(tree):
    once = normalize(tree)
    assert normalize(once) == once


# ---------------------------------------------------------------------------
# law suite (random; the exhaustive corpus runs in the acceptance module)


def trees(depth: int):
    leaf = st.sampled_from([a, b, c, NOP, CALL])
    if depth == 0:
        return leaf
    sub = st.deferred(lambda: trees(depth - 1))
    return st.one_of(
        leaf,
        st.tuples(st.sampled_from([c1, c2]), sub, sub).map(lambda t: If(*t)),
        st.lists(sub, min_size=2, max_size=3).map(lambda ch: Seq(tuple(ch))),
        st.lists(sub, min_size=2, max_size=3).map(lambda ch: Par(tuple(ch))),
    )


@settings(max_examples=400, deadline=None)
@given(st.deferred(lambda: trees(3)), st.deferred(lambda: trees(3)))
def test_merge_commutative(x, y):
    assert merge(x, y) == merge(y, x)


@settings(max_examples=400, deadline=None)
@given(st.deferred(lambda: trees(2)), st.deferred(lambda: trees(2)), st.deferred(lambda: trees(2)))
def test_merge_associative(x, y, z):
    assert merge(merge(x, y), z) == merge(x, merge(y, z))


@settings(max_examples=400, deadline=None)
@given(st.deferred(lambda: trees(3)))
def test_merge_idempotent(x):
    assert merge(x, x) == normalize(x)


@settings(max_examples=200, deadline=None)
@given(st.deferred(lambda: trees(2)))
def test_absorption_and_neutrality(x):
    assert merge(NOP, x) == NOP
    assert merge(CALL, x) == normalize(x)


def test_merge_group_fold_order_independent():
    group_trees = [a, If(c1, b, CALL), Par((b, c)), Seq((a, c)), NOP]
    for size in (3, 4, 5):
        chosen = group_trees[:size]
        results = set()
        for perm in itertools.permutations(chosen):
            folded = normalize(perm[0])
            for t in perm[1:]:
                folded = _merge_cached(folded, normalize(t))
            results.add(sort_key(folded))
        assert len(results) == 1


def test_merge_group_spec_example():
    # Two-step evaluation: the if distributes over the plain leaf, so the
    # then branch gains the original message in parallel and the else
    # branch keeps it via the neutral call.
    group = RewriteGroup(
        required("switch", "on"),
        (light_on, If(threshold, shutter_open, CALL)),
        (),
    )
    got = merge_group(group)
    assert got == If(threshold, Par((light_on, shutter_open)), light_on)


def test_merge_group_singleton():
    group = RewriteGroup(required("s", "p"), (If(c1, a, b),), ())
    assert merge_group(group) == If(c1, a, b)


# ---------------------------------------------------------------------------
# conflict detection


def _hospital_instances(fixtures_dir, hospital_base):
    instances = []
    fresh = FreshNames(taken=hospital_base.components)
    for name in ("identity_management.aa", "brightness_light.aa"):
        aa = parse_aa((fixtures_dir / "aa" / name).read_text())
        jps = collect_joinpoints(hospital_base, Visibility(0))
        for combo in combinations(match_pointcut(jps, aa)):
            instances.append(instantiate_advice(aa, combo, fresh))
    return instances


def test_shared_anchor_groups(fixtures_dir, hospital_base):
    instances = _hospital_instances(fixtures_dir, hospital_base)
    groups, plan = detect_conflicts(hospital_base, instances)
    conflicts = [g for g in groups if g.is_conflict()]
    assert len(conflicts) == 1
    (group,) = conflicts
    assert group.anchor == required("switch", "value_Evented_NewValue")
    # base binding leaf + identity's link + brightness's rewrite tree
    assert len(group.trees) == 3
    assert {aa for aa, _ in group.contributors} == {"IdentityManagement", "brightness_light"}


def test_disjoint_rules_are_plain(fixtures_dir, hospital_base):
    instances = _hospital_instances(fixtures_dir, hospital_base)
    groups, plan = detect_conflicts(hospital_base, instances)
    assert len(plan.plain_bindings) == 6
    assert len(plan.component_adds) == 4


def test_instantiations_never_conflict(fixtures_dir, hospital_base):
    instances = _hospital_instances(fixtures_dir, hospital_base)
    groups, plan = detect_conflicts(hospital_base, instances)
    added = {c.id for c in plan.component_adds}
    assert added == {"Decision1", "Timer1", "threshold1", "Average1"}
    # adding a component is never itself an anchor
    assert not {g.anchor.component_id for g in groups} & added


# ---------------------------------------------------------------------------
# lowering


def anchor_assembly():
    return Assembly.build(
        [
            Component("switch", "t", ports=(PortSpec("value", REQUIRED),)),
            Component("light", "t", ports=(PortSpec("on", PROVIDED),)),
            Component("threshold", "t", ports=(PortSpec("IsReached", PROVIDED),)),
        ],
        [Binding(required("switch", "value"), provided("light", "on"))],
    )


def test_lower_single_plain_binding():
    base = anchor_assembly()
    from aaweave.merge import MergedPlan

    plan = MergedPlan()
    plan.plain_bindings.append(Binding(required("switch", "value"), provided("threshold", "IsReached")))
    instrs = lower(plan, FreshNames(taken=base.components))
    assert instrs == [AddBinding(plan.plain_bindings[0])]


def test_lower_if_nop_call_tree():
    base = anchor_assembly()
    anchor = required("switch", "value")
    tree = merge(Leaf(provided("light", "on")), If(provided("threshold", "IsReached"), NOP, CALL))
    from aaweave.merge import MergedPlan

    plan = MergedPlan(
        groups={anchor: tree},
        originals={anchor: (provided("light", "on"),)},
        contributors={anchor: (("brightness_light", ""),)},
    )
    instrs = lower(plan, FreshNames(taken=base.components))
    adds_c = [i.component.id for i in instrs if isinstance(i, AddComponent)]
    assert adds_c == ["if1", "nop1"]
    assert RemoveBinding(anchor, provided("light", "on")) in instrs
    bindings = {(i.binding.source.key(), i.binding.target.key()) for i in instrs if isinstance(i, AddBinding)}
    assert (anchor.key(), provided("if1", "in").key()) in bindings
    assert (required("if1", "cond").key(), provided("threshold", "IsReached").key()) in bindings
    assert (required("if1", "out_then").key(), provided("nop1", "in").key()) in bindings
    assert (required("if1", "out_else").key(), provided("light", "on").key()) in bindings
    woven = apply_instructions(base, instrs)
    assert woven.components["if1"].type_name == "op.If"
    assert woven.components["nop1"].type_name == "op.Nop"


def test_lower_par_fan_out():
    base = anchor_assembly()
    anchor = required("switch", "value")
    from aaweave.merge import MergedPlan

    plan = MergedPlan(
        groups={anchor: Par((Leaf(provided("light", "on")), Leaf(provided("threshold", "IsReached"))))},
        originals={anchor: (provided("light", "on"),)},
        contributors={anchor: (("x", ""),)},
    )
    instrs = lower(plan, FreshNames(taken=base.components))
    woven = apply_instructions(base, instrs)
    par = woven.components["par1"]
    assert par.type_name == "op.Par"
    outs = [b for b in woven.bindings if b.source.component_id == "par1"]
    assert len(outs) == 2


def test_call_without_original_raises():
    anchor = required("switch", "value")
    from aaweave.merge import MergedPlan

    plan = MergedPlan(
        groups={anchor: Seq((Leaf(provided("light", "on")), CALL))},
        originals={anchor: ()},
        contributors={anchor: (("x", ""),)},
    )
    with pytest.raises(CallWithoutOriginal):
        lower(plan, FreshNames())


def test_lowering_soundness_on_hospital(fixtures_dir, hospital_base):
    instances = _hospital_instances(fixtures_dir, hospital_base)
    groups, plan = detect_conflicts(hospital_base, instances)
    for g in groups:
        plan.groups[g.anchor] = merge_group(g)
    instrs = lower(plan, FreshNames(taken=hospital_base.components))
    woven = apply_instructions(hospital_base, instrs)  # validates invariants
    assert "if1" in woven.components
