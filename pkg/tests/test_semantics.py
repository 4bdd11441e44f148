import random

import pytest

from gen import rand_micro, rand_system
from oracles import sos_closed_steps
from pstest.semantics import (
    NotClosed,
    SemanticsMode,
    can_emit,
    enabled_selections,
    membrane_options,
    step_successors,
    successor_states,
    system_steps,
)
from pstest.terms import (
    EMPTY,
    Condition,
    EvolutionRule,
    MembraneContent,
    MembraneNode,
    Multiset,
    ObserverTemplate,
)

AL1, MAX = SemanticsMode.AT_LEAST_ONE, SemanticsMode.MAXIMAL


def ms(s=""):
    return Multiset(s)


def content(rules, objects):
    return MembraneContent(tuple(rules), ms(objects))


def flat(rules, objects, label=1, children=()):
    return MembraneNode(label, content(rules, objects), tuple(children))


A_TO_B = EvolutionRule("r", ms("a"), ms("b"))


def sels(cont, cap=None):
    return sorted(tuple(s.counts) for s in enabled_selections(cont, cap))


class TestSelections:
    def test_counts(self):
        assert sels(content([A_TO_B], "aa")) == [(), (("r", 1),), (("r", 2),)]

    def test_cap(self):
        assert sels(content([A_TO_B], "aaa"), cap=1) == [(), (("r", 1),)]

    def test_inhibitor(self):
        rule = EvolutionRule("r", ms("a"), ms("b"), cond=Condition(inhibitors=frozenset("c")))
        assert sels(content([rule], "ac")) == [()]

    def test_promoter_present_not_consumed(self):
        rule = EvolutionRule("r", ms("a"), ms("b"), cond=Condition(promoters=frozenset("p")))
        assert sels(content([rule], "ap")) == [(), (("r", 1),)]
        (_, succ), = system_steps(flat([rule], "ap"))
        assert succ.objects == ms("bp")

    def test_promoter_absent(self):
        rule = EvolutionRule("r", ms("a"), ms("b"), cond=Condition(promoters=frozenset("p")))
        assert sels(content([rule], "a")) == [()]

    def test_competition_for_objects(self):
        r1 = EvolutionRule("r1", ms("a"), ms("b"))
        r2 = EvolutionRule("r2", ms("a"), ms("c"))
        got = sels(content([r1, r2], "a"))
        assert got == [(), (("r1", 1),), (("r2", 1),)]

    def test_maximal_options(self):
        opts, capped = membrane_options(content([A_TO_B], "aa"), MAX, None)
        assert [s.counts for s in opts] == [(("r", 2),)] and not capped

    def test_maximal_cap_drops_partial(self):
        opts, capped = membrane_options(content([A_TO_B], "aaa"), MAX, 2)
        assert opts == [] and capped


class TestSystemSteps:
    def test_single_here(self):
        (step, succ), = system_steps(flat([A_TO_B], "a"))
        assert step.root_out == EMPTY and step.app == 1 and succ.objects == ms("b")

    def test_omega_out(self):
        (step, _), = system_steps(flat([EvolutionRule("r", ms("a"), out=ms("ω"))], "a"))
        assert step.root_out == Multiset({"ω": 1})

    def test_send_in(self):
        root = flat([EvolutionRule("r", ms("a"), ins=((2, ms("c")),))], "a", children=[flat([], "", 2)])
        (step, succ), = system_steps(root)
        assert succ.objects == EMPTY and succ.children[0].objects == ms("c")
        delta = dict(step.deltas)[2]
        assert delta.consumed == EMPTY and delta.from_parent == ms("c")

    def test_child_output_reaches_parent_next_step(self):
        child = flat([EvolutionRule("s", ms("b"), out=ms("x"))], "b", 2)
        root = flat([EvolutionRule("r", ms("x"), ms("y"))], "", children=[child])
        (step, succ), = system_steps(root)
        assert succ.objects == ms("x") and step.root_out == EMPTY
        (_, succ2), = system_steps(succ)
        assert succ2.objects == ms("y")

    def test_no_step_without_enabled_rule(self):
        assert system_steps(flat([A_TO_B], "c")) == []

    def test_maximal_only_full(self):
        steps = system_steps(flat([A_TO_B], "aa"), MAX)
        assert [s.selection(1).counts for s, _ in steps] == [(("r", 2),)]

    def test_gating_uses_pre_step_objects(self):
        # b is produced in this step; the rule consuming b cannot fire yet
        r1 = EvolutionRule("r1", ms("a"), ms("b"))
        r2 = EvolutionRule("r2", ms("b"), ms("c"))
        [(_, succ)] = system_steps(flat([r1, r2], "a"))
        assert succ.objects == ms("b")

    def test_inputs_do_not_enable_rules_in_same_step(self):
        child = flat([EvolutionRule("s", ms("c"), ms("d"))], "", 2)
        root = flat([EvolutionRule("r", ms("a"), ins=((2, ms("c")),))], "a", children=[child])
        [(step, _)] = system_steps(root)
        assert not step.selection(2)

    def test_observer_rejected(self):
        with pytest.raises(NotClosed):
            system_steps(ObserverTemplate(flat([], "")))

    def test_can_emit(self):
        root = flat([EvolutionRule("r", ms("a"), out=ms("ω"))], "a")
        assert can_emit(root, "ω") and not can_emit(root.with_objects(EMPTY), "ω")


def _succ_set(pairs):
    return {(out, node) for out, node in pairs}


@pytest.mark.parametrize("mode", [AL1, MAX])
@pytest.mark.parametrize("cap", [None, 2])
def test_successor_states_agree_with_step_enumeration(mode, cap):
    rng = random.Random(21)
    for _ in range(300):
        root = rand_system(rng)
        steps, capped_a = step_successors(root, mode, cap)
        fast, capped_b = successor_states(root, mode, cap)
        assert _succ_set((s.root_out, n) for s, n in steps) == _succ_set(fast)
        assert len(fast) == len(_succ_set(fast))
        if mode is MAX:
            assert capped_a == capped_b


def test_identity_rules_do_not_cap_at_least_one():
    keep = EvolutionRule("keep", ms("x"), ms("x"))
    root = flat([keep, A_TO_B], "a" + "x" * 20)
    succs, capped = successor_states(root, AL1, 2)
    assert not capped
    assert {n.objects for _, n in succs} == {ms("a" + "x" * 20), ms("b" + "x" * 20)}


def _key(root, mode=AL1):
    e = set()
    for step, succ in system_steps(root, mode):
        sel = tuple(sorted((l, s.counts) for l, s in step.selections))
        objs = tuple(sorted((n.label, tuple(n.objects.items)) for n in succ.walk()))
        e.add((sel, tuple(step.root_out.items), objs))
    return e


def test_sos_oracle_spot_checks():
    rng = random.Random(99)
    for _ in range(100):
        root = rand_micro(rng)
        assert _key(root) == sos_closed_steps(root)


def test_sos_oracle_detects_inhibitor_mutant():
    """The oracle is sharp enough to catch an engine that ignores inhibitors."""
    rule = EvolutionRule("r", ms("a"), ms("b"), cond=Condition(inhibitors=frozenset("c")))
    root = flat([rule], "ac")
    assert sos_closed_steps(root) == _key(root) == set()
    unguarded = flat([EvolutionRule("r", ms("a"), ms("b"))], "ac")
    assert sos_closed_steps(unguarded) != sos_closed_steps(root)
