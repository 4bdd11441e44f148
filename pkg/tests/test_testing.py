import random

import pytest

from gen import rand_micro, rand_watch_observer
from oracles import oracle_may, oracle_must
from pstest import corpus
from pstest.dsl import load_spec
from pstest.explorer import Bounds, explore
from pstest.semantics import SemanticsMode
from pstest.terms import EvolutionRule, MembraneContent, MembraneNode, Multiset, ObserverTemplate
from pstest.testing import (
    InvalidTerm,
    ObserverShapeError,
    Result,
    compose_running_test,
    may_check,
    must_check,
    success_states,
)


def ms(s=""):
    return Multiset(s)


def flat(rules, objects, label=1, children=()):
    return MembraneNode(label, MembraneContent(tuple(rules), ms(objects)), tuple(children))


def observer(rules, objects=""):
    return ObserverTemplate(flat(rules, objects), 2)


WATCH_A = observer([EvolutionRule("w", ms("a"), out=ms("ω"))])


def load(name):
    return load_spec(corpus.path(name))


class TestCompose:
    def test_flat_system(self):
        rt = compose_running_test(WATCH_A, flat([], "a", label=1))
        assert rt.root.label == 1 and [c.label for c in rt.root.children] == [2]
        assert rt.root.children[0].objects == ms("a")

    def test_child_renumbered(self):
        inner = flat([], "", label=2)
        ms_ = flat([EvolutionRule("r", ms("x"), ins=((2, ms("x")),))], "x", children=[inner])
        rt = compose_running_test(WATCH_A, ms_)
        tested = rt.root.children[0]
        assert tested.label == 2 and tested.children[0].label == 3
        assert tested.rules[0].ins == ((3, ms("x")),)
        assert rt.mapping == ((1, 2), (2, 3))

    def test_bad_observer(self):
        with pytest.raises(ObserverShapeError):
            compose_running_test(observer([EvolutionRule("r", ms("a"), out=ms("b"))]), flat([], "a"))

    def test_system_emitting_omega(self):
        with pytest.raises(InvalidTerm):
            compose_running_test(WATCH_A, flat([EvolutionRule("r", ms("a"), out=ms("ω"))], "a"))


def test_success_states():
    rt = compose_running_test(observer([EvolutionRule("w", ms("a"), out=Multiset({"ω": 2}))], "a"), flat([], ""))
    lts = explore(rt.root)
    assert success_states(lts) == {lts.initial}
    quiet = explore(compose_running_test(WATCH_A, flat([], "")).root)
    assert success_states(quiet) == set()


@pytest.mark.parametrize("mode", list(SemanticsMode))
def test_figure_pair(mode):
    dist = load("dist").observer
    a = compose_running_test(dist, load("figA").system)
    c = compose_running_test(dist, load("figC").system)
    must_a = must_check(a, mode)
    assert must_a.result is Result.FAIL and must_a.witness
    assert must_check(c, mode).result is Result.PASS
    may_c = may_check(c, mode)
    assert may_c.result is Result.PASS and may_c.witness[0][0] == explore(c.root).initial
    assert may_check(a, mode).result is Result.PASS


def test_ruleless_observer_fails():
    rt = compose_running_test(observer([]), load("figC").system)
    assert may_check(rt).result is Result.FAIL
    assert must_check(rt).result is Result.FAIL


def test_divergence_is_failure():
    rt = compose_running_test(observer([]), flat([EvolutionRule("r", ms("a"), ms("a"))], "a"))
    v = must_check(rt)
    assert v.result is Result.FAIL and v.reason == "success-free cycle"


def test_long_cycle_is_failure():
    spin = [EvolutionRule("r1", ms("a"), ms("b")), EvolutionRule("r2", ms("b"), ms("c")),
            EvolutionRule("r3", ms("c"), ms("a"))]
    v = must_check(compose_running_test(observer([]), flat(spin, "a")))
    assert v.result is Result.FAIL and v.reason == "success-free cycle"


def test_truncation_is_inconclusive():
    grow = flat([EvolutionRule("g", ms("a"), ms("aa"))], "a")
    rt = compose_running_test(observer([EvolutionRule("w", ms("b"), out=ms("ω"))]), grow)
    b = Bounds(max_depth=5, max_states=1000, max_instances=None)
    assert may_check(rt, bounds=b).result is Result.INCONCLUSIVE
    assert must_check(rt, bounds=b).result is Result.INCONCLUSIVE


def test_example_3_may_pass_witness():
    rt = compose_running_test(load("ex3").observer, load("pop").system)
    v = may_check(rt, SemanticsMode.MAXIMAL)
    assert v.result is Result.PASS
    assert len(v.witness) >= 3
    js = v.to_json()
    assert js["result"] == "pass" and len(js["witness"]) == len(v.witness)


def test_verdict_json_fields():
    js = must_check(compose_running_test(observer([]), flat([], "a"))).to_json()
    assert set(js) == {"result", "reason", "witness", "stats"}
    assert js["result"] == "fail"


@pytest.mark.parametrize("mode", list(SemanticsMode))
def test_agrees_with_path_oracle(mode):
    rng = random.Random(41 if mode is SemanticsMode.AT_LEAST_ONE else 42)
    bounds = Bounds(max_depth=6, max_states=100_000, max_instances=3)
    decided = 0
    for _ in range(300):
        rt = compose_running_test(rand_watch_observer(rng), rand_micro(rng))
        may = may_check(rt, mode, bounds).result.value
        must = must_check(rt, mode, bounds).result.value
        assert may == oracle_may(rt.root, mode.value, 6, 3)
        assert must == oracle_must(rt.root, mode.value, 6, 3)
        decided += must != "inconclusive"
    assert decided > 100


@pytest.mark.parametrize("mode", list(SemanticsMode))
def test_must_pass_implies_may_pass(mode):
    rng = random.Random(43)
    bounds = Bounds(max_depth=8, max_states=500, max_instances=3)
    for _ in range(200):
        rt = compose_running_test(rand_watch_observer(rng), rand_micro(rng))
        if must_check(rt, mode, bounds).result is Result.PASS:
            assert may_check(rt, mode, bounds).result is Result.PASS
