import random

import pytest
from hypothesis import given, settings, strategies as st

from gen import rand_system
from pstest import corpus
from pstest.dsl import (
    DslError,
    DuplicateLabel,
    ObserverShapeError,
    PsysSyntaxError,
    SourceSpec,
    UndeclaredSymbol,
    ValidationError,
    load_spec,
    parse_spec,
    serialize_spec,
    tokenize,
)
from pstest.terms import Multiset

MINIMAL = 'system "t" { alphabet {a,b} membrane 1 { objects {a:1} rule r1: a -> (b, here) } }'


def test_minimal_system():
    spec = parse_spec(MINIMAL)
    root = spec.system
    assert spec.kind == "system" and spec.name == "t"
    assert spec.alphabet == {"a", "b"}
    assert root.is_flat and root.objects == Multiset({"a": 1})
    (rule,) = root.rules
    assert rule.id == "r1" and rule.lhs == Multiset("a") and rule.here == Multiset("b")


def test_minimal_roundtrip():
    spec = parse_spec(MINIMAL)
    text = serialize_spec(spec)
    assert parse_spec(text) == spec
    assert serialize_spec(parse_spec(text)) == text


def test_full_rule_syntax():
    text = """
    system "x" {
      alphabet { a, b, c, p, q }
      membrane 1 {
        objects { a^2, b }
        rule "odd id": a b -> (c, here) (a, out) (b:2, in 2) | promoters { p } inhibitors { q }
        rule gone: c -> lambda
        rule bare: b → c
        membrane 2 { objects { } }
      }
    }
    """
    root = parse_spec(text).system
    rules = {r.id: r for r in root.rules}
    odd = rules["odd id"]
    assert odd.lhs == Multiset("ab") and odd.here == Multiset("c") and odd.out == Multiset("a")
    assert odd.ins == ((2, Multiset({"b": 2})),)
    assert odd.cond.promoters == {"p"} and odd.cond.inhibitors == {"q"}
    assert rules["gone"].here == Multiset() and rules["bare"].here == Multiset("c")
    assert root.objects == Multiset({"a": 2, "b": 1})
    spec = parse_spec(text)
    assert parse_spec(serialize_spec(spec)) == spec


def test_observer_serialization():
    spec = load_spec(corpus.path("dist"))
    text = serialize_spec(spec)
    assert text.startswith("observer") and "hole 2" in text
    assert "omega" in text


def test_population_schema_expansion():
    spec = load_spec(corpus.path("pop"))
    assert len(spec.system.rules) == 102
    asex = [r for r in spec.system.rules if r.id.startswith("asex[")]
    assert len(asex) == 4
    assert parse_spec(serialize_spec(spec)) == spec


def test_compound_symbols_and_guards():
    text = """
    system "g" {
      alphabet { x_0, x_1, y }
      membrane 1 {
        forall v, w in {0, 1} if v != w or (v = 0 and not w = 1):
          rule r: [x v] -> y
      }
    }
    """
    rules = parse_spec(text).system.rules
    # v != w: (0,1) (1,0); v = 0 and w != 1: (0,0) -> lhs x_0 twice, merged
    assert sorted(r.id for r in rules) == ["r[v=0,w=0]", "r[v=1,w=0]"]


def _error(text):
    with pytest.raises(DslError) as info:
        parse_spec(text)
    return info.value


def test_syntax_error_location():
    err = _error('system "t" {\n  alphabet { a }\n  membrane 1 {\n    rule r a -> a\n  }\n}\n')
    assert isinstance(err, PsysSyntaxError)
    assert (err.line, err.col) == (4, 12)
    assert "':'" in err.expected or ":" in err.expected


def test_undeclared_symbol():
    err = _error('system "t" {\n  alphabet { a }\n  membrane 1 { objects { z } }\n}')
    assert isinstance(err, UndeclaredSymbol)
    assert err.line == 3


def test_omega_cannot_be_declared():
    assert isinstance(_error('system "t" { alphabet { omega } membrane 1 { } }'), UndeclaredSymbol)


def test_duplicate_label():
    err = _error('system "t" { alphabet { a } membrane 1 { membrane 2 { } membrane 2 { } } }')
    assert isinstance(err, DuplicateLabel)


def test_missing_in_target():
    err = _error('system "t" {\n alphabet { a }\n membrane 1 {\n  rule r: a -> (a, in 5)\n }\n}')
    assert isinstance(err, ValidationError)
    assert "MissingInTarget" in str(err) and err.line == 4


def test_observer_non_omega_out():
    text = 'observer "o" { alphabet { b } membrane 1 { rule r: b -> (b, out) hole 2 } }'
    assert isinstance(_error(text), ObserverShapeError)


def test_observer_shape():
    assert isinstance(_error('observer "o" { alphabet { } membrane 1 { } }'), ObserverShapeError)
    assert isinstance(_error('observer "o" { alphabet { } membrane 3 { hole 2 } }'), ObserverShapeError)
    assert isinstance(_error('system "s" { alphabet { } membrane 1 { hole 2 } }'), ValidationError)


def test_system_cannot_emit_omega():
    err = _error('system "s" { alphabet { a } membrane 1 { rule r: a -> (omega, out) } }')
    assert isinstance(err, UndeclaredSymbol) and (err.line, err.col) == (1, 42)


def test_limits():
    assert isinstance(_error('system "t" { alphabet { a } membrane 1 { objects { a:99999999999 } } }'),
                      DslError)
    deep = 'system "t" { alphabet { } ' + "membrane 1 { " * 100 + "}" * 101
    assert isinstance(_error(deep), DslError)


def test_tokenizer_locations():
    toks = tokenize("a\n  -> b # note\n")
    assert [(t.value, t.line, t.col) for t in toks if t.value in ("a", "->", "b")] == [
        ("a", 1, 1), ("->", 2, 3), ("b", 2, 6)]


def test_corpus_roundtrip():
    for p in sorted(corpus.CORPUS_DIR.glob("*.psys")) + corpus.suite_paths():
        spec = load_spec(p)
        assert parse_spec(serialize_spec(spec)) == spec, p.name


def test_serialization_is_deterministic():
    rng = random.Random(3)
    root = rand_system(rng)
    spec = SourceSpec("system", "r", frozenset("abcαβ"), root)
    assert serialize_spec(spec) == serialize_spec(parse_spec(serialize_spec(spec)))


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from(list("{}()[],:^|#\"=!-> \nab12") + ["rule", "membrane", "system"]),
                max_size=60).map("".join))
def test_parser_never_crashes(text):
    try:
        parse_spec(text)
    except DslError as err:
        assert err.line >= 0 and err.col >= 0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_random_spec_roundtrip(seed):
    root = rand_system(random.Random(seed))
    spec = SourceSpec("system", "r", frozenset("abcαβ"), root)
    assert parse_spec(serialize_spec(spec)) == spec
