"""Immutable P Algebra terms: multisets, rules, membranes and observers.

A membrane system is a tree of :class:`MembraneNode`.  A node with no
children is a flat membrane ``F(m)``; a node with children is the
hierarchical composition ``mu(m, ms_1 | ... | ms_k)``, the child tuple
playing the role of juxtaposition.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Mapping, Sequence

OMEGA = "ω"


class Multiset:
    """Finite multiset of object symbols, hashable and immutable."""

    __slots__ = ("_items", "_hash")

    def __init__(self, counts: Mapping[str, int] | Iterable[str] = ()):
        if isinstance(counts, Mapping):
            pairs = counts.items()
        else:
            acc: dict[str, int] = {}
            for sym in counts:
                acc[sym] = acc.get(sym, 0) + 1
            pairs = acc.items()
        items = []
        for sym, n in pairs:
            if n < 0:
                raise ValueError(f"negative multiplicity for {sym!r}")
            if n:
                items.append((sym, int(n)))
        items.sort()
        self._items: tuple[tuple[str, int], ...] = tuple(items)
        self._hash = hash(self._items)

    @classmethod
    def _raw(cls, items: tuple[tuple[str, int], ...]) -> "Multiset":
        ms = cls.__new__(cls)
        ms._items = items
        ms._hash = hash(items)
        return ms

    @classmethod
    def of(cls, *symbols: str) -> "Multiset":
        return cls(symbols)

    @property
    def items(self) -> tuple[tuple[str, int], ...]:
        return self._items

    def count(self, sym: str) -> int:
        for s, n in self._items:
            if s == sym:
                return n
        return 0

    def support(self) -> frozenset[str]:
        return frozenset(s for s, _ in self._items)

    def size(self) -> int:
        return sum(n for _, n in self._items)

    def as_dict(self) -> dict[str, int]:
        return dict(self._items)

    def elements(self) -> Iterator[str]:
        for s, n in self._items:
            for _ in range(n):
                yield s

    def __iter__(self) -> Iterator[tuple[str, int]]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __bool__(self) -> bool:
        return bool(self._items)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Multiset) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Multiset") -> bool:
        return self._items < other._items

    def __add__(self, other: "Multiset") -> "Multiset":
        if not other._items:
            return self
        if not self._items:
            return other
        acc = dict(self._items)
        for s, n in other._items:
            acc[s] = acc.get(s, 0) + n
        return Multiset._raw(tuple(sorted(acc.items())))

    def __sub__(self, other: "Multiset") -> "Multiset":
        """Counting difference; raises if ``other`` is not included."""
        if not other._items:
            return self
        acc = dict(self._items)
        for s, n in other._items:
            left = acc.get(s, 0) - n
            if left < 0:
                raise ValueError(f"cannot remove {n} x {s!r}")
            if left:
                acc[s] = left
            else:
                del acc[s]
        return Multiset._raw(tuple(sorted(acc.items())))

    def __mul__(self, k: int) -> "Multiset":
        if k == 0:
            return EMPTY
        if k == 1:
            return self
        return Multiset._raw(tuple((s, n * k) for s, n in self._items))

    __rmul__ = __mul__

    def __le__(self, other: "Multiset") -> bool:
        """Multiset inclusion."""
        if not self._items:
            return True
        have = dict(other._items)
        return all(have.get(s, 0) >= n for s, n in self._items)

    def fits(self, other: "Multiset") -> int:
        """Largest ``k`` with ``k * self <= other`` (``self`` nonempty)."""
        have = dict(other._items)
        return min(have.get(s, 0) // n for s, n in self._items)

    def __repr__(self) -> str:
        return f"Multiset({dict(self._items)!r})"

    def __str__(self) -> str:
        return format_multiset(self)


EMPTY = Multiset()


def format_multiset(ms: Multiset, empty: str = "∅") -> str:
    if not ms:
        return empty
    return " ".join(s if n == 1 else f"{s}^{n}" for s, n in ms.items)


@dataclass(frozen=True)
class Condition:
    promoters: frozenset[str] = frozenset()
    inhibitors: frozenset[str] = frozenset()

    def holds(self, present: frozenset[str] | set[str]) -> bool:
        return self.promoters <= present and not (self.inhibitors & present)

    def __bool__(self) -> bool:
        return bool(self.promoters or self.inhibitors)


NO_CONDITION = Condition()


@dataclass(frozen=True)
class EvolutionRule:
    """``lhs -> (here, here)(out, out)(v_l, in_l)... |_cond``.

    ``ins`` is a tuple of ``(label, multiset)`` pairs sorted by label.
    """

    id: str
    lhs: Multiset
    here: Multiset = EMPTY
    out: Multiset = EMPTY
    ins: tuple[tuple[int, Multiset], ...] = ()
    cond: Condition = NO_CONDITION

    def __post_init__(self) -> None:
        if isinstance(self.ins, Mapping):
            object.__setattr__(self, "ins", tuple(sorted(self.ins.items())))
        else:
            object.__setattr__(self, "ins", tuple(sorted(self.ins)))

    def body(self) -> tuple:
        """Everything but the id; equal bodies describe the same reaction."""
        return (self.lhs, self.here, self.out, self.ins, self.cond)

    def symbols(self) -> set[str]:
        syms = set(self.lhs.support()) | self.here.support() | self.out.support()
        for _, ms in self.ins:
            syms |= ms.support()
        return syms | self.cond.promoters | self.cond.inhibitors


@dataclass(frozen=True)
class MembraneContent:
    rules: tuple[EvolutionRule, ...] = ()
    objects: Multiset = EMPTY

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(sorted(self.rules, key=lambda r: r.id)))


@dataclass(frozen=True)
class MembraneNode:
    label: int
    content: MembraneContent = MembraneContent()
    children: tuple["MembraneNode", ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))

    @property
    def rules(self) -> tuple[EvolutionRule, ...]:
        return self.content.rules

    @property
    def objects(self) -> Multiset:
        return self.content.objects

    @property
    def is_flat(self) -> bool:
        return not self.children

    def walk(self) -> Iterator["MembraneNode"]:
        """Pre-order traversal."""
        yield self
        for child in self.children:
            yield from child.walk()

    def labels(self) -> list[int]:
        return [n.label for n in self.walk()]

    def find(self, label: int) -> "MembraneNode | None":
        for n in self.walk():
            if n.label == label:
                return n
        return None

    def with_objects(self, objects: Multiset) -> "MembraneNode":
        return replace(self, content=MembraneContent(self.content.rules, objects))


@dataclass(frozen=True)
class ObserverTemplate:
    """Observer ``mu(skin, HOLE)``; the skin is stored without children."""

    skin: MembraneNode
    hole: int = 2


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    kind: str
    membrane: int | None
    rule: str | None = None
    detail: str = ""

    def __str__(self) -> str:
        where = f"membrane {self.membrane}" if self.membrane is not None else "term"
        if self.rule is not None:
            where += f", rule {self.rule}"
        return f"{self.kind} ({where}){': ' + self.detail if self.detail else ''}"


def _rule_violations(rule: EvolutionRule, label: int, child_labels: set[int]) -> list[Violation]:
    out = []
    if not rule.lhs:
        out.append(Violation("EmptyLhs", label, rule.id))
    overlap = rule.cond.promoters & rule.cond.inhibitors
    if overlap:
        out.append(Violation("PromoterInhibitorOverlap", label, rule.id, ", ".join(sorted(overlap))))
    consumed_inh = rule.lhs.support() & rule.cond.inhibitors
    if consumed_inh:
        out.append(Violation("LhsInhibited", label, rule.id, ", ".join(sorted(consumed_inh))))
    seen = set()
    for target, ms in rule.ins:
        if target in seen:
            out.append(Violation("DuplicateInTarget", label, rule.id, str(target)))
        seen.add(target)
        if not ms:
            out.append(Violation("EmptyInDelivery", label, rule.id, str(target)))
        if target not in child_labels:
            out.append(Violation("MissingInTarget", label, rule.id, str(target)))
    for where, syms in (("lhs", rule.lhs.support()), ("here", rule.here.support()),
                        ("condition", rule.cond.promoters | rule.cond.inhibitors),
                        ("in", set().union(*(ms.support() for _, ms in rule.ins)))):
        if OMEGA in syms:
            out.append(Violation("ReservedSymbol", label, rule.id, f"ω in {where}"))
    return out


def validate_system(root: MembraneNode, allow_omega_out: bool = True) -> list[Violation]:
    """Collect every broken structural constraint of the tree.

    ω may only ever be sent out; with ``allow_omega_out=False`` (tested
    systems) even that is reported.
    """
    violations: list[Violation] = []
    seen_labels: set[int] = set()
    for node in root.walk():
        if node.label in seen_labels:
            violations.append(Violation("DuplicateLabel", node.label))
        seen_labels.add(node.label)
        child_labels = {c.label for c in node.children}
        ids: set[str] = set()
        for rule in node.rules:
            if rule.id in ids:
                violations.append(Violation("DuplicateRuleId", node.label, rule.id))
            ids.add(rule.id)
            violations.extend(_rule_violations(rule, node.label, child_labels))
            if not allow_omega_out and OMEGA in rule.out.support():
                violations.append(Violation("ReservedSymbol", node.label, rule.id, "ω in out"))
        if OMEGA in node.objects.support():
            violations.append(Violation("ReservedSymbol", node.label, None, "ω in objects"))
    return violations


def validate_observer(obs: ObserverTemplate) -> list[Violation]:
    skin = obs.skin
    violations = []
    if skin.label != 1:
        violations.append(Violation("ObserverSkinLabel", skin.label, None, "skin must be 1"))
    if obs.hole != 2:
        violations.append(Violation("ObserverHoleLabel", skin.label, None, "hole must be 2"))
    if skin.children:
        violations.append(Violation("ObserverNotFlat", skin.label, None, "only the hole may be nested"))
    for rule in skin.rules:
        if rule.out.support() - {OMEGA}:
            violations.append(Violation("ObserverOutNotOmega", skin.label, rule.id,
                                        ", ".join(sorted(rule.out.support() - {OMEGA}))))
        for target, _ in rule.ins:
            if target != obs.hole:
                violations.append(Violation("ObserverInTarget", skin.label, rule.id, str(target)))
    hole_view = replace(skin, children=(MembraneNode(obs.hole),))
    violations.extend(v for v in validate_system(hole_view) if v.kind != "DuplicateLabel" or v.membrane != obs.hole)
    return violations


# ---------------------------------------------------------------------------
# relabelling


class MappingIncomplete(KeyError):
    pass


class MappingNotInjective(ValueError):
    pass


def relabel_membranes(root: MembraneNode, mapping: Mapping[int, int]) -> MembraneNode:
    """Rename membrane labels and every ``in_l`` reference through ``mapping``."""
    used = set(root.labels())
    for node in root.walk():
        for rule in node.rules:
            used.update(t for t, _ in rule.ins)
    missing = sorted(used - set(mapping))
    if missing:
        raise MappingIncomplete(f"no image for label(s) {missing}")
    images = [mapping[label] for label in used]
    if len(set(images)) != len(images):
        raise MappingNotInjective("mapping sends two labels to the same label")
    return _relabel(root, mapping)


def _relabel(node: MembraneNode, mapping: Mapping[int, int]) -> MembraneNode:
    rules = tuple(
        replace(r, ins=tuple((mapping[t], ms) for t, ms in r.ins)) if r.ins else r
        for r in node.rules
    )
    return MembraneNode(
        mapping[node.label],
        MembraneContent(rules, node.objects),
        tuple(_relabel(c, mapping) for c in node.children),
    )


# ---------------------------------------------------------------------------
# rule schemas

# A template symbol is a tuple of parts joined with "_" after substitution;
# a part naming a schema parameter is replaced by its value.
TemplateSymbol = tuple[str, ...]
TemplateMultiset = tuple[tuple[TemplateSymbol, int], ...]


class GuardUnsatisfiable(UserWarning):
    pass


@dataclass(frozen=True)
class RuleSchema:
    id: str
    parameters: tuple[tuple[str, tuple[str, ...]], ...]
    lhs: TemplateMultiset
    here: TemplateMultiset = ()
    out: TemplateMultiset = ()
    ins: tuple[tuple[int, TemplateMultiset], ...] = ()
    promoters: tuple[TemplateSymbol, ...] = ()
    inhibitors: tuple[TemplateSymbol, ...] = ()
    guard: Callable[[Mapping[str, str]], bool] | None = field(default=None, compare=False)

    def assignments(self) -> Iterator[dict[str, str]]:
        names = [p for p, _ in self.parameters]
        for values in itertools.product(*(vals for _, vals in self.parameters)):
            env = dict(zip(names, values))
            if self.guard is None or self.guard(env):
                yield env

    def instantiate(self, env: Mapping[str, str]) -> EvolutionRule:
        def sym(parts: TemplateSymbol) -> str:
            return "_".join(env.get(p, p) for p in parts)

        def mset(tmpl: TemplateMultiset) -> Multiset:
            acc: dict[str, int] = {}
            for parts, n in tmpl:
                s = sym(parts)
                acc[s] = acc.get(s, 0) + n
            return Multiset(acc)

        suffix = ",".join(f"{k}={env[k]}" for k, _ in self.parameters)
        ins: dict[int, Multiset] = {}
        for label, tmpl in self.ins:
            ins[label] = ins.get(label, EMPTY) + mset(tmpl)
        return EvolutionRule(
            id=f"{self.id}[{suffix}]" if suffix else self.id,
            lhs=mset(self.lhs),
            here=mset(self.here),
            out=mset(self.out),
            ins=tuple(ins.items()),
            cond=Condition(frozenset(map(sym, self.promoters)), frozenset(map(sym, self.inhibitors))),
        )


def expand_rule_schemas(schemas: Sequence[RuleSchema]) -> tuple[EvolutionRule, ...]:
    """Ground every schema; rules with identical bodies are merged, keeping the first id."""
    rules: list[EvolutionRule] = []
    bodies: set[tuple] = set()
    for schema in schemas:
        produced = 0
        for env in schema.assignments():
            produced += 1
            rule = schema.instantiate(env)
            if rule.body() in bodies:
                continue
            bodies.add(rule.body())
            rules.append(rule)
        if not produced:
            warnings.warn(f"schema {schema.id} has no satisfying assignment", GuardUnsatisfiable,
                          stacklevel=2)
    return tuple(rules)
