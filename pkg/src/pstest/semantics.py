"""Closed-system step relation.

A step picks, in every membrane, a multiset of rule instances enabled on
the pre-step objects, then routes the products: ``here`` stays, ``out``
goes to the parent (or leaves the skin), ``in_l`` goes to child ``l``.
Objects received during a step are only visible in the successor, so
each membrane's choice is independent of the others.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterator

from .terms import (
    EMPTY,
    EvolutionRule,
    MembraneContent,
    MembraneNode,
    Multiset,
    ObserverTemplate,
)


class SemanticsMode(enum.Enum):
    AT_LEAST_ONE = "at-least-one"
    MAXIMAL = "maximal"

    @classmethod
    def parse(cls, value: "str | SemanticsMode") -> "SemanticsMode":
        if isinstance(value, cls):
            return value
        return cls(value.replace("_", "-").lower())


class NotClosed(TypeError):
    pass


@dataclass(frozen=True)
class Selection:
    """Rule-id -> application count for one membrane (positive counts only)."""

    counts: tuple[tuple[str, int], ...] = ()

    def get(self, rule_id: str) -> int:
        return dict(self.counts).get(rule_id, 0)

    def as_dict(self) -> dict[str, int]:
        return dict(self.counts)

    def __bool__(self) -> bool:
        return bool(self.counts)


EMPTY_SELECTION = Selection()


@dataclass(frozen=True)
class MembraneDelta:
    consumed: Multiset
    here: Multiset
    from_parent: Multiset
    from_children: Multiset


@dataclass(frozen=True)
class SystemStep:
    selections: tuple[tuple[int, Selection], ...]
    root_out: Multiset
    app: int
    deltas: tuple[tuple[int, MembraneDelta], ...]

    def selection(self, label: int) -> Selection:
        return dict(self.selections).get(label, EMPTY_SELECTION)


def _enabled_rules(content: MembraneContent) -> list[EvolutionRule]:
    present = content.objects.support()
    return [r for r in content.rules if r.lhs and r.lhs <= content.objects and r.cond.holds(present)]


def _enumerate(rules: list[EvolutionRule], objects: Multiset, cap: int | None) -> Iterator[tuple[tuple[int, ...], Multiset]]:
    """Yield (counts aligned with ``rules``, remaining objects)."""
    if not rules:
        yield (), objects
        return
    first, rest = rules[0], rules[1:]
    most = first.lhs.fits(objects)
    if cap is not None:
        most = min(most, cap)
    for n in range(most + 1):
        remaining = objects - first.lhs * n
        for tail, left in _enumerate(rest, remaining, cap):
            yield (n, *tail), left


def _selection(rules: list[EvolutionRule], counts: tuple[int, ...]) -> Selection:
    return Selection(tuple((r.id, n) for r, n in zip(rules, counts) if n))


def enabled_selections(content: MembraneContent, cap: int | None = None) -> list[Selection]:
    """All instance multisets applicable to ``content`` in one step.

    Gating is on the pre-step objects; the empty selection is included.
    ``cap`` bounds each rule's count (``None`` means unbounded).
    """
    rules = _enabled_rules(content)
    return [_selection(rules, counts) for counts, _ in _enumerate(rules, content.objects, cap)]


def membrane_options(content: MembraneContent, mode: SemanticsMode, cap: int | None) -> tuple[list[Selection], bool]:
    """Selections admitted by ``mode`` plus whether ``cap`` hid any of them.

    Under maximality a selection that stops a rule at the cap while one
    more instance would still fit is not a genuine maximal step and is
    dropped; the cap flag then tells the caller the list is incomplete.
    """
    rules = _enabled_rules(content)
    capped = cap is not None and any(r.lhs * (cap + 1) <= content.objects for r in rules)
    result = []
    for counts, left in _enumerate(rules, content.objects, cap):
        if mode is SemanticsMode.MAXIMAL and any(r.lhs <= left for r in rules):
            continue
        result.append(_selection(rules, counts))
    return result, capped


def _flatten(root: MembraneNode) -> tuple[list[MembraneNode], dict[int, int | None]]:
    nodes, parent = [], {}
    stack: list[tuple[MembraneNode, int | None]] = [(root, None)]
    while stack:
        node, par = stack.pop()
        nodes.append(node)
        parent[node.label] = par
        for child in reversed(node.children):
            stack.append((child, node.label))
    return nodes, parent


def step_successors(root: MembraneNode, mode: SemanticsMode = SemanticsMode.AT_LEAST_ONE,
                    cap: int | None = None) -> tuple[list[tuple[SystemStep, MembraneNode]], bool]:
    """Like :func:`system_steps`, also reporting whether the cap truncated anything."""
    if isinstance(root, ObserverTemplate):
        raise NotClosed("observer template has an unfilled hole")
    mode = SemanticsMode.parse(mode)
    nodes, parent = _flatten(root)
    options = []
    capped = False
    for node in nodes:
        opts, hit = membrane_options(node.content, mode, cap)
        options.append(opts)
        capped = capped or hit
    rules_by_label = {n.label: {r.id: r for r in n.rules} for n in nodes}
    results = []
    for combo in itertools.product(*options):
        if not any(combo):
            continue
        consumed, here, out = {}, {}, {}
        inbox: dict[int, Multiset] = {}
        for node, sel in zip(nodes, combo):
            c = h = o = EMPTY
            table = rules_by_label[node.label]
            for rid, n in sel.counts:
                rule = table[rid]
                c = c + rule.lhs * n
                h = h + rule.here * n
                o = o + rule.out * n
                for target, ms in rule.ins:
                    inbox[target] = inbox.get(target, EMPTY) + ms * n
            consumed[node.label], here[node.label], out[node.label] = c, h, o
        from_children: dict[int, Multiset] = {}
        for node in nodes:
            par = parent[node.label]
            if par is not None and out[node.label]:
                from_children[par] = from_children.get(par, EMPTY) + out[node.label]
        deltas = []
        new_objects = {}
        for node in nodes:
            lab = node.label
            delta = MembraneDelta(consumed[lab], here[lab], inbox.get(lab, EMPTY), from_children.get(lab, EMPTY))
            deltas.append((lab, delta))
            new_objects[lab] = node.objects - delta.consumed + delta.here + delta.from_parent + delta.from_children
        step = SystemStep(
            selections=tuple(sorted((n.label, s) for n, s in zip(nodes, combo))),
            root_out=out[root.label],
            app=1,
            deltas=tuple(sorted(deltas, key=lambda d: d[0])),
        )
        results.append((step, _rebuild(root, new_objects)))
    return results, capped


def _rebuild(node: MembraneNode, objects: dict[int, Multiset]) -> MembraneNode:
    children = tuple(_rebuild(c, objects) for c in node.children)
    return MembraneNode(node.label, MembraneContent(node.content.rules, objects[node.label]), children)


def system_steps(root: MembraneNode, mode: SemanticsMode = SemanticsMode.AT_LEAST_ONE,
                 cap: int | None = None) -> list[tuple[SystemStep, MembraneNode]]:
    """Every ``app = 1`` transition of a closed system."""
    return step_successors(root, mode, cap)[0]


def can_emit(root: MembraneNode, symbol: str) -> bool:
    """True iff some step sends ``symbol`` out of the skin.

    A single enabled skin rule producing it suffices in both modes: alone
    it is an at-least-one step, and it extends to a maximal one.
    """
    return any(symbol in r.out.support() for r in _enabled_rules(root.content))


def _is_identity(rule: EvolutionRule) -> bool:
    return rule.lhs == rule.here and not rule.out and not rule.ins


def membrane_effects(content: MembraneContent, mode: SemanticsMode, cap: int | None):
    """Distinct local effects of the admissible selections of one membrane.

    Returns ``(effects, capped)`` where each effect is
    ``(kept, out, ins, nonempty)``: ``kept`` is the local multiset after
    the step (before deliveries), ``nonempty`` tells whether some nonempty
    selection realizes it.  Under at-least-one, identity rules (``u -> u``
    with nothing sent) cannot change any successor, so they only
    contribute the ability to take an otherwise idle step; their counts
    are not enumerated and they never count as cap hits.
    """
    rules = _enabled_rules(content)
    if mode is SemanticsMode.AT_LEAST_ONE:
        work = [r for r in rules if not _is_identity(r)]
        idle_ok = len(work) < len(rules)
    else:
        work, idle_ok = rules, False
    capped = cap is not None and any(r.lhs * (cap + 1) <= content.objects for r in work)
    states: dict[tuple, bool] = {(content.objects, EMPTY, EMPTY, ()): False}
    for r in work:
        nxt: dict[tuple, bool] = {}
        for (rem, h, o, ins), ne in states.items():
            most = r.lhs.fits(rem)
            if cap is not None:
                most = min(most, cap)
            for n in range(most + 1):
                if n:
                    delivered = dict(ins)
                    for target, ms in r.ins:
                        delivered[target] = delivered.get(target, EMPTY) + ms * n
                    key = (rem - r.lhs * n, h + r.here * n, o + r.out * n, tuple(sorted(delivered.items())))
                else:
                    key = (rem, h, o, ins)
                nxt[key] = nxt.get(key, False) or ne or n > 0
        states = nxt
    effects: dict[tuple, bool] = {}
    for (rem, h, o, ins), ne in states.items():
        if mode is SemanticsMode.MAXIMAL and any(r.lhs <= rem for r in rules):
            continue
        key = (rem + h, o, ins)
        effects[key] = effects.get(key, False) or ne or (idle_ok and not (h or o or ins) and rem == content.objects)
    return [(kept, o, ins, ne) for (kept, o, ins), ne in effects.items()], capped


def successor_states(root: MembraneNode, mode: SemanticsMode = SemanticsMode.AT_LEAST_ONE,
                     cap: int | None = None) -> tuple[list[tuple[Multiset, MembraneNode]], bool]:
    """Distinct ``(skin output, successor)`` pairs of ``app = 1`` steps.

    Same successor set as :func:`step_successors` without materializing
    every selection; this is what exploration uses.
    """
    if isinstance(root, ObserverTemplate):
        raise NotClosed("observer template has an unfilled hole")
    mode = SemanticsMode.parse(mode)
    nodes, parent = _flatten(root)
    options = []
    capped = False
    for node in nodes:
        effects, hit = membrane_effects(node.content, mode, cap)
        options.append(effects)
        capped = capped or hit
    seen = set()
    results = []
    for combo in itertools.product(*options):
        if not any(e[3] for e in combo):
            continue
        objects = {}
        for node, (kept, _, _, _) in zip(nodes, combo):
            objects[node.label] = kept
        for node, (_, out, ins, _) in zip(nodes, combo):
            for target, ms in ins:
                objects[target] = objects[target] + ms
            par = parent[node.label]
            if par is not None and out:
                objects[par] = objects[par] + out
        root_out = combo[0][1]
        sig = (root_out, tuple(objects[n.label] for n in nodes))
        if sig in seen:
            continue
        seen.add(sig)
        results.append((root_out, _rebuild(root, objects)))
    return results, capped


def enabled_rule_count(root: MembraneNode) -> int:
    """Number of enabled rules over the whole tree (a cheap branching estimate)."""
    return sum(len(_enabled_rules(n.content)) for n in root.walk())
