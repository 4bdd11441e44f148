"""Bounded bisimulation, bounded trace equivalence and observer-suite comparison."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .explorer import Bounds, DEFAULT_BOUNDS, Lts, StateKey, format_label, format_trace, short_hash, traces_bounded
from .semantics import SemanticsMode
from .terms import MembraneNode, Multiset, ObserverTemplate
from .testing import Result, Verdict, compose_running_test, may_check, must_check

BISIMILAR = "Bisimilar"
NOT_BISIMILAR = "NotBisimilar"
EQUAL = "Equal"
DIFFERENT = "Different"
INCONCLUSIVE = "InconclusiveTruncated"


@dataclass
class BisimResult:
    verdict: str
    depth: int | None = None
    exact: bool = False
    sequence: tuple[Multiset, ...] = ()
    side: str | None = None
    blocks: int = 0

    def to_json(self) -> dict:
        return {"kind": "bisim", "verdict": self.verdict, "depth": self.depth, "exact": self.exact,
                "sequence": format_trace(self.sequence) if self.sequence else None, "side": self.side,
                "blocks": self.blocks}


@dataclass
class TraceResult:
    verdict: str
    witness: tuple[Multiset, ...] | None = None
    witness_kind: str | None = None
    exact: bool = False
    traces_a: set = field(default_factory=set)
    traces_b: set = field(default_factory=set)

    def to_json(self) -> dict:
        return {"kind": "trace", "verdict": self.verdict, "exact": self.exact,
                "witness": None if self.witness is None else format_trace(self.witness),
                "witness_kind": self.witness_kind}


def _refine(lts_list: Sequence[Lts], k: int) -> tuple[list[dict], dict, bool]:
    """Partition refinement over the disjoint union; returns the partition per round."""
    nodes = [(i, key) for i, lts in enumerate(lts_list) for key in lts.states]
    succ = {(i, key): [(lab, (i, t)) for lab, t in lts_list[i].successors(key)]
            for i, key in nodes}
    block = {n: int(bool(succ[n])) for n in nodes}
    history = [block]
    stable = False
    for _ in range(k):
        sigs = {n: (block[n], frozenset((lab.items, block[t]) for lab, t in succ[n])) for n in nodes}
        ids: dict = {}
        new = {n: ids.setdefault(sigs[n], len(ids)) for n in sorted(nodes, key=lambda n: (n[0], n[1]))}
        stable = len(set(new.values())) == len(set(block.values()))
        block = new
        history.append(block)
        if stable:
            break
    return history, succ, stable


def _distinguish(history: list[dict], succ: dict, a, b, level: int) -> tuple[tuple[Multiset, ...], str]:
    """Label sequence along which ``a`` and ``b`` first differ (attacker's moves)."""
    seq: list[Multiset] = []
    side = None
    while level > 0:
        prev = history[level - 1]
        move = None
        for x, y, name in ((a, b, "a"), (b, a, "b")):
            for lab, xt in succ[x]:
                if not any(l2 == lab and prev[yt] == prev[xt] for l2, yt in succ[y]):
                    move = (x, y, lab, xt, name)
                    break
            if move:
                break
        if move is None:
            break
        x, y, lab, xt, name = move
        side = side or name
        seq.append(lab)
        matches = [yt for l2, yt in succ[y] if l2 == lab]
        if not matches:
            break
        a, b = xt, matches[0]
        level -= 1
        while level > 0 and history[level - 1][a] == history[level - 1][b]:
            level -= 1
        if level == 0:
            break
    return tuple(seq), side or "a"


def bisim_bounded(a: Lts, b: Lts, k: int = 64) -> BisimResult:
    """k-round strong bisimulation on output labels between the two initial states."""
    if a.truncated or b.truncated:
        return BisimResult(INCONCLUSIVE)
    history, succ, stable = _refine([a, b], k)
    ia, ib = (0, a.initial), (1, b.initial)
    for level, block in enumerate(history):
        if block[ia] != block[ib]:
            seq, side = _distinguish(history, succ, ia, ib, level)
            return BisimResult(NOT_BISIMILAR, level, True, seq, side, len(set(block.values())))
    final = history[-1]
    return BisimResult(BISIMILAR, None if stable else k, stable, blocks=len(set(final.values())))


def partition_dot(a: Lts, b: Lts, k: int = 64) -> str:
    """Both graphs side by side, each state labelled with its final block."""
    history, succ, _ = _refine([a, b], k)
    block = history[-1]
    lines = ["digraph partition {", "  rankdir=LR;"]
    for i, lts in enumerate((a, b)):
        lines.append(f'  subgraph cluster_{i} {{ label="{"ab"[i]}";')
        for key in sorted(lts.states):
            shape = "doublecircle" if key == lts.initial else "circle"
            lines.append(f'    "{i}:{short_hash(key)}" [shape={shape}, label="B{block[(i, key)]}"];')
        lines.append("  }")
    for i, lts in enumerate((a, b)):
        for key in sorted(lts.edges):
            for lab, t in lts.edges[key]:
                lines.append(f'  "{i}:{short_hash(key)}" -> "{i}:{short_hash(t)}" [label="{format_label(lab)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _reaches_truncation(lts: Lts, k: int) -> bool:
    """True if a truncated state lies within ``k - 1`` steps of the initial state."""
    depth = {lts.initial: 0}
    frontier = [lts.initial]
    while frontier:
        nxt = []
        for key in frontier:
            if key in lts.truncated:
                return True
            if depth[key] < k - 1:
                for _, t in lts.successors(key):
                    if t not in depth:
                        depth[t] = depth[key] + 1
                        nxt.append(t)
        frontier = nxt
    return False


def trace_equiv_bounded(a: Lts, b: Lts, k: int) -> TraceResult:
    ta, tb = traces_bounded(a, k), traces_bounded(b, k)
    if _reaches_truncation(a, k) or _reaches_truncation(b, k):
        return TraceResult(INCONCLUSIVE, traces_a=ta, traces_b=tb)
    if ta == tb:
        exact = a.complete and b.complete and all(kind == "maximal" or len(w) < k for w, kind in ta)
        exact = exact and not any(kind == "cut" and len(w) == k for w, kind in ta)
        return TraceResult(EQUAL, exact=exact, traces_a=ta, traces_b=tb)
    diff = sorted(ta ^ tb, key=lambda t: (len(t[0]), [m.items for m in t[0]], t[1]))
    word, kind = diff[0]
    return TraceResult(DIFFERENT, word, kind, True, ta, tb)


@dataclass
class SuiteEntry:
    observer: str
    may_a: Verdict
    must_a: Verdict
    may_b: Verdict
    must_b: Verdict

    def verdicts(self) -> tuple[Result, Result, Result, Result]:
        return (self.may_a.result, self.must_a.result, self.may_b.result, self.must_b.result)


@dataclass
class SuiteReport:
    entries: list[SuiteEntry]
    may_ab: bool
    may_ba: bool
    must_ab: bool
    must_ba: bool
    any_inconclusive: bool
    suite: tuple[str, ...] = ()

    @property
    def may_equivalent(self) -> bool:
        return self.may_ab and self.may_ba

    @property
    def must_equivalent(self) -> bool:
        return self.must_ab and self.must_ba

    @property
    def indistinguishable(self) -> bool:
        """Suite-restricted: no observer in the suite separates the systems."""
        return self.may_equivalent and self.must_equivalent

    def to_json(self) -> dict:
        return {
            "kind": "suite",
            "suite": list(self.suite),
            "entries": [{"observer": e.observer, "may_a": e.may_a.result.value, "must_a": e.must_a.result.value,
                         "may_b": e.may_b.result.value, "must_b": e.must_b.result.value} for e in self.entries],
            "may_preorder_ab": self.may_ab, "may_preorder_ba": self.may_ba,
            "must_preorder_ab": self.must_ab, "must_preorder_ba": self.must_ba,
            "suite_may_equivalent": self.may_equivalent, "suite_must_equivalent": self.must_equivalent,
            "any_inconclusive": self.any_inconclusive,
        }


def _implies(x: Verdict, y: Verdict) -> bool | None:
    if Result.INCONCLUSIVE in (x.result, y.result):
        return None
    return not x.passed or y.passed


def suite_compare(a: MembraneNode, b: MembraneNode, suite: Sequence[ObserverTemplate],
                  mode: SemanticsMode = SemanticsMode.AT_LEAST_ONE, bounds: Bounds = DEFAULT_BOUNDS,
                  names: Sequence[str] | None = None) -> SuiteReport:
    names = list(names) if names is not None else [f"observer{i}" for i in range(len(suite))]
    entries = []
    for name, obs in zip(names, suite):
        rta = compose_running_test(obs, a, name, "a")
        rtb = compose_running_test(obs, b, name, "b")
        entries.append(SuiteEntry(name, may_check(rta, mode, bounds), must_check(rta, mode, bounds),
                                  may_check(rtb, mode, bounds), must_check(rtb, mode, bounds)))
    flags = {}
    inconclusive = False
    for flag, pick in (("may_ab", lambda e: (e.may_a, e.may_b)), ("may_ba", lambda e: (e.may_b, e.may_a)),
                       ("must_ab", lambda e: (e.must_a, e.must_b)), ("must_ba", lambda e: (e.must_b, e.must_a))):
        ok = True
        for e in entries:
            r = _implies(*pick(e))
            if r is None:
                inconclusive = True
            elif not r:
                ok = False
        flags[flag] = ok
    return SuiteReport(entries, any_inconclusive=inconclusive, suite=tuple(names), **flags)
