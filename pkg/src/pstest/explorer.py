"""Bounded reachability graphs over canonical state keys."""
from __future__ import annotations

import hashlib
import os
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

from .semantics import SemanticsMode, successor_states
from .terms import EvolutionRule, MembraneNode, Multiset, format_multiset

StateKey = bytes


@dataclass(frozen=True)
class Bounds:
    max_depth: int = 64
    max_states: int = 100_000
    max_instances: int | None = 8

    def __post_init__(self) -> None:
        if self.max_depth < 1 or self.max_states < 1:
            raise ValueError("bounds must be >= 1")
        if self.max_instances is not None and self.max_instances < 1:
            raise ValueError("max_instances must be >= 1")

    def covers(self, other: "Bounds") -> bool:
        """True when every bound is at least as large as in ``other``."""
        mine = float("inf") if self.max_instances is None else self.max_instances
        theirs = float("inf") if other.max_instances is None else other.max_instances
        return self.max_depth >= other.max_depth and self.max_states >= other.max_states and mine >= theirs

    def to_json(self) -> dict:
        return {"max_depth": self.max_depth, "max_states": self.max_states,
                "max_instances": self.max_instances}


DEFAULT_BOUNDS = Bounds()


@lru_cache(maxsize=4096)
def _rules_key(rules: tuple[EvolutionRule, ...]) -> str:
    parts = []
    for r in rules:
        ins = ";".join(f"{t}:{_ms_key(ms)}" for t, ms in r.ins)
        parts.append(
            f"{r.id}={_ms_key(r.lhs)}>{_ms_key(r.here)}/{_ms_key(r.out)}/{ins}"
            f"|+{','.join(sorted(r.cond.promoters))}-{','.join(sorted(r.cond.inhibitors))}"
        )

    return "&".join(parts)


def _ms_key(ms: Multiset) -> str:
    return ",".join(f"{s}*{n}" for s, n in ms.items)


def state_key(node: MembraneNode) -> StateKey:
    """Canonical encoding; sibling order does not matter."""
    return _key_str(node).encode("utf-8")


def _key_str(node: MembraneNode) -> str:
    children = "".join(sorted(_key_str(c) for c in node.children))
    return f"[{node.label}{{{_ms_key(node.objects)}}}<{_rules_key(node.rules)}>{children}]"


def short_hash(key: StateKey) -> str:
    return hashlib.sha1(key).hexdigest()[:10]


@dataclass
class ExplorationStats:
    states: int = 0
    edges: int = 0
    cap_hits: int = 0
    truncations: int = 0

    def to_json(self) -> dict:
        return {"states": self.states, "edges": self.edges, "cap_hits": self.cap_hits,
                "truncations": self.truncations}


@dataclass
class Lts:
    states: dict[StateKey, MembraneNode]
    edges: dict[StateKey, list[tuple[Multiset, StateKey]]]
    initial: StateKey
    truncated: set[StateKey] = field(default_factory=set)
    capped: set[StateKey] = field(default_factory=set)
    depth: dict[StateKey, int] = field(default_factory=dict)
    stats: ExplorationStats = field(default_factory=ExplorationStats)

    @property
    def complete(self) -> bool:
        return not self.truncated

    def successors(self, key: StateKey) -> list[tuple[Multiset, StateKey]]:
        return self.edges.get(key, [])

    def is_sink(self, key: StateKey) -> bool:
        return not self.edges.get(key) and key not in self.truncated


def _expand(args: tuple[MembraneNode, SemanticsMode, int | None]):
    node, mode, cap = args
    return successor_states(node, mode, cap)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("PSTEST_THREADS", "1")))
    except ValueError:
        return 1


def explore(root: MembraneNode, mode: SemanticsMode = SemanticsMode.AT_LEAST_ONE,
            bounds: Bounds = DEFAULT_BOUNDS, workers: int | None = None) -> Lts:
    """Breadth-first closure of the step relation up to ``bounds``.

    States at ``max_depth`` are probed but not added beyond: if they can
    move they are marked truncated.  Once ``max_states`` keys exist, edges
    to new states are dropped and their sources marked truncated.  States
    whose step set was cut by the instance cap are marked both capped and
    truncated.  The result is independent of ``workers``.
    """
    mode = SemanticsMode.parse(mode)
    workers = _workers() if workers is None else workers
    init = state_key(root)
    lts = Lts(states={init: root}, edges={}, initial=init, depth={init: 0})
    frontier = [init]
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        level = 0
        while frontier:
            jobs = [(lts.states[k], mode, bounds.max_instances) for k in frontier]
            if pool is not None:
                expansions = list(pool.map(_expand, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
            else:
                expansions = [_expand(j) for j in jobs]
            next_frontier = []
            for key, (succs, capped) in zip(frontier, expansions):
                if capped:
                    lts.capped.add(key)
                    lts.truncated.add(key)
                if level >= bounds.max_depth:
                    if succs:
                        lts.truncated.add(key)
                    continue
                out = []
                for label, node in succs:
                    tk = state_key(node)
                    if tk not in lts.states:
                        if len(lts.states) >= bounds.max_states:
                            lts.truncated.add(key)
                            continue
                        lts.states[tk] = node
                        lts.depth[tk] = level + 1
                        next_frontier.append(tk)
                    out.append((label, tk))
                lts.edges[key] = sorted(set(out), key=lambda e: (e[1], e[0].items))
            frontier = next_frontier
            level += 1
    finally:
        if pool is not None:
            pool.shutdown()
    lts.stats = ExplorationStats(
        states=len(lts.states),
        edges=sum(len(v) for v in lts.edges.values()),
        cap_hits=len(lts.capped),
        truncations=len(lts.truncated),
    )
    return lts


def traces_bounded(lts: Lts, k: int) -> set[tuple[tuple[Multiset, ...], str]]:
    """Every output sequence of length 1..k along paths from the initial state.

    A sequence is ``"maximal"`` when its path ends in a sink that was not
    truncated, ``"cut"`` otherwise.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    result: set[tuple[tuple[Multiset, ...], str]] = set()
    seen: set[tuple[StateKey, tuple[Multiset, ...]]] = set()
    stack: list[tuple[StateKey, tuple[Multiset, ...]]] = [(lts.initial, ())]
    while stack:
        key, word = stack.pop()
        if (key, word) in seen:
            continue
        seen.add((key, word))
        if word:
            result.add((word, "maximal" if lts.is_sink(key) else "cut"))
        if len(word) < k:
            for label, tgt in lts.successors(key):
                stack.append((tgt, word + (label,)))
    return result


def frontier_traces(traces: Iterable[tuple[tuple[Multiset, ...], str]]) -> list[tuple[tuple[Multiset, ...], str]]:
    """Drop cut sequences that are proper prefixes of another listed sequence."""
    traces = set(traces)
    words = {w for w, _ in traces}
    prefixes = {w[:i] for w in words for i in range(1, len(w))}
    kept = [(w, kind) for w, kind in traces if kind == "maximal" or w not in prefixes]
    return sorted(kept, key=lambda t: (len(t[0]), [m.items for m in t[0]], t[1]))


def format_label(ms: Multiset) -> str:
    return "∅" if not ms else f"({format_multiset(ms)})"


def format_trace(word: tuple[Multiset, ...]) -> str:
    return " ".join(format_label(m) for m in word)


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def lts_to_dot(lts: Lts, success: Iterable[StateKey] = ()) -> str:
    success = set(success)
    lines = ["digraph lts {", "  rankdir=LR;", '  __start [shape=point];']
    for key in sorted(lts.states):
        shape = "doublecircle" if key in success else "circle"
        extra = ", style=dashed" if key in lts.truncated else ""
        lines.append(f"  {_dot_quote(short_hash(key))} [shape={shape}{extra}];")
    lines.append(f"  __start -> {_dot_quote(short_hash(lts.initial))};")
    for key in sorted(lts.edges):
        for label, tgt in lts.edges[key]:
            lines.append(f"  {_dot_quote(short_hash(key))} -> {_dot_quote(short_hash(tgt))}"
                         f" [label={_dot_quote(format_label(label))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
