"""Running tests and may/must satisfaction.

Only internal computations are followed: every step of a running test
either outputs nothing or outputs ω only (observers cannot send out
anything else).  ω-steps are never traversed; a state offering one is a
success state.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from .explorer import Bounds, DEFAULT_BOUNDS, ExplorationStats, Lts, StateKey, short_hash, state_key
from .semantics import SemanticsMode, can_emit, enabled_rule_count, successor_states
from .terms import (
    OMEGA,
    MembraneContent,
    MembraneNode,
    ObserverTemplate,
    Violation,
    relabel_membranes,
    validate_observer,
    validate_system,
)


class ObserverShapeError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(map(str, violations)))


class InvalidTerm(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(map(str, violations)))


class Result(enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class RunningTest:
    root: MembraneNode
    observer: str = "observer"
    system: str = "system"
    mapping: tuple[tuple[int, int], ...] = ()


@dataclass
class Verdict:
    result: Result
    witness: list[tuple[StateKey, object]] = field(default_factory=list)
    bounds: Bounds = DEFAULT_BOUNDS
    reason: str = ""
    stats: ExplorationStats = field(default_factory=ExplorationStats)

    @property
    def passed(self) -> bool:
        return self.result is Result.PASS

    def to_json(self) -> dict:
        from .explorer import format_label

        return {
            "result": self.result.value,
            "reason": self.reason,
            "witness": [{"state": short_hash(k), "label": None if lab is None else format_label(lab)}
                        for k, lab in self.witness],
            "stats": self.stats.to_json(),
        }


def compose_running_test(obs: ObserverTemplate, ms: MembraneNode,
                         observer_name: str = "observer", system_name: str = "system") -> RunningTest:
    """Plug ``ms`` into the observer's hole.

    The tested skin becomes membrane 2 and its inner membranes are
    renumbered from 3 upwards in pre-order.
    """
    shape = validate_observer(obs)
    if shape:
        raise ObserverShapeError(shape)
    broken = validate_system(ms, allow_omega_out=False)
    if broken:
        raise InvalidTerm(broken)
    mapping = {ms.label: obs.hole}
    fresh = 3
    for node in ms.walk():
        if node is not ms:
            mapping[node.label] = fresh
            fresh += 1
    tested = relabel_membranes(ms, mapping)
    root = MembraneNode(obs.skin.label, MembraneContent(obs.skin.rules, obs.skin.objects), (tested,))
    broken = validate_system(root)
    if broken:
        raise InvalidTerm(broken)
    return RunningTest(root, observer_name, system_name, tuple(sorted(mapping.items())))


def success_states(lts: Lts) -> set[StateKey]:
    """States with an outgoing edge that sends at least one ω out."""
    return {k for k, edges in lts.edges.items() if any(lab.count(OMEGA) for lab, _ in edges)}


# ---------------------------------------------------------------------------
# on-the-fly internal graph


class _InternalGraph:
    """Lazily expanded graph of internal (empty-output) steps."""

    def __init__(self, root: MembraneNode, mode: SemanticsMode, bounds: Bounds):
        self.mode = SemanticsMode.parse(mode)
        self.bounds = bounds
        self.initial = state_key(root)
        self.nodes: dict[StateKey, MembraneNode] = {self.initial: root}
        self.depth: dict[StateKey, int] = {self.initial: 0}
        self.parent: dict[StateKey, StateKey | None] = {self.initial: None}
        self.succ: dict[StateKey, list[StateKey]] = {}
        self.success: dict[StateKey, bool] = {}
        self.incomplete: set[StateKey] = set()
        self.cap_hits = 0
        self.edges = 0

    def is_success(self, key: StateKey) -> bool:
        if key not in self.success:
            self.success[key] = can_emit(self.nodes[key], OMEGA)
        return self.success[key]

    def expand(self, key: StateKey) -> list[StateKey]:
        """Internal successors of ``key``; records newly created states."""
        if key in self.succ:
            return self.succ[key]
        steps, capped = successor_states(self.nodes[key], self.mode, self.bounds.max_instances)
        if capped:
            self.cap_hits += 1
            self.incomplete.add(key)
        out: list[StateKey] = []
        seen = set()
        for root_out, node in steps:
            if root_out:
                continue
            tk = state_key(node)
            if tk in seen:
                continue
            seen.add(tk)
            if tk not in self.nodes:
                if len(self.nodes) >= self.bounds.max_states:
                    self.incomplete.add(key)
                    continue
                self.nodes[tk] = node
                self.depth[tk] = self.depth[key] + 1
                self.parent[tk] = key
            out.append(tk)
        out.sort()
        self.succ[key] = out
        self.edges += len(out)
        return out

    def path_to(self, key: StateKey) -> list[tuple[StateKey, object]]:
        chain = []
        cur: StateKey | None = key
        while cur is not None:
            chain.append(cur)
            cur = self.parent[cur]
        chain.reverse()
        return [(k, None) for k in chain]

    def stats(self) -> ExplorationStats:
        return ExplorationStats(len(self.nodes), self.edges, self.cap_hits, len(self.incomplete))


def may_check(rt: RunningTest | MembraneNode, mode: SemanticsMode = SemanticsMode.AT_LEAST_ONE,
              bounds: Bounds = DEFAULT_BOUNDS) -> Verdict:
    """Layered breadth-first search for a reachable success state.

    Within a layer, states with fewer enabled rules are expanded first;
    the order inside a layer does not affect the witness length.
    """
    root = rt.root if isinstance(rt, RunningTest) else rt
    g = _InternalGraph(root, mode, bounds)
    if g.is_success(g.initial):
        return Verdict(Result.PASS, g.path_to(g.initial), bounds, "success reachable", g.stats())
    layer = [g.initial]
    queued = {g.initial}
    cut = False
    while layer:
        layer.sort(key=lambda k: (enabled_rule_count(g.nodes[k]), k))
        nxt = []
        for key in layer:
            succs = g.expand(key)
            if g.depth[key] >= bounds.max_depth:
                cut = cut or any(tk not in queued for tk in succs)
                continue
            for tk in succs:
                if tk in queued:
                    continue
                queued.add(tk)
                if g.is_success(tk):
                    return Verdict(Result.PASS, g.path_to(tk), bounds, "success reachable", g.stats())
                nxt.append(tk)
        layer = nxt
    if g.incomplete or cut:
        return Verdict(Result.INCONCLUSIVE, [], bounds, "bound exhausted", g.stats())
    return Verdict(Result.FAIL, [], bounds, "no reachable success state", g.stats())


def must_check(rt: RunningTest | MembraneNode, mode: SemanticsMode = SemanticsMode.AT_LEAST_ONE,
               bounds: Bounds = DEFAULT_BOUNDS) -> Verdict:
    """Every internal computation must meet a success state before ending or diverging.

    Success states are absorbing.  A success-free sink or a success-free
    cycle is a definitive failure; if neither exists in the explored part
    but some state could not be fully expanded, the verdict is
    inconclusive.
    """
    root = rt.root if isinstance(rt, RunningTest) else rt
    g = _InternalGraph(root, mode, bounds)
    queue = deque([g.initial])
    order: list[StateKey] = []
    frontier_cut = False
    queued = {g.initial}
    while queue:
        key = queue.popleft()
        if g.is_success(key):
            continue
        order.append(key)
        if g.depth[key] >= bounds.max_depth:
            if g.expand(key):
                frontier_cut = True
                g.incomplete.add(key)
            elif key not in g.incomplete:
                return Verdict(Result.FAIL, g.path_to(key), bounds, "success-free deadlock", g.stats())
            continue
        succs = g.expand(key)
        if not succs and key not in g.incomplete:
            return Verdict(Result.FAIL, g.path_to(key), bounds, "success-free deadlock", g.stats())
        if key in succs:
            return Verdict(Result.FAIL, g.path_to(key) + [(key, None)], bounds, "success-free cycle", g.stats())
        for tk in succs:
            if tk not in queued:
                queued.add(tk)
                queue.append(tk)
    cycle = _find_cycle(g, order)
    if cycle:
        return Verdict(Result.FAIL, g.path_to(cycle[0]) + [(k, None) for k in cycle[1:]], bounds,
                       "success-free cycle", g.stats())
    if g.incomplete or frontier_cut:
        return Verdict(Result.INCONCLUSIVE, [], bounds, "bound exhausted", g.stats())
    return Verdict(Result.PASS, [], bounds, "every computation succeeds", g.stats())


def _find_cycle(g: _InternalGraph, region: list[StateKey]) -> list[StateKey] | None:
    """A cycle among expanded success-free states, as a closed key list."""
    inside = set(region)
    color: dict[StateKey, int] = {}
    for start in region:
        if start in color:
            continue
        stack = [(start, iter(g.succ.get(start, ())))]
        path = [start]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for tk in it:
                if tk not in inside or g.is_success(tk):
                    continue
                if color.get(tk) == 1:
                    i = path.index(tk)
                    return path[i:] + [tk]
                if tk not in color:
                    color[tk] = 1
                    path.append(tk)
                    stack.append((tk, iter(g.succ.get(tk, ()))))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                stack.pop()
                path.pop()
    return None
