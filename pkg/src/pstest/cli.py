"""``pstest`` command line.

Exit codes: ``test`` 0 pass / 1 fail / 2 inconclusive; ``equiv`` 0 equal
or indistinguishable / 1 different / 2 inconclusive; ``corpus`` 0 when
every golden matches, 1 on drift; 3 for usage, file and parse errors.
Reports go to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import corpus
from .dsl import DslError, SourceSpec, load_spec, parse_spec
from .equivalence import (
    BISIMILAR,
    EQUAL,
    INCONCLUSIVE,
    NOT_BISIMILAR,
    bisim_bounded,
    partition_dot,
    suite_compare,
    trace_equiv_bounded,
)
from .explorer import Bounds, explore, format_trace, frontier_traces, lts_to_dot, short_hash, traces_bounded
from .semantics import SemanticsMode
from .testing import InvalidTerm, ObserverShapeError, Result, compose_running_test, may_check, must_check, success_states

SCHEMA_VERSION = 1
EXIT_USAGE = 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    paths: list[str] = field(default_factory=list)
    mode: SemanticsMode = SemanticsMode.AT_LEAST_ONE
    bounds: Bounds = field(default_factory=Bounds)
    fmt: str = "human"
    k: int | None = None
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# helpers


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    shipped = corpus.path(path)
    if shipped.exists():
        return shipped
    raise UsageError(f"{path}: no such file")


def _load(path: str, kind: str | None = None) -> tuple[SourceSpec, str]:
    p = _resolve(path)
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"{path}: cannot read: {exc}") from exc
    try:
        spec = parse_spec(text)
    except DslError as exc:
        raise UsageError(f"{p}:{exc.line}:{exc.col}: {type(exc).__name__}: {exc.message}") from exc
    if kind is not None and spec.kind != kind:
        raise UsageError(f"{p}: expected a {kind}, found a {spec.kind}")
    return spec, spec.name


def _dump(doc: dict) -> None:
    print(json.dumps(doc, indent=2, ensure_ascii=False))


def _bounds_text(b: Bounds) -> str:
    inst = "∞" if b.max_instances is None else b.max_instances
    return f"depth {b.max_depth}, states {b.max_states}, instances {inst}"


# ---------------------------------------------------------------------------
# commands


def cmd_run(cfg: RunConfig) -> int:
    spec, name = _load(cfg.paths[0], "system")
    lts = explore(spec.system, cfg.mode, cfg.bounds)
    if cfg.fmt == "dot":
        sys.stdout.write(lts_to_dot(lts))
        return 0
    if cfg.fmt == "json":
        _dump({
            "schema": f"pstest.lts/{SCHEMA_VERSION}", "system": name, "mode": cfg.mode.value,
            "bounds": cfg.bounds.to_json(), "complete": lts.complete, "initial": short_hash(lts.initial),
            "states": [{"id": short_hash(k), "depth": lts.depth[k], "truncated": k in lts.truncated}
                       for k in sorted(lts.states)],
            "edges": [{"from": short_hash(k), "to": short_hash(t), "label": format_trace((lab,))}
                      for k in sorted(lts.edges) for lab, t in lts.edges[k]],
            "stats": lts.stats.to_json(),
        })
        return 0
    s = lts.stats
    print(f"system: {name}  mode: {cfg.mode.value}")
    print(f"states: {s.states}  edges: {s.edges}  truncated: {s.truncations}  cap hits: {s.cap_hits}")
    print(f"complete: {'yes' if lts.complete else 'no'}  bounds: {_bounds_text(cfg.bounds)}")
    return 0


def cmd_traces(cfg: RunConfig) -> int:
    spec, name = _load(cfg.paths[0], "system")
    k = cfg.k or 8
    lts = explore(spec.system, cfg.mode, cfg.bounds)
    listing = frontier_traces(traces_bounded(lts, k))
    if cfg.fmt == "json":
        _dump({"schema": f"pstest.traces/{SCHEMA_VERSION}", "system": name, "mode": cfg.mode.value, "k": k,
               "bounds": cfg.bounds.to_json(), "complete": lts.complete,
               "traces": [{"trace": format_trace(w), "kind": kind} for w, kind in listing]})
        return 0
    for w, kind in listing:
        print(f"{format_trace(w)}\t{kind}")
    return 0


def _verdict_record(obs: str, system: str, mode: SemanticsMode, bounds: Bounds, may, must) -> dict:
    main = must if must is not None else may
    return {
        "schema": f"pstest.verdict/{SCHEMA_VERSION}",
        "observer": obs, "system": system, "mode": mode.value,
        "may": None if may is None else may.result.value,
        "must": None if must is None else must.result.value,
        "bounds": bounds.to_json(),
        "witness": main.to_json()["witness"], "reason": main.reason, "stats": main.stats.to_json(),
        "checks": {name: v.to_json() for name, v in (("may", may), ("must", must)) if v is not None},
    }


def _compose(obs_spec: SourceSpec, sys_spec: SourceSpec):
    try:
        return compose_running_test(obs_spec.observer, sys_spec.system, obs_spec.name, sys_spec.name)
    except (ObserverShapeError, InvalidTerm) as exc:
        raise UsageError(f"cannot compose {obs_spec.name} with {sys_spec.name}: {exc}") from exc


def cmd_test(cfg: RunConfig) -> int:
    sys_spec, _ = _load(cfg.extra["system"], "system")
    obs_spec, _ = _load(cfg.extra["observer"], "observer")
    rt = _compose(obs_spec, sys_spec)
    want_may, want_must = cfg.extra["may"], cfg.extra["must"]
    if not (want_may or want_must):
        want_may = want_must = True
    if cfg.fmt == "dot":
        lts = explore(rt.root, cfg.mode, cfg.bounds)
        sys.stdout.write(lts_to_dot(lts, success_states(lts)))
        return 0
    may = may_check(rt, cfg.mode, cfg.bounds) if want_may else None
    must = must_check(rt, cfg.mode, cfg.bounds) if want_must else None
    if cfg.fmt == "json":
        _dump(_verdict_record(obs_spec.name, sys_spec.name, cfg.mode, cfg.bounds, may, must))
    else:
        print(f"observer: {obs_spec.name}  system: {sys_spec.name}  mode: {cfg.mode.value}")
        for label, v in (("may", may), ("must", must)):
            if v is not None:
                wit = f"; witness of {len(v.witness)} states" if v.witness else ""
                print(f"{label + ':':6}{v.result.value}  ({v.reason}{wit})")
        print(f"bounds: {_bounds_text(cfg.bounds)}")
    results = [v.result for v in (may, must) if v is not None]
    if Result.FAIL in results:
        return 1
    if Result.INCONCLUSIVE in results:
        return 2
    return 0


def cmd_equiv(cfg: RunConfig) -> int:
    if len(cfg.paths) != 2:
        raise UsageError("equiv needs exactly two system files")
    (a, name_a), (b, name_b) = (_load(p, "system") for p in cfg.paths)
    kind = cfg.extra["kind"]
    if kind == "suite":
        files = cfg.extra["suite"] or []
        if not files:
            raise UsageError("--kind suite needs --suite FILE...")
        specs = [_load(f, "observer")[0] for f in files]
        report = suite_compare(a.system, b.system, [s.observer for s in specs], cfg.mode, cfg.bounds,
                               names=[s.name for s in specs])
        if cfg.fmt == "json":
            _dump(dict(report.to_json(), schema=f"pstest.suite/{SCHEMA_VERSION}", a=name_a, b=name_b,
                       mode=cfg.mode.value, bounds=cfg.bounds.to_json()))
        else:
            print(f"suite comparison of {name_a} and {name_b} ({cfg.mode.value}), {len(specs)} observers")
            for e in report.entries:
                v = [x.value for x in e.verdicts()]
                print(f"  {e.observer}: may {v[0]}/{v[2]}  must {v[1]}/{v[3]}")
            print(f"may preorder: {name_a}⊑{name_b} {report.may_ab}, {name_b}⊑{name_a} {report.may_ba}")
            print(f"must preorder: {name_a}⊑{name_b} {report.must_ab}, {name_b}⊑{name_a} {report.must_ba}")
            verdict = "indistinguishable by this suite" if report.indistinguishable else "distinguished by this suite"
            print(verdict + ("  (some verdicts inconclusive)" if report.any_inconclusive else ""))
        if not report.indistinguishable:
            return 1
        return 2 if report.any_inconclusive else 0
    la, lb = explore(a.system, cfg.mode, cfg.bounds), explore(b.system, cfg.mode, cfg.bounds)
    if kind == "bisim":
        k = cfg.k or 64
        if cfg.fmt == "dot":
            sys.stdout.write(partition_dot(la, lb, k))
            return 0
        res = bisim_bounded(la, lb, k)
        if cfg.fmt == "json":
            _dump(dict(res.to_json(), schema=f"pstest.equiv/{SCHEMA_VERSION}", a=name_a, b=name_b,
                       mode=cfg.mode.value, k=k, bounds=cfg.bounds.to_json()))
        else:
            line = res.verdict
            if res.verdict == BISIMILAR and not res.exact:
                line += f" (up to depth {res.depth})"
            elif res.verdict == NOT_BISIMILAR:
                line += f" at depth {res.depth}, distinguishing sequence: {format_trace(res.sequence) or '(initial states)'}"
            print(line)
        return 0 if res.verdict == BISIMILAR else 2 if res.verdict == INCONCLUSIVE else 1
    k = cfg.k or 8
    if cfg.fmt == "dot":
        raise UsageError("--format dot is only available for --kind bisim")
    res = trace_equiv_bounded(la, lb, k)
    if cfg.fmt == "json":
        _dump(dict(res.to_json(), schema=f"pstest.equiv/{SCHEMA_VERSION}", a=name_a, b=name_b,
                   mode=cfg.mode.value, k=k, bounds=cfg.bounds.to_json()))
    else:
        line = res.verdict
        if res.witness is not None:
            line += f": {format_trace(res.witness)} ({res.witness_kind}) on one side only"
        elif res.verdict == EQUAL and not res.exact:
            line += f" (up to length {k})"
        print(line)
    return 0 if res.verdict == EQUAL else 2 if res.verdict == INCONCLUSIVE else 1


def _population(name: str, cfg: RunConfig, rows: list, drift: list) -> None:
    entry = corpus.manifest()["examples"][name]
    system = load_spec(corpus.path(entry["system"])).system
    default_k = entry["k"]
    k = cfg.k if cfg.k is not None else default_k
    if name == "ex1" and cfg.k is not None:
        raise UsageError("ex1 has no k parameter")
    text = corpus.example_observer(name, k)
    try:
        obs = parse_spec(text).observer
    except DslError as exc:  # pragma: no cover - generated text is well-formed
        raise UsageError(f"generated observer for {name}: {exc}") from exc
    rt = compose_running_test(obs, system, name, "pop")
    if k == default_k:
        for case in corpus.goldens()["cases"]:
            if case["example"] != name:
                continue
            b = Bounds(**case["bounds"])
            mode = SemanticsMode.parse(case["mode"])
            check = may_check if case["check"] == "may" else must_check
            t0 = time.perf_counter()
            got = check(rt, mode, b).result.value
            label = case["check"] if b.max_instances == 8 else f"{case['check']} (instances {b.max_instances})"
            row = {"example": name, "mode": mode.value, "check": label, "bounds": b.to_json(),
                   "expected": case["expected"], "got": got, "seconds": round(time.perf_counter() - t0, 3)}
            rows.append(row)
            if got != case["expected"]:
                drift.append(row)
    else:
        for mode in SemanticsMode:
            for label, check in (("may", may_check), ("must", must_check)):
                rows.append({"example": f"{name} (k={k})", "mode": mode.value, "check": label,
                             "bounds": cfg.bounds.to_json(), "expected": None,
                             "got": check(rt, mode, cfg.bounds).result.value})


def _pair(name: str, rows: list, drift: list) -> None:
    entry = corpus.manifest()["examples"][name]
    exp = entry["expected"]
    a = load_spec(corpus.path(entry["a"])).system
    b = load_spec(corpus.path(entry["b"])).system
    for mode in SemanticsMode:
        la, lb = explore(a, mode), explore(b, mode)
        got: dict = {"bisim": bisim_bounded(la, lb).verdict}
        if name == "trace-pair":
            tr = trace_equiv_bounded(la, lb, entry["k"])
            got["trace"] = tr.verdict
            got["traces"] = [format_trace(w) for w, kind in frontier_traces(tr.traces_a)]
            obs = load_spec(corpus.path(entry["observer"])).observer
            for side, system in (("a", a), ("b", b)):
                rt = compose_running_test(obs, system)
                got[f"may_{side}"] = may_check(rt, mode).result.value
                got[f"must_{side}"] = must_check(rt, mode).result.value
        else:
            suite = [load_spec(p).observer for p in corpus.suite_paths()]
            rep = suite_compare(a, b, suite, mode)
            got["suite_indistinguishable"] = rep.indistinguishable and not rep.any_inconclusive
        for key, want in exp.items():
            row = {"example": name, "mode": mode.value, "check": key, "expected": want, "got": got[key]}
            rows.append(row)
            if got[key] != want:
                drift.append(row)


def cmd_corpus(cfg: RunConfig) -> int:
    names = list(corpus.manifest()["examples"])
    if cfg.extra.get("list"):
        for n in names:
            print(n)
        return 0
    selected = cfg.paths[0] if cfg.paths else None
    if selected is None:
        raise UsageError("corpus needs an example name (or --list)")
    todo = names if selected == "all" else [selected]
    if selected != "all" and selected not in names:
        raise UsageError(f"unknown corpus example {selected!r}; try --list")
    rows: list = []
    drift: list = []
    for name in todo:
        if name.startswith("ex"):
            _population(name, cfg, rows, drift)
        else:
            _pair(name, rows, drift)
    if cfg.fmt == "json":
        _dump({"schema": f"pstest.corpus/{SCHEMA_VERSION}", "examples": todo, "rows": rows,
               "drift": len(drift)})
    else:
        for r in rows:
            exp = "" if r["expected"] is None else f"  expected {json.dumps(r['expected'], ensure_ascii=False)}"
            mark = "" if r["expected"] is None else ("  ok" if r["got"] == r["expected"] else "  DRIFT")
            print(f"{r['example']:10} {r['mode']:13} {r['check']:24} {json.dumps(r['got'], ensure_ascii=False)}{exp}{mark}")
        print(f"{len(rows)} checks, {len(drift)} drifted")
    return 1 if drift else 0


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors exit 3, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _instances(value: str) -> int | None:
    if value.lower() in ("inf", "none", "∞"):
        return None
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=[m.value for m in SemanticsMode], default="at-least-one")
    common.add_argument("--max-depth", type=_positive, default=64)
    common.add_argument("--max-states", type=_positive, default=100_000)
    common.add_argument("--max-instances", type=_instances, default=8, help="per-rule cap per step, or 'inf'")
    common.add_argument("--k", "-k", type=_positive, default=None, help="trace length / refinement rounds / example k")
    common.add_argument("--format", choices=["human", "json", "dot"], default="human")

    parser = _Parser(prog="pstest", description="P Algebra workbench: explore, test and compare membrane systems.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("run", parents=[common], help="explore a system and report its graph")
    p.add_argument("system")
    p = sub.add_parser("traces", parents=[common], help="list bounded traces")
    p.add_argument("system")
    p = sub.add_parser("test", parents=[common], help="compose with an observer and check may/must")
    p.add_argument("--system", required=True)
    p.add_argument("--observer", required=True)
    p.add_argument("--may", action="store_true")
    p.add_argument("--must", action="store_true")
    p = sub.add_parser("equiv", parents=[common], help="compare two systems")
    p.add_argument("systems", nargs=2)
    p.add_argument("--kind", choices=["trace", "bisim", "suite"], default="trace")
    p.add_argument("--suite", nargs="+", default=None)
    p = sub.add_parser("corpus", parents=[common], help="run a shipped example against its goldens")
    p.add_argument("name", nargs="?")
    p.add_argument("--list", action="store_true")
    return parser


def parse_config(argv: Sequence[str] | None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=ns.command,
        mode=SemanticsMode.parse(ns.mode),
        bounds=Bounds(ns.max_depth, ns.max_states, ns.max_instances),
        fmt=ns.format,
        k=ns.k,
    )
    if ns.command in ("run", "traces"):
        cfg.paths = [ns.system]
    elif ns.command == "test":
        cfg.extra = {"system": ns.system, "observer": ns.observer, "may": ns.may, "must": ns.must}
    elif ns.command == "equiv":
        cfg.paths = list(ns.systems)
        cfg.extra = {"kind": ns.kind, "suite": ns.suite}
    else:
        cfg.paths = [ns.name] if ns.name else []
        cfg.extra = {"list": ns.list}
    return cfg


COMMANDS = {"run": cmd_run, "traces": cmd_traces, "test": cmd_test, "equiv": cmd_equiv, "corpus": cmd_corpus}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
        if cfg.fmt == "dot" and cfg.command in ("traces", "corpus"):
            raise UsageError(f"--format dot is not available for {cfg.command}")
        return COMMANDS[cfg.command](cfg)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"pstest: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
