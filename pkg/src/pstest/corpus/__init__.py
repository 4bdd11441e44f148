"""Shipped example corpus: figure pairs, an observer suite and the population examples.

The population observers are generated from their counter length ``k``;
the ``exN.psys`` files are the output of :func:`example_observer` for the
default ``k`` of each example.
"""
from __future__ import annotations

import json
from pathlib import Path

CORPUS_DIR = Path(__file__).resolve().parent
DEFAULT_K = {"ex1": None, "ex2": 3, "ex3": 1, "ex4": 2}

INHIBITORS = ("no_sex_repr", "no_asex_repr", "no_male_death", "no_female_death", "no_male_life",
              "no_female_life")
INDIVIDUALS = tuple(f"[{a} {b} {s}]" for s in "mf" for a in "01" for b in "01")
SEED = "[0 0 m]:4 [0 1 f]:4"
STOP = " ".join(INHIBITORS) + " send_out"


def path(name: str) -> Path:
    p = CORPUS_DIR / name
    if p.suffix != ".psys" and not p.exists():
        p = p.with_suffix(".psys")
    return p


def suite_paths() -> list[Path]:
    return sorted((CORPUS_DIR / "suite").glob("*.psys"))


def manifest() -> dict:
    return json.loads((CORPUS_DIR / "manifest.json").read_text(encoding="utf-8"))


def goldens() -> dict:
    return json.loads((CORPUS_DIR / "goldens.json").read_text(encoding="utf-8"))


def _alphabet(counters: int) -> str:
    rows = [
        ", ".join(INDIVIDUALS),
        ", ".join(INHIBITORS),
        "send_out, anti_no_sex_repr, anti_no_asex_repr, a, block, fail",
        ", ".join([f"c{i}" for i in range(1, counters + 1)] + ["p1", "p2", "p3"]),
    ]
    return "  alphabet {\n" + ",\n".join("    " + r for r in rows) + "\n  }"


_RECOMBINANT = """\
    forall a1, a2 in {0, 1} if not (a1 = 0 and a2 = 1):
      rule new_f: [a1 a2 f] -> (omega, out)
    forall a1, a2 in {0, 1} if not (a1 = 0 and a2 = 0):
      rule new_m: [a1 a2 m] -> (omega, out)"""

_FLAG = """\
    forall a1, a2 in {0, 1} if not (a1 = 0 and a2 = 1):
      rule flag: [a1 a2 f] -> fail"""

_HEADERS = {
    "ex1": "# must: two time units after seeding, only the original kind of female is\n"
           "# present and there are at least as many of them as at the start.",
    "ex2": "# must, k = {k}: for up to k steps no new kind of female can appear.",
    "ex3": "# may, k = {k}: with no constraints a recombinant offspring can show up.",
    "ex4": "# may, k = {k}: asexual reproduction only for k steps, then sexual only for k\n"
           "# steps (the antidote lifts no_sex_repr); a recombinant can still appear.",
}


def example_observer(name: str, k: int | None = None) -> str:
    """``.psys`` text of a population observer."""
    if name not in DEFAULT_K:
        raise KeyError(name)
    k = DEFAULT_K[name] if k is None else k
    rules: list[str] = []
    if name == "ex1":
        if k is not None:
            raise ValueError("ex1 takes no k")
        counters = 5
        rules = [
            f"rule seed: a -> c1 ({SEED} no_sex_repr no_female_death, in 2)",
            "rule t1: c1 -> c2",
            f"rule stop: c2 -> c3 ({STOP}, in 2)",
            "rule t3: c3 -> c4",
            _FLAG,
            "rule t4: c4 -> c5",
            "rule ok: c5 [0 1 f]:4 -> (omega, out) | inhibitors { fail }",
        ]
    elif name == "ex2":
        if k < 1:
            raise ValueError("ex2 needs k >= 1")
        counters = k
        rules = [f"rule seed: a -> c1 block ({SEED} no_sex_repr no_female_death, in 2)"]
        rules += [f"rule t{i}: c{i} -> c{i + 1}" for i in range(1, k)]
        rules += [
            f"rule wait: block -> block | inhibitors {{ c{k} }}",
            f"rule stop: block -> p1 ({STOP}, in 2)",
            "rule u1: p1 -> p2",
            _FLAG,
            "rule u2: p2 -> p3",
            "rule ok: p3 -> (omega, out) | inhibitors { fail }",
        ]
    elif name == "ex3":
        if k < 1:
            raise ValueError("ex3 needs k >= 1")
        counters = k
        rules = [f"rule seed: a -> c1 block ({SEED}, in 2)"]
        rules += [f"rule t{i}: c{i} -> c{i + 1}" for i in range(1, k)]
        rules += [f"rule stop: c{k} -> p1 ({STOP}, in 2)", "rule u1: p1 -> p2", _RECOMBINANT]
    else:
        if k < 2:
            raise ValueError("ex4 needs k >= 2")
        counters = 2 * k - 1
        rules = [f"rule seed: a -> c1 block ({SEED} no_sex_repr, in 2)"]
        rules += [f"rule t{i}: c{i} -> c{i + 1}" for i in range(1, k - 1)]
        rules += [f"rule swap: c{k - 1} -> c{k} (anti_no_sex_repr no_asex_repr, in 2)"]
        rules += [f"rule t{i}: c{i} -> c{i + 1}" for i in range(k, 2 * k - 1)]
        rules += [f"rule stop: c{2 * k - 1} -> p1 ({STOP}, in 2)", "rule u1: p1 -> p2", _RECOMBINANT]
    body = "\n".join(r if r.startswith("    ") else "    " + r for r in rules)
    header = _HEADERS[name].format(k=k)
    return (f'{header}\nobserver "{name}" {{\n{_alphabet(counters)}\n  membrane 1 {{\n'
            f"    objects {{ a }}\n{body}\n    hole 2\n  }}\n}}\n")
