"""Regenerate src/pstest/corpus/goldens.json with the brute-force oracle.

Run from the repository root:  python3 tools/make_goldens.py
The oracle lives in tests/oracles.py and shares nothing with the checker
except the term classes and the parser.
"""
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path[:0] = [str(ROOT / "src"), str(ROOT / "tests")]

from oracles import oracle_may, oracle_must  # noqa: E402
from pstest.dsl import load_spec  # noqa: E402
from pstest.testing import compose_running_test  # noqa: E402

CORPUS = ROOT / "src" / "pstest" / "corpus"
ORACLE_DEPTH = 8
DEFAULT_CHECKER = {"max_depth": 64, "max_states": 100000, "max_instances": 8}

# (example, mode, check, cap) -- cap also applies to the checker run
CASES = [(ex, mode, check, 8) for ex in ("ex1", "ex2", "ex3", "ex4")
         for mode in ("at-least-one", "maximal") for check in ("may", "must")]
SUPPLEMENTAL = [("ex1", "maximal", "must", 16), ("ex2", "maximal", "must", 64)]


def main() -> None:
    system = load_spec(CORPUS / "pop.psys").system
    out = []
    for ex, mode, check, cap in CASES + SUPPLEMENTAL:
        rt = compose_running_test(load_spec(CORPUS / f"{ex}.psys").observer, system, ex, "pop")
        oracle = oracle_may if check == "may" else oracle_must
        verdict = oracle(rt.root, mode, ORACLE_DEPTH, cap)
        out.append({
            "example": ex, "system": "pop.psys", "observer": f"{ex}.psys", "mode": mode, "check": check,
            "expected": verdict, "supplemental": (ex, mode, check, cap) in SUPPLEMENTAL,
            "oracle": {"max_depth": ORACLE_DEPTH, "max_instances": cap},
            "bounds": dict(DEFAULT_CHECKER, max_instances=cap),
        })
        print(ex, mode, check, cap, verdict, flush=True)
    doc = {"schema": "pstest.goldens/1", "generator": "tools/make_goldens.py", "cases": out}
    (CORPUS / "goldens.json").write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
