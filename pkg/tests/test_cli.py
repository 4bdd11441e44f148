import json
import subprocess
import sys

import pytest

from pstest.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_run_human(capsys):
    code, out, err = run(capsys, "run", "figA.psys")
    assert code == 0 and not err
    assert "states: 6" in out and "complete: yes" in out


def test_run_json_is_deterministic(capsys):
    first = run(capsys, "run", "figA.psys", "--format", "json")[1]
    second = run(capsys, "run", "figA.psys", "--format", "json")[1]
    assert first == second
    doc = json.loads(first)
    assert doc["schema"] == "pstest.lts/1" and doc["complete"] is True
    assert len(doc["edges"]) == doc["stats"]["edges"]


def test_run_dot(capsys):
    code, out, _ = run(capsys, "run", "figC.psys", "--format", "dot")
    assert code == 0 and out.startswith("digraph")


def test_traces(capsys):
    code, out, _ = run(capsys, "traces", "figA.psys", "-k", "3")
    assert code == 0
    assert [line.split("\t")[0] for line in out.splitlines()] == ["∅ (α) (β)", "∅ (α) (γ)"]
    doc = json.loads(run(capsys, "traces", "figC.psys", "-k", "3", "--format", "json")[1])
    assert doc["schema"] == "pstest.traces/1" and len(doc["traces"]) == 2


def test_test_must_fail_exit_1(capsys):
    code, out, _ = run(capsys, "test", "--system", "figA.psys", "--observer", "dist.psys", "--must")
    assert code == 1 and "must: fail" in out


def test_test_pass_exit_0_json(capsys):
    code, out, _ = run(capsys, "test", "--system", "figC.psys", "--observer", "dist.psys", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == "pstest.verdict/1"
    assert (doc["may"], doc["must"]) == ("pass", "pass")
    assert set(doc["checks"]) == {"may", "must"}


def test_test_inconclusive_exit_2(capsys):
    code, out, _ = run(capsys, "test", "--system", "pop.psys", "--observer", "ex1.psys", "--mode", "maximal",
                       "--must", "--max-instances", "4")
    assert code == 2 and "inconclusive" in out


def test_example_1_maximal_must_with_larger_cap(capsys):
    code, out, _ = run(capsys, "test", "--system", "pop.psys", "--observer", "ex1.psys", "--mode", "maximal",
                       "--must", "--max-instances", "16")
    assert code == 0 and "must: pass" in out


def test_equiv_kinds(capsys):
    code, out, _ = run(capsys, "equiv", "figA.psys", "figC.psys", "--kind", "trace", "-k", "3")
    assert code == 0 and out.startswith("Equal")
    code, out, _ = run(capsys, "equiv", "figA.psys", "figC.psys", "--kind", "bisim")
    assert code == 1
    assert out.strip() == "NotBisimilar at depth 3, distinguishing sequence: ∅"
    code, out, _ = run(capsys, "equiv", "figA.psys", "figC.psys", "--kind", "bisim", "--format", "dot")
    assert code == 0 and out.startswith("digraph partition")


def test_equiv_suite(capsys):
    code, out, _ = run(capsys, "equiv", "figA.psys", "figC.psys", "--kind", "suite", "--suite", "dist.psys",
                       "--format", "json")
    doc = json.loads(out)
    assert code == 1 and doc["schema"] == "pstest.suite/1"
    assert doc["suite_may_equivalent"] and not doc["suite_must_equivalent"]


def test_corpus_pair_and_list(capsys):
    code, out, _ = run(capsys, "corpus", "--list")
    assert code == 0 and "ex1" in out and "trace-pair" in out
    code, out, _ = run(capsys, "corpus", "trace-pair")
    assert code == 0


def test_corpus_example_3(capsys):
    code, out, _ = run(capsys, "corpus", "ex3", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == "pstest.corpus/1"
    assert doc["drift"] == 0


def test_syntax_error_goes_to_stderr(capsys, tmp_path):
    bad = tmp_path / "bad.psys"
    bad.write_text('system "t" {\n  alphabet { a }\n  membrane 1 { rule r a -> a }\n}\n', encoding="utf-8")
    code, out, err = run(capsys, "run", str(bad))
    assert code == 3 and out == ""
    assert err.startswith(f"pstest: {bad}:3:")
    assert "SyntaxError" in err


def test_missing_file(capsys):
    code, out, err = run(capsys, "run", "no-such-file.psys")
    assert code == 3 and out == "" and err.startswith("pstest: ")


def test_wrong_kind(capsys):
    code, _, err = run(capsys, "run", "dist.psys")
    assert code == 3 and "observer" in err


@pytest.mark.parametrize("argv", [[], ["bogus"], ["run"], ["run", "figA.psys", "--max-depth", "0"],
                                  ["traces", "figA.psys", "--format", "dot"]])
def test_usage_errors_exit_3(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 3 and out == ""


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pstest.cli", "run", "figA.psys", "--format", "json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stderr == ""
    assert json.loads(proc.stdout)["system"] == "figA"
