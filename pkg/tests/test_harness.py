import random
import sys
from decimal import Decimal
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vcforge.errors import (
    AdapterConfigError, AdapterSpawnError, HarnessError, InsufficientAttempts, PlaceholderMissing,
    UnmappedGoal,
)
from vcforge.harness import (
    FAILED, FAKE, HALLUCINATION, OTHER, PROVED, SYNTAX, TIMEOUT, CheckerAdapter, ProofAttempt,
    Verdict, classify_failure, degenerate, detect_fake, format_row, goal_files, load_adapter,
    pass_at_n, percent, read_attempts, read_results, render_report, report, report_json, run_attempt,
    run_attempts, splice, write_results,
)
from vcforge.ingest import load_corpus
from vcforge.pipeline import translate

FIX = Path(__file__).parent / "fixtures"
STUB = FIX / "checkers" / "stub.py"
GOAL = "Avl.height_nonneg"


def stub(mode, target="lean", **kw):
    return CheckerAdapter.for_target(target, f"{sys.executable} {STUB} {mode} {{file}}", **kw)


@pytest.fixture(scope="module")
def goals_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("lean")
    translate(load_corpus(FIX / "corpus.xml"), "lean", out)
    return out


def goal_file(goals_dir):
    return goal_files(goals_dir)[GOAL]


# -- formatting and pass@n ---------------------------------------------------


def test_function_row_format():
    assert format_row(6, 81) == "6 / 81, 7.41%"
    assert format_row(25, 81) == "25 / 81, 30.86%"


@pytest.mark.parametrize("num, den, expected", [
    (125, 600, "20.83"), (1, 8, "12.50"), (1, 3, "33.33"), (2, 3, "66.67"), (0, 0, "0.00"), (1, 200, "0.50"),
])
def test_percent(num, den, expected):
    assert percent(num, den) == Decimal(expected)


def _random_results(rng, goals, attempts):
    out = []
    for g in range(goals):
        for k in range(1, attempts + 1):
            status = rng.choice([PROVED, FAILED, FAILED, FAKE, TIMEOUT])
            out.append(Verdict(f"T.g{g}", "lean", k, status))
    rng.shuffle(out)
    return out


def test_pass_at_n_monotone():
    rng = random.Random(17)
    for _ in range(300):
        res = _random_results(rng, rng.randint(1, 12), 8)
        rates = [pass_at_n(res, n) for n in range(1, 9)]
        assert rates == sorted(rates)


@given(st.lists(st.lists(st.sampled_from([PROVED, FAILED, FAKE, TIMEOUT]), min_size=4, max_size=4),
                min_size=1, max_size=10))
def test_pass_at_n_brute_force(table):
    res = [Verdict(f"T.g{g}", "lean", k + 1, s) for g, row in enumerate(table) for k, s in enumerate(row)]
    for n in range(1, 5):
        hits = sum(PROVED in row[:n] for row in table)
        assert pass_at_n(res, n) == percent(hits, len(table))


def test_fake_is_a_failed_attempt():
    res = [Verdict("T.g", "lean", 1, FAKE), Verdict("T.g", "lean", 2, PROVED)]
    assert pass_at_n(res, 1) == Decimal("0.00") and pass_at_n(res, 2) == Decimal("100.00")


def test_insufficient_attempts():
    with pytest.raises(InsufficientAttempts):
        pass_at_n([Verdict("T.g", "lean", 1, PROVED)], 2)


def test_report_rows_and_total():
    rng = random.Random(4)
    res = _random_results(rng, 9, 3)
    cats = {f"T.g{g}": ["Function", "Loop", "Memory"][g % 3] for g in range(9)}
    cats["T.unused"] = "Empty"
    rep = report(res, cats, pass_at=(1, 3))
    assert [r.category for r in rep["rows"]] == ["Function", "Loop", "Memory", "Empty"]
    assert rep["total"].total == 9
    for n in (1, 3):
        assert rep["total"].solved[n] == sum(r.solved[n] for r in rep["rows"])
        assert rep["total"].rate(n) == pass_at_n(res, n)
    text = render_report(rep)
    assert text.splitlines()[0] == "Category\tPass@1\tPass@3"
    assert report_json(rep)["total"]["total"] == 9
    with pytest.raises(UnmappedGoal):
        report(res, {"T.g0": "Function"})


# -- failure analysis --------------------------------------------------------


@pytest.mark.parametrize("log, expected", [
    ("isabelle_undefined.log", HALLUCINATION), ("isabelle_syntax.log", SYNTAX),
    ("isabelle_both.log", SYNTAX),
])
def test_isabelle_failure_classes(log, expected):
    adapter = stub("ok", "isabelle")
    assert classify_failure("by simp", (FIX / "logs" / log).read_text(), adapter) == (expected, False)


def test_lean_other():
    assert classify_failure("simp", (FIX / "logs" / "lean_other.log").read_text(), stub("ok"))[0] == OTHER


def test_degeneration():
    chain = (FIX / "proofs" / "renaming_chain.lean").read_text()
    assert degenerate(chain)
    assert classify_failure(chain, "", stub("ok")) == (OTHER, True)
    assert not degenerate((FIX / "proofs" / "two_renamings.lean").read_text())
    assert degenerate("have a := b\nhave c := d\nhave e := f\n")
    assert not degenerate("have a := b\nhave c := d x\nhave e := f\n")


def test_detect_fake_skips_comments_and_strings():
    assert detect_fake("by simp -- no sorry here", "lean") is None
    assert detect_fake('by simp /- sorry -/ ; exact "sorry"', "lean") is None
    assert detect_fake("by\n  sorry", "lean") == "sorry"
    assert detect_fake("(* Admitted *) lia.", "rocq") is None
    assert detect_fake("Admitted.", "rocq") == "Admitted"
    assert detect_fake("by (simp add: sorry_lemma)", "isabelle") is None
    assert detect_fake("oops", "isabelle") == "oops"


# -- adapters ----------------------------------------------------------------


@pytest.mark.parametrize("cmd, timeout", [("checker", 5), ("checker {file} {file}", 5), ("checker {file}", 0),
                                          ("checker {file}", -1)])
def test_adapter_validation(cmd, timeout):
    with pytest.raises(AdapterConfigError):
        CheckerAdapter("lean", cmd, timeout=timeout)


def test_load_adapter(tmp_path):
    p = tmp_path / "a.json"
    p.write_text('{"target": "rocq", "command": "coqc {file}", "timeout": 30}')
    a = load_adapter(p)
    assert a.placeholder == "Admitted." and a.timeout == 30 and "Syntax error" in a.syntax_error_markers
    p.write_text('{"target": "rocq", "command": "coqc {file}", "colour": 1}')
    with pytest.raises(AdapterConfigError):
        load_adapter(p)


def test_splice_last_placeholder():
    assert splice("lemma a: sorry\nlemma b: sorry\n", "by simp", "sorry") == "lemma a: sorry\nlemma b: by simp\n"
    with pytest.raises(PlaceholderMissing):
        splice("no hole", "x", "sorry")


# -- running checkers --------------------------------------------------------


def test_proved_and_spliced(goals_dir):
    v = run_attempt(ProofAttempt(GOAL, "lean", 1, "by omega_marker"), goal_file(goals_dir),
                    stub("contains:omega_marker", timeout=30))
    assert v.status == PROVED and v.failure_class is None


def test_failed_attempts_are_classified(goals_dir):
    v = run_attempt(ProofAttempt(GOAL, "lean", 1, "by simp"), goal_file(goals_dir), stub("undefined", timeout=30))
    assert (v.status, v.failure_class) == (FAILED, HALLUCINATION)
    assert "Undefined fact" in v.log


def test_fake_proof_never_spawns(goals_dir, tmp_path, monkeypatch):
    log = tmp_path / "spawned.txt"
    monkeypatch.setenv("VCFORGE_STUB_LOG", str(log))
    v = run_attempt(ProofAttempt(GOAL, "lean", 1, "by\n  sorry"), goal_file(goals_dir), stub("ok", timeout=30))
    assert v.status == FAKE and not log.exists()
    run_attempt(ProofAttempt(GOAL, "lean", 2, "by simp"), goal_file(goals_dir), stub("ok", timeout=30))
    assert log.read_text().count("\n") == 1


def test_sleep_times_out(goals_dir):
    v = run_attempt(ProofAttempt(GOAL, "lean", 1, "by simp"), goal_file(goals_dir), stub("sleep", timeout=1))
    assert v.status == TIMEOUT and v.wall_time < 10


def test_missing_checker(goals_dir):
    a = CheckerAdapter.for_target("lean", "/no/such/checker {file}", timeout=5)
    with pytest.raises(AdapterSpawnError):
        run_attempt(ProofAttempt(GOAL, "lean", 1, "by simp"), goal_file(goals_dir), a)


def test_run_attempts_in_parallel(goals_dir):
    attempts = [ProofAttempt(g, "lean", k, f"by tac{k}") for g in (GOAL, "Avl.product_nonneg") for k in (2, 1)]
    res = run_attempts(attempts, goals_dir, stub("contains:tac2", timeout=30), jobs=3)
    assert [(v.goal_id, v.attempt_index, v.status) for v in res] == [
        ("Avl.height_nonneg", 1, FAILED), ("Avl.height_nonneg", 2, PROVED),
        ("Avl.product_nonneg", 1, FAILED), ("Avl.product_nonneg", 2, PROVED),
    ]
    with pytest.raises(HarnessError):
        run_attempts([ProofAttempt("Nope.g", "lean", 1, "x")], goals_dir, stub("ok"))
    with pytest.raises(HarnessError):
        run_attempts(attempts[:1] * 2, goals_dir, stub("ok"))
    with pytest.raises(HarnessError):
        run_attempts([ProofAttempt(GOAL, "rocq", 1, "x")], goals_dir, stub("ok"))


def test_results_round_trip(tmp_path):
    vs = [Verdict("T.g", "lean", 1, FAILED, 0.5, "log ✓", OTHER, True), Verdict("T.h", "lean", 1, PROVED)]
    write_results(vs, tmp_path / "r.jsonl")
    assert read_results(tmp_path / "r.jsonl") == vs


def test_read_attempts(tmp_path):
    p = tmp_path / "a.jsonl"
    p.write_text('{"goal_id": "T.g", "target": "lean", "attempt_index": 1, "proof_text": "by simp"}\n\n')
    assert read_attempts(p) == [ProofAttempt("T.g", "lean", 1, "by simp")]
    p.write_text('{"goal_id": "T.g"}\n')
    with pytest.raises(HarnessError):
        read_attempts(p)
    with pytest.raises(HarnessError):
        ProofAttempt("T.g", "lean", 0, "x")
