"""Proof-attempt checking, pass@n and failure classification."""

from __future__ import annotations

import json
import logging
import os
import re
import shlex
import signal
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

from .emit import read_manifest
from .emit.emitter import MANIFEST
from .errors import (
    AdapterConfigError, AdapterSpawnError, HarnessError, InsufficientAttempts,
    PlaceholderMissing, UnmappedGoal,
)

log = logging.getLogger(__name__)

PROVED, FAKE, FAILED, TIMEOUT = "Proved", "Fake", "Failed", "Timeout"
SYNTAX, HALLUCINATION, OTHER = "Syntax", "Hallucination", "Other"
DEFAULT_TIMEOUT = 600.0

FAKE_TOKENS = {
    "isabelle": ("sorry", "oops"),
    "lean": ("sorry", "admit"),
    "rocq": ("Admitted", "admit", "Abort"),
}
PLACEHOLDERS = {"isabelle": "sorry", "lean": "sorry", "rocq": "Admitted."}
SYNTAX_MARKERS = {
    "isabelle": ("Inner syntax error", "Outer syntax error", "Inner lexical error"),
    "lean": ("unexpected token", "unexpected end of input", "expected term"),
    "rocq": ("Syntax error", "Lexer error"),
}
UNDEFINED_MARKERS = ("Undefined fact", "Undefined constant")
_EXTRA_UNDEFINED = {
    "isabelle": ("Undefined method", "Undefined type name"),
    "lean": ("unknown identifier", "unknown constant", "unknown tactic"),
    "rocq": ("was not found in the current environment", "Unknown tactic"),
}


# -- lexical scanning of proof text -----------------------------------------

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_'.]*[A-Za-z0-9_']|[A-Za-z_]")
_COMMENTS = {
    "isabelle": (("(*", "*)"),),
    "lean": (("/-", "-/"),),
    "rocq": (("(*", "*)"),),
}
_LINE_COMMENTS = {"lean": "--"}
_STRINGS = {"isabelle": ('"', "`", "‹"), "lean": ('"',), "rocq": ('"',)}
_STRING_CLOSE = {"‹": "›"}


def code_words(text: str, target: str):
    """Identifier tokens of ``text`` outside comments and string literals."""
    blocks = _COMMENTS.get(target, (("(*", "*)"),))
    line = _LINE_COMMENTS.get(target)
    quotes = _STRINGS.get(target, ('"',))
    i, n = 0, len(text)
    while i < n:
        for op, cl in blocks:
            if text.startswith(op, i):
                depth, i = 1, i + len(op)
                while i < n and depth:
                    if text.startswith(op, i):
                        depth, i = depth + 1, i + len(op)
                    elif text.startswith(cl, i):
                        depth, i = depth - 1, i + len(cl)
                    else:
                        i += 1
                break
        else:
            if line and text.startswith(line, i):
                j = text.find("\n", i)
                i = n if j < 0 else j
                continue
            c = text[i]
            if c in quotes:
                close = _STRING_CLOSE.get(c, c)
                i += 1
                while i < n and text[i] != close:
                    i += 2 if text[i] == "\\" and close == '"' else 1
                i += 1
                continue
            m = _IDENT.match(text, i)
            if m and (i == 0 or not (text[i - 1].isalnum() or text[i - 1] in "_'")):
                yield m.group()
                i = m.end()
            else:
                i += 1


def detect_fake(proof_text: str, target: str, tokens=None) -> str | None:
    """First fake-proof token in ``proof_text``, or None."""
    fakes = set(tokens if tokens is not None else FAKE_TOKENS.get(target, ()))
    for w in code_words(proof_text, target):
        if w in fakes:
            return w
    return None


_RENAMING = re.compile(r"^\s*have\s+[A-Za-z_][A-Za-z0-9_']*\s*:=\s*[A-Za-z_][A-Za-z0-9_']*\s*$")


def degenerate(proof_text: str, run: int = 3) -> bool:
    """True iff ``run`` or more consecutive lines are bare renamings
    ``have h := h'``."""
    streak = 0
    for line in proof_text.splitlines():
        streak = streak + 1 if _RENAMING.match(line) else 0
        if streak >= run:
            return True
    return False


# -- adapters ----------------------------------------------------------------


@dataclass(frozen=True)
class CheckerAdapter:
    target: str
    command_template: str
    timeout: float = DEFAULT_TIMEOUT
    syntax_error_markers: tuple = ()
    undefined_entity_markers: tuple = UNDEFINED_MARKERS
    fake_tokens: tuple | None = None
    placeholder: str | None = None

    def __post_init__(self):
        if not self.timeout or self.timeout <= 0:
            raise AdapterConfigError(f"timeout must be positive, got {self.timeout!r}")
        if self.command_template.count("{file}") != 1:
            raise AdapterConfigError("command template must contain {file} exactly once")
        for f in ("syntax_error_markers", "undefined_entity_markers"):
            object.__setattr__(self, f, tuple(getattr(self, f)))
        if self.fake_tokens is None:
            object.__setattr__(self, "fake_tokens", FAKE_TOKENS.get(self.target, ()))
        else:
            object.__setattr__(self, "fake_tokens", tuple(self.fake_tokens))
        if self.placeholder is None:
            object.__setattr__(self, "placeholder", PLACEHOLDERS.get(self.target))
        if not self.placeholder:
            raise AdapterConfigError(f"no proof placeholder known for target {self.target!r}")

    @classmethod
    def for_target(cls, target: str, command_template: str, **kw) -> "CheckerAdapter":
        kw.setdefault("syntax_error_markers", SYNTAX_MARKERS.get(target, ()))
        kw.setdefault("undefined_entity_markers", UNDEFINED_MARKERS + _EXTRA_UNDEFINED.get(target, ()))
        return cls(target, command_template, **kw)

    def argv(self, file: str, goals_dir: str = "") -> list[str]:
        return [
            a.replace("{file}", file).replace("{goals_dir}", goals_dir)
            for a in shlex.split(self.command_template)
        ]


def load_adapter(path) -> CheckerAdapter:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise AdapterConfigError(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or "target" not in doc or "command" not in doc:
        raise AdapterConfigError(f"{path}: expected an object with target and command")
    known = {"target", "command", "timeout", "syntax_error_markers",
             "undefined_entity_markers", "fake_tokens", "placeholder"}
    unknown = set(doc) - known
    if unknown:
        raise AdapterConfigError(f"{path}: unknown keys {sorted(unknown)}")
    kw = {k: doc[k] for k in known - {"target", "command"} if k in doc}
    return CheckerAdapter.for_target(doc["target"], doc["command"], **kw)


# -- attempts and verdicts ---------------------------------------------------


@dataclass(frozen=True)
class ProofAttempt:
    goal_id: str
    target: str
    attempt_index: int
    proof_text: str

    def __post_init__(self):
        if self.attempt_index < 1:
            raise HarnessError(f"attempt_index is 1-based, got {self.attempt_index}")


@dataclass(frozen=True)
class Verdict:
    goal_id: str
    target: str
    attempt_index: int
    status: str
    wall_time: float = 0.0
    log: str = ""
    failure_class: str | None = None
    degeneration_flag: bool = False

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "Verdict":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def classify_failure(proof_text: str, log_text: str, adapter: CheckerAdapter) -> tuple[str, bool]:
    """(failure class, degeneration flag); Syntax beats Hallucination beats Other."""
    if any(m in log_text for m in adapter.syntax_error_markers):
        cls = SYNTAX
    elif any(m in log_text for m in adapter.undefined_entity_markers):
        cls = HALLUCINATION
    else:
        cls = OTHER
    return cls, degenerate(proof_text)


def splice(goal_text: str, proof_text: str, placeholder: str) -> str:
    """Replace the last occurrence of the placeholder by the proof."""
    k = goal_text.rfind(placeholder)
    if k < 0:
        raise PlaceholderMissing(f"placeholder {placeholder!r} not found in goal file")
    return goal_text[:k] + proof_text + goal_text[k + len(placeholder):]


def _kill(proc) -> None:
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        proc.kill()


def run_attempt(a: ProofAttempt, goal_file, adapter: CheckerAdapter) -> Verdict:
    """Check one attempt. Fake proofs are rejected without running the checker."""
    base = dict(goal_id=a.goal_id, target=a.target, attempt_index=a.attempt_index)
    flag = degenerate(a.proof_text)
    tok = detect_fake(a.proof_text, adapter.target, adapter.fake_tokens)
    if tok is not None:
        return Verdict(**base, status=FAKE, log=f"fake proof token: {tok}", degeneration_flag=flag)
    goal_file = os.fspath(goal_file)
    with open(goal_file, encoding="utf-8") as fh:
        text = splice(fh.read(), a.proof_text, adapter.placeholder)
    with tempfile.TemporaryDirectory(prefix="vcforge-") as tmp:
        path = os.path.join(tmp, os.path.basename(goal_file))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        argv = adapter.argv(path, os.path.dirname(os.path.abspath(goal_file)))
        t0 = time.monotonic()
        try:
            proc = subprocess.Popen(
                argv, cwd=tmp, stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
                stdin=subprocess.DEVNULL, start_new_session=True,
            )
        except OSError as exc:
            raise AdapterSpawnError(f"cannot run {argv[0]!r}: {exc}") from None
        try:
            out, _ = proc.communicate(timeout=adapter.timeout)
            timed_out = False
        except subprocess.TimeoutExpired:
            _kill(proc)
            out, _ = proc.communicate()
            timed_out = True
        elapsed = time.monotonic() - t0
    log_text = out.decode("utf-8", errors="replace")
    if timed_out:
        cls, _ = classify_failure(a.proof_text, log_text, adapter)
        return Verdict(**base, status=TIMEOUT, wall_time=elapsed, log=log_text,
                       failure_class=cls, degeneration_flag=flag)
    if proc.returncode == 0:
        return Verdict(**base, status=PROVED, wall_time=elapsed, log=log_text, degeneration_flag=flag)
    cls, _ = classify_failure(a.proof_text, log_text, adapter)
    return Verdict(**base, status=FAILED, wall_time=elapsed, log=log_text,
                   failure_class=cls, degeneration_flag=flag)


def default_jobs() -> int:
    env = os.environ.get("VCFORGE_JOBS")
    if env:
        try:
            jobs = int(env)
        except ValueError:
            raise HarnessError(f"VCFORGE_JOBS must be an integer, got {env!r}") from None
        if jobs < 1:
            raise HarnessError(f"VCFORGE_JOBS must be positive, got {jobs}")
        return jobs
    return os.cpu_count() or 1


def goal_files(goals_dir) -> dict[str, str]:
    """goal id -> file, from the directory's manifest."""
    out = {}
    for r in read_manifest(os.path.join(goals_dir, MANIFEST)):
        if r.get("kind") == "goal" and r.get("path"):
            out[r["goal_id"]] = os.path.join(goals_dir, r["path"])
    return out


def run_attempts(attempts, goals_dir, adapter: CheckerAdapter, jobs: int | None = None) -> list[Verdict]:
    """Check attempts with at most ``jobs`` checker processes at a time.

    Results come back sorted by (goal id, attempt index).
    """
    attempts = list(attempts)
    seen = set()
    for a in attempts:
        key = (a.goal_id, a.target, a.attempt_index)
        if key in seen:
            raise HarnessError(f"duplicate attempt {key}")
        seen.add(key)
    files = goal_files(goals_dir)
    todo = []
    for a in attempts:
        if a.target != adapter.target:
            raise HarnessError(f"attempt for {a.target} given to the {adapter.target} adapter")
        if a.goal_id not in files:
            raise HarnessError(f"no goal file for {a.goal_id!r} in {goals_dir}")
        todo.append((a, files[a.goal_id]))
    with ThreadPoolExecutor(max_workers=jobs or default_jobs()) as pool:
        results = list(pool.map(lambda job: run_attempt(job[0], job[1], adapter), todo))
    return sorted(results, key=lambda v: (v.goal_id, v.attempt_index))


def read_attempts(path) -> list[ProofAttempt]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                out.append(ProofAttempt(d["goal_id"], d["target"], int(d["attempt_index"]), d["proof_text"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise HarnessError(f"{path}:{i}: bad attempt record: {exc}") from None
    return out


def write_results(verdicts, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in verdicts:
            fh.write(json.dumps(v.to_json(), ensure_ascii=False) + "\n")


def read_results(path) -> list[Verdict]:
    with open(path, encoding="utf-8") as fh:
        return [Verdict.from_json(json.loads(line)) for line in fh if line.strip()]


# -- pass@n and reports ------------------------------------------------------


def group_by_goal(verdicts) -> dict[str, list[Verdict]]:
    groups: dict[str, list[Verdict]] = {}
    for v in verdicts:
        groups.setdefault(v.goal_id, []).append(v)
    for g in groups.values():
        g.sort(key=lambda v: v.attempt_index)
    return groups


def solved(attempts, n: int, goal: str = "?") -> bool:
    if len(attempts) < n:
        raise InsufficientAttempts(goal, len(attempts), n)
    return any(v.status == PROVED for v in attempts[:n])


def percent(num: int, den: int) -> Decimal:
    """``100 * num / den`` rounded half-up to two decimals; 0 for an empty set."""
    if den == 0:
        return Decimal("0.00")
    exact = Fraction(100 * num, den)
    return (Decimal(exact.numerator) / Decimal(exact.denominator)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP
    )


def pass_at_n(results, n: int) -> Decimal:
    """Percentage of goals with a Proved verdict among their first ``n``
    attempts. ``results`` is a goal -> verdicts mapping or a flat list.
    A Fake verdict is a failed attempt."""
    groups = results if isinstance(results, dict) else group_by_goal(results)
    ok = sum(solved(sorted(vs, key=lambda v: v.attempt_index), n, g) for g, vs in groups.items())
    return percent(ok, len(groups))


def format_row(solved_count: int, total: int) -> str:
    return f"{solved_count} / {total}, {percent(solved_count, total)}%"


@dataclass
class ReportRow:
    category: str
    total: int
    solved: dict = field(default_factory=dict)  # n -> count

    def rate(self, n: int) -> Decimal:
        return percent(self.solved[n], self.total)

    def cell(self, n: int) -> str:
        return format_row(self.solved[n], self.total)


def report(results, category_map: dict, pass_at=(1,)) -> dict:
    """Per-category solved counts at each n, plus a total row.

    Categories appear in the order of their first goal in
    ``category_map``; categories without results still get a row.
    """
    groups = results if isinstance(results, dict) else group_by_goal(results)
    for g in groups:
        if g not in category_map:
            raise UnmappedGoal(g)
    order = list(dict.fromkeys(category_map.values()))
    rows = {c: ReportRow(c, 0, {n: 0 for n in pass_at}) for c in order}
    for g in sorted(groups):
        row = rows[category_map[g]]
        row.total += 1
        for n in pass_at:
            row.solved[n] += solved(groups[g], n, g)
    total = ReportRow("Total", sum(r.total for r in rows.values()),
                      {n: sum(r.solved[n] for r in rows.values()) for n in pass_at})
    return {"rows": [rows[c] for c in order], "total": total, "pass_at": list(pass_at)}


def render_report(rep: dict) -> str:
    ns = rep["pass_at"]
    head = ["Category"] + [f"Pass@{n}" for n in ns]
    lines = ["\t".join(head)]
    for r in rep["rows"] + [rep["total"]]:
        lines.append("\t".join([r.category] + [r.cell(n) for n in ns]))
    return "\n".join(lines) + "\n"


def report_json(rep: dict) -> dict:
    def row(r):
        return {
            "category": r.category,
            "total": r.total,
            "solved": {str(n): r.solved[n] for n in rep["pass_at"]},
            "rate": {str(n): str(r.rate(n)) for n in rep["pass_at"]},
        }

    return {"rows": [row(r) for r in rep["rows"]], "total": row(rep["total"])}
