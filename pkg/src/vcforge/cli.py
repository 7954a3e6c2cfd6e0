"""Command-line entry point.

Exit codes: 0 ok, 1 usage, 2 parse (corpus, import cycle, source lexing),
3 rewrite, 4 emit, 5 I/O, 6 evaluation (metrics, harness).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

from . import __version__
from .errors import (
    ComplicateError, EmitError, IngestError, MetricsError, HarnessError, RewriteError,
    TermError,
)

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_REWRITE, EXIT_EMIT, EXIT_IO, EXIT_EVAL = range(7)
TARGETS = ("isabelle", "lean", "rocq")

EPILOG = """exit codes:
  0 ok, 1 usage, 2 parse error or import cycle, 3 rewrite error,
  4 emit error, 5 I/O error, 6 metrics or harness error

environment:
  VCFORGE_JOBS  default number of concurrent checker processes
"""


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Counter(logging.Handler):
    def __init__(self):
        super().__init__(logging.WARNING)
        self.count = 0

    def emit(self, record):
        self.count += 1


def _load_config(path) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise _Usage(f"{path}: {exc}") from None
    known = {"target", "rules", "profile", "taxonomy", "output", "budget", "strict", "jobs", "inline"}
    if not isinstance(doc, dict) or set(doc) - known:
        raise _Usage(f"{path}: expected an object with keys among {sorted(known)}")
    return doc


def _opt(args, cfg, name, default=None):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return cfg.get(name, default)


def _parse_list(s: str, allowed=None) -> list[str]:
    items = [x.strip() for x in s.split(",") if x.strip()]
    if allowed is not None:
        bad = [x for x in items if x not in allowed]
        if bad:
            raise _Usage(f"unknown values {bad}; choose from {sorted(allowed)}")
    return items


# -- subcommands -------------------------------------------------------------


def cmd_translate(args) -> int:
    from .emit import emit_corpus, load_profile
    from .ingest import load_corpus
    from .pipeline import default_rules, prepare_corpus
    from .rewrite import DEFAULT_BUDGET, load_rules
    from .sexp import to_sexp

    cfg = _load_config(args.config)
    target = _opt(args, cfg, "target")
    out = _opt(args, cfg, "output")
    if not target or not out:
        raise _Usage("translate needs --target and -o/--output")
    if target != "all" and target not in TARGETS:
        raise _Usage(f"unknown target {target!r}")
    rules_path = _opt(args, cfg, "rules")
    profile_path = _opt(args, cfg, "profile")
    if target == "all" and (rules_path or profile_path):
        raise _Usage("--rules and --profile need a single --target")
    budget = int(_opt(args, cfg, "budget", DEFAULT_BUDGET))
    strict = not args.lenient and cfg.get("strict", True)
    inline = args.inline or cfg.get("inline", False)

    corpus = load_corpus(args.corpus, strict=strict)
    targets = TARGETS if target == "all" else (target,)
    for t in targets:
        profile = load_profile(profile_path or t, unicode=False if args.ascii else None)
        if rules_path:
            with open(rules_path, "rb") as fh:
                rules = load_rules(fh.read())
        else:
            rules = default_rules(profile.id)
        prepared = prepare_corpus(corpus, profile, rules, budget)
        dest = os.path.join(out, t) if target == "all" else out
        records = emit_corpus(prepared, profile, dest, inline=inline)
        goals = [r for r in records if r.kind == "goal"]
        skipped = [r for r in goals if r.status == "circumvented"]
        print(f"{t}: {len(goals) - len(skipped)} goals emitted, {len(skipped)} circumvented -> {dest}",
              file=sys.stderr)
        if args.dump_sexp:
            for th, g in prepared.goals():
                print(f"{t}\t{th.name}.{g.name}\t{to_sexp(g.statement)}")
    return EXIT_OK


def cmd_complicate(args) -> int:
    from .complicate import KINDS, complicate, span_report

    kinds = _parse_list(args.kinds, set(KINDS)) if args.kinds else list(KINDS)
    with open(args.input, "rb") as fh:
        src = fh.read()
    out, spans = complicate(src, kinds, collapse=not args.splice_only)
    with open(args.output, "wb") as fh:
        fh.write(out)
    report = args.report or args.output + ".spans.json"
    with open(report, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(span_report(args.input, spans))
    print(f"erased {len(spans)} annotation(s); span report in {report}", file=sys.stderr)
    return EXIT_OK


def cmd_stats(args) -> int:
    from .ingest import load_corpus
    from .metrics import load_taxonomy, stats_report

    cfg = _load_config(args.config)
    tax = load_taxonomy(_opt(args, cfg, "taxonomy"))
    corpus = load_corpus(args.corpus, strict=not args.lenient and cfg.get("strict", True))
    rep = stats_report(corpus, tax, with_context=args.with_context)
    text = json.dumps(rep, indent=2, ensure_ascii=False) + "\n"
    out = _opt(args, cfg, "output")
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .harness import load_adapter, read_attempts, run_attempts, write_results

    cfg = _load_config(args.config)
    adapter = load_adapter(args.adapter)
    if args.timeout is not None:
        adapter = dataclasses.replace(adapter, timeout=args.timeout)
    attempts = read_attempts(args.attempts)
    jobs = _opt(args, cfg, "jobs")
    verdicts = run_attempts(attempts, args.goals_dir, adapter, int(jobs) if jobs else None)
    write_results(verdicts, args.output)
    counts: dict[str, int] = {}
    for v in verdicts:
        counts[v.status] = counts.get(v.status, 0) + 1
    print(", ".join(f"{k}: {counts[k]}" for k in sorted(counts)) or "no attempts", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    from .harness import read_results, render_report, report, report_json

    with open(args.categories, encoding="utf-8") as fh:
        cmap = json.load(fh)
    ns = [int(x) for x in _parse_list(args.pass_at)]
    if any(n < 1 for n in ns):
        raise _Usage("--pass-at values must be positive")
    rep = report(read_results(args.results), cmap, ns)
    if args.json:
        sys.stdout.write(json.dumps(report_json(rep), indent=2) + "\n")
    else:
        sys.stdout.write(render_report(rep))
    return EXIT_OK


# -- wiring ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vcforge", description=__doc__.splitlines()[0],
                epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("translate", help="corpus XML -> proof-assistant theories")
    t.add_argument("corpus")
    t.add_argument("--target", help="isabelle, lean, rocq or all")
    t.add_argument("-o", "--output", help="output directory (one subdirectory per target with 'all')")
    t.add_argument("--rules", help="rule file overriding the target's default")
    t.add_argument("--profile", help="profile name or JSON file overriding the target's default")
    t.add_argument("--budget", type=int, help="rewrite step budget per term (default 10000)")
    t.add_argument("--lenient", action="store_true", help="unknown constants are warnings, not errors")
    t.add_argument("--inline", action="store_true", help="inline dependencies into each goal file")
    t.add_argument("--ascii", action="store_true", help="ASCII notation where the profile has it")
    t.add_argument("--dump-sexp", action="store_true", help="print rewritten goals as S-expressions")
    t.add_argument("--config", help="JSON file with defaults for the options above")
    t.set_defaults(func=cmd_translate)

    c = sub.add_parser("complicate", help="erase assert / lemma / lemma-application annotations")
    c.add_argument("input")
    c.add_argument("-o", "--output", required=True)
    c.add_argument("--kinds", help="comma-separated subset of assert,lemma,apply (default all)")
    c.add_argument("--splice-only", action="store_true", help="do not collapse emptied lines")
    c.add_argument("--report", help="span report path (default <output>.spans.json)")
    c.set_defaults(func=cmd_complicate)

    s = sub.add_parser("stats", help="per-goal metrics and category table")
    s.add_argument("corpus")
    s.add_argument("--taxonomy", help="taxonomy JSON (default: bundled)")
    s.add_argument("-o", "--output", help="report path (default stdout)")
    s.add_argument("--with-context", action="store_true",
                   help="also count quantifiers of definitions the goal depends on")
    s.add_argument("--lenient", action="store_true")
    s.add_argument("--config")
    s.set_defaults(func=cmd_stats)

    v = sub.add_parser("verify", help="check proof attempts with an external checker")
    v.add_argument("--adapter", required=True, help="adapter JSON (target, command, timeout, ...)")
    v.add_argument("--attempts", required=True, help="JSON lines of proof attempts")
    v.add_argument("--goals-dir", required=True, help="a translate output directory")
    v.add_argument("-o", "--output", required=True, help="results JSON lines")
    v.add_argument("--jobs", type=int, help="concurrent checkers (default $VCFORGE_JOBS or CPU count)")
    v.add_argument("--timeout", type=float, help="override the adapter timeout, in seconds")
    v.add_argument("--config")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("report", help="pass@n per category")
    r.add_argument("results")
    r.add_argument("--categories", required=True, help="JSON object goal id -> category")
    r.add_argument("--pass-at", default="1", help="comma-separated n values (default 1)")
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    counter = _Counter()
    logging.getLogger().addHandler(counter)
    try:
        code = args.func(args)
    except _Usage as exc:
        print(f"vcforge: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except (IngestError, TermError, ComplicateError) as exc:
        print(f"vcforge: parse error: {exc}", file=sys.stderr)
        code = EXIT_PARSE
    except RewriteError as exc:
        print(f"vcforge: rewrite error: {exc}", file=sys.stderr)
        code = EXIT_REWRITE
    except EmitError as exc:
        print(f"vcforge: emit error: {exc}", file=sys.stderr)
        code = EXIT_EMIT
    except (MetricsError, HarnessError) as exc:
        print(f"vcforge: {exc}", file=sys.stderr)
        code = EXIT_EVAL
    except OSError as exc:
        print(f"vcforge: I/O error: {exc}", file=sys.stderr)
        code = EXIT_IO
    finally:
        logging.getLogger().removeHandler(counter)
    if counter.count:
        print(f"vcforge: {counter.count} warning(s)", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
