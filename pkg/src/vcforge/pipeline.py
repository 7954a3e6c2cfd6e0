"""ingest -> rewrite -> emit, per target."""

from __future__ import annotations

import dataclasses
import os
from importlib.resources import files

from .emit import TargetProfile, emit_corpus, load_profile
from .errors import RewriteBudgetExceeded
from .ingest import Axiom, Corpus, FunDef, Goal, Theory
from .rewrite import DEFAULT_BUDGET, RuleSet, load_rules, normalize
from .terms import deconflict, eliminate_as_bindings


def default_rules(target: str) -> RuleSet:
    return load_rules(files("vcforge.data.rules").joinpath(f"{target}.json").read_bytes())


def prepare_term(t, profile: TargetProfile, rules: RuleSet, budget: int = DEFAULT_BUDGET,
                 reserved=()):
    t = deconflict(t, reserved)
    if profile.requires_as_elimination:
        t = eliminate_as_bindings(t)
    t = normalize(t, rules, budget)
    return deconflict(t, reserved)


def prepare_corpus(corpus: Corpus, profile: TargetProfile, rules: RuleSet,
                   budget: int = DEFAULT_BUDGET) -> Corpus:
    """Every statement and body made ready for printing on ``profile``."""
    theories = []
    for th in corpus.theories:
        decls = []
        for d in th.decls:
            where = f"{th.name}.{d.name}"
            try:
                if isinstance(d, FunDef) and d.body is not None:
                    params = [p for p, _ in d.params]
                    d = dataclasses.replace(d, body=prepare_term(d.body, profile, rules, budget, params))
                elif isinstance(d, (Axiom, Goal)):
                    d = dataclasses.replace(d, statement=prepare_term(d.statement, profile, rules, budget))
            except RewriteBudgetExceeded as exc:
                exc.args = (f"{where}: {exc.args[0]}",)
                raise
            decls.append(d)
        theories.append(Theory(th.name, th.imports, tuple(decls)))
    return Corpus(tuple(theories))


def translate(corpus: Corpus, target: str, out_dir, *, rules: RuleSet | None = None,
              profile: TargetProfile | None = None, budget: int = DEFAULT_BUDGET,
              inline: bool = False, unicode: bool | None = None):
    profile = profile or load_profile(target, unicode=unicode)
    rules = rules if rules is not None else default_rules(profile.id)
    prepared = prepare_corpus(corpus, profile, rules, budget)
    return emit_corpus(prepared, profile, os.fspath(out_dir), inline=inline)
