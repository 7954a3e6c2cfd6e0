"""First-order spine rewriting toward idiomatic target expressions.

A rule is ``(head, arity, contractum)``: it fires on any application spine
``head a0 ... a(arity-1)`` whose head is the constant ``head`` applied to
exactly ``arity`` arguments, and replaces it with ``contractum`` where each
placeholder ``$k`` stands for ``ak``. Arguments are schematic, never
inspected. Contracta are atoms or nested applications only.

Rule files are JSON::

    {"name": "isabelle",
     "passes": ["double_negation"],
     "rules": [{"head": "Why3.length", "arity": 1,
                "contractum": ["Int.int", ["Isabelle.length", "$0"]]}]}

A contractum list ``[h, a, b]`` is the spine ``h a b``; a string is a
constant or a ``$k`` placeholder; an integer is a numeric literal.

Rewriting is innermost (arguments before the spine that holds them),
left to right, first matching rule, repeated to a fixpoint. The head of
a spine is part of the spine: ``f a b`` is matched only as a whole, never
as the partial application ``f a``.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field
from typing import Callable

from .errors import IllegalContractum, RewriteBudgetExceeded, RuleFormatError
from .terms import (
    Abs, App, Case, Const, Let, NumLit, StrLit, Term, Tuple, Var, apps, spine,
)

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10_000


@dataclass(frozen=True)
class Hole:
    """Placeholder ``$index`` inside a contractum."""

    index: int


_HOLE = re.compile(r"\$(\d+)$")


@dataclass(frozen=True)
class RewriteRule:
    head: str
    arity: int
    contractum: object

    def __post_init__(self):
        if not isinstance(self.arity, int) or isinstance(self.arity, bool) or self.arity < 0:
            raise RuleFormatError(self.head, f"arity must be a non-negative integer, got {self.arity!r}")
        _check_contractum(self.contractum, self.arity, f"rule {self.head}/{self.arity}")


def _check_contractum(c, arity: int, where: str) -> None:
    if isinstance(c, Hole):
        if c.index >= arity:
            raise IllegalContractum(where, f"placeholder ${c.index} out of range for arity {arity}")
    elif isinstance(c, App):
        _check_contractum(c.fun, arity, where)
        _check_contractum(c.arg, arity, where)
    elif isinstance(c, Abs):
        raise IllegalContractum(where, "lambda abstraction in contractum")
    elif not isinstance(c, (Const, NumLit, StrLit)):
        raise IllegalContractum(where, f"{type(c).__name__} not allowed in contractum")


@dataclass(frozen=True)
class RuleSet:
    rules: dict = field(default_factory=dict)  # (head, arity) -> tuple of rules
    name: str = ""
    passes: tuple = ()

    def __len__(self):
        return sum(len(v) for v in self.rules.values())

    def lookup(self, head: str, arity: int) -> RewriteRule | None:
        found = self.rules.get((head, arity))
        return found[0] if found else None

    @classmethod
    def from_rules(cls, rules, name: str = "", passes=()) -> "RuleSet":
        table: dict = {}
        for r in rules:
            table.setdefault((r.head, r.arity), []).append(r)
        for (head, arity), group in table.items():
            if len(group) > 1:
                log.warning(
                    "rule set %s: %d rule(s) for %s/%d shadowed by the first",
                    name or "<unnamed>", len(group) - 1, head, arity,
                )
        return cls({k: tuple(v) for k, v in table.items()}, name, tuple(passes))


# -- loading -----------------------------------------------------------------


def contractum_from_json(obj, where: str = "contractum"):
    if isinstance(obj, bool):
        raise RuleFormatError(where, "booleans are not terms")
    if isinstance(obj, int):
        return NumLit(obj)
    if isinstance(obj, str):
        if not obj:
            raise RuleFormatError(where, "empty constant name")
        m = _HOLE.match(obj)
        return Hole(int(m.group(1))) if m else Const(obj)
    if isinstance(obj, list):
        if not obj:
            raise RuleFormatError(where, "empty application")
        parts = [contractum_from_json(x, f"{where}[{i}]") for i, x in enumerate(obj)]
        return apps(*parts)
    if isinstance(obj, dict):
        if {"abs", "lambda", "fun"} & set(obj):
            raise IllegalContractum(where, "lambda abstraction in contractum")
        if set(obj) == {"str"} and isinstance(obj["str"], str):
            return StrLit(obj["str"])
        raise RuleFormatError(where, f"unsupported object {sorted(obj)}")
    raise RuleFormatError(where, f"unsupported value {obj!r}")


def contractum_to_json(c):
    if isinstance(c, Hole):
        return f"${c.index}"
    if isinstance(c, Const):
        return c.name
    if isinstance(c, NumLit):
        return c.value
    if isinstance(c, StrLit):
        return {"str": c.value}
    head, args = spine(c)
    return [contractum_to_json(head)] + [contractum_to_json(a) for a in args]


def load_rules(source) -> RuleSet:
    """Parse a JSON rule file (bytes, text, path, or stream)."""
    if isinstance(source, os.PathLike):
        with open(source, "rb") as fh:
            source = fh.read()
    elif hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if not source.strip():
        return RuleSet()
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise RuleFormatError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    if not isinstance(doc, dict):
        raise RuleFormatError("document", "expected a JSON object")
    unknown = set(doc) - {"name", "passes", "rules"}
    if unknown:
        raise RuleFormatError("document", f"unknown keys {sorted(unknown)}")
    passes = doc.get("passes", [])
    if not isinstance(passes, list) or not all(isinstance(p, str) for p in passes):
        raise RuleFormatError("passes", "expected a list of pass names")
    for p in passes:
        if p not in PASSES:
            raise RuleFormatError("passes", f"unknown pass {p!r}; known: {sorted(PASSES)}")
    entries = doc.get("rules", [])
    if not isinstance(entries, list):
        raise RuleFormatError("rules", "expected a list")
    rules = []
    for i, e in enumerate(entries):
        where = f"rules[{i}]"
        if not isinstance(e, dict) or set(e) != {"head", "arity", "contractum"}:
            raise RuleFormatError(where, "expected an object with head, arity, contractum")
        if not isinstance(e["head"], str) or not e["head"]:
            raise RuleFormatError(where, "head must be a non-empty string")
        arity = e["arity"]
        if not isinstance(arity, int) or isinstance(arity, bool) or arity < 0:
            raise RuleFormatError(where, f"arity must be a non-negative integer, got {arity!r}")
        contractum = contractum_from_json(e["contractum"], f"{where}.contractum")
        _check_contractum(contractum, arity, f"{where}.contractum")
        rules.append(RewriteRule(e["head"], arity, contractum))
    return RuleSet.from_rules(rules, doc.get("name", ""), passes)


def dump_rules(rs: RuleSet) -> str:
    rules = [
        {"head": r.head, "arity": r.arity, "contractum": contractum_to_json(r.contractum)}
        for group in rs.rules.values()
        for r in group
    ]
    doc = {"name": rs.name, "passes": list(rs.passes), "rules": rules}
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# -- matching and rewriting --------------------------------------------------


def match_redex(t: Term, rs: RuleSet):
    """``(rule, args)`` if ``t``'s whole spine is a redex of ``rs``, else None."""
    head, args = spine(t)
    if not isinstance(head, Const):
        return None
    rule = rs.lookup(head.name, len(args))
    return None if rule is None else (rule, args)


def instantiate(contractum, args: list[Term]) -> Term:
    if isinstance(contractum, Hole):
        return args[contractum.index]
    if isinstance(contractum, App):
        return App(instantiate(contractum.fun, args), instantiate(contractum.arg, args))
    return contractum


def rewrite(t: Term, rs: RuleSet, budget: int = DEFAULT_BUDGET) -> Term:
    """Normal form of ``t`` under ``rs``.

    Raises RewriteBudgetExceeded after ``budget`` rule applications.
    """
    steps = 0

    def norm(t, path):
        nonlocal steps
        while True:
            t = norm_children(t, path)
            hit = match_redex(t, rs)
            if hit is None:
                return t
            steps += 1
            if steps > budget:
                raise RewriteBudgetExceeded(path, budget)
            rule, args = hit
            t = instantiate(rule.contractum, args)

    def norm_children(t, path):
        if isinstance(t, App):
            head, args = spine(t)
            if not isinstance(head, (Const, Var, NumLit, StrLit)):
                head = norm(head, path + (0,))
            return apps(head, *(norm(a, path + (i + 1,)) for i, a in enumerate(args)))
        if isinstance(t, Abs):
            return Abs(t.binder, t.binder_ty, norm(t.body, path + (0,)))
        if isinstance(t, Let):
            return Let(t.binder, norm(t.value, path + (0,)), norm(t.body, path + (1,)))
        if isinstance(t, Case):
            return Case(
                norm(t.scrutinee, path + (0,)),
                [(p, norm(b, path + (i + 1,))) for i, (p, b) in enumerate(t.branches)],
            )
        if isinstance(t, Tuple):
            return Tuple(tuple(norm(e, path + (i,)) for i, e in enumerate(t.elems)))
        return t

    try:
        return norm(t, ())
    except RecursionError:
        raise RewriteBudgetExceeded((), budget) from None


def is_normal(t: Term, rs: RuleSet) -> bool:
    """No spine of ``t`` is a redex."""
    if match_redex(t, rs) is not None:
        return False
    if isinstance(t, App):
        head, args = spine(t)
        if not isinstance(head, Const) and not is_normal(head, rs):
            return False
        return all(is_normal(a, rs) for a in args)
    if isinstance(t, Abs):
        return is_normal(t.body, rs)
    if isinstance(t, Let):
        return is_normal(t.value, rs) and is_normal(t.body, rs)
    if isinstance(t, Case):
        return is_normal(t.scrutinee, rs) and all(is_normal(b, rs) for _, b in t.branches)
    if isinstance(t, Tuple):
        return all(is_normal(e, rs) for e in t.elems)
    return True


# -- built-in passes ---------------------------------------------------------
#
# Some rewritings need to inspect their arguments, which the schematic rule
# form cannot express. They run as named passes before rule rewriting.

PASSES: dict[str, Callable[[Term], Term]] = {}


def register_pass(name: str):
    def deco(fn):
        PASSES[name] = fn
        return fn

    return deco


def map_bottom_up(t: Term, fn: Callable[[Term], Term]) -> Term:
    if isinstance(t, App):
        t = App(map_bottom_up(t.fun, fn), map_bottom_up(t.arg, fn))
    elif isinstance(t, Abs):
        t = Abs(t.binder, t.binder_ty, map_bottom_up(t.body, fn))
    elif isinstance(t, Let):
        t = Let(t.binder, map_bottom_up(t.value, fn), map_bottom_up(t.body, fn))
    elif isinstance(t, Case):
        t = Case(map_bottom_up(t.scrutinee, fn), [(p, map_bottom_up(b, fn)) for p, b in t.branches])
    elif isinstance(t, Tuple):
        t = Tuple(tuple(map_bottom_up(e, fn) for e in t.elems))
    return fn(t)


@register_pass("double_negation")
def eliminate_double_negation(t: Term) -> Term:
    """``not (not p)`` -> ``p``."""

    def step(t):
        if (
            isinstance(t, App)
            and t.fun == Const("not")
            and isinstance(t.arg, App)
            and t.arg.fun == Const("not")
        ):
            return t.arg.arg
        return t

    return map_bottom_up(t, step)


@register_pass("nat_index")
def insert_nat_index(t: Term) -> Term:
    """``Array.get a i`` -> ``Array.nth a (Int.to_nat i)``.

    Targets index lists with naturals, so integer indices get an explicit
    conversion; non-negative literals are already valid naturals and are
    left alone.
    """

    def step(t):
        head, args = spine(t)
        if head == Const("Array.get") and len(args) == 2:
            a, i = args
            if not (isinstance(i, NumLit) and i.value >= 0):
                i = App(Const("Int.to_nat"), i)
            return apps(Const("Array.nth"), a, i)
        return t

    return map_bottom_up(t, step)


def apply_passes(t: Term, names) -> Term:
    for name in names:
        t = PASSES[name](t)
    return t


def normalize(t: Term, rs: RuleSet, budget: int = DEFAULT_BUDGET) -> Term:
    """Run the rule set's passes, then rewrite to normal form."""
    return rewrite(apply_passes(t, rs.passes), rs, budget)
