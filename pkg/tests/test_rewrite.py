import json
from pathlib import Path

import pytest
from hypothesis import given, settings

from oracles import fv
from termgen import CONSTS, term_strategy, terms
from vcforge.errors import IllegalContractum, RewriteBudgetExceeded, RuleFormatError
from vcforge.pipeline import default_rules
from vcforge.rewrite import (
    Hole, dump_rules, is_normal, load_rules, match_redex, normalize, rewrite,
)
from vcforge.terms import Abs, App, Case, Const, Let, NumLit, PWild, Tuple, TyCon, Var, apps, subterms

FIX = Path(__file__).parent / "fixtures"
DEMO = load_rules((FIX / "demo50_rules.json").read_bytes())
DEMO_HEADS = sorted({h for h, _ in DEMO.rules})


def rules(*entries, passes=()):
    return load_rules(json.dumps({"passes": list(passes), "rules": [
        {"head": h, "arity": n, "contractum": c} for h, n, c in entries]}))


LENGTH = rules(("Why3.length", 1, ["Int.int", ["Isabelle.length", "$0"]]))


def test_length_rule():
    t = App(Const("Why3.length"), Var("l"))
    assert rewrite(t, LENGTH) == App(Const("Int.int"), App(Const("Isabelle.length"), Var("l")))


def test_identity_on_normal_forms():
    t = apps(Const("f"), Var("x"), NumLit(3))
    assert rewrite(t, LENGTH) == t


def test_two_step_closure():
    rs = rules(("a", 0, "b"), ("b", 0, "c"))
    assert rewrite(Const("a"), rs) == Const("c")


def test_spine_matched_as_a_whole():
    rs = rules(("f", 1, "g"))
    assert rewrite(apps(Const("f"), Var("a"), Var("b")), rs) == apps(Const("f"), Var("a"), Var("b"))
    assert rewrite(App(Const("f"), Var("a")), rs) == Const("g")


def test_first_rule_wins(caplog):
    rs = rules(("f", 1, "g"), ("f", 1, "h"))
    assert rewrite(App(Const("f"), Var("a")), rs) == Const("g")
    assert "shadowed" in caplog.text


def test_innermost_order():
    # the argument is rewritten before the spine that holds it
    rs = rules(("f", 1, ["k", "$0", "$0"]), ("a", 0, "b"))
    assert rewrite(App(Const("f"), Const("a")), rs) == apps(Const("k"), Const("b"), Const("b"))


def test_rewrites_under_binders():
    t = Abs("l", TyCon("int"), Let("m", App(Const("Why3.length"), Var("l")),
                                  Case(Var("m"), [(PWild(), Tuple((Var("m"), App(Const("Why3.length"), Var("m")))))])))
    out = rewrite(t, LENGTH)
    assert "Why3.length" not in str(out)


def test_budget():
    rs = rules(("loop", 1, ["loop", "$0"]))
    with pytest.raises(RewriteBudgetExceeded) as exc:
        rewrite(App(Const("loop"), Var("x")), rs, budget=50)
    assert exc.value.budget == 50


def test_budget_counts_per_term():
    rs = rules(("a", 0, "b"))
    t = Tuple(tuple(Const("a") for _ in range(5)))
    assert rewrite(t, rs, budget=5) == Tuple(tuple(Const("b") for _ in range(5)))
    with pytest.raises(RewriteBudgetExceeded):
        rewrite(t, rs, budget=4)


@pytest.mark.parametrize("doc, err", [
    ('{"rules": [{"head": "f", "arity": 1, "contractum": "$1"}]}', IllegalContractum),
    ('{"rules": [{"head": "f", "arity": 1, "contractum": {"abs": "x"}}]}', IllegalContractum),
    ('{"rules": [{"head": "f", "arity": -1, "contractum": "g"}]}', RuleFormatError),
    ('{"rules": [{"head": "f", "contractum": "g"}]}', RuleFormatError),
    ('{"rules": [], "passes": ["nope"]}', RuleFormatError),
    ('{"rules": [', RuleFormatError),
    ('[1]', RuleFormatError),
])
def test_bad_rule_files(doc, err):
    with pytest.raises(err):
        load_rules(doc)


def test_dump_round_trip():
    again = load_rules(dump_rules(DEMO))
    assert again.rules == DEMO.rules and len(again) == 50


def test_match_redex():
    rule, args = match_redex(App(Const("Why3.length"), Var("l")), LENGTH)
    assert rule.head == "Why3.length" and args == [Var("l")]
    assert match_redex(Var("l"), LENGTH) is None


def test_passes():
    rs = rules(passes=["double_negation", "nat_index"])
    t = App(Const("not"), App(Const("not"), apps(Const("Array.get"), Var("a"), Var("i"))))
    assert normalize(t, rs) == apps(Const("Array.nth"), Var("a"), App(Const("Int.to_nat"), Var("i")))
    lit = apps(Const("Array.get"), Var("a"), NumLit(2))
    assert normalize(lit, rs) == apps(Const("Array.nth"), Var("a"), NumLit(2))


@pytest.mark.parametrize("target, length", [
    ("isabelle", "Isabelle.length"), ("lean", "Lean.length"), ("rocq", "Rocq.length"),
])
def test_shipped_rules(target, length):
    rs = default_rules(target)
    out = normalize(App(Const("Why3.length"), Var("l")), rs)
    assert out == App(Const("Int.int"), App(Const(length), Var("l")))


# -- brute force oracle ------------------------------------------------------


def _one_step(t, rs):
    """Some single rewrite step (outermost first), or None."""
    hit = match_redex(t, rs)
    if hit is not None:
        rule, args = hit
        return _fill(rule.contractum, args)
    if isinstance(t, App):
        head, args = t, []
        while isinstance(head, App):
            args.insert(0, head.arg)
            head = head.fun
        parts = [head] + args
        for i, p in enumerate(parts):
            if i == 0 and isinstance(p, Const):
                continue
            s = _one_step(p, rs)
            if s is not None:
                parts[i] = s
                return apps(*parts)
        return None
    if isinstance(t, Abs):
        s = _one_step(t.body, rs)
        return None if s is None else Abs(t.binder, t.binder_ty, s)
    if isinstance(t, Let):
        s = _one_step(t.value, rs)
        if s is not None:
            return Let(t.binder, s, t.body)
        s = _one_step(t.body, rs)
        return None if s is None else Let(t.binder, t.value, s)
    if isinstance(t, Case):
        s = _one_step(t.scrutinee, rs)
        if s is not None:
            return Case(s, t.branches)
        for i, (p, b) in enumerate(t.branches):
            s = _one_step(b, rs)
            if s is not None:
                br = list(t.branches)
                br[i] = (p, s)
                return Case(t.scrutinee, br)
        return None
    if isinstance(t, Tuple):
        for i, e in enumerate(t.elems):
            s = _one_step(e, rs)
            if s is not None:
                es = list(t.elems)
                es[i] = s
                return Tuple(tuple(es))
    return None


def _fill(c, args):
    if isinstance(c, Hole):
        return args[c.index]
    if isinstance(c, App):
        return App(_fill(c.fun, args), _fill(c.arg, args))
    return c


def _outermost_normal_form(t, rs, limit=100_000):
    for _ in range(limit):
        s = _one_step(t, rs)
        if s is None:
            return t
        t = s
    raise AssertionError("oracle did not terminate")


def test_demo_rules_agree_with_outermost_oracle():
    # the demo set is orthogonal and terminating, so every strategy
    # reaches the same normal form
    for t in terms(150, 21, 40, DEMO_HEADS + ["Int.+"]):
        assert rewrite(t, DEMO) == _outermost_normal_form(t, DEMO)


def test_demo_rules_idempotent_and_normal():
    for t in terms(200, 22, consts=DEMO_HEADS + list(CONSTS)):
        out = rewrite(t, DEMO)
        assert is_normal(out, DEMO)
        assert rewrite(out, DEMO) == out


@settings(max_examples=150)
@given(term_strategy())
def test_rewrite_properties(t):
    rs = default_rules("isabelle")
    out = rewrite(t, rs)
    assert rewrite(out, rs) == out
    assert fv(out) <= fv(t)
    abs_in = sum(isinstance(s, Abs) for s in subterms(t))
    abs_out = sum(isinstance(s, Abs) for s in subterms(out))
    assert abs_out <= abs_in


def test_no_self_headed_rule_never_hits_budget():
    rs = default_rules("lean")
    for t in terms(300, 23, 500, list(CONSTS) + ["Array.length", "List.nth", "Int.abs"]):
        rewrite(t, rs)
