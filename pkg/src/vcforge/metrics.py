"""Per-goal size, depth, quantifier and operation-category statistics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib.resources import files

from .errors import EmptyInput, MetricsError
from .builtins import builtin_type_of
from .ingest import Corpus, Datatype, FunDef, Scope, dependency_closure, goal_id
from .terms import (
    QUANTIFIERS, Abs, App, Case, Const, Let, NumLit, Term, Tuple, Var, fold_atoms,
    pattern_constructors, pattern_vars, spine, subterms, ty_constructors,
)

CATEGORY_IDS = (
    "IntegerArith", "NonLinearArith", "FloatArith", "ListSequence",
    "SetMapBag", "TreeStringMatrix", "Memory", "CustomDatatype",
)
NONLINEAR = "NonLinearArith"
CUSTOM = "CustomDatatype"


@dataclass(frozen=True)
class Taxonomy:
    categories: tuple  # ((id, frozenset consts, frozenset tycons), ...)
    system_library_types: frozenset
    nonlinear_operators: frozenset

    def ids(self) -> list[str]:
        return [c for c, _, _ in self.categories]


def taxonomy_from_dict(doc: dict) -> Taxonomy:
    try:
        cats = tuple(
            (c["id"], frozenset(c.get("constants", ())), frozenset(c.get("types", ())))
            for c in doc["categories"]
        )
        system = frozenset(doc["system_library_types"])
        nonlinear = frozenset(doc.get("nonlinear_operators", ()))
    except (KeyError, TypeError) as exc:
        raise MetricsError(f"malformed taxonomy: {exc}") from None
    ids = [c for c, _, _ in cats]
    if len(set(ids)) != len(ids):
        raise MetricsError(f"duplicate category ids in taxonomy: {ids}")
    return Taxonomy(cats, system, nonlinear)


def load_taxonomy(path=None) -> Taxonomy:
    if path is None:
        data = files("vcforge.data").joinpath("taxonomy.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            data = fh.read()
    return taxonomy_from_dict(json.loads(data))


# -- structural metrics ------------------------------------------------------


def goal_size(t: Term) -> int:
    return fold_atoms(t, lambda n, _: n + 1, 0)


def goal_depth(t: Term) -> int:
    """AST height with all arguments of an application spine as siblings."""
    if isinstance(t, App):
        head, args = spine(t)
        return 1 + max(goal_depth(x) for x in [head, *args])
    if isinstance(t, Abs):
        return 1 + goal_depth(t.body)
    if isinstance(t, Let):
        return 1 + max(goal_depth(t.value), goal_depth(t.body))
    if isinstance(t, Case):
        return 1 + max(goal_depth(x) for x in [t.scrutinee, *(b for _, b in t.branches)])
    if isinstance(t, Tuple):
        return 1 + max(goal_depth(e) for e in t.elems)
    return 1


def quantifier_count(t: Term) -> int:
    return sum(1 for s in subterms(t) if isinstance(s, Const) and s.name in QUANTIFIERS)


# -- classification ----------------------------------------------------------


def is_constant_expr(t: Term, arith: frozenset) -> bool:
    """A literal, or an arithmetic operator applied to constant expressions only."""
    if isinstance(t, NumLit):
        return True
    if isinstance(t, App):
        head, args = spine(t)
        return isinstance(head, Const) and head.name in arith and all(
            is_constant_expr(a, arith) for a in args
        )
    return False


@dataclass
class GoalMetrics:
    goal_id: str
    size: int
    depth: int
    quantifier_count: int
    per_category: dict = field(default_factory=dict)  # id -> (occurrences, distinct)

    @property
    def involved(self) -> set[str]:
        return {c for c, (occ, _) in self.per_category.items() if occ >= 1}

    def to_json(self) -> dict:
        return {
            "goal_id": self.goal_id,
            "size": self.size,
            "depth": self.depth,
            "quantifier_count": self.quantifier_count,
            "categories": {c: {"occurrences": o, "distinct": d} for c, (o, d) in self.per_category.items()},
            "involved": sorted(self.involved),
        }


def classify(t: Term, scope: Scope | None, tax: Taxonomy) -> dict:
    """Category -> (operation occurrences, distinct operations).

    A constant counts for the categories listing it and for those whose
    type constructors occur in its type; a variable counts only through
    the type of its binder, when the binder is annotated. Non-linear
    arithmetic counts operators whose two top operands are non-constant.
    """
    by_const: dict[str, list[str]] = {}
    by_type: dict[str, list[str]] = {}
    for cid, consts, types in tax.categories:
        for c in consts:
            by_const.setdefault(c, []).append(cid)
        for ty in types:
            by_type.setdefault(ty, []).append(cid)
    arith = tax.nonlinear_operators.union(
        *(consts for cid, consts, _ in tax.categories if cid in ("IntegerArith", "FloatArith"))
    )
    occ: dict[str, int] = {c: 0 for c in tax.ids()}
    ops: dict[str, set] = {c: set() for c in tax.ids()}

    def custom(tycon: str) -> bool:
        if tycon in tax.system_library_types or scope is None:
            return False
        hit = scope.resolve(tycon)
        return hit is not None and isinstance(hit[1], Datatype)

    def type_of_const(name):
        return scope.type_of(name) if scope is not None else builtin_type_of(name)

    def count(cats, key):
        for c in cats:
            if c in occ:
                occ[c] += 1
                ops[c].add(key)

    def atom(x, ty, key):
        cats = list(by_const.get(x.name, ())) if isinstance(x, Const) else []
        if ty is not None:
            for tc in ty_constructors(ty):
                for c in by_type.get(tc, ()):
                    if c not in cats:
                        cats.append(c)
                if custom(tc) and CUSTOM not in cats:
                    cats.append(CUSTOM)
        count(cats, key)

    def go(t, env):
        if isinstance(t, Const):
            atom(t, type_of_const(t.name), t.name)
        elif isinstance(t, Var):
            atom(t, env.get(t.name), t.name)
        elif isinstance(t, App):
            head, args = spine(t)
            if (isinstance(head, Const) and head.name in tax.nonlinear_operators and len(args) == 2
                    and not any(is_constant_expr(a, arith) for a in args)):
                count([NONLINEAR], head.name)
            go(t.fun, env)
            go(t.arg, env)
        elif isinstance(t, Abs):
            go(t.body, {**env, t.binder: t.binder_ty})
        elif isinstance(t, Let):
            go(t.value, env)
            go(t.body, {k: v for k, v in env.items() if k != t.binder})
        elif isinstance(t, Case):
            go(t.scrutinee, env)
            for p, body in t.branches:
                for c in pattern_constructors(p):
                    atom(Const(c), type_of_const(c), c)
                bound = set(pattern_vars(p))
                go(body, {k: v for k, v in env.items() if k not in bound})
        elif isinstance(t, Tuple):
            for e in t.elems:
                go(e, env)

    go(t, {})
    return {c: (occ[c], len(ops[c])) for c in tax.ids()}


def goal_metrics(t: Term, gid: str, tax: Taxonomy, scope: Scope | None = None,
                 context: list[Term] = ()) -> GoalMetrics:
    """Metrics of statement ``t``; ``context`` terms add only to the
    quantifier count (definitions pulled in by the goal)."""
    return GoalMetrics(
        gid, goal_size(t), goal_depth(t),
        quantifier_count(t) + sum(quantifier_count(c) for c in context),
        classify(t, scope, tax),
    )


def corpus_metrics(corpus: Corpus, tax: Taxonomy, *, with_context: bool = False) -> list[GoalMetrics]:
    out = []
    for th, g in corpus.goals():
        scope = Scope.of(corpus, th)
        ctx = []
        if with_context:
            for _, d in dependency_closure(scope, g):
                if isinstance(d, FunDef) and d.body is not None:
                    ctx.append(d.body)
                elif hasattr(d, "statement"):
                    ctx.append(d.statement)
        out.append(goal_metrics(g.statement, goal_id(th, g), tax, scope, ctx))
    return out


# -- aggregation -------------------------------------------------------------


def nearest_rank(values, p: float):
    """The ``p``-th percentile (0 < p <= 100) by the nearest-rank method."""
    if not values:
        raise EmptyInput("percentile of an empty list")
    xs = sorted(values)
    rank = max(1, math.ceil(p / 100 * len(xs)))
    return xs[rank - 1]


def summary(values) -> dict:
    return {
        "avg": math.fsum(values) / len(values),
        "p25": nearest_rank(values, 25),
        "p75": nearest_rank(values, 75),
    }


def aggregate(all_metrics, category_ids=CATEGORY_IDS) -> dict:
    """Table rows: per category, statistics over the goals involving it.

    Categories no goal involves are omitted. The ``all`` row covers every
    goal and has no operation columns.
    """
    ms = list(all_metrics)
    if not ms:
        raise EmptyInput("no goals to aggregate")
    rows = []
    for c in category_ids:
        inv = [m for m in ms if c in m.involved]
        if not inv:
            continue
        rows.append({
            "category": c,
            "cases": len(inv),
            "op_occurrences": summary([m.per_category[c][0] for m in inv]),
            "distinct_ops": summary([m.per_category[c][1] for m in inv]),
            "size": summary([m.size for m in inv]),
            "depth": summary([m.depth for m in inv]),
            "quantifiers": summary([m.quantifier_count for m in inv]),
        })
    overall = {
        "cases": len(ms),
        "size": summary([m.size for m in ms]),
        "depth": summary([m.depth for m in ms]),
        "quantifiers": summary([m.quantifier_count for m in ms]),
    }
    return {"categories": rows, "all": overall}


def stats_report(corpus: Corpus, tax: Taxonomy, *, with_context: bool = False) -> dict:
    ms = corpus_metrics(corpus, tax, with_context=with_context)
    report = aggregate(ms, tax.ids())
    report["goals"] = [m.to_json() for m in sorted(ms, key=lambda m: m.goal_id)]
    return report
