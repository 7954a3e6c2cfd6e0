import random
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import binary_depth, leaf_count, percentile_oracle, quantifiers, sibling_depth
from termgen import term_strategy
from vcforge.errors import EmptyInput, MetricsError
from vcforge.ingest import Scope, load_corpus
from vcforge.metrics import (
    NONLINEAR, GoalMetrics, aggregate, classify, corpus_metrics, goal_depth, goal_metrics,
    goal_size, load_taxonomy, nearest_rank, quantifier_count, stats_report, taxonomy_from_dict,
)
from vcforge.terms import Abs, App, Const, NumLit, TyCon, Var, apps, forall

FIX = Path(__file__).parent / "fixtures"
TAX = load_taxonomy()
INT = TyCon("int")
x, y = Var("x"), Var("y")


def bound(body, *names):
    for n in reversed(names):
        body = forall(n, INT, body)
    return body


def test_structural_examples():
    assert goal_size(NumLit(3)) == 1
    assert goal_size(apps(Const("="), App(Const("f"), x), y)) == 4
    assert goal_size(Abs("x", INT, x)) == 1
    assert goal_depth(apps(Const("f"), Var("a"), Var("b"))) == 2
    assert goal_depth(apps(Const("f"), App(Const("g"), Var("a")), Var("b"))) == 3
    assert quantifier_count(forall("x", INT, App(Const("exists"), Abs("y", INT, y)))) == 2


def test_binary_search_goal():
    (m,) = corpus_metrics(load_corpus(FIX / "binary_search.xml"), TAX)
    assert (m.size, m.depth, m.quantifier_count) == (129, 18, 4)
    assert m.involved == {"IntegerArith", "ListSequence"}


@given(term_strategy())
def test_structural_metrics_match_brute_force(t):
    assert goal_size(t) == leaf_count(t)
    assert goal_depth(t) == sibling_depth(t)
    assert goal_depth(t) <= binary_depth(t)
    assert quantifier_count(t) == quantifiers(t)


# -- classification ----------------------------------------------------------


def test_nonlinear_product():
    c = classify(bound(apps(Const("Int.*"), x, y), "x", "y"), None, TAX)
    assert c[NONLINEAR] == (1, 1)
    assert c["IntegerArith"][0] >= 1


@pytest.mark.parametrize("t", [
    apps(Const("Int.*"), NumLit(2), x),
    apps(Const("Int.*"), x, apps(Const("Int.+"), NumLit(1), NumLit(2))),
    apps(Const("Int.+"), x, y),
])
def test_linear_products(t):
    assert classify(bound(t, "x", "y"), None, TAX)[NONLINEAR] == (0, 0)


def test_variable_types_come_from_binders():
    lst = TyCon("list", (INT,))
    t = forall("l", lst, apps(Const("="), Var("l"), Var("l")))
    assert classify(t, None, TAX)["ListSequence"] == (2, 1)
    assert classify(apps(Const("="), Var("l"), Var("l")), None, TAX)["ListSequence"] == (0, 0)


def test_custom_datatype_needs_scope():
    corpus = load_corpus(FIX / "corpus.xml")
    th = corpus.theory("Avl")
    goal = next(g for g in th.goals if g.name == "height_nonneg")
    assert classify(goal.statement, Scope.of(corpus, th), TAX)["CustomDatatype"][0] >= 1
    assert classify(goal.statement, None, TAX)["CustomDatatype"] == (0, 0)


def test_fixture_corpus_categories():
    ms = {m.goal_id: m for m in corpus_metrics(load_corpus(FIX / "corpus.xml"), TAX)}
    assert ms["Heap.valid_shift"].involved == {"Memory"}
    assert ms["Avl.product_nonneg"].involved == {"IntegerArith", NONLINEAR}
    assert ms["Heap.label"].involved == set()


@given(term_strategy())
def test_classification_invariants(t):
    c = classify(t, None, TAX)
    assert set(c) == set(TAX.ids())
    for occ, distinct in c.values():
        assert 0 <= distinct <= occ
    if c[NONLINEAR][0]:
        assert c["IntegerArith"][0] + c["FloatArith"][0] > 0


def test_with_context_adds_quantifiers():
    corpus = load_corpus(FIX / "corpus.xml")
    plain = {m.goal_id: m.quantifier_count for m in corpus_metrics(corpus, TAX)}
    ctx = {m.goal_id: m.quantifier_count for m in corpus_metrics(corpus, TAX, with_context=True)}
    assert all(ctx[g] >= plain[g] for g in plain)


def test_malformed_taxonomy():
    with pytest.raises(MetricsError):
        taxonomy_from_dict({"categories": [{"id": "A"}]})
    with pytest.raises(MetricsError):
        taxonomy_from_dict({"categories": [{"id": "A"}, {"id": "A"}], "system_library_types": []})


# -- aggregation -------------------------------------------------------------


def test_nearest_rank_examples():
    assert nearest_rank([1, 2, 3, 4], 25) == 1
    assert nearest_rank([1, 2, 3, 4], 75) == 3
    assert nearest_rank([4, 1, 3, 2], 100) == 4
    assert nearest_rank([7], 25) == 7
    with pytest.raises(EmptyInput):
        nearest_rank([], 50)


@given(st.lists(st.integers(-50, 50), min_size=1, max_size=60), st.integers(1, 100))
def test_nearest_rank_matches_oracle(values, p):
    assert nearest_rank(values, p) == percentile_oracle(values, p)


def _random_metrics(rng, n):
    out = []
    for i in range(n):
        cats = {c: (0, 0) for c in TAX.ids()}
        for c in rng.sample(TAX.ids(), rng.randint(0, 3)):
            occ = rng.randint(1, 9)
            cats[c] = (occ, rng.randint(1, occ))
        out.append(GoalMetrics(f"T.g{i}", rng.randint(1, 300), rng.randint(1, 30), rng.randint(0, 6), cats))
    return out


def test_aggregate_matches_oracle_and_is_order_free():
    rng = random.Random(8)
    ms = _random_metrics(rng, 40)
    agg = aggregate(ms, TAX.ids())
    shuffled = ms[:]
    rng.shuffle(shuffled)
    assert aggregate(shuffled, TAX.ids()) == agg
    for row in agg["categories"]:
        inv = [m for m in ms if m.per_category[row["category"]][0] >= 1]
        assert row["cases"] == len(inv)
        sizes = [m.size for m in inv]
        assert row["size"]["p25"] == percentile_oracle(sizes, 25)
        assert row["size"]["p75"] == percentile_oracle(sizes, 75)
        assert row["size"]["avg"] == pytest.approx(sum(sizes) / len(sizes))
    involved = {c for m in ms for c in m.involved}
    assert {r["category"] for r in agg["categories"]} == involved
    assert agg["all"]["cases"] == 40


def test_aggregate_single_goal_and_empty():
    m = goal_metrics(bound(apps(Const("Int.*"), x, y), "x", "y"), "T.g", TAX)
    agg = aggregate([m], TAX.ids())
    row = next(r for r in agg["categories"] if r["category"] == NONLINEAR)
    assert row["size"] == {"avg": m.size, "p25": m.size, "p75": m.size}
    with pytest.raises(EmptyInput):
        aggregate([], TAX.ids())


def test_stats_report_shape():
    rep = stats_report(load_corpus(FIX / "corpus.xml"), TAX)
    assert len(rep["goals"]) == 10 and rep["all"]["cases"] == 10
    assert [g["goal_id"] for g in rep["goals"]] == sorted(g["goal_id"] for g in rep["goals"])
