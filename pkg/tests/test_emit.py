import filecmp
import json
import random
from importlib.resources import files
from pathlib import Path

import pytest
from hypothesis import given, settings

from oracles import alpha_eq
from termgen import gen_printable, printable_strategy
from vcforge.emit import (
    Namer, emit_corpus, emit_declaration, load_profile, print_term, redundant_parens, reparse,
)
from vcforge.errors import ProfileError, ReparseError, UnmappedConstant
from vcforge.ingest import FunDef, load_corpus
from vcforge.pipeline import translate
from vcforge.terms import (
    Abs, App, Case, Const, NumLit, PAs, PCon, PVar, PWild, StrLit, TyCon, Var, apps,
    eliminate_as_bindings, forall,
)

FIX = Path(__file__).parent / "fixtures"
TARGETS = ("isabelle", "lean", "rocq")
INT = TyCon("int")
x, y, z = Var("x"), Var("y"), Var("z")


def round_trip(t, profile):
    namer = Namer(profile)
    text = print_term(t, profile, namer)
    return text, reparse(text, profile, namer), namer


# -- printing ----------------------------------------------------------------


@pytest.mark.parametrize("target", TARGETS)
def test_minimal_parentheses_examples(target):
    p = load_profile(target)
    assert print_term(apps(Const("Int.*"), apps(Const("Int.+"), x, y), z), p) == "(x + y) * z"
    assert print_term(apps(Const("Int.+"), x, apps(Const("Int.*"), y, z)), p) == "x + y * z"
    assert print_term(apps(Const("Int.-"), x, apps(Const("Int.-"), y, z)), p) == "x - (y - z)"
    assert print_term(apps(Const("Int.-"), apps(Const("Int.-"), x, y), z), p) == "x - y - z"
    assert print_term(App(Abs("x", INT, x), y), p).endswith(" y")
    assert print_term(NumLit(-3), p) == "(-3)"


def test_isabelle_mixed_associativity_is_parenthesized():
    p = load_profile("isabelle")
    t = apps(Const("Int.-"), apps(Const("List.Cons"), NumLit(1), x), y)
    text, back, _ = round_trip(t, p)
    assert text == "(1 # x) - y" and back == t


@pytest.mark.parametrize("target, expected", [
    ("isabelle", "∀fun_v::int. fun_v ∧ x"),
    ("lean", "∀ fun_v : Int, fun_v ∧ x"),
    ("rocq", "forall fun_v : Z, fun_v /\\ x"),
])
def test_keywords_escaped(target, expected):
    p = load_profile(target)
    assert print_term(forall("fun", INT, apps(Const("and"), Var("fun"), x)), p) == expected


def test_escape_is_injective():
    p = load_profile("lean")
    namer = Namer(p)
    t = apps(Const("and"), Var("fun"), Var("fun_v"))
    text = print_term(t, p, namer)
    left, right = text.split(" ∧ ")
    assert left == "fun_v" and right not in ("fun", "fun_v")
    assert reparse(text, p, namer) == t


@pytest.mark.parametrize("target, expected", [
    ("isabelle", "''a\\\"b''"), ("lean", '"a\\"b"'), ("rocq", '"a""b"'),
])
def test_string_escapes(target, expected):
    p = load_profile(target)
    assert print_term(StrLit('a"b'), p) == expected
    assert round_trip(StrLit('a"b'), p)[1] == StrLit('a"b')


def test_case_syntax():
    t = Case(x, [(PCon("List.Cons", (PVar("h"), PWild())), y), (PWild(), z)])
    assert print_term(t, load_profile("rocq")) == "match x with | cons h _ => y | _ => z end"
    assert print_term(t, load_profile("isabelle")) == "case x of Cons h _ ⇒ y | _ ⇒ z"


def test_rocq_as_pattern_not_double_wrapped():
    p = load_profile("rocq")
    t = Case(x, [(PAs("w", PCon("List.Cons", (PVar("h"), PWild()))), y), (PWild(), z)])
    text, back, namer = round_trip(t, p)
    assert text == "match x with | (cons h _ as w) => y | _ => z end" and back == t
    assert redundant_parens("match x with | ((cons h _) as w) => y | _ => z end", p, namer) != []


def test_ascii_variants():
    assert print_term(forall("a", INT, x), load_profile("isabelle", unicode=False)) == "\\<forall>a::int. x"
    assert print_term(forall("a", INT, x), load_profile("lean", unicode=False)) == "forall a : Int, x"


def test_unmapped_builtin_is_an_error():
    with pytest.raises(UnmappedConstant):
        print_term(App(Const("Why3.length"), x), load_profile("lean"))


def test_bad_profile(tmp_path):
    doc = json.loads(files("vcforge.data.profiles").joinpath("lean.json").read_text("utf-8"))
    doc["notation"][0]["prec"] = 500
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(ProfileError):
        load_profile(bad)
    with pytest.raises(FileNotFoundError):
        load_profile(tmp_path / "missing.json")


# -- round trip --------------------------------------------------------------


@pytest.mark.parametrize("target, unicode", [(t, None) for t in TARGETS] + [("isabelle", False), ("lean", False)])
def test_round_trip_sample(target, unicode):
    p = load_profile(target, unicode=unicode)
    rng = random.Random(len(target) + (unicode is False))
    for _ in range(150):
        t = gen_printable(rng, 80, allow_as=p.as_pattern is not None)
        text, back, _ = round_trip(t, p)
        assert alpha_eq(back, t), text


@pytest.mark.parametrize("target", TARGETS)
@settings(max_examples=60, deadline=None)
@given(t=printable_strategy(max_size=40, allow_as=True))
def test_round_trip_property(target, t):
    p = load_profile(target)
    if p.as_pattern is None:
        t = eliminate_as_bindings(t)
    text, back, _ = round_trip(t, p)
    assert back == t, text


@pytest.mark.parametrize("target", TARGETS)
def test_printed_output_has_no_redundant_parentheses(target):
    p = load_profile(target)
    rng = random.Random(5)
    for _ in range(40):
        t = gen_printable(rng, 50)
        namer = Namer(p)
        text = print_term(t, p, namer)
        assert redundant_parens(text, p, namer) == [], text


def test_redundant_parentheses_detected():
    p = load_profile("lean")
    namer = Namer(p)
    text = print_term(apps(Const("Int.+"), x, apps(Const("Int.*"), y, z)), p, namer)
    assert redundant_parens("x + (y * z)", p, namer) != []
    assert redundant_parens(text, p, namer) == []


def test_reparse_rejects_garbage():
    p = load_profile("rocq")
    namer = Namer(p)
    print_term(x, p, namer)
    with pytest.raises(ReparseError):
        reparse("x +", p, namer)
    with pytest.raises(ReparseError):
        reparse("unknown_thing", p, namer)


# -- declarations and files --------------------------------------------------


def test_trusted_recursive_function_is_axiomatized():
    f = FunDef("height", (), (("t", INT),), INT, apps(Const("Int.+"), NumLit(1), App(Const("height"), Var("t"))),
               True, True)
    text = emit_declaration(f, load_profile("lean"))
    assert text.startswith("axiom height : Int → Int")
    assert "axiom height_def : ∀ t : Int, height t = 1 + height t" in text


@pytest.mark.parametrize("target", TARGETS)
def test_binary_search_golden(tmp_path, target):
    corpus = load_corpus(FIX / "binary_search.xml")
    translate(corpus, target, tmp_path)
    golden = FIX / "golden" / target
    cmp = filecmp.dircmp(tmp_path, golden)
    assert cmp.left_only == [] and cmp.right_only == []
    for name in cmp.common_files:
        assert (tmp_path / name).read_bytes() == (golden / name).read_bytes(), name


def test_binary_search_golden_content():
    text = (FIX / "golden" / "isabelle" / "BinarySearch__loop_step.thy").read_text()
    assert "int (length a)" in text and "sorry" in text


@pytest.mark.parametrize("target, circumvented", [("isabelle", 1), ("lean", 0), ("rocq", 0)])
def test_non_uniform_circumvention(tmp_path, target, circumvented):
    records = translate(load_corpus(FIX / "corpus.xml"), target, tmp_path)
    skipped = [r for r in records if r.status == "circumvented"]
    assert len(skipped) == circumvented
    manifest = [json.loads(line) for line in (tmp_path / "manifest.jsonl").read_text().splitlines()]
    assert [m["goal_id"] for m in manifest if m["status"] == "circumvented"] == (
        ["Nested.nest_refl"] if circumvented else [])
    for m in manifest:
        if m["path"]:
            assert (tmp_path / m["path"]).is_file()


def test_inline_mode_carries_dependencies(tmp_path):
    corpus = load_corpus(FIX / "corpus.xml")
    records = translate(corpus, "lean", tmp_path, inline=True)
    goal = next(r for r in records if r.goal_id == "Avl.height_nonneg")
    text = (tmp_path / goal.path).read_text()
    assert "height" in text and "inductive avltree" in text
    assert "import Avl" not in text


def test_emit_corpus_deterministic(tmp_path):
    corpus = load_corpus(FIX / "corpus.xml")
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        translate(corpus, "rocq", d)
    assert sorted(p.name for p in a.iterdir()) == sorted(p.name for p in b.iterdir())
    for f in a.iterdir():
        assert f.read_bytes() == (b / f.name).read_bytes()


def test_emit_corpus_requires_rewriting():
    corpus = load_corpus(FIX / "binary_search.xml")
    with pytest.raises(UnmappedConstant):
        emit_corpus(corpus, load_profile("lean"), "/nonexistent-never-written")
