"""Reader and writer for the dumped-AST XML interchange format.

Element reference (attributes in brackets)::

    corpus                      theory*
    theory[name]                import* (datatype | fundef | axiom | goal)*
    import[name]
    datatype[name]              typaram* constructor*
    constructor[name]           type*
    typaram[name]
    fundef[name, recursive?, termination_trusted?]
                                typaram* param* ret body?
    param[name]                 type
    ret                         type
    body                        term
    axiom[name], goal[name]     term

    var[name] const[name] num[value] str(text)
    app                         term term+          (left-nested spine)
    abs[name]                   type term
    let[name]                   term term
    case                        term branch+
    branch                      pattern term
    tuple                       term term+

    pvar[name] pwild pcon[name](pattern*) ptuple(pattern pattern+)
    pas[name](pattern)

    tyvar[name] tycon[name](type*) tyarrow(type type) tytuple(type type+)

A ``fundef`` without ``body`` declares an abstract (uninterpreted) constant.
Standard XML entity escaping applies to names and string literals.
"""

from __future__ import annotations

import heapq
import io
import logging
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterable, Union

from . import builtins
from .errors import (
    CycleError, MalformedPattern, ParseError, SchemaError, ValidationError,
)
from .terms import (
    Abs, App, Case, Const, Let, NumLit, PAs, PCon, PTuple, PVar, PWild,
    StrLit, Term, Tuple, Ty, TyArrow, TyCon, TyTuple, TyVar, Var, apps,
    arrows, binder_types, check_linear, constants, free_vars, spine,
    substitute, subterms, ty_constructors,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Datatype:
    name: str
    ty_params: tuple = ()
    constructors: tuple = ()  # ((name, (arg types...)), ...)

    def __post_init__(self):
        object.__setattr__(self, "ty_params", tuple(self.ty_params))
        object.__setattr__(
            self, "constructors", tuple((n, tuple(a)) for n, a in self.constructors)
        )

    @property
    def self_type(self) -> Ty:
        return TyCon(self.name, tuple(TyVar(p) for p in self.ty_params))

    def constructor_type(self, cname: str) -> Ty:
        for n, args in self.constructors:
            if n == cname:
                return arrows(args, self.self_type)
        raise KeyError(cname)


@dataclass(frozen=True)
class FunDef:
    name: str
    ty_params: tuple = ()
    params: tuple = ()  # ((name, type), ...)
    ret: Ty = TyCon("bool")
    body: Term | None = None
    recursive: bool = False
    termination_trusted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ty_params", tuple(self.ty_params))
        object.__setattr__(self, "params", tuple((n, t) for n, t in self.params))

    @property
    def signature(self) -> Ty:
        return arrows([t for _, t in self.params], self.ret)

    @property
    def is_abstract(self) -> bool:
        return self.body is None


@dataclass(frozen=True)
class Axiom:
    name: str
    statement: Term


@dataclass(frozen=True)
class Goal:
    name: str
    statement: Term


Declaration = Union[Datatype, FunDef, Axiom, Goal]


@dataclass(frozen=True)
class Theory:
    name: str
    imports: tuple = ()
    decls: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "imports", tuple(self.imports))
        object.__setattr__(self, "decls", tuple(self.decls))

    @property
    def goals(self) -> list[Goal]:
        return [d for d in self.decls if isinstance(d, Goal)]


@dataclass(frozen=True)
class Corpus:
    theories: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "theories", tuple(self.theories))

    def theory(self, name: str) -> Theory:
        for t in self.theories:
            if t.name == name:
                return t
        raise KeyError(name)

    def goals(self) -> list[tuple[Theory, Goal]]:
        return [(th, g) for th in topo_order(self) for g in th.goals]


def goal_id(theory: Theory, goal: Goal) -> str:
    return f"{theory.name}.{goal.name}"


# -- reading -----------------------------------------------------------------


def parse_corpus(
    source,
    *,
    strict: bool = True,
    extra_builtins: Iterable[str] = (),
    diagnostics: list[str] | None = None,
) -> Corpus:
    """Parse and validate a corpus from bytes, text, a path, or a binary stream.

    With ``strict=False`` unresolved names are reported through
    ``diagnostics`` (and the log) instead of raising ``ValidationError``.
    """
    data = _read_source(source)
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"line {line}, column {col}", str(exc)) from None
    if root.tag != "corpus":
        raise SchemaError(f"root element must be <corpus>, got <{root.tag}>")
    _no_attrs(root, "corpus")
    theories = [_theory(el, f"corpus/theory[{i}]") for i, el in enumerate(_children(root, "corpus"))]
    corpus = Corpus(tuple(theories))
    validate(corpus, strict=strict, extra_builtins=extra_builtins, diagnostics=diagnostics)
    return corpus


def load_corpus(path, **kw) -> Corpus:
    with open(path, "rb") as fh:
        return parse_corpus(fh.read(), **kw)


def _read_source(source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, str):
        return source.encode("utf-8")
    if isinstance(source, os.PathLike):
        with open(source, "rb") as fh:
            return fh.read()
    if hasattr(source, "read"):
        data = source.read()
        return data.encode("utf-8") if isinstance(data, str) else data
    raise TypeError(f"cannot read corpus from {type(source).__name__}")


def _children(el, where: str) -> list:
    if el.text and el.text.strip():
        raise SchemaError(f"{where}: unexpected text {el.text.strip()[:20]!r}")
    for child in el:
        if child.tail and child.tail.strip():
            raise SchemaError(f"{where}: unexpected text {child.tail.strip()[:20]!r}")
    return list(el)


def _no_attrs(el, where: str):
    if el.attrib:
        raise SchemaError(f"{where}: unexpected attributes {sorted(el.attrib)}")


def _attrs(el, where: str, required: tuple, optional: tuple = ()) -> dict:
    extra = set(el.attrib) - set(required) - set(optional)
    if extra:
        raise SchemaError(f"{where}: unknown attribute(s) {sorted(extra)} on <{el.tag}>")
    for a in required:
        if a not in el.attrib:
            raise SchemaError(f"{where}: <{el.tag}> is missing attribute {a!r}")
    return dict(el.attrib)


def _bool(value: str, where: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "1"):
        return True
    if v in ("false", "0"):
        return False
    raise SchemaError(f"{where}: expected a boolean, got {value!r}")


def _theory(el, where: str) -> Theory:
    if el.tag != "theory":
        raise SchemaError(f"{where}: expected <theory>, got <{el.tag}>")
    name = _attrs(el, where, ("name",))["name"]
    where = f"theory[{name}]"
    imports, decls = [], []
    for child in _children(el, where):
        tag = child.tag
        if tag == "import":
            imports.append(_attrs(child, where, ("name",))["name"])
            _children(child, where)
            if len(child):
                raise SchemaError(f"{where}: <import> takes no children")
        elif tag == "datatype":
            decls.append(_datatype(child, where))
        elif tag == "fundef":
            decls.append(_fundef(child, where))
        elif tag in ("axiom", "goal"):
            dname = _attrs(child, where, ("name",))["name"]
            body = _children(child, f"{where}/{tag}[{dname}]")
            if len(body) != 1:
                raise SchemaError(f"{where}/{tag}[{dname}]: expected exactly one term")
            stmt = _term(body[0], f"{where}/{tag}[{dname}]")
            decls.append((Axiom if tag == "axiom" else Goal)(dname, stmt))
        else:
            raise SchemaError(f"{where}: unknown element <{tag}>")
    return Theory(name, tuple(imports), tuple(decls))


def _datatype(el, where: str) -> Datatype:
    name = _attrs(el, where, ("name",))["name"]
    where = f"{where}/datatype[{name}]"
    params, ctors = [], []
    for child in _children(el, where):
        if child.tag == "typaram":
            params.append(_attrs(child, where, ("name",))["name"])
        elif child.tag == "constructor":
            cname = _attrs(child, where, ("name",))["name"]
            args = tuple(_type(a, f"{where}/{cname}") for a in _children(child, where))
            ctors.append((cname, args))
        else:
            raise SchemaError(f"{where}: unknown element <{child.tag}>")
    return Datatype(name, tuple(params), tuple(ctors))


def _fundef(el, where: str) -> FunDef:
    a = _attrs(el, where, ("name",), ("recursive", "termination_trusted"))
    name = a["name"]
    where = f"{where}/fundef[{name}]"
    recursive = _bool(a.get("recursive", "false"), where)
    trusted = _bool(a.get("termination_trusted", "false"), where)
    params, typarams, ret, body = [], [], None, None
    for child in _children(el, where):
        if child.tag == "typaram":
            typarams.append(_attrs(child, where, ("name",))["name"])
        elif child.tag == "param":
            pname = _attrs(child, where, ("name",))["name"]
            ty = _children(child, where)
            if len(ty) != 1:
                raise SchemaError(f"{where}: <param> needs exactly one type")
            params.append((pname, _type(ty[0], where)))
        elif child.tag == "ret":
            _no_attrs(child, where)
            ty = _children(child, where)
            if len(ty) != 1:
                raise SchemaError(f"{where}: <ret> needs exactly one type")
            ret = _type(ty[0], where)
        elif child.tag == "body":
            _no_attrs(child, where)
            tm = _children(child, where)
            if len(tm) != 1:
                raise SchemaError(f"{where}: <body> needs exactly one term")
            body = _term(tm[0], where)
        else:
            raise SchemaError(f"{where}: unknown element <{child.tag}>")
    if ret is None:
        raise SchemaError(f"{where}: missing <ret>")
    return FunDef(name, tuple(typarams), tuple(params), ret, body, recursive, trusted)


def _type(el, where: str) -> Ty:
    tag = el.tag
    kids = _children(el, where)
    if tag == "tyvar":
        _attrs(el, where, ("name",))
        _arity(kids, 0, tag, where)
        return TyVar(el.attrib["name"])
    if tag == "tycon":
        _attrs(el, where, ("name",))
        return TyCon(el.attrib["name"], tuple(_type(k, where) for k in kids))
    if tag == "tyarrow":
        _no_attrs(el, where)
        _arity(kids, 2, tag, where)
        return TyArrow(_type(kids[0], where), _type(kids[1], where))
    if tag == "tytuple":
        _no_attrs(el, where)
        if len(kids) < 2:
            raise SchemaError(f"{where}: <tytuple> needs at least two types")
        return TyTuple(tuple(_type(k, where) for k in kids))
    raise SchemaError(f"{where}: unknown type element <{tag}>")


def _arity(kids, n, tag, where):
    if len(kids) != n:
        raise SchemaError(f"{where}: <{tag}> takes {n} children, got {len(kids)}")


def _pattern(el, where: str):
    tag = el.tag
    kids = _children(el, where)
    if tag == "pvar":
        _attrs(el, where, ("name",))
        _arity(kids, 0, tag, where)
        return PVar(el.attrib["name"])
    if tag == "pwild":
        _no_attrs(el, where)
        _arity(kids, 0, tag, where)
        return PWild()
    if tag == "pcon":
        _attrs(el, where, ("name",))
        return PCon(el.attrib["name"], tuple(_pattern(k, where) for k in kids))
    if tag == "ptuple":
        _no_attrs(el, where)
        if len(kids) < 2:
            raise SchemaError(f"{where}: <ptuple> needs at least two patterns")
        return PTuple(tuple(_pattern(k, where) for k in kids))
    if tag == "pas":
        _attrs(el, where, ("name",))
        _arity(kids, 1, tag, where)
        return PAs(el.attrib["name"], _pattern(kids[0], where))
    raise SchemaError(f"{where}: unknown pattern element <{tag}>")


def _term(el, where: str) -> Term:
    tag = el.tag
    if tag == "str":
        _no_attrs(el, where)
        if len(el):
            raise SchemaError(f"{where}: <str> takes text only")
        return StrLit(el.text or "")
    kids = _children(el, where)
    if tag == "var":
        _attrs(el, where, ("name",))
        _arity(kids, 0, tag, where)
        return Var(el.attrib["name"])
    if tag == "const":
        _attrs(el, where, ("name",))
        _arity(kids, 0, tag, where)
        return Const(el.attrib["name"])
    if tag == "num":
        _attrs(el, where, ("value",))
        _arity(kids, 0, tag, where)
        try:
            return NumLit(int(el.attrib["value"]))
        except ValueError:
            raise SchemaError(f"{where}: bad integer {el.attrib['value']!r}") from None
    if tag == "app":
        _no_attrs(el, where)
        if len(kids) < 2:
            raise SchemaError(f"{where}: <app> needs a function and an argument")
        return apps(*(_term(k, where) for k in kids))
    if tag == "abs":
        _attrs(el, where, ("name",))
        _arity(kids, 2, tag, where)
        return Abs(el.attrib["name"], _type(kids[0], where), _term(kids[1], where))
    if tag == "let":
        _attrs(el, where, ("name",))
        _arity(kids, 2, tag, where)
        return Let(el.attrib["name"], _term(kids[0], where), _term(kids[1], where))
    if tag == "tuple":
        _no_attrs(el, where)
        if len(kids) < 2:
            raise SchemaError(f"{where}: <tuple> needs at least two terms")
        return Tuple(tuple(_term(k, where) for k in kids))
    if tag == "case":
        _no_attrs(el, where)
        if len(kids) < 2:
            raise SchemaError(f"{where}: <case> needs a scrutinee and a branch")
        branches = []
        for br in kids[1:]:
            if br.tag != "branch":
                raise SchemaError(f"{where}: expected <branch>, got <{br.tag}>")
            _no_attrs(br, where)
            parts = _children(br, where)
            _arity(parts, 2, "branch", where)
            branches.append(_normalize_branch(_pattern(parts[0], where), _term(parts[1], where)))
        return Case(_term(kids[0], where), branches)
    raise SchemaError(f"{where}: unknown term element <{tag}>")


def _normalize_branch(p, body):
    """Collapse ``v as x`` to ``v`` (renaming x in the body) and ``v as _`` to ``v``."""

    def go(p):
        nonlocal body
        if isinstance(p, PAs):
            inner = go(p.inner)
            if isinstance(inner, PVar):
                body = substitute(body, inner.name, Var(p.name))
                return PVar(p.name)
            if isinstance(inner, PWild):
                return PVar(p.name)
            return PAs(p.name, inner)
        if isinstance(p, PCon):
            return PCon(p.constructor, tuple(go(a) for a in p.args))
        if isinstance(p, PTuple):
            return PTuple(tuple(go(a) for a in p.elems))
        return p

    p = go(p)
    return p, body


# -- writing -----------------------------------------------------------------


def dump_corpus(corpus: Corpus) -> bytes:
    """Serialize ``corpus`` in the interchange format (inverse of parse_corpus)."""
    root = ET.Element("corpus")
    for th in corpus.theories:
        tel = ET.SubElement(root, "theory", name=th.name)
        for imp in th.imports:
            ET.SubElement(tel, "import", name=imp)
        for d in th.decls:
            tel.append(_decl_el(d))
    ET.indent(root)
    buf = io.BytesIO()
    ET.ElementTree(root).write(buf, encoding="utf-8", xml_declaration=True)
    return buf.getvalue() + b"\n"


def _decl_el(d):
    if isinstance(d, Datatype):
        el = ET.Element("datatype", name=d.name)
        for p in d.ty_params:
            ET.SubElement(el, "typaram", name=p)
        for cname, args in d.constructors:
            c = ET.SubElement(el, "constructor", name=cname)
            c.extend(_type_el(a) for a in args)
        return el
    if isinstance(d, FunDef):
        el = ET.Element(
            "fundef",
            name=d.name,
            recursive=str(d.recursive).lower(),
            termination_trusted=str(d.termination_trusted).lower(),
        )
        for p in d.ty_params:
            ET.SubElement(el, "typaram", name=p)
        for pname, ty in d.params:
            ET.SubElement(el, "param", name=pname).append(_type_el(ty))
        ET.SubElement(el, "ret").append(_type_el(d.ret))
        if d.body is not None:
            ET.SubElement(el, "body").append(_term_el(d.body))
        return el
    tag = "axiom" if isinstance(d, Axiom) else "goal"
    el = ET.Element(tag, name=d.name)
    el.append(_term_el(d.statement))
    return el


def _type_el(ty):
    if isinstance(ty, TyVar):
        return ET.Element("tyvar", name=ty.name)
    if isinstance(ty, TyCon):
        el = ET.Element("tycon", name=ty.name)
        el.extend(_type_el(a) for a in ty.args)
        return el
    if isinstance(ty, TyArrow):
        el = ET.Element("tyarrow")
        el.extend((_type_el(ty.dom), _type_el(ty.cod)))
        return el
    el = ET.Element("tytuple")
    el.extend(_type_el(e) for e in ty.elems)
    return el


def _pattern_el(p):
    if isinstance(p, PVar):
        return ET.Element("pvar", name=p.name)
    if isinstance(p, PWild):
        return ET.Element("pwild")
    if isinstance(p, PCon):
        el = ET.Element("pcon", name=p.constructor)
        el.extend(_pattern_el(a) for a in p.args)
        return el
    if isinstance(p, PTuple):
        el = ET.Element("ptuple")
        el.extend(_pattern_el(a) for a in p.elems)
        return el
    el = ET.Element("pas", name=p.name)
    el.append(_pattern_el(p.inner))
    return el


def _term_el(t):
    if isinstance(t, Var):
        return ET.Element("var", name=t.name)
    if isinstance(t, Const):
        return ET.Element("const", name=t.name)
    if isinstance(t, NumLit):
        return ET.Element("num", value=str(t.value))
    if isinstance(t, StrLit):
        el = ET.Element("str")
        el.text = t.value
        return el
    if isinstance(t, App):
        head, args = spine(t)
        el = ET.Element("app")
        el.extend(_term_el(x) for x in [head, *args])
        return el
    if isinstance(t, Abs):
        el = ET.Element("abs", name=t.binder)
        el.extend((_type_el(t.binder_ty), _term_el(t.body)))
        return el
    if isinstance(t, Let):
        el = ET.Element("let", name=t.binder)
        el.extend((_term_el(t.value), _term_el(t.body)))
        return el
    if isinstance(t, Tuple):
        el = ET.Element("tuple")
        el.extend(_term_el(e) for e in t.elems)
        return el
    el = ET.Element("case")
    el.append(_term_el(t.scrutinee))
    for p, b in t.branches:
        br = ET.SubElement(el, "branch")
        br.extend((_pattern_el(p), _term_el(b)))
    return el


# -- scopes and dependency closure --------------------------------------------


@dataclass
class Scope:
    """Names visible inside one theory: its own declarations plus those of
    its transitive imports, each under its simple and qualified name."""

    corpus: Corpus
    theory: Theory
    entries: dict = field(default_factory=dict)  # name -> (theory name, decl)

    @classmethod
    def of(cls, corpus: Corpus, theory: Theory) -> "Scope":
        by_name = {t.name: t for t in corpus.theories}
        order = []
        seen = set()

        def visit(name):
            if name in seen or name not in by_name:
                return
            seen.add(name)
            for imp in by_name[name].imports:
                visit(imp)
            order.append(by_name[name])

        visit(theory.name)
        scope = cls(corpus, theory)
        for th in order:
            for d in th.decls:
                for n in _declared_names(d):
                    scope.entries[n] = (th.name, d)
                    scope.entries[f"{th.name}.{n}"] = (th.name, d)
        return scope

    def resolve(self, name: str):
        return self.entries.get(name)

    def type_of(self, name: str) -> Ty | None:
        hit = self.entries.get(name)
        if hit is None:
            return builtins.builtin_type_of(name)
        _, d = hit
        if isinstance(d, FunDef):
            return d.signature
        if isinstance(d, Datatype):
            ctors = dict(d.constructors)
            cname = name if name in ctors else name.rsplit(".", 1)[-1]
            if cname in ctors:
                return d.constructor_type(cname)
        return None


def _declared_names(d) -> list[str]:
    if isinstance(d, Datatype):
        return [d.name] + [c for c, _ in d.constructors]
    if isinstance(d, FunDef):
        return [d.name]
    return []


def decl_references(d) -> set[str]:
    """Constant, constructor and type-constructor names a declaration mentions."""
    refs: set[str] = set()

    def add_term(t):
        refs.update(constants(t))
        for ty in binder_types(t):
            refs.update(ty_constructors(ty))

    if isinstance(d, Datatype):
        for _, args in d.constructors:
            for a in args:
                refs.update(ty_constructors(a))
        refs.discard(d.name)
    elif isinstance(d, FunDef):
        for _, ty in d.params:
            refs.update(ty_constructors(ty))
        refs.update(ty_constructors(d.ret))
        if d.body is not None:
            add_term(d.body)
        refs.discard(d.name)
    else:
        add_term(d.statement)
    return refs


def dependency_closure(scope: Scope, decl) -> list[tuple[str, object]]:
    """Declarations transitively referenced by ``decl``, in discovery order."""
    out, seen = [], set()
    todo = sorted(decl_references(decl))
    while todo:
        name = todo.pop(0)
        hit = scope.resolve(name)
        if hit is None:
            continue
        th, d = hit
        key = (th, id(d))
        if key in seen:
            continue
        seen.add(key)
        out.append(hit)
        todo.extend(sorted(decl_references(d)))
    return out


def detect_non_uniform(d: Datatype, qualified_name: str | None = None) -> bool:
    """True iff a constructor argument applies the datatype to type arguments
    other than its own parameters (in order)."""
    names = {d.name} | ({qualified_name} if qualified_name else set())
    expected = tuple(TyVar(p) for p in d.ty_params)

    def bad(ty) -> bool:
        if isinstance(ty, TyCon):
            if ty.name in names and ty.args != expected:
                return True
            return any(bad(a) for a in ty.args)
        if isinstance(ty, TyArrow):
            return bad(ty.dom) or bad(ty.cod)
        if isinstance(ty, TyTuple):
            return any(bad(e) for e in ty.elems)
        return False

    return any(bad(a) for _, args in d.constructors for a in args)


def non_uniform_datatypes(corpus: Corpus) -> set[tuple[str, str]]:
    """(theory, datatype) pairs flagged as non-uniform."""
    return {
        (th.name, d.name)
        for th in corpus.theories
        for d in th.decls
        if isinstance(d, Datatype) and detect_non_uniform(d, f"{th.name}.{d.name}")
    }


def involves_non_uniform(scope: Scope, decl, flagged: set[tuple[str, str]]) -> str | None:
    """Name of a flagged datatype in ``decl``'s dependency closure, if any."""
    if isinstance(decl, Datatype) and (scope.theory.name, decl.name) in flagged:
        return decl.name
    for th, d in dependency_closure(scope, decl):
        if isinstance(d, Datatype) and (th, d.name) in flagged:
            return d.name
    return None


# -- validation --------------------------------------------------------------


def validate(
    corpus: Corpus,
    *,
    strict: bool = True,
    extra_builtins: Iterable[str] = (),
    diagnostics: list[str] | None = None,
) -> None:
    names = [t.name for t in corpus.theories]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise ValidationError(f"duplicate theory names: {sorted(dup)}")
    topo_order(corpus)

    known_consts = set(builtins.BUILTIN_CONSTANTS) | set(extra_builtins)
    tycon_arity: dict[str, int] = dict(builtins.BUILTIN_TYPES)
    for th in corpus.theories:
        for d in th.decls:
            if isinstance(d, Datatype):
                for n in (d.name, f"{th.name}.{d.name}"):
                    tycon_arity[n] = len(d.ty_params)

    def unresolved(msg):
        if strict:
            raise ValidationError(msg)
        log.warning(msg)
        if diagnostics is not None:
            diagnostics.append(msg)

    for th in corpus.theories:
        scope = Scope.of(corpus, th)
        seen: set[str] = set()
        declared_before: set[str] = set(n for n in scope.entries if scope.entries[n][0] != th.name)
        for d in th.decls:
            where = f"theory {th.name}, {type(d).__name__.lower()} {d.name}"
            for n in [d.name] + _declared_names(d)[1:]:
                if n in seen:
                    raise ValidationError(f"{where}: duplicate declaration name {n!r}")
                seen.add(n)

            def check_ty(ty, tparams=()):
                for sub in _iter_tycons(ty):
                    arity = tycon_arity.get(sub.name)
                    if arity is None:
                        unresolved(f"{where}: unknown type constructor {sub.name!r}")
                    elif arity != len(sub.args):
                        raise ValidationError(
                            f"{where}: {sub.name!r} expects {arity} type arguments, got {len(sub.args)}"
                        )

            def check_term(t, allowed_free: set[str]):
                for p in _iter_patterns(t):
                    try:
                        check_linear(p)
                    except MalformedPattern as exc:
                        raise ValidationError(f"{where}: {exc}") from None
                for ty in binder_types(t):
                    check_ty(ty)
                for c in sorted(constants(t)):
                    if c not in known_consts and scope.resolve(c) is None:
                        unresolved(f"{where}: unknown constant {c!r}")
                stray = free_vars(t) - allowed_free
                if stray:
                    raise ValidationError(f"{where}: free variables {sorted(stray)}")

            if isinstance(d, Datatype):
                for _, args in d.constructors:
                    for a in args:
                        check_ty(a)
            elif isinstance(d, FunDef):
                if d.termination_trusted and not d.recursive:
                    raise ValidationError(f"{where}: termination_trusted requires recursive")
                for _, ty in d.params:
                    check_ty(ty)
                check_ty(d.ret)
                if d.body is not None:
                    allowed = {p for p, _ in d.params} | declared_before
                    if d.recursive:
                        allowed.add(d.name)
                    check_term(d.body, allowed)
            else:
                check_term(d.statement, declared_before)
            declared_before.update(_declared_names(d))
            declared_before.update(f"{th.name}.{n}" for n in _declared_names(d))


def _iter_tycons(ty):
    if isinstance(ty, TyCon):
        yield ty
        for a in ty.args:
            yield from _iter_tycons(a)
    elif isinstance(ty, TyArrow):
        yield from _iter_tycons(ty.dom)
        yield from _iter_tycons(ty.cod)
    elif isinstance(ty, TyTuple):
        for e in ty.elems:
            yield from _iter_tycons(e)


def _iter_patterns(t):
    for sub in subterms(t):
        if isinstance(sub, Case):
            for p, _ in sub.branches:
                yield p


# -- ordering ----------------------------------------------------------------


def topo_order(corpus: Corpus) -> list[Theory]:
    """Theories ordered so that each follows all of its (in-corpus) imports.

    Ties are broken by ascending theory name. Imports of theories outside
    the corpus are treated as external libraries and ignored here.
    """
    by_name = {t.name: t for t in corpus.theories}
    deps = {n: {i for i in t.imports if i in by_name} for n, t in by_name.items()}
    users: dict[str, set[str]] = {n: set() for n in by_name}
    for n, ds in deps.items():
        for d in ds:
            users[d].add(n)
    pending = {n: len(ds) for n, ds in deps.items()}
    ready = [n for n, k in pending.items() if k == 0]
    heapq.heapify(ready)
    out = []
    while ready:
        n = heapq.heappop(ready)
        out.append(by_name[n])
        for u in users[n]:
            pending[u] -= 1
            if pending[u] == 0:
                heapq.heappush(ready, u)
    if len(out) != len(by_name):
        raise CycleError(_find_cycle({n: deps[n] for n, k in pending.items() if k > 0}))
    return out


def _find_cycle(deps: dict[str, set[str]]) -> list[str]:
    for start in sorted(deps):
        path, on_path = [start], {start}
        iters = [iter(sorted(deps[start] & deps.keys()))]
        while iters:
            nxt = next(iters[-1], None)
            if nxt is None:
                iters.pop()
                on_path.discard(path.pop())
                continue
            if nxt in on_path:
                cyc = path[path.index(nxt):]
                k = cyc.index(min(cyc))
                return cyc[k:] + cyc[:k]
            path.append(nxt)
            on_path.add(nxt)
            iters.append(iter(sorted(deps[nxt] & deps.keys())))
    return sorted(deps)
