"""Extended simply-typed lambda calculus used as the universal internal form.

Goals, axioms and function bodies are all represented with the node
classes below. Binders are named (no positional indices); quantifiers are
ordinary constants applied to an abstraction, e.g. ``forall x. P`` is
``App(Const("forall"), Abs("x", ty, P))``.

All nodes are frozen dataclasses, so every operation here returns a new
term and terms can be shared freely.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, TypeVar, Union

from .errors import MalformedPattern, MalformedTerm

FORALL = "forall"
EXISTS = "exists"
QUANTIFIERS = frozenset({FORALL, EXISTS})


def _tupled(obj, field: str) -> None:
    value = getattr(obj, field)
    if not isinstance(value, tuple):
        object.__setattr__(obj, field, tuple(value))


# -- types -------------------------------------------------------------------


@dataclass(frozen=True)
class TyVar:
    name: str


@dataclass(frozen=True)
class TyCon:
    name: str
    args: tuple = ()

    def __post_init__(self):
        _tupled(self, "args")


@dataclass(frozen=True)
class TyArrow:
    dom: "Ty"
    cod: "Ty"


@dataclass(frozen=True)
class TyTuple:
    elems: tuple

    def __post_init__(self):
        _tupled(self, "elems")
        if len(self.elems) < 2:
            raise MalformedTerm("TyTuple needs at least two elements")


Ty = Union[TyVar, TyCon, TyArrow, TyTuple]


def arrows(doms: Iterable[Ty], cod: Ty) -> Ty:
    """Curried function type ``d1 -> d2 -> ... -> cod``."""
    for dom in reversed(list(doms)):
        cod = TyArrow(dom, cod)
    return cod


def ty_constructors(ty: Ty) -> Iterator[str]:
    """Yield every type-constructor name mentioned in ``ty``."""
    stack = [ty]
    while stack:
        t = stack.pop()
        if isinstance(t, TyCon):
            yield t.name
            stack.extend(t.args)
        elif isinstance(t, TyArrow):
            stack.extend((t.dom, t.cod))
        elif isinstance(t, TyTuple):
            stack.extend(t.elems)


# -- patterns ----------------------------------------------------------------


@dataclass(frozen=True)
class PVar:
    name: str


@dataclass(frozen=True)
class PWild:
    pass


@dataclass(frozen=True)
class PCon:
    constructor: str
    args: tuple = ()

    def __post_init__(self):
        _tupled(self, "args")


@dataclass(frozen=True)
class PTuple:
    elems: tuple

    def __post_init__(self):
        _tupled(self, "elems")
        if len(self.elems) < 2:
            raise MalformedPattern("PTuple needs at least two elements")


@dataclass(frozen=True)
class PAs:
    name: str
    inner: "Pattern"


Pattern = Union[PVar, PWild, PCon, PTuple, PAs]


def pattern_vars(p: Pattern) -> list[str]:
    """Names bound by ``p``, left to right (duplicates kept)."""
    out: list[str] = []

    def go(p):
        if isinstance(p, PVar):
            out.append(p.name)
        elif isinstance(p, PAs):
            out.append(p.name)
            go(p.inner)
        elif isinstance(p, PCon):
            for a in p.args:
                go(a)
        elif isinstance(p, PTuple):
            for a in p.elems:
                go(a)

    go(p)
    return out


def check_linear(p: Pattern) -> None:
    names = pattern_vars(p)
    seen = set()
    for n in names:
        if n in seen:
            raise MalformedPattern(f"variable {n!r} bound twice in one pattern")
        seen.add(n)


def rename_pattern(p: Pattern, mapping: dict[str, str]) -> Pattern:
    if isinstance(p, PVar):
        return PVar(mapping.get(p.name, p.name))
    if isinstance(p, PAs):
        return PAs(mapping.get(p.name, p.name), rename_pattern(p.inner, mapping))
    if isinstance(p, PCon):
        return PCon(p.constructor, tuple(rename_pattern(a, mapping) for a in p.args))
    if isinstance(p, PTuple):
        return PTuple(tuple(rename_pattern(a, mapping) for a in p.elems))
    return p


def pattern_constructors(p: Pattern) -> Iterator[str]:
    if isinstance(p, PCon):
        yield p.constructor
        for a in p.args:
            yield from pattern_constructors(a)
    elif isinstance(p, PTuple):
        for a in p.elems:
            yield from pattern_constructors(a)
    elif isinstance(p, PAs):
        yield from pattern_constructors(p.inner)


# -- terms -------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Abs:
    binder: str
    binder_ty: Ty
    body: "Term"


@dataclass(frozen=True)
class Let:
    binder: str
    value: "Term"
    body: "Term"


@dataclass(frozen=True)
class Case:
    scrutinee: "Term"
    branches: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "branches", tuple((p, b) for p, b in self.branches)
        )
        if not self.branches:
            raise MalformedTerm("Case needs at least one branch")


@dataclass(frozen=True)
class Tuple:
    elems: tuple

    def __post_init__(self):
        _tupled(self, "elems")
        if len(self.elems) < 2:
            raise MalformedTerm("Tuple needs at least two elements")


@dataclass(frozen=True)
class NumLit:
    value: int


@dataclass(frozen=True)
class StrLit:
    value: str


Term = Union[Var, Const, App, Abs, Let, Case, Tuple, NumLit, StrLit]
ATOMS = (Var, Const, NumLit, StrLit)


def is_atom(t: Term) -> bool:
    return isinstance(t, ATOMS)


def apps(head: Term, *args: Term) -> Term:
    """Build the application spine ``head a1 ... an``."""
    for a in args:
        head = App(head, a)
    return head


def spine(t: Term) -> tuple[Term, list[Term]]:
    """Flatten ``((h a1) a2) ... an`` into ``(h, [a1, ..., an])``."""
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def forall(binder: str, ty: Ty, body: Term) -> Term:
    return App(Const(FORALL), Abs(binder, ty, body))


def exists(binder: str, ty: Ty, body: Term) -> Term:
    return App(Const(EXISTS), Abs(binder, ty, body))


# -- free variables and fresh names ------------------------------------------


def free_vars(t: Term) -> set[str]:
    out: set[str] = set()

    def go(t, bound: frozenset):
        if isinstance(t, Var):
            if t.name not in bound:
                out.add(t.name)
        elif isinstance(t, App):
            go(t.fun, bound)
            go(t.arg, bound)
        elif isinstance(t, Abs):
            go(t.body, bound | {t.binder})
        elif isinstance(t, Let):
            go(t.value, bound)
            go(t.body, bound | {t.binder})
        elif isinstance(t, Case):
            go(t.scrutinee, bound)
            for p, b in t.branches:
                go(b, bound | frozenset(pattern_vars(p)))
        elif isinstance(t, Tuple):
            for e in t.elems:
                go(e, bound)

    go(t, frozenset())
    return out


def all_names(t: Term) -> set[str]:
    """Every variable name appearing in ``t``, bound or free."""
    out: set[str] = set()

    def go(t):
        if isinstance(t, Var):
            out.add(t.name)
        elif isinstance(t, App):
            go(t.fun)
            go(t.arg)
        elif isinstance(t, Abs):
            out.add(t.binder)
            go(t.body)
        elif isinstance(t, Let):
            out.add(t.binder)
            go(t.value)
            go(t.body)
        elif isinstance(t, Case):
            go(t.scrutinee)
            for p, b in t.branches:
                out.update(pattern_vars(p))
                go(b)
        elif isinstance(t, Tuple):
            for e in t.elems:
                go(e)

    go(t)
    return out


_TRAILING_DIGITS = re.compile(r"\d+$")


def fresh_name(base: str, used: set[str] | frozenset) -> str:
    """Smallest ``stem<k>`` (k >= 1) not in ``used``; ``x`` -> ``x1`` -> ``x2``."""
    stem = _TRAILING_DIGITS.sub("", base) or base
    k = 1
    while f"{stem}{k}" in used:
        k += 1
    return f"{stem}{k}"


# -- substitution ------------------------------------------------------------


def substitute(t: Term, x: str, r: Term) -> Term:
    """Capture-avoiding substitution of ``r`` for the free variable ``x``."""
    return _subst(t, x, r, free_vars(r))


def _subst(t: Term, x: str, r: Term, fv_r: set[str]) -> Term:
    if isinstance(t, Var):
        return r if t.name == x else t
    if isinstance(t, App):
        return App(_subst(t.fun, x, r, fv_r), _subst(t.arg, x, r, fv_r))
    if isinstance(t, Abs):
        binder, body = _under_binder(t.binder, t.body, x, r, fv_r)
        return t if body is None else Abs(binder, t.binder_ty, body)
    if isinstance(t, Let):
        value = _subst(t.value, x, r, fv_r)
        binder, body = _under_binder(t.binder, t.body, x, r, fv_r)
        if body is None:
            return Let(t.binder, value, t.body)
        return Let(binder, value, body)
    if isinstance(t, Case):
        branches = []
        for p, b in t.branches:
            bound = pattern_vars(p)
            if x in bound or x not in free_vars(b):
                branches.append((p, b))
                continue
            clash = [v for v in bound if v in fv_r]
            if clash:
                used = fv_r | free_vars(b) | set(bound) | {x}
                mapping = {}
                for v in clash:
                    mapping[v] = fresh_name(v, used)
                    used.add(mapping[v])
                p = rename_pattern(p, mapping)
                for old, new in mapping.items():
                    b = _subst(b, old, Var(new), {new})
            branches.append((p, _subst(b, x, r, fv_r)))
        return Case(_subst(t.scrutinee, x, r, fv_r), branches)
    if isinstance(t, Tuple):
        return Tuple(tuple(_subst(e, x, r, fv_r) for e in t.elems))
    return t


def _under_binder(binder, body, x, r, fv_r):
    """Substitute under one binder; returns (binder, None) when nothing changes."""
    if binder == x or x not in free_vars(body):
        return binder, None
    if binder in fv_r:
        new = fresh_name(binder, fv_r | free_vars(body) | {x})
        body = _subst(body, binder, Var(new), {new})
        binder = new
    return binder, _subst(body, x, r, fv_r)


# -- deconfliction -----------------------------------------------------------


def deconflict(t: Term, reserved: Iterable[str] = ()) -> Term:
    """Rename binders so that all bound names are pairwise distinct and
    disjoint from ``reserved`` and from the free variables of ``t``."""
    used = set(reserved) | free_vars(t)

    def pick(name: str) -> str:
        new = fresh_name(name, used) if name in used else name
        used.add(new)
        return new

    def go(t, env: dict):
        if isinstance(t, Var):
            return Var(env.get(t.name, t.name))
        if isinstance(t, App):
            return App(go(t.fun, env), go(t.arg, env))
        if isinstance(t, Abs):
            b = pick(t.binder)
            return Abs(b, t.binder_ty, go(t.body, {**env, t.binder: b}))
        if isinstance(t, Let):
            value = go(t.value, env)
            b = pick(t.binder)
            return Let(b, value, go(t.body, {**env, t.binder: b}))
        if isinstance(t, Case):
            scrutinee = go(t.scrutinee, env)
            branches = []
            for p, body in t.branches:
                mapping = {v: pick(v) for v in pattern_vars(p)}
                branches.append(
                    (rename_pattern(p, mapping), go(body, {**env, **mapping}))
                )
            return Case(scrutinee, branches)
        if isinstance(t, Tuple):
            return Tuple(tuple(go(e, env) for e in t.elems))
        return t

    return go(t, {})


def bound_names(t: Term) -> list[str]:
    """Binder names in traversal order (duplicates kept)."""
    out: list[str] = []

    def go(t):
        if isinstance(t, App):
            go(t.fun)
            go(t.arg)
        elif isinstance(t, Abs):
            out.append(t.binder)
            go(t.body)
        elif isinstance(t, Let):
            go(t.value)
            out.append(t.binder)
            go(t.body)
        elif isinstance(t, Case):
            go(t.scrutinee)
            for p, b in t.branches:
                out.extend(pattern_vars(p))
                go(b)
        elif isinstance(t, Tuple):
            for e in t.elems:
                go(e)

    go(t)
    return out


def is_deconflicted(t: Term, reserved: Iterable[str] = ()) -> bool:
    names = bound_names(t)
    if len(names) != len(set(names)):
        return False
    return not (set(names) & (set(reserved) | free_vars(t)))


# -- folding -----------------------------------------------------------------

A = TypeVar("A")


def iter_atoms(t: Term) -> Iterator[Term]:
    """Atom occurrences (Var, Const, NumLit, StrLit) in left-to-right pre-order.

    Binder names are not occurrences and are never yielded.
    """
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, ATOMS):
            yield t
        elif isinstance(t, App):
            stack.append(t.arg)
            stack.append(t.fun)
        elif isinstance(t, Abs):
            stack.append(t.body)
        elif isinstance(t, Let):
            stack.append(t.body)
            stack.append(t.value)
        elif isinstance(t, Case):
            for _, b in reversed(t.branches):
                stack.append(b)
            stack.append(t.scrutinee)
        elif isinstance(t, Tuple):
            stack.extend(reversed(t.elems))


def fold_atoms(t: Term, visit: Callable[[A, Term], A], acc: A) -> A:
    for atom in iter_atoms(t):
        acc = visit(acc, atom)
    return acc


# -- as-binding elimination --------------------------------------------------


def eliminate_as_bindings(t: Term) -> Term:
    """Replace every as-pattern by a let-binding in the branch body.

    ``case s of (w as Cons h t) -> body`` becomes
    ``case s of Cons h t -> let w = Cons h t in body``. Wildcards under an
    as-pattern are first promoted to fresh variables so that the matched
    fragment can always be rebuilt. Inner as-patterns are eliminated
    before outer ones; the outer let ends up outermost.
    """
    used = all_names(t)

    def go(t):
        if isinstance(t, App):
            return App(go(t.fun), go(t.arg))
        if isinstance(t, Abs):
            return Abs(t.binder, t.binder_ty, go(t.body))
        if isinstance(t, Let):
            return Let(t.binder, go(t.value), go(t.body))
        if isinstance(t, Tuple):
            return Tuple(tuple(go(e) for e in t.elems))
        if isinstance(t, Case):
            branches = []
            for p, body in t.branches:
                check_linear(p)
                body = go(body)
                p, lets = _strip_as(p, used)
                for name, value in lets:
                    body = Let(name, value, body)
                branches.append((p, body))
            return Case(go(t.scrutinee), branches)
        return t

    return go(t)


def _strip_as(p: Pattern, used: set[str]) -> tuple[Pattern, list]:
    if isinstance(p, PAs):
        inner, lets = _strip_as(_promote_wildcards(p.inner, used), used)
        return inner, lets + [(p.name, _rebuild(inner))]
    if isinstance(p, PCon):
        args, lets = [], []
        for a in p.args:
            a, sub = _strip_as(a, used)
            args.append(a)
            lets.extend(sub)
        return PCon(p.constructor, tuple(args)), lets
    if isinstance(p, PTuple):
        elems, lets = [], []
        for a in p.elems:
            a, sub = _strip_as(a, used)
            elems.append(a)
            lets.extend(sub)
        return PTuple(tuple(elems)), lets
    return p, []


def _promote_wildcards(p: Pattern, used: set[str]) -> Pattern:
    if isinstance(p, PWild):
        name = fresh_name("w", used)
        used.add(name)
        return PVar(name)
    if isinstance(p, PCon):
        return PCon(p.constructor, tuple(_promote_wildcards(a, used) for a in p.args))
    if isinstance(p, PTuple):
        return PTuple(tuple(_promote_wildcards(a, used) for a in p.elems))
    if isinstance(p, PAs):
        return PAs(p.name, _promote_wildcards(p.inner, used))
    return p


def _rebuild(p: Pattern) -> Term:
    if isinstance(p, PVar):
        return Var(p.name)
    if isinstance(p, PCon):
        return apps(Const(p.constructor), *(_rebuild(a) for a in p.args))
    if isinstance(p, PTuple):
        return Tuple(tuple(_rebuild(a) for a in p.elems))
    raise MalformedPattern(f"cannot rebuild the fragment matched by {p!r}")


def contains_as(t: Term) -> bool:
    def pat_has(p):
        if isinstance(p, PAs):
            return True
        if isinstance(p, PCon):
            return any(pat_has(a) for a in p.args)
        if isinstance(p, PTuple):
            return any(pat_has(a) for a in p.elems)
        return False

    for sub in subterms(t):
        if isinstance(sub, Case) and any(pat_has(p) for p, _ in sub.branches):
            return True
    return False


def subterms(t: Term) -> Iterator[Term]:
    """Every subterm of ``t`` (including ``t``), pre-order."""
    stack = [t]
    while stack:
        t = stack.pop()
        yield t
        if isinstance(t, App):
            stack.extend((t.arg, t.fun))
        elif isinstance(t, Abs):
            stack.append(t.body)
        elif isinstance(t, Let):
            stack.extend((t.body, t.value))
        elif isinstance(t, Case):
            stack.extend(b for _, b in reversed(t.branches))
            stack.append(t.scrutinee)
        elif isinstance(t, Tuple):
            stack.extend(reversed(t.elems))


def constants(t: Term) -> set[str]:
    out = set()
    for sub in subterms(t):
        if isinstance(sub, Const):
            out.add(sub.name)
        elif isinstance(sub, Case):
            for p, _ in sub.branches:
                out.update(pattern_constructors(p))
    return out


def binder_types(t: Term) -> Iterator[Ty]:
    for sub in subterms(t):
        if isinstance(sub, Abs):
            yield sub.binder_ty


# -- alpha-equivalence -------------------------------------------------------


def alpha_normalize(t: Term) -> Term:
    """Rename binders to ``%b0, %b1, ...`` in traversal order.

    The ``%`` prefix cannot occur in real identifiers, so canonical names
    never collide with free variables.
    """
    counter = iter(range(1 << 62))

    def fresh():
        return f"%b{next(counter)}"

    def go(t, env):
        if isinstance(t, Var):
            return Var(env.get(t.name, t.name))
        if isinstance(t, App):
            return App(go(t.fun, env), go(t.arg, env))
        if isinstance(t, Abs):
            b = fresh()
            return Abs(b, t.binder_ty, go(t.body, {**env, t.binder: b}))
        if isinstance(t, Let):
            value = go(t.value, env)
            b = fresh()
            return Let(b, value, go(t.body, {**env, t.binder: b}))
        if isinstance(t, Case):
            scrutinee = go(t.scrutinee, env)
            branches = []
            for p, body in t.branches:
                mapping = {v: fresh() for v in pattern_vars(p)}
                branches.append((rename_pattern(p, mapping), go(body, {**env, **mapping})))
            return Case(scrutinee, branches)
        if isinstance(t, Tuple):
            return Tuple(tuple(go(e, env) for e in t.elems))
        return t

    return go(t, {})


def alpha_equiv(a: Term, b: Term) -> bool:
    return alpha_normalize(a) == alpha_normalize(b)
