"""Precedence-aware rendering of terms, types and patterns."""

from __future__ import annotations

import re
from typing import Callable

from .. import builtins
from ..errors import EmitError, UnmappedConstant
from ..terms import (
    Abs, App, Case, Const, Let, NumLit, PAs, PCon, PTuple, PVar, PWild,
    StrLit, Term, Tuple, TyArrow, TyCon, TyTuple, TyVar, Var, spine,
)
from .profile import APP, ATOM, OPEN, TargetProfile

_BAD_CHARS = re.compile(r"[^A-Za-z0-9_']")

# Namespaces of source-logic and rule-introduced target constants. A name
# in one of these with no mapping in the profile cannot be printed.
RESERVED_NAMESPACES = frozenset(
    {"Int", "Real", "List", "Array", "Why3", "Memory", "Set", "Map", "Seq", "Bag",
     "Tree", "String", "Matrix", "BV", "Cint", "Tuple", "Isabelle", "Lean", "Rocq"}
)

TYPE_ARROW = 0
TYPE_PRODUCT = 20
PAT_APP = 90
PAT_AS = 50


def is_source_builtin(name: str) -> bool:
    if name in builtins.BUILTIN_CONSTANTS:
        return True
    head, dot, _ = name.partition(".")
    return bool(dot) and head in RESERVED_NAMESPACES


def sanitize(name: str) -> str:
    """Closest legal identifier to ``name``."""
    s = _BAD_CHARS.sub("_", name)
    if not s or not s[0].isalpha():
        s = "v" + s
    return s


class Namer:
    """Injective, deterministic mapping from source names to target identifiers.

    Variables, constants, type constructors and type variables share one
    target namespace, so no two distinct source entities ever print the
    same. A candidate that is blacklisted or already taken gets the
    profile's escape suffix, then a counter: ``match`` -> ``match_v``,
    ``match_v1``, ...
    """

    def __init__(self, profile: TargetProfile, resolve: Callable[[str], tuple] | None = None):
        self.profile = profile
        self.resolve = resolve  # const name -> (canonical key, base name)
        self.theory: str | None = None  # qualifies fact names
        self.forward: dict = {}
        self.inverse: dict = {}
        self.taken = profile.reserved_words()

    def _alloc(self, kind: str, key: str, base: str) -> str:
        k = (kind, key)
        hit = self.forward.get(k)
        if hit is not None:
            return hit
        cand = sanitize(base)
        if cand in self.taken:
            stem = cand + self.profile.escape_suffix
            cand, i = stem, 1
            while cand in self.taken:
                cand = f"{stem}{i}"
                i += 1
        self.taken.add(cand)
        self.forward[k] = cand
        self.inverse[cand] = k
        return cand

    def declare(self, kind: str, key: str, base: str) -> str:
        return self._alloc(kind, key, base)

    def fact(self, name: str) -> str:
        key = f"{self.theory}.{name}" if self.theory else name
        return self._alloc("fact", key, name)

    def var(self, name: str) -> str:
        return self._alloc("var", name, name)

    def tyvar(self, name: str) -> str:
        return self._alloc("tyvar", name, name)

    def tycon(self, name: str) -> str:
        mapped = self.profile.type_map.get(name)
        if mapped is not None:
            return mapped
        if self.resolve is not None:
            hit = self.resolve(name)
            if hit is not None:
                return self._alloc("tycon", *hit)
        return self._alloc("tycon", name, name.rsplit(".", 1)[-1])

    def const(self, name: str) -> str:
        mapped = self.profile.builtin_map.get(name)
        if mapped is not None:
            return mapped
        if self.resolve is not None:
            hit = self.resolve(name)
            if hit is not None:
                key, base = hit
                return self._alloc("const", key, base)
        if is_source_builtin(name):
            raise UnmappedConstant(name)
        return self._alloc("const", name, name.rsplit(".", 1)[-1])

    def reserve(self, ident: str) -> None:
        self.taken.add(ident)


class Printer:
    def __init__(self, profile: TargetProfile, namer: Namer | None = None):
        self.p = profile
        self.namer = namer or Namer(profile)

    # -- terms ---------------------------------------------------------------

    def term(self, t: Term, ctx: int = 0) -> str:
        level, text = self._render(t)
        return f"({text})" if level < ctx else text

    def _render(self, t: Term) -> tuple[int, str]:
        if isinstance(t, Var):
            return ATOM, self.namer.var(t.name)
        if isinstance(t, Const):
            return ATOM, self.namer.const(t.name)
        if isinstance(t, NumLit):
            return ATOM, str(t.value) if t.value >= 0 else f"(-{-t.value})"
        if isinstance(t, StrLit):
            return ATOM, self._string(t.value)
        if isinstance(t, Tuple):
            return ATOM, "(" + ", ".join(self.term(e) for e in t.elems) + ")"
        if isinstance(t, Abs):
            return OPEN, self.p.lam.render(
                x=self.namer.var(t.binder),
                ty=self.type(t.binder_ty, self.p.binder_type_prec),
                body=self.term(t.body, OPEN),
            )
        if isinstance(t, Let):
            return OPEN, self.p.let.render(
                x=self.namer.var(t.binder),
                value=self.term(t.value, 0),
                body=self.term(t.body, OPEN),
            )
        if isinstance(t, Case):
            return self._case(t)
        if isinstance(t, App):
            return self._app(t)
        raise EmitError(f"cannot print {t!r}")

    def _string(self, s: str) -> str:
        for raw, esc in self.p.string_escapes.items():
            s = s.replace(raw, esc)
        q = self.p.string_quote
        return q + s + q

    def _app(self, t: App) -> tuple[int, str]:
        head, args = spine(t)
        if isinstance(head, Const):
            n = self.p.notation.get(head.name)
            if n is not None and len(args) >= n.arity and (
                n.kind != "binder" or isinstance(args[0], Abs)
            ):
                level, text = self._notation(n, args[: n.arity])
                rest = args[n.arity:]
                if not rest:
                    return level, text
                if level <= APP:
                    text = f"({text})"
                return APP, " ".join([text] + [self.term(a, APP + 1) for a in rest])
        return APP, " ".join([self.term(head, APP + 1)] + [self.term(a, APP + 1) for a in args])

    def _notation(self, n, args) -> tuple[int, str]:
        if n.kind == "binder":
            abs_ = args[0]
            values = {
                "x": self.namer.var(abs_.binder),
                "ty": self.type(abs_.binder_ty, self.p.binder_type_prec),
                "body": self.term(abs_.body, n.slot_precs["body"]),
            }
        else:
            values = {str(i): self.term(a, self._slot_prec(n, str(i), a)) for i, a in enumerate(args)}
        return n.prec, n.template.render(**values)

    def _slot_prec(self, n, slot: str, arg: Term) -> int:
        # Operators sharing a level but not an associativity never chain
        # unparenthesized: `a # b - c` is ambiguous in Isabelle.
        ctx = n.slot_precs[slot]
        if n.kind != "infix":
            return ctx
        head, args = spine(arg)
        m = self.p.notation.get(head.name) if isinstance(head, Const) else None
        if m is not None and m.kind == "infix" and len(args) == m.arity and m.prec == n.prec \
                and m.assoc != n.assoc:
            return n.prec + 1
        return ctx

    def _case(self, t: Case) -> tuple[int, str]:
        cs = self.p.case
        out = [cs.head.render(s=self.term(t.scrutinee, 0))]
        last = len(t.branches) - 1
        for i, (pat, body) in enumerate(t.branches):
            out.append(cs.first if i == 0 else cs.sep)
            ctx = OPEN if i == last else cs.branch_prec
            out.append(self.pattern(pat) + cs.arrow + self.term(body, ctx))
        out.append(cs.close)
        return (ATOM if cs.closed else OPEN), "".join(out)

    # -- patterns ------------------------------------------------------------

    def pattern(self, p, ctx: int = 0) -> str:
        level, text = self._pattern(p)
        return f"({text})" if level < ctx else text

    def _pattern(self, p) -> tuple[int, str]:
        if isinstance(p, PVar):
            return ATOM, self.namer.var(p.name)
        if isinstance(p, PWild):
            return ATOM, "_"
        if isinstance(p, PTuple):
            return ATOM, "(" + ", ".join(self.pattern(e) for e in p.elems) + ")"
        if isinstance(p, PCon):
            name = self.namer.const(p.constructor)
            if not p.args:
                return ATOM, name
            return PAT_APP, " ".join([name] + [self.pattern(a, PAT_APP + 1) for a in p.args])
        if isinstance(p, PAs):
            if self.p.as_pattern is None:
                raise EmitError(f"{self.p.id} has no as-patterns; eliminate them first")
            # a template in its own parentheses takes any pattern inside
            closed = self.p.as_pattern.closed
            inner = self.pattern(p.inner, 0 if closed else ATOM)
            text = self.p.as_pattern.render(x=self.namer.var(p.name), p=inner)
            return (ATOM if closed else PAT_AS), text
        raise EmitError(f"cannot print pattern {p!r}")

    # -- types ---------------------------------------------------------------

    def type(self, ty, ctx: int = 0) -> str:
        level, text = self._type(ty)
        return f"({text})" if level < ctx else text

    def _type(self, ty) -> tuple[int, str]:
        if isinstance(ty, TyVar):
            return ATOM, self.p.tyvar_prefix + self.namer.tyvar(ty.name)
        if isinstance(ty, TyCon):
            name = self.namer.tycon(ty.name)
            if not ty.args:
                return ATOM, name
            if self.p.type_app == "postfix":
                if len(ty.args) == 1:
                    return APP, f"{self.type(ty.args[0], APP)} {name}"
                return APP, "(" + ", ".join(self.type(a) for a in ty.args) + ") " + name
            return APP, " ".join([name] + [self.type(a, APP + 1) for a in ty.args])
        if isinstance(ty, TyArrow):
            return TYPE_ARROW, (
                f"{self.type(ty.dom, TYPE_ARROW + 1)} {self.p.type_arrow} {self.type(ty.cod, TYPE_ARROW)}"
            )
        if isinstance(ty, TyTuple):
            sep = f" {self.p.type_product} "
            return TYPE_PRODUCT, sep.join(self.type(e, TYPE_PRODUCT + 1) for e in ty.elems)
        raise EmitError(f"cannot print type {ty!r}")


def print_term(t: Term, profile: TargetProfile, namer: Namer | None = None) -> str:
    """Render ``t`` in ``profile``'s surface syntax with minimal parentheses."""
    return Printer(profile, namer).term(t)


def print_type(ty, profile: TargetProfile, namer: Namer | None = None) -> str:
    return Printer(profile, namer).type(ty)
