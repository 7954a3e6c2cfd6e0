"""Round-trippable S-expression text form for terms, types and patterns.

Grammar (``NAME`` is a bare token or a double-quoted string)::

    term    ::= (var NAME) | (const NAME) | (app term term)
              | (abs NAME type term) | (let NAME term term)
              | (case term (pattern term)+) | (tuple term term+)
              | (num INT) | (str STRING)
    type    ::= (tyvar NAME) | (tycon NAME type*) | (tyarrow type type)
              | (tytuple type type+)
    pattern ::= (pvar NAME) | (pwild) | (pcon NAME pattern*)
              | (ptuple pattern pattern+) | (pas NAME pattern)

Strings use backslash escapes for ``"`` and ``\\``.
"""

from __future__ import annotations

import re

from .errors import MalformedPattern, MalformedTerm, SexpError
from .terms import (
    Abs, App, Case, Const, Let, NumLit, PAs, PCon, PTuple, PVar, PWild,
    StrLit, Tuple, TyArrow, TyCon, TyTuple, TyVar, Var,
)

_BARE = re.compile(r"[^\s()\"\\;]+")


def _name(s: str) -> str:
    return s if _BARE.fullmatch(s) else _quote(s)


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def type_to_sexp(ty) -> str:
    if isinstance(ty, TyVar):
        return f"(tyvar {_name(ty.name)})"
    if isinstance(ty, TyCon):
        args = "".join(" " + type_to_sexp(a) for a in ty.args)
        return f"(tycon {_name(ty.name)}{args})"
    if isinstance(ty, TyArrow):
        return f"(tyarrow {type_to_sexp(ty.dom)} {type_to_sexp(ty.cod)})"
    if isinstance(ty, TyTuple):
        return "(tytuple " + " ".join(type_to_sexp(e) for e in ty.elems) + ")"
    raise TypeError(f"not a type: {ty!r}")


def pattern_to_sexp(p) -> str:
    if isinstance(p, PVar):
        return f"(pvar {_name(p.name)})"
    if isinstance(p, PWild):
        return "(pwild)"
    if isinstance(p, PCon):
        args = "".join(" " + pattern_to_sexp(a) for a in p.args)
        return f"(pcon {_name(p.constructor)}{args})"
    if isinstance(p, PTuple):
        return "(ptuple " + " ".join(pattern_to_sexp(e) for e in p.elems) + ")"
    if isinstance(p, PAs):
        return f"(pas {_name(p.name)} {pattern_to_sexp(p.inner)})"
    raise TypeError(f"not a pattern: {p!r}")


def to_sexp(t) -> str:
    if isinstance(t, Var):
        return f"(var {_name(t.name)})"
    if isinstance(t, Const):
        return f"(const {_name(t.name)})"
    if isinstance(t, App):
        return f"(app {to_sexp(t.fun)} {to_sexp(t.arg)})"
    if isinstance(t, Abs):
        return f"(abs {_name(t.binder)} {type_to_sexp(t.binder_ty)} {to_sexp(t.body)})"
    if isinstance(t, Let):
        return f"(let {_name(t.binder)} {to_sexp(t.value)} {to_sexp(t.body)})"
    if isinstance(t, Case):
        branches = " ".join(
            f"({pattern_to_sexp(p)} {to_sexp(b)})" for p, b in t.branches
        )
        return f"(case {to_sexp(t.scrutinee)} {branches})"
    if isinstance(t, Tuple):
        return "(tuple " + " ".join(to_sexp(e) for e in t.elems) + ")"
    if isinstance(t, NumLit):
        return f"(num {t.value})"
    if isinstance(t, StrLit):
        return f"(str {_quote(t.value)})"
    raise TypeError(f"not a term: {t!r}")


# -- reading -----------------------------------------------------------------

_TOKEN = re.compile(r'\s+|;[^\n]*|\(|\)|"(?:[^"\\]|\\.)*"|[^\s()"\\;]+')


class _Str(str):
    """Marks a token that was written as a quoted string."""


def _tokenize(text: str):
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SexpError(pos, f"unexpected character {text[pos]!r}")
        tok = m.group()
        if not (tok[0].isspace() or tok[0] == ";"):
            if tok[0] == '"':
                tok = _Str(re.sub(r"\\(.)", r"\1", tok[1:-1]))
            yield pos, tok
        pos = m.end()


def _read(text: str):
    """Nested Python lists of tokens; each list carries its start offset."""
    stack: list = [[]]
    for pos, tok in _tokenize(text):
        if tok == "(" and not isinstance(tok, _Str):
            stack.append(_Node(pos))
        elif tok == ")" and not isinstance(tok, _Str):
            if len(stack) == 1:
                raise SexpError(pos, "unbalanced ')'")
            node = stack.pop()
            stack[-1].append(node)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SexpError(len(text), "unterminated '('")
    return stack[0]


class _Node(list):
    def __init__(self, offset: int):
        super().__init__()
        self.offset = offset


def _expect(node, tag: str, n: int | None = None):
    if not isinstance(node, _Node) or not node or node[0] != tag:
        raise SexpError(getattr(node, "offset", 0), f"expected ({tag} ...)")
    if n is not None and len(node) != n + 1:
        raise SexpError(node.offset, f"({tag} ...) takes {n} operands")
    return node[1:]


def _atom(x, node) -> str:
    if isinstance(x, _Node):
        raise SexpError(node.offset, "expected a name")
    return str(x)


def _head(node) -> str:
    if not isinstance(node, _Node) or not node or isinstance(node[0], _Node):
        raise SexpError(getattr(node, "offset", 0), "expected a tagged list")
    return node[0]


def _type(node):
    tag = _head(node)
    ops = node[1:]
    if tag == "tyvar":
        return TyVar(_atom(_expect(node, tag, 1)[0], node))
    if tag == "tycon":
        if not ops:
            raise SexpError(node.offset, "tycon needs a name")
        return TyCon(_atom(ops[0], node), tuple(_type(a) for a in ops[1:]))
    if tag == "tyarrow":
        d, c = _expect(node, tag, 2)
        return TyArrow(_type(d), _type(c))
    if tag == "tytuple":
        return TyTuple(tuple(_type(a) for a in ops))
    raise SexpError(node.offset, f"unknown type form {tag!r}")


def _pattern(node):
    tag = _head(node)
    ops = node[1:]
    if tag == "pvar":
        return PVar(_atom(_expect(node, tag, 1)[0], node))
    if tag == "pwild":
        _expect(node, tag, 0)
        return PWild()
    if tag == "pcon":
        if not ops:
            raise SexpError(node.offset, "pcon needs a constructor")
        return PCon(_atom(ops[0], node), tuple(_pattern(a) for a in ops[1:]))
    if tag == "ptuple":
        return PTuple(tuple(_pattern(a) for a in ops))
    if tag == "pas":
        name, inner = _expect(node, tag, 2)
        return PAs(_atom(name, node), _pattern(inner))
    raise SexpError(node.offset, f"unknown pattern form {tag!r}")


def _term(node):
    tag = _head(node)
    ops = node[1:]
    if tag == "var":
        return Var(_atom(_expect(node, tag, 1)[0], node))
    if tag == "const":
        return Const(_atom(_expect(node, tag, 1)[0], node))
    if tag == "app":
        f, a = _expect(node, tag, 2)
        return App(_term(f), _term(a))
    if tag == "abs":
        b, ty, body = _expect(node, tag, 3)
        return Abs(_atom(b, node), _type(ty), _term(body))
    if tag == "let":
        b, v, body = _expect(node, tag, 3)
        return Let(_atom(b, node), _term(v), _term(body))
    if tag == "case":
        if len(ops) < 2:
            raise SexpError(node.offset, "case needs a scrutinee and a branch")
        branches = []
        for br in ops[1:]:
            if not isinstance(br, _Node) or len(br) != 2:
                raise SexpError(getattr(br, "offset", node.offset), "bad case branch")
            branches.append((_pattern(br[0]), _term(br[1])))
        return Case(_term(ops[0]), branches)
    if tag == "tuple":
        return Tuple(tuple(_term(a) for a in ops))
    if tag == "num":
        (v,) = _expect(node, tag, 1)
        try:
            return NumLit(int(_atom(v, node)))
        except ValueError:
            raise SexpError(node.offset, f"bad integer {v!r}") from None
    if tag == "str":
        (v,) = _expect(node, tag, 1)
        if not isinstance(v, _Str):
            raise SexpError(node.offset, "str expects a quoted string")
        return StrLit(str(v))
    raise SexpError(node.offset, f"unknown term form {tag!r}")


def _single(text: str):
    items = _read(text)
    if len(items) != 1:
        raise SexpError(0, f"expected exactly one expression, found {len(items)}")
    return items[0]


def _build(read, node):
    try:
        return read(node)
    except (MalformedTerm, MalformedPattern) as exc:
        raise SexpError(node.offset, str(exc)) from None


def parse_sexp(text: str):
    """Read one term."""
    return _build(_term, _single(text))


def parse_type_sexp(text: str):
    return _build(_type, _single(text))


def parse_pattern_sexp(text: str):
    return _build(_pattern, _single(text))


def parse_sexps(text: str) -> list:
    """Read a sequence of terms (one per top-level form)."""
    return [_build(_term, node) for node in _read(text)]
