"""Reference precedence parser for printed expressions.

The grammar is derived from the same profile data the printer uses, so a
printed term can be read back and compared with the original. The parser
is deliberately strict: an operator or open-ended construct whose level is
below its context is rejected instead of being accepted leniently, which
is what makes the minimal-parenthesization check meaningful.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ProfileError, ReparseError
from ..terms import (
    Abs, App, Case, Const, Let, NumLit, PAs, PCon, PTuple, PVar, PWild,
    StrLit, Tuple, TyArrow, TyCon, TyTuple, TyVar, Var, spine,
)
from .printer import PAT_APP, TYPE_ARROW, TYPE_PRODUCT, Namer
from .profile import APP, ATOM, IDENT, OPEN, Slot, Template, TargetProfile

_SPACE = re.compile(r"\s+")
_NEGLIT = re.compile(r"\(-(\d+)\)")
_ISA_SYM = re.compile(r"\\<\^?[A-Za-z]+>")
_TYVAR = re.compile(r"'[A-Za-z][A-Za-z0-9_']*")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*(?:\.[A-Za-z_][A-Za-z0-9_']*)*")
_NUM = re.compile(r"\d+")
_PUNCT = "()[],"


@dataclass(frozen=True)
class Tok:
    kind: str  # ident kw sym num str tyvar
    text: str
    pos: int
    value: object = None


class Lexer:
    def __init__(self, profile: TargetProfile):
        self.p = profile
        self.symbols = sorted(profile.symbols(), key=len, reverse=True)
        self.keywords = set()
        for t in profile.all_templates():
            for part in t.token_parts():
                if isinstance(part, tuple):
                    self.keywords.update(w for w in part if IDENT.fullmatch(w))
        self._unescape = {v: k for k, v in profile.string_escapes.items()}

    def tokens(self, text: str) -> list[Tok]:
        out, i, n = [], 0, len(text)
        quote = self.p.string_quote
        while i < n:
            m = _SPACE.match(text, i)
            if m:
                i = m.end()
                continue
            if text.startswith(quote, i):
                value, j = self._string(text, i)
                out.append(Tok("str", text[i:j], i, value))
                i = j
                continue
            m = _NEGLIT.match(text, i)
            if m:
                out.append(Tok("num", m.group(), i, -int(m.group(1))))
                i = m.end()
                continue
            m = _ISA_SYM.match(text, i)
            if m and m.group() in self.symbols:
                out.append(Tok("sym", m.group(), i))
                i = m.end()
                continue
            if self.p.tyvar_prefix == "'":
                m = _TYVAR.match(text, i)
                if m:
                    out.append(Tok("tyvar", m.group(), i, m.group()[1:]))
                    i = m.end()
                    continue
            m = _IDENT.match(text, i)
            if m:
                word = m.group()
                kind = "kw" if word in self.keywords else "ident"
                out.append(Tok(kind, word, i))
                i = m.end()
                continue
            m = _NUM.match(text, i)
            if m:
                out.append(Tok("num", m.group(), i, int(m.group())))
                i = m.end()
                continue
            if text[i] in _PUNCT:
                out.append(Tok("sym", text[i], i))
                i += 1
                continue
            for s in self.symbols:
                if text.startswith(s, i):
                    out.append(Tok("sym", s, i))
                    i += len(s)
                    break
            else:
                raise ReparseError(i, f"unexpected character {text[i]!r}")
        return out

    def _string(self, text: str, start: int) -> tuple[str, int]:
        q = self.p.string_quote
        i = start + len(q)
        buf = []
        escapes = sorted(self._unescape, key=len, reverse=True)
        while i < len(text):
            for esc in escapes:
                if text.startswith(esc, i):
                    buf.append(self._unescape[esc])
                    i += len(esc)
                    break
            else:
                if text.startswith(q, i):
                    return "".join(buf), i + len(q)
                buf.append(text[i])
                i += 1
        raise ReparseError(start, "unterminated string literal")


@dataclass(frozen=True)
class _Construct:
    kind: str  # notation | lambda | let | case
    parts: tuple
    level: int
    slot_precs: dict
    const: str | None = None


class ReferenceParser:
    def __init__(self, profile: TargetProfile, namer: Namer):
        self.p = profile
        self.namer = namer
        self.lexer = Lexer(profile)
        self.builtin_inverse = {v: k for k, v in profile.builtin_map.items()}
        self.type_inverse = {v: k for k, v in profile.type_map.items()}
        self.nud: dict = {}
        self.led: dict = {}
        for n in profile.notation.values():
            parts = tuple(n.template.token_parts())
            c = _Construct("notation", parts, n.prec, n.slot_precs, n.const)
            if isinstance(parts[0], Slot):
                self._register(self.led, parts[1][0], c)
            else:
                self._register(self.nud, parts[0][0], c)
        lam = _Construct("lambda", tuple(profile.lam.token_parts()), OPEN, {"body": OPEN})
        let = _Construct("let", tuple(profile.let.token_parts()), OPEN, {"value": 0, "body": OPEN})
        head = tuple(profile.case.head.token_parts())
        case_level = ATOM if profile.case.closed else OPEN
        case = _Construct("case", head, case_level, {"s": 0})
        for c in (lam, let, case):
            self._register(self.nud, c.parts[0][0], c)
        self.case_first = self._lit(profile.case.first)
        self.case_sep = self._lit(profile.case.sep)
        self.case_arrow = self._lit(profile.case.arrow)
        self.case_close = self._lit(profile.case.close)
        self.arrow_tok = self._lit(profile.type_arrow)
        self.product_tok = self._lit(profile.type_product)
        self.as_parts = tuple(profile.as_pattern.token_parts()) if profile.as_pattern else None

    @staticmethod
    def _register(table, key, c):
        if key in table:
            raise ProfileError(f"ambiguous leading token {key!r}")
        table[key] = c

    @staticmethod
    def _lit(text: str) -> tuple:
        parts = Template.parse(text.replace("{", "{{").replace("}", "}}")).token_parts()
        return parts[0] if parts else ()

    # -- driver --------------------------------------------------------------

    def parse(self, text: str):
        """Parse one term; returns ``(term, groups)`` where ``groups`` lists the
        token index pairs of every grouping parenthesis pair."""
        return self.parse_tokens(self.lexer.tokens(text))

    def parse_tokens(self, toks: list[Tok]):
        self.toks = toks
        self.i = 0
        self.groups = []
        t, _ = self.expr(0)
        if self.i != len(toks):
            raise ReparseError(toks[self.i].pos, f"unexpected {toks[self.i].text!r}")
        return t, list(self.groups)

    def parse_type(self, text: str):
        self.toks = self.lexer.tokens(text)
        self.i = 0
        self.groups = []
        ty = self.type(0)
        if self.i != len(self.toks):
            raise ReparseError(self.toks[self.i].pos, "trailing input after type")
        return ty

    # -- token helpers -------------------------------------------------------

    def peek(self, k: int = 0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def _pos(self):
        tok = self.peek()
        return tok.pos if tok else (self.toks[-1].pos + 1 if self.toks else 0)

    def at(self, lits: tuple) -> bool:
        return all(
            (tok := self.peek(k)) is not None and tok.kind in ("sym", "kw") and tok.text == lit
            for k, lit in enumerate(lits)
        ) and bool(lits)

    def expect(self, lits: tuple):
        if not self.at(lits) and lits:
            raise ReparseError(self._pos(), f"expected {' '.join(lits)!r}")
        self.i += len(lits)

    def ident(self) -> str:
        tok = self.peek()
        if tok is None or tok.kind != "ident":
            raise ReparseError(self._pos(), "expected an identifier")
        self.i += 1
        return tok.text

    def binder_name(self) -> str:
        text = self.ident()
        kind, name = self.namer.inverse.get(text, (None, None))
        if kind != "var":
            raise ReparseError(self.toks[self.i - 1].pos, f"{text!r} is not a variable")
        return name

    # -- terms ---------------------------------------------------------------

    def expr(self, ctx: int):
        left, lvl = self.nud_(ctx)
        while True:
            tok = self.peek()
            if tok is None:
                break
            c = self.led.get(tok.text) if tok.kind in ("sym", "kw") else None
            if c is not None:
                if c.level < ctx:
                    break
                if lvl < c.slot_precs[c.parts[0].name] or self._mixed(c, left, lvl):
                    raise ReparseError(tok.pos, f"left operand of {tok.text!r} needs parentheses")
                values = {c.parts[0].name: left}
                self._fill(c, c.parts[1:], values)
                left, lvl = self._build(c, values), c.level
                continue
            if ctx <= APP and lvl >= APP and self.starts_arg(tok):
                arg, _ = self.expr(APP + 1)
                left, lvl = App(left, arg), APP
                continue
            break
        return left, lvl

    def starts_arg(self, tok: Tok) -> bool:
        if tok.kind in ("ident", "num", "str"):
            return True
        if tok.kind == "sym" and tok.text == "(":
            return True
        c = self.nud.get(tok.text) if tok.kind in ("sym", "kw") else None
        return c is not None and c.level > APP

    def nud_(self, ctx: int):
        tok = self.peek()
        if tok is None:
            raise ReparseError(self._pos(), "unexpected end of input")
        if tok.kind == "num":
            self.i += 1
            return NumLit(tok.value), ATOM
        if tok.kind == "str":
            self.i += 1
            return StrLit(tok.value), ATOM
        if tok.kind == "ident":
            self.i += 1
            return self.resolve(tok), ATOM
        if tok.kind == "sym" and tok.text == "(":
            return self.paren()
        c = self.nud.get(tok.text) if tok.kind in ("sym", "kw") else None
        if c is None:
            raise ReparseError(tok.pos, f"unexpected {tok.text!r}")
        if c.level < ctx:
            raise ReparseError(tok.pos, f"{tok.text!r} construct needs parentheses here")
        if c.kind == "case":
            return self.case(c), c.level
        values: dict = {}
        self._fill(c, c.parts, values)
        return self._build(c, values), c.level

    def _fill(self, c: _Construct, parts, values: dict):
        for part in parts:
            if isinstance(part, tuple):
                self.expect(part)
            elif part.name == "x":
                values["x"] = self.binder_name()
            elif part.name == "ty":
                values["ty"] = self.type(self.p.binder_type_prec)
            else:
                pos = self._pos()
                values[part.name], lvl = self.expr(c.slot_precs.get(part.name, 0))
                if self._mixed(c, values[part.name], lvl):
                    raise ReparseError(pos, "operand needs parentheses")

    def _mixed(self, c: _Construct, operand, lvl: int) -> bool:
        """Unparenthesized infix operand at ``c``'s level with another associativity."""
        if c.kind != "notation" or lvl != c.level:
            return False
        n = self.p.notation[c.const]
        head, args = spine(operand)
        m = self.p.notation.get(head.name) if isinstance(head, Const) else None
        return (n.kind == "infix" and m is not None and m.kind == "infix"
                and len(args) == m.arity and m.assoc != n.assoc)

    def _build(self, c: _Construct, v: dict):
        if c.kind == "lambda":
            return Abs(v["x"], v["ty"], v["body"])
        if c.kind == "let":
            return Let(v["x"], v["value"], v["body"])
        n = self.p.notation[c.const]
        if n.kind == "binder":
            return App(Const(c.const), Abs(v["x"], v["ty"], v["body"]))
        t = Const(c.const)
        for k in range(n.arity):
            t = App(t, v[str(k)])
        return t

    def resolve(self, tok: Tok):
        hit = self.namer.inverse.get(tok.text)
        if hit is not None:
            kind, name = hit
            if kind == "var":
                return Var(name)
            if kind == "const":
                return Const(name)
            raise ReparseError(tok.pos, f"{tok.text!r} names a type")
        src = self.builtin_inverse.get(tok.text)
        if src is not None:
            return Const(src)
        raise ReparseError(tok.pos, f"unknown identifier {tok.text!r}")

    def paren(self):
        open_i = self.i
        self.i += 1
        first, _ = self.expr(0)
        if self.at((",",)):
            elems = [first]
            while self.at((",",)):
                self.i += 1
                e, _ = self.expr(0)
                elems.append(e)
            self.expect((")",))
            return Tuple(tuple(elems)), ATOM
        self.expect((")",))
        self.groups.append((open_i, self.i - 1))
        return first, ATOM

    def case(self, c: _Construct):
        values: dict = {}
        self._fill(c, c.parts, values)
        self.expect(self.case_first)
        branches = []
        while True:
            pat = self.pattern(0)
            self.expect(self.case_arrow)
            body, lvl = self.expr(OPEN)
            branches.append((pat, body))
            if self.case_sep and self.at(self.case_sep):
                if lvl < self.p.case.branch_prec:
                    raise ReparseError(self._pos(), "branch body needs parentheses")
                self.i += len(self.case_sep)
                continue
            break
        self.expect(self.case_close)
        return Case(values["s"], branches)

    # -- patterns ------------------------------------------------------------

    def starts_pattern(self, tok) -> bool:
        return tok is not None and (tok.kind == "ident" or (tok.kind == "sym" and tok.text == "("))

    def pattern(self, ctx: int):
        tok = self.peek()
        if tok is None:
            raise ReparseError(self._pos(), "expected a pattern")
        if (
            self.as_parts is not None
            and isinstance(self.as_parts[0], Slot)
            and tok.kind == "ident"
            and self.at_offset(1, self.as_parts[1])
        ):
            name = self.binder_name()
            self.expect(self.as_parts[1])
            inner = self.pattern(ATOM)
            if ctx > PAT_APP:
                raise ReparseError(tok.pos, "as-pattern needs parentheses here")
            return PAs(name, inner)
        if tok.kind == "sym" and tok.text == "(":
            open_i = self.i
            self.i += 1
            first = self.pattern(0)
            if self.at((",",)):
                elems = [first]
                while self.at((",",)):
                    self.i += 1
                    elems.append(self.pattern(0))
                self.expect((")",))
                return PTuple(tuple(elems))
            if self.as_parts is not None and not isinstance(self.as_parts[0], Slot):
                mid = self.as_parts[2]
                if self.at(mid):
                    self.i += len(mid)
                    name = self.binder_name()
                    self.expect(self.as_parts[4])
                    return PAs(name, first)
            self.expect((")",))
            self.groups.append((open_i, self.i - 1))
            return first
        if tok.kind != "ident":
            raise ReparseError(tok.pos, f"unexpected {tok.text!r} in pattern")
        self.i += 1
        if tok.text == "_":
            return PWild()
        hit = self.namer.inverse.get(tok.text)
        if hit is not None and hit[0] == "var":
            return PVar(hit[1])
        ctor = hit[1] if hit is not None and hit[0] == "const" else self.builtin_inverse.get(tok.text)
        if ctor is None:
            raise ReparseError(tok.pos, f"unknown constructor {tok.text!r}")
        args = []
        while ctx <= PAT_APP and self.starts_pattern(self.peek()):
            args.append(self.pattern(PAT_APP + 1))
        return PCon(ctor, tuple(args))

    def at_offset(self, k: int, lits: tuple) -> bool:
        save = self.i
        self.i += k
        try:
            return self.at(lits)
        finally:
            self.i = save

    # -- types ---------------------------------------------------------------

    def type(self, ctx: int):
        left = self.type_app(ctx)
        if ctx <= TYPE_PRODUCT and self.product_tok and self.at(self.product_tok):
            elems = [left]
            while self.at(self.product_tok):
                self.i += len(self.product_tok)
                elems.append(self.type_app(TYPE_PRODUCT + 1))
            left = TyTuple(tuple(elems))
        if ctx <= TYPE_ARROW and self.at(self.arrow_tok):
            self.i += len(self.arrow_tok)
            left = TyArrow(left, self.type(TYPE_ARROW))
        return left

    def _type_name(self, tok: Tok):
        src = self.type_inverse.get(tok.text)
        if src is not None:
            return "con", src
        hit = self.namer.inverse.get(tok.text)
        if hit is not None and hit[0] in ("tycon", "tyvar"):
            return ("con" if hit[0] == "tycon" else "var"), hit[1]
        raise ReparseError(tok.pos, f"unknown type name {tok.text!r}")

    def type_atom(self):
        tok = self.peek()
        if tok is None:
            raise ReparseError(self._pos(), "expected a type")
        if tok.kind == "tyvar":
            self.i += 1
            hit = self.namer.inverse.get(tok.value)
            if hit is None or hit[0] != "tyvar":
                raise ReparseError(tok.pos, f"unknown type variable {tok.text!r}")
            return TyVar(hit[1]), None
        if tok.kind == "ident":
            self.i += 1
            kind, name = self._type_name(tok)
            return (TyVar(name), None) if kind == "var" else (TyCon(name), name)
        if tok.kind == "sym" and tok.text == "(":
            self.i += 1
            first = self.type(0)
            if self.at((",",)):
                elems = [first]
                while self.at((",",)):
                    self.i += 1
                    elems.append(self.type(0))
                self.expect((")",))
                return ("args", tuple(elems)), None
            self.expect((")",))
            return first, None
        raise ReparseError(tok.pos, f"unexpected {tok.text!r} in type")

    def _starts_type_atom(self) -> bool:
        tok = self.peek()
        return tok is not None and (
            tok.kind in ("ident", "tyvar") or (tok.kind == "sym" and tok.text == "(")
        )

    def type_app(self, ctx: int):
        if self.p.type_app == "prefix":
            head, con = self.type_atom()
            if isinstance(head, tuple):
                raise ReparseError(self._pos(), "unexpected type argument list")
            if con is None or ctx > APP:
                return head
            args = []
            while self._starts_type_atom():
                a, _ = self.type_atom()
                if isinstance(a, tuple):
                    raise ReparseError(self._pos(), "unexpected type argument list")
                args.append(a)
            return TyCon(con, tuple(args)) if args else head
        cur, _ = self.type_atom()
        while self.peek() is not None and self.peek().kind == "ident":
            tok = self.peek()
            self.i += 1
            kind, name = self._type_name(tok)
            if kind != "con":
                raise ReparseError(tok.pos, "type variable in constructor position")
            args = cur[1] if isinstance(cur, tuple) else (cur,)
            cur = TyCon(name, args)
        if isinstance(cur, tuple):
            raise ReparseError(self._pos(), "type argument list without constructor")
        return cur


def reparse(text: str, profile: TargetProfile, namer: Namer):
    """Parse printed ``text`` back into a term."""
    term, _ = ReferenceParser(profile, namer).parse(text)
    return term


def redundant_parens(text: str, profile: TargetProfile, namer: Namer) -> list[tuple[int, int]]:
    """Grouping parenthesis pairs whose removal leaves the parse unchanged.

    An empty result means the text is minimally parenthesized.
    """
    parser = ReferenceParser(profile, namer)
    toks = parser.lexer.tokens(text)
    term, groups = parser.parse_tokens(toks)
    bad = []
    for o, c in groups:
        stripped = [t for k, t in enumerate(toks) if k not in (o, c)]
        try:
            other, _ = ReferenceParser(profile, namer).parse_tokens(stripped)
        except ReparseError:
            continue
        if other == term:
            bad.append((toks[o].pos, toks[c].pos))
    return bad
