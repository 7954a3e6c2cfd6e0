"""Erase proof-helping annotations from Why3-style source.

Three kinds of annotation are recognized, all lexically:

* ``assert { f }`` in statement position (brace depth 0), with an optional
  ``[@attribute]`` and the ``;`` that follows it;
* top-level ``lemma name : f`` declarations (``let lemma`` functions are
  programs and are kept);
* calls of a ``let lemma`` function in statement position that end in
  ``;``. Why3 has no dedicated syntax for lemma application, so this last
  kind is best effort.

All offsets are byte offsets into the UTF-8 source.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass

from .errors import LexError, SpanMismatch

ASSERT = "AssertAnnotation"
LEMMA = "LemmaDecl"
APPLY = "LemmaApplication"
KINDS = {"assert": ASSERT, "lemma": LEMMA, "apply": APPLY}
ALL_KINDS = frozenset(KINDS.values())

_IDENT = re.compile(rb"[A-Za-z_][A-Za-z0-9_']*")
_NUM = re.compile(rb"[0-9][0-9A-Za-z_.']*")
_WS = re.compile(rb"[ \t\r\n]+")
_OP = re.compile(rb"[-+*/\\=<>@^|&~!?%$.:;,#]+")
_OPEN = {b"(": b")", b"[": b"]", b"{": b"}"}
_CLOSE = {v: k for k, v in _OPEN.items()}

# Declarations that can never occur inside a formula.
_DECL_ALWAYS = frozenset(
    b"val lemma axiom goal function predicate type use clone constant exception "
    b"scope import meta inductive coinductive theory module".split()
)
# Declarations that can: they end a lemma only at the start of a line
# indented no deeper than the lemma itself.
_DECL_AT_MARGIN = frozenset({b"let", b"end"})
_END_OPENERS = frozenset({b"begin", b"match", b"try"})
_STMT_START = frozenset({b";", b"begin", b"then", b"else", b"do", b"in", b"=", b"->", b"try"})


@dataclass(frozen=True)
class Token:
    kind: str  # ws comment string attr ident num open close op other
    start: int
    end: int
    text: bytes
    brace_depth: int = 0  # enclosing `{` count
    depth: int = 0  # enclosing delimiters of any kind


def tokenize(src: bytes) -> list[Token]:
    """Lex ``src``; raises LexError on unterminated comments or strings
    and on unbalanced delimiters."""
    out: list[Token] = []
    stack: list[tuple[bytes, int]] = []
    i, n = 0, len(src)

    def push(kind, j):
        braces = sum(1 for d, _ in stack if d == b"{")
        out.append(Token(kind, i, j, src[i:j], braces, len(stack)))

    while i < n:
        c = src[i:i + 1]
        if src.startswith(b"(*)", i):
            push("op", i + 3)
            i += 3
            continue
        if src.startswith(b"(*", i):
            j, level = i + 2, 1
            while level:
                if j >= n:
                    raise LexError(i, "unterminated comment")
                if src.startswith(b"(*", j):
                    level, j = level + 1, j + 2
                elif src.startswith(b"*)", j):
                    level, j = level - 1, j + 2
                else:
                    j += 1
            push("comment", j)
            i = j
            continue
        if c == b'"':
            j = i + 1
            while True:
                if j >= n:
                    raise LexError(i, "unterminated string")
                if src[j:j + 1] == b"\\":
                    j += 2
                elif src[j:j + 1] == b'"':
                    j += 1
                    break
                else:
                    j += 1
            push("string", j)
            i = j
            continue
        if src.startswith(b"[@", i):
            j = src.find(b"]", i)
            if j < 0:
                raise LexError(i, "unterminated attribute")
            push("attr", j + 1)
            i = j + 1
            continue
        if c in _OPEN:
            push("open", i + 1)
            stack.append((c, i))
            i += 1
            continue
        if c in _CLOSE:
            if not stack or stack[-1][0] != _CLOSE[c]:
                raise LexError(i, f"unbalanced {c.decode()!r}")
            stack.pop()
            push("close", i + 1)
            i += 1
            continue
        for kind, rx in (("ws", _WS), ("ident", _IDENT), ("num", _NUM), ("op", _OP)):
            m = rx.match(src, i)
            if m:
                push(kind, m.end())
                i = m.end()
                break
        else:
            push("other", i + 1)
            i += 1
    if stack:
        raise LexError(stack[-1][1], f"unclosed {stack[-1][0].decode()!r}")
    return out


@dataclass(frozen=True, order=True)
class SourceSpan:
    start_byte: int
    end_byte: int
    kind: str


def _as_bytes(src) -> tuple[bytes, bool]:
    if isinstance(src, str):
        return src.encode("utf-8"), True
    return bytes(src), False


def _line_start(src: bytes, i: int) -> int:
    return src.rfind(b"\n", 0, i) + 1


def _column(src: bytes, i: int) -> int:
    return i - _line_start(src, i)


def _extend_to_line(src: bytes, start: int, end: int) -> tuple[int, int]:
    """Absorb indentation and trailing blanks if the unit fills its lines."""
    ls = _line_start(src, start)
    nl = src.find(b"\n", end)
    le = len(src) if nl < 0 else nl
    if src[ls:start].strip(b" \t") or src[end:le].strip(b" \t\r"):
        return start, end
    if src[end:le].endswith(b"\r"):
        le -= 1
    return ls, le


class _Scanner:
    def __init__(self, src: bytes):
        self.src = src
        self.toks = tokenize(src)
        self.sig = [t for t in self.toks if t.kind not in ("ws", "comment")]

    def first_on_line(self, k: int) -> bool:
        t = self.sig[k]
        return not self.src[_line_start(self.src, t.start):t.start].strip(b" \t")

    def skip_group(self, k: int) -> int:
        """Index just past the delimiter group opened at sig[k]."""
        depth = self.sig[k].depth
        k += 1
        while self.sig[k].kind != "close" or self.sig[k].depth != depth:
            k += 1
        return k + 1

    def trailing_semicolon(self, k: int, end: int) -> int:
        if k < len(self.sig) and self.sig[k].text == b";":
            return self.sig[k].end
        return end

    def asserts(self):
        for k, t in enumerate(self.sig):
            if t.text != b"assert" or t.kind != "ident" or t.brace_depth:
                continue
            j = k + 1
            while j < len(self.sig) and self.sig[j].kind == "attr":
                j += 1
            if j >= len(self.sig) or self.sig[j].text != b"{":
                continue
            j = self.skip_group(j)
            end = self.trailing_semicolon(j, self.sig[j - 1].end)
            yield ASSERT, t.start, end

    def lemmas(self):
        for k, t in enumerate(self.sig):
            if t.text != b"lemma" or t.kind != "ident" or t.depth:
                continue
            prev = self.sig[k - 1].text if k else b""
            if prev in (b"let", b"rec", b"ghost", b"val", b"with", b","):
                continue
            col = _column(self.src, t.start)
            nest, last, j = 0, k, k + 1
            while j < len(self.sig):
                u = self.sig[j]
                if u.depth == 0 and u.kind == "ident":
                    if u.text in _DECL_ALWAYS and nest == 0:
                        break
                    if (u.text in _DECL_AT_MARGIN and nest == 0 and self.first_on_line(j)
                            and _column(self.src, u.start) <= col):
                        break
                    if u.text in _END_OPENERS:
                        nest += 1
                    elif u.text == b"end":
                        if nest == 0:
                            break
                        nest -= 1
                last = j
                j += 1
            yield LEMMA, t.start, self.sig[last].end

    def lemma_functions(self) -> set[bytes]:
        names = set()
        for k, t in enumerate(self.sig[:-1]):
            if t.text == b"lemma" and k and self.sig[k - 1].text in (b"let", b"rec", b"ghost"):
                nxt = self.sig[k + 1]
                if nxt.kind == "ident":
                    names.add(nxt.text)
        return names

    def applications(self):
        names = self.lemma_functions()
        if not names:
            return
        for k, t in enumerate(self.sig):
            if t.kind != "ident" or t.text not in names or t.brace_depth or not k:
                continue
            if self.sig[k - 1].text not in _STMT_START:
                continue
            j = k + 1
            while j < len(self.sig):
                u = self.sig[j]
                if u.kind in ("ident", "num", "string") and u.text not in _STMT_START | _KEYWORDS:
                    j += 1
                elif u.kind == "open" and u.text in (b"(", b"["):
                    j = self.skip_group(j)
                else:
                    break
            if j < len(self.sig) and self.sig[j].text == b";":
                yield APPLY, t.start, self.sig[j].end


_KEYWORDS = frozenset(
    b"let in if then else begin end match with do done while for to downto try raise "
    b"return assert assume check requires ensures variant invariant raises fun ghost "
    b"lemma val rec and not old at".split()
)


def find_annotations(src, kinds=ALL_KINDS) -> list[SourceSpan]:
    """Every annotation of the given kinds, sorted by offset."""
    data, _ = _as_bytes(src)
    kinds = frozenset(KINDS.get(k, k) for k in kinds)
    unknown = kinds - ALL_KINDS
    if unknown:
        raise ValueError(f"unknown annotation kinds {sorted(unknown)}")
    sc = _Scanner(data)
    found = []
    if ASSERT in kinds:
        found += sc.asserts()
    if LEMMA in kinds:
        found += sc.lemmas()
    if APPLY in kinds:
        found += sc.applications()
    spans = []
    for kind, start, end in sorted(found, key=lambda r: r[1]):
        start, end = _extend_to_line(data, start, end)
        if spans and start < spans[-1].end_byte:
            continue  # nested in an earlier unit
        spans.append(SourceSpan(start, end, kind))
    return spans


def check_spans(src, spans) -> list[SourceSpan]:
    data, _ = _as_bytes(src)
    ordered = sorted(spans)
    prev = 0
    for s in ordered:
        if s.kind not in ALL_KINDS:
            raise SpanMismatch(f"unknown span kind {s.kind!r}")
        if not 0 <= s.start_byte <= s.end_byte <= len(data):
            raise SpanMismatch(f"span {s.start_byte}..{s.end_byte} outside 0..{len(data)}")
        if s.start_byte < prev:
            raise SpanMismatch(f"span at {s.start_byte} overlaps the previous one")
        prev = s.end_byte
    return ordered


def erase(src, spans, *, collapse: bool = True):
    """``src`` without the bytes of ``spans``.

    With ``collapse`` a line that had span bytes and ends up empty loses
    its newline too. Returns the same type (str or bytes) as ``src``.
    """
    data, was_text = _as_bytes(src)
    ordered = check_spans(data, spans)
    if not ordered:
        return src
    out = bytearray()
    pos = 0
    for s in ordered:
        out += data[pos:s.start_byte]
        pos = s.end_byte
        if collapse and s.end_byte > s.start_byte:
            # nothing kept on this output line so far
            if not out or out[-1:] == b"\n":
                if data[pos:pos + 2] == b"\r\n":
                    pos += 2
                elif data[pos:pos + 1] == b"\n":
                    pos += 1
    out += data[pos:]
    return out.decode("utf-8") if was_text else bytes(out)


def complicate(src, kinds=ALL_KINDS, *, collapse: bool = True):
    """``(erased source, spans)``."""
    spans = find_annotations(src, kinds)
    return erase(src, spans, collapse=collapse), spans


def span_report(path: str, spans) -> str:
    return json.dumps({"source": path, "spans": [asdict(s) for s in spans]}, indent=2) + "\n"


def inside_comment_or_string(src, offset: int) -> bool:
    data, _ = _as_bytes(src)
    for t in tokenize(data):
        if t.kind in ("comment", "string") and t.start < offset < t.end:
            return True
    return False
