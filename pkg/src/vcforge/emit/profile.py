"""Target profiles: notation tables, keyword blacklists and templates.

A profile is a JSON document; the three shipped ones live in
``vcforge/data/profiles``. Every surface form the printer produces comes
from a template with ``{slot}`` holes, so the reference parser can be
derived from the same data.

Precedence scale (higher binds tighter): atoms 101, application 90, infix
operators 11..89, open-ended constructs (binders, let, if, case) 5. A
template slot that sits between two literal tokens is delimited and
accepts anything; a leading or trailing slot takes its precedence from
the operator's level and associativity unless ``slots`` overrides it.
"""

from __future__ import annotations

import json
import os
import re
import string
from dataclasses import dataclass, field
from importlib import resources

from ..errors import ProfileError

ATOM = 101
APP = 90
OPEN = 5

TARGETS = ("isabelle", "lean", "rocq")

# Splits template literals into tokens the same way the reparse lexer does.
_LIT_TOKEN = re.compile(
    r"\\<\^?[A-Za-z]+>|[A-Za-z_][A-Za-z0-9_']*|[()\[\],]|[^\sA-Za-z0-9_()\[\],]+"
)
IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_']*")


@dataclass(frozen=True)
class Slot:
    name: str


@dataclass(frozen=True)
class Template:
    text: str
    parts: tuple  # str literals and Slot holes, alternating as written

    @classmethod
    def parse(cls, text: str) -> "Template":
        parts = []
        try:
            for literal, fname, spec, conv in string.Formatter().parse(text):
                if literal:
                    parts.append(literal)
                if fname is not None:
                    if spec or conv or not fname:
                        raise ProfileError(f"bad slot in template {text!r}")
                    parts.append(Slot(fname))
        except ValueError as exc:
            raise ProfileError(f"bad template {text!r}: {exc}") from None
        return cls(text, tuple(parts))

    def slots(self) -> list[str]:
        return [p.name for p in self.parts if isinstance(p, Slot)]

    def render(self, **values) -> str:
        return "".join(p if isinstance(p, str) else values[p.name] for p in self.parts)

    def token_parts(self) -> list:
        """Parts with literals split into token lists (whitespace dropped)."""
        out = []
        for p in self.parts:
            if isinstance(p, Slot):
                out.append(p)
            else:
                toks = _LIT_TOKEN.findall(p)
                if toks:
                    out.append(tuple(toks))
        return out

    @property
    def leading_slot(self) -> bool:
        return bool(self.parts) and isinstance(self.parts[0], Slot)

    @property
    def closed(self) -> bool:
        """Delimited by its own parentheses."""
        first, last = self.parts[0], self.parts[-1]
        return (isinstance(first, str) and first.lstrip().startswith("(")
                and isinstance(last, str) and last.rstrip().endswith(")"))

    @property
    def trailing_slot(self) -> bool:
        return bool(self.parts) and isinstance(self.parts[-1], Slot)


@dataclass(frozen=True)
class Notation:
    const: str
    kind: str  # infix | prefix | mixfix | binder
    template: Template
    prec: int
    slot_precs: dict  # slot name -> required context precedence
    assoc: str | None = None

    @property
    def arity(self) -> int:
        return 1 if self.kind == "binder" else len(self.template.slots())


@dataclass(frozen=True)
class CaseSyntax:
    head: Template  # contains {s}
    first: str  # text before the first branch
    sep: str  # text between branches
    arrow: str
    close: str
    branch_prec: int  # context precedence of non-last branch bodies

    @property
    def closed(self) -> bool:
        return bool(self.close.strip())


@dataclass(frozen=True)
class TargetProfile:
    id: str
    file_extension: str
    unicode: bool
    keyword_blacklist: frozenset
    escape_suffix: str
    builtin_map: dict  # source constant -> target identifier
    type_map: dict  # source type constructor -> target type name
    notation: dict  # source constant -> Notation
    lam: Template
    let: Template
    case: CaseSyntax
    as_pattern: Template | None
    string_quote: str
    string_escapes: dict
    tyvar_prefix: str
    type_app: str  # prefix | postfix
    type_arrow: str
    type_product: str
    binder_type_prec: int
    placeholder: str
    fake_tokens: tuple
    comment: tuple  # (open, close)
    supports_non_uniform: bool
    requires_as_elimination: bool
    templates: dict
    imports: dict  # base imports for library files
    theory_map: dict  # external theory name -> target import
    prelude: str
    prelude_name: str
    source: dict = field(default_factory=dict, compare=False, repr=False)

    def reserved_words(self) -> set[str]:
        """Identifier-shaped tokens that user names must never print as."""
        words = set(self.keyword_blacklist)
        for t in self.all_templates():
            for part in t.token_parts():
                if isinstance(part, tuple):
                    words.update(w for w in part if IDENT.fullmatch(w))
        words.update(self.builtin_map.values())
        words.update(self.type_map.values())
        return words

    def all_templates(self) -> list[Template]:
        out = [n.template for n in self.notation.values()]
        out += [self.lam, self.let, self.case.head]
        out += [Template.parse(x) for x in (self.case.first, self.case.sep, self.case.arrow, self.case.close)]
        if self.as_pattern is not None:
            out.append(self.as_pattern)
        return out

    def symbols(self) -> set[str]:
        """Non-identifier literal tokens used by any template or type syntax."""
        syms = set()
        for t in self.all_templates():
            for part in t.token_parts():
                if isinstance(part, tuple):
                    syms.update(w for w in part if not IDENT.fullmatch(w))
        for extra in (self.type_arrow, self.type_product, ":", "::", "@"):
            syms.update(_LIT_TOKEN.findall(extra))
        return {s for s in syms if s not in "()[],"}


def _notation(entry: dict, unicode: bool, where: str) -> Notation:
    kinds = [k for k in ("infix", "prefix", "mixfix", "binder") if k in entry]
    if len(kinds) != 1:
        raise ProfileError(f"{where}: exactly one of infix/prefix/mixfix/binder required")
    kind = kinds[0]
    prec = entry.get("prec")
    if not isinstance(prec, int) or not 0 <= prec <= 100:
        raise ProfileError(f"{where}: prec must be an integer in 0..100")
    text = entry[kind]
    if not unicode and "ascii" in entry:
        text = entry["ascii"]
    assoc = entry.get("assoc")
    if kind == "infix":
        if assoc not in ("left", "right", "none"):
            raise ProfileError(f"{where}: infix needs assoc left|right|none")
        if not 10 < prec < APP:
            raise ProfileError(f"{where}: infix precedence must lie in 11..89")
        template = Template.parse("{0} " + text + " {1}")
        lhs = prec if assoc == "left" else prec + 1
        rhs = prec if assoc == "right" else prec + 1
        precs = {"0": lhs, "1": rhs}
    elif kind == "prefix":
        template = Template.parse(text + " {0}")
        precs = {"0": prec}
    else:
        template = Template.parse(text)
        names = template.slots()
        if kind == "binder":
            if sorted(names) != ["body", "ty", "x"]:
                raise ProfileError(f"{where}: binder template needs {{x}}, {{ty}}, {{body}}")
        elif sorted(names) != [str(i) for i in range(len(names))]:
            raise ProfileError(f"{where}: mixfix slots must be {{0}}..{{n-1}}")
        precs = _default_slot_precs(template, prec)
        for name, p in (entry.get("slots") or {}).items():
            if name not in precs:
                raise ProfileError(f"{where}: unknown slot {name!r}")
            precs[name] = p
    if template.leading_slot and kind in ("prefix", "binder"):
        raise ProfileError(f"{where}: {kind} template must start with a token")
    return Notation(entry["const"], kind, template, prec, precs, assoc)


def _default_slot_precs(t: Template, prec: int) -> dict:
    parts = t.parts
    out = {}
    for i, p in enumerate(parts):
        if not isinstance(p, Slot):
            continue
        if i == 0:
            out[p.name] = prec + 1
        elif i == len(parts) - 1:
            out[p.name] = prec
        else:
            out[p.name] = 0
    return out


def _pick(obj, unicode: bool):
    """A value that is either plain text or ``{"unicode": .., "ascii": ..}``."""
    if isinstance(obj, dict):
        return obj["unicode" if unicode else "ascii"]
    return obj


def profile_from_dict(doc: dict, unicode: bool | None = None) -> TargetProfile:
    try:
        pid = doc["id"]
        if unicode is None:
            unicode = bool(doc.get("unicode", True))
        syn = doc["syntax"]
        notation = {}
        for i, entry in enumerate(doc.get("notation", [])):
            n = _notation(entry, unicode, f"{pid}: notation[{i}]")
            if n.const in notation:
                raise ProfileError(f"{pid}: duplicate notation for {n.const}")
            notation[n.const] = n
        case = syn["case"]
        as_pat = syn.get("as_pattern")
        prof = TargetProfile(
            id=pid,
            file_extension=doc["file_extension"],
            unicode=unicode,
            keyword_blacklist=frozenset(doc.get("keyword_blacklist", [])),
            escape_suffix=doc.get("escape_suffix", "_v"),
            builtin_map=dict(doc.get("builtin_map", {})),
            type_map=dict(doc.get("type_map", {})),
            notation=notation,
            lam=Template.parse(_pick(syn["lambda"], unicode)),
            let=Template.parse(_pick(syn["let"], unicode)),
            case=CaseSyntax(
                Template.parse(_pick(case["head"], unicode)),
                _pick(case["first"], unicode),
                _pick(case["sep"], unicode),
                _pick(case["arrow"], unicode),
                _pick(case.get("close", ""), unicode),
                int(case.get("branch_prec", 0)),
            ),
            as_pattern=Template.parse(as_pat) if as_pat else None,
            string_quote=syn["string"]["quote"],
            string_escapes=dict(syn["string"].get("escapes", {})),
            tyvar_prefix=syn["types"].get("tyvar_prefix", ""),
            type_app=syn["types"]["app"],
            type_arrow=_pick(syn["types"]["arrow"], unicode),
            type_product=_pick(syn["types"]["product"], unicode),
            binder_type_prec=int(syn["types"].get("binder_type_prec", 0)),
            placeholder=doc["placeholder"],
            fake_tokens=tuple(doc.get("fake_tokens", [])),
            comment=tuple(doc.get("comment", ["(*", "*)"])),
            supports_non_uniform=bool(doc.get("supports_non_uniform", True)),
            requires_as_elimination=bool(doc.get("requires_as_elimination", False)),
            templates=dict(doc["templates"]),
            imports=dict(doc.get("imports", {})),
            theory_map=dict(doc.get("theory_map", {})),
            prelude=doc.get("prelude", ""),
            prelude_name=doc.get("prelude_name", "Prelude"),
            source=doc,
        )
    except KeyError as exc:
        raise ProfileError(f"profile is missing key {exc}") from None
    _check_profile(prof)
    return prof


def _check_profile(p: TargetProfile) -> None:
    if p.type_app not in ("prefix", "postfix"):
        raise ProfileError(f"{p.id}: types.app must be prefix or postfix")
    if sorted(p.lam.slots()) != ["body", "ty", "x"]:
        raise ProfileError(f"{p.id}: lambda template needs {{x}}, {{ty}}, {{body}}")
    if sorted(p.let.slots()) != ["body", "value", "x"]:
        raise ProfileError(f"{p.id}: let template needs {{x}}, {{value}}, {{body}}")
    if p.case.head.slots() != ["s"]:
        raise ProfileError(f"{p.id}: case head needs exactly {{s}}")
    for label, table in (("builtin_map", p.builtin_map), ("type_map", p.type_map)):
        seen = {}
        for src, tgt in table.items():
            if tgt in seen:
                raise ProfileError(f"{p.id}: {label} maps both {seen[tgt]} and {src} to {tgt}")
            seen[tgt] = src
    clash = set(p.builtin_map.values()) & set(p.type_map.values())
    if clash and p.type_app == "prefix":
        raise ProfileError(f"{p.id}: names used both as terms and types: {sorted(clash)}")
    for n in p.notation.values():
        if n.kind in ("mixfix", "binder") and not n.template.leading_slot:
            continue
        if n.kind == "mixfix" and n.template.leading_slot and n.slot_precs["0"] < n.prec:
            raise ProfileError(f"{p.id}: left slot of {n.const} must bind at least as tight as the operator")


def load_profile(name_or_path, unicode: bool | None = None) -> TargetProfile:
    """Load a shipped profile by id, or any profile JSON by path."""
    if isinstance(name_or_path, str) and name_or_path in TARGETS:
        text = resources.files("vcforge.data.profiles").joinpath(f"{name_or_path}.json").read_text("utf-8")
    else:
        with open(os.fspath(name_or_path), encoding="utf-8") as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"{name_or_path}: line {exc.lineno}: {exc.msg}") from None
    return profile_from_dict(doc, unicode)
