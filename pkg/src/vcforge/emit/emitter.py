"""Declaration templates and per-goal file layout."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass

from ..errors import NonUniformUnsupported, UnmappedConstant
from ..ingest import (
    Axiom, Corpus, Datatype, FunDef, Goal, Scope, Theory, dependency_closure,
    goal_id, involves_non_uniform, non_uniform_datatypes, topo_order,
)
from ..terms import (
    Const, TyVar, Var, apps, binder_types, forall,
)
from .printer import Namer, Printer, sanitize
from .profile import Template, TargetProfile

log = logging.getLogger(__name__)

MANIFEST = "manifest.jsonl"


def _tyvars(types) -> list[str]:
    out: list[str] = []

    def go(ty):
        if isinstance(ty, TyVar):
            if ty.name not in out:
                out.append(ty.name)
        else:
            for sub in getattr(ty, "args", ()) or getattr(ty, "elems", ()):
                go(sub)
            if hasattr(ty, "dom"):
                go(ty.dom)
                go(ty.cod)

    for ty in types:
        go(ty)
    return out


class DeclEmitter:
    def __init__(self, profile: TargetProfile, namer: Namer | None = None):
        self.p = profile
        self.namer = namer or Namer(profile)
        self.pr = Printer(profile, self.namer)
        self.t = {k: Template.parse(v) for k, v in profile.templates.items() if isinstance(v, str)}

    def _typarams(self, names, key="typaram") -> str:
        if self.p.type_app == "postfix" or key not in self.t:
            return ""
        return "".join(self.t[key].render(a=self.namer.tyvar(a)) for a in names)

    def comment(self, text: str) -> str:
        return self.t["comment"].render(text=text)

    def declaration(self, d) -> str:
        if isinstance(d, Datatype):
            return self.datatype(d)
        if isinstance(d, FunDef):
            return self.fundef(d)
        if isinstance(d, Axiom):
            return self.t["axiom"].render(
                name=self.namer.fact(d.name),
                typarams=self._typarams(_tyvars(binder_types(d.statement))),
                statement=self.pr.term(d.statement),
            )
        if isinstance(d, Goal):
            return self.t["goal"].render(
                name=self.namer.fact(d.name),
                typarams=self._typarams(_tyvars(binder_types(d.statement))),
                statement=self.pr.term(d.statement),
                placeholder=self.p.placeholder,
            )
        raise TypeError(f"not a declaration: {d!r}")

    def datatype(self, d: Datatype) -> str:
        name = self.namer.tycon(d.name)
        if self.p.type_app == "postfix":
            tvs = [self.p.tyvar_prefix + self.namer.tyvar(a) for a in d.ty_params]
            if len(tvs) == 1:
                typarams = tvs[0] + " "
            elif tvs:
                typarams = "(" + ", ".join(tvs) + ") "
            else:
                typarams = ""
            ctors = [
                self.namer.const(c) + "".join(f' "{self.pr.type(a)}"' for a in args)
                for c, args in d.constructors
            ]
        else:
            typarams = self._typarams(d.ty_params, "dt_typaram")
            ctors = [
                self.t["constructor"].render(
                    name=self.namer.const(c), type=self.pr.type(d.constructor_type(c))
                )
                for c, _ in d.constructors
            ]
        sep = self.p.templates["constructor_sep"]
        text = self.t["datatype"].render(name=name, typarams=typarams, constructors=sep.join(ctors))
        if d.ty_params and "constructor_arguments" in self.t:
            # make the datatype's parameters implicit in every constructor
            implicit = " ".join("{" + self.namer.tyvar(a) + "}" for a in d.ty_params)
            text += "".join(
                "\n" + self.t["constructor_arguments"].render(name=self.namer.const(c), params=implicit)
                for c, _ in d.constructors
            )
        return text

    def fundef(self, d: FunDef) -> str:
        name = self.namer.const(d.name)
        typarams = self._typarams(d.ty_params or _tyvars([d.signature]))
        sig = self.pr.type(d.signature)
        if d.is_abstract:
            return self.t["abstract"].render(name=name, typarams=typarams, sig=sig)
        lhs = apps(Const(d.name), *(Var(x) for x, _ in d.params))
        equation = apps(Const("="), lhs, d.body)
        if d.termination_trusted:
            closed = equation
            for x, ty in reversed(d.params):
                closed = forall(x, ty, closed)
            return self.t["trusted"].render(
                name=name, typarams=typarams, sig=sig, equation=self.pr.term(closed)
            )
        key = "recursive" if d.recursive else "definition"
        params = "".join(
            self.t["param"].render(x=self.namer.var(x), ty=self.pr.type(ty))
            for x, ty in d.params
        ) if "param" in self.t else ""
        return self.t[key].render(
            name=name, typarams=typarams, params=params, sig=sig,
            ret=self.pr.type(d.ret), body=self.pr.term(d.body),
            equation=self.pr.term(equation),
        )

    def file(self, module: str, imports: list[str], body: list[str]) -> str:
        items = self.p.templates["import_sep"].join(
            self.t["import"].render(name=i) for i in imports
        )
        head = self.t["header"].render(name=module, imports=items)
        text = head + "\n\n".join(body) + ("\n" if body else "")
        return text + self.p.templates["footer"]


def emit_declaration(d, profile: TargetProfile, namer: Namer | None = None,
                     scope: Scope | None = None, flagged=None) -> str:
    """Render one declaration with the profile's templates.

    With ``scope`` and ``flagged`` given, a declaration that depends on a
    flagged non-uniform datatype raises NonUniformUnsupported on profiles
    that cannot express such types.
    """
    if scope is not None and flagged and not profile.supports_non_uniform:
        bad = involves_non_uniform(scope, d, flagged)
        if bad is not None:
            raise NonUniformUnsupported(bad, profile.id)
    return DeclEmitter(profile, namer).declaration(d)


# -- corpus layout -----------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    goal_id: str | None
    path: str | None
    status: str  # emitted | circumvented
    kind: str  # goal | library
    reason: str | None = None

    def to_json(self) -> dict:
        out = {"goal_id": self.goal_id, "path": self.path, "status": self.status, "kind": self.kind}
        if self.reason:
            out["reason"] = self.reason
        return out


def module_name(theory_name: str) -> str:
    return sanitize(theory_name.replace(".", "_"))


def corpus_namer(corpus: Corpus, profile: TargetProfile) -> Namer:
    """A namer with every declared name allocated up front, in theory order."""
    namer = Namer(profile)
    for th in topo_order(corpus):
        for d in th.decls:
            if isinstance(d, Datatype):
                namer.declare("tycon", f"{th.name}.{d.name}", d.name)
                for c, _ in d.constructors:
                    namer.declare("const", f"{th.name}.{c}", c)
            elif isinstance(d, FunDef):
                namer.declare("const", f"{th.name}.{d.name}", d.name)
            else:
                namer.declare("fact", f"{th.name}.{d.name}", d.name)
    return namer


def _resolver(scope: Scope):
    def resolve(name: str):
        hit = scope.resolve(name)
        if hit is None:
            return None
        th, _ = hit
        simple = name[len(th) + 1:] if name.startswith(th + ".") else name
        return f"{th}.{simple}", simple

    return resolve


def emit_corpus(corpus: Corpus, profile: TargetProfile, out_dir, *, inline: bool = False) -> list[ManifestEntry]:
    """Write one library file per theory and one file per goal.

    Returns the manifest, which is also written to ``manifest.jsonl``.
    Goals that depend on a non-uniform datatype are circumvented on
    profiles without support for them.
    """
    order = topo_order(corpus)
    namer = corpus_namer(corpus, profile)
    em = DeclEmitter(profile, namer)
    flagged = set() if profile.supports_non_uniform else non_uniform_datatypes(corpus)
    ext = profile.file_extension
    files: dict[str, str] = {}
    records: list[ManifestEntry] = []
    by_name = {th.name: th for th in order}
    index = {th.name: i for i, th in enumerate(order)}

    prelude = []
    if order and profile.prelude:
        pname = profile.prelude_name
        body = [profile.prelude.rstrip("\n")]
        files[f"{pname}.{ext}"] = em.file(pname, list(profile.imports.get("base", [])), body)
        records.append(ManifestEntry(None, f"{pname}.{ext}", "emitted", "library"))
        prelude = [pname]

    def closure(th: Theory) -> list[str]:
        seen: set[str] = set()

        def visit(name):
            if name in seen or name not in by_name:
                return
            seen.add(name)
            for imp in by_name[name].imports:
                visit(imp)

        visit(th.name)
        return sorted(seen, key=index.__getitem__)

    def external(th: Theory) -> list[str]:
        out = []
        for imp in th.imports:
            if imp in by_name:
                continue
            mapped = profile.theory_map.get(imp)
            if mapped:
                out.append(mapped)
            else:
                log.info("%s: external import %s has no %s mapping", th.name, imp, profile.id)
        return out

    base = list(profile.imports.get("base", [])) + prelude

    def render(th: Theory, scope: Scope, d) -> str:
        namer.resolve = _resolver(scope)
        namer.theory = th.name
        if flagged:
            bad = involves_non_uniform(scope, d, flagged)
            if bad is not None:
                raise NonUniformUnsupported(bad, profile.id)
        try:
            return em.declaration(d)
        except UnmappedConstant as exc:
            exc.args = (f"{th.name}.{d.name}: {exc.args[0]}",)
            raise

    for th in order:
        scope = Scope.of(corpus, th)
        mod = module_name(th.name)
        body = []
        for d in th.decls:
            if isinstance(d, Goal):
                continue
            try:
                body.append(render(th, scope, d))
            except NonUniformUnsupported as exc:
                body.append(em.comment(f"circumvented {d.name}: {exc}"))
        deps = [module_name(n) for n in closure(th) if n != th.name]
        files[f"{mod}.{ext}"] = em.file(mod, base + external(th) + deps, body)
        records.append(ManifestEntry(None, f"{mod}.{ext}", "emitted", "library"))

        for g in th.goals:
            gid = goal_id(th, g)
            gmod = f"{mod}__{sanitize(g.name)}"
            try:
                if inline:
                    decls = sorted(
                        ((index[t], by_name[t].decls.index(d), t, d)
                         for t, d in dependency_closure(scope, g)
                         if t in by_name and not isinstance(d, Goal)),
                        key=lambda r: (r[0], r[1]),
                    )
                    gbody = []
                    for _, _, t, d in decls:
                        gbody.append(render(by_name[t], Scope.of(corpus, by_name[t]), d))
                    gbody.append(render(th, scope, g))
                    imports = base + external(th)
                else:
                    gbody = [render(th, scope, g)]
                    imports = base + [module_name(n) for n in closure(th)]
            except NonUniformUnsupported as exc:
                records.append(ManifestEntry(gid, None, "circumvented", "goal", str(exc)))
                continue
            files[f"{gmod}.{ext}"] = em.file(gmod, imports, gbody)
            records.append(ManifestEntry(gid, f"{gmod}.{ext}", "emitted", "goal"))

    os.makedirs(out_dir, exist_ok=True)
    for rel, text in sorted(files.items()):
        with open(os.path.join(out_dir, rel), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    write_manifest(records, os.path.join(out_dir, MANIFEST))
    return records


def write_manifest(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json(), ensure_ascii=False) + "\n")


def read_manifest(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
