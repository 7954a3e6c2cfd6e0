"""Brute-force reference implementations, independent of vcforge's own code."""

from __future__ import annotations

from vcforge.terms import (
    Abs, App, Case, Const, Let, NumLit, PAs, PCon, PTuple, PVar, PWild, StrLit, Tuple, Var,
)


def pvars(p) -> list:
    if isinstance(p, PVar):
        return [p.name]
    if isinstance(p, PAs):
        return [p.name] + pvars(p.inner)
    if isinstance(p, PCon):
        return [v for a in p.args for v in pvars(a)]
    if isinstance(p, PTuple):
        return [v for a in p.elems for v in pvars(a)]
    return []


def fv(t) -> set:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, App):
        return fv(t.fun) | fv(t.arg)
    if isinstance(t, Abs):
        return fv(t.body) - {t.binder}
    if isinstance(t, Let):
        return fv(t.value) | (fv(t.body) - {t.binder})
    if isinstance(t, Case):
        out = fv(t.scrutinee)
        for p, b in t.branches:
            out |= fv(b) - set(pvars(p))
        return out
    if isinstance(t, Tuple):
        return set().union(*(fv(e) for e in t.elems))
    return set()


def binders(t) -> list:
    if isinstance(t, App):
        return binders(t.fun) + binders(t.arg)
    if isinstance(t, Abs):
        return [t.binder] + binders(t.body)
    if isinstance(t, Let):
        return binders(t.value) + [t.binder] + binders(t.body)
    if isinstance(t, Case):
        out = binders(t.scrutinee)
        for p, b in t.branches:
            out += pvars(p) + binders(b)
        return out
    if isinstance(t, Tuple):
        return [v for e in t.elems for v in binders(e)]
    return []


def alpha_eq(a, b, env_a=None, env_b=None, depth=0) -> bool:
    """Structural comparison where bound names are compared by binding site."""
    env_a = env_a or {}
    env_b = env_b or {}
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        ia, ib = env_a.get(a.name), env_b.get(b.name)
        if ia is None and ib is None:
            return a.name == b.name
        return ia == ib
    if isinstance(a, (Const, NumLit, StrLit)):
        return a == b
    if isinstance(a, App):
        return alpha_eq(a.fun, b.fun, env_a, env_b, depth) and alpha_eq(a.arg, b.arg, env_a, env_b, depth)
    if isinstance(a, Abs):
        return a.binder_ty == b.binder_ty and alpha_eq(
            a.body, b.body, {**env_a, a.binder: depth}, {**env_b, b.binder: depth}, depth + 1)
    if isinstance(a, Let):
        return alpha_eq(a.value, b.value, env_a, env_b, depth) and alpha_eq(
            a.body, b.body, {**env_a, a.binder: depth}, {**env_b, b.binder: depth}, depth + 1)
    if isinstance(a, Tuple):
        return len(a.elems) == len(b.elems) and all(
            alpha_eq(x, y, env_a, env_b, depth) for x, y in zip(a.elems, b.elems))
    if isinstance(a, Case):
        if len(a.branches) != len(b.branches) or not alpha_eq(a.scrutinee, b.scrutinee, env_a, env_b, depth):
            return False
        for (pa, ba), (pb, bb) in zip(a.branches, b.branches):
            if not same_pattern_shape(pa, pb):
                return False
            va, vb = pvars(pa), pvars(pb)
            ea, eb = dict(env_a), dict(env_b)
            for k, (x, y) in enumerate(zip(va, vb)):
                ea[x] = eb[y] = (depth, k)
            if not alpha_eq(ba, bb, ea, eb, depth + 1):
                return False
        return True
    raise TypeError(a)


def same_pattern_shape(p, q) -> bool:
    if type(p) is not type(q):
        return False
    if isinstance(p, PCon):
        return p.constructor == q.constructor and len(p.args) == len(q.args) and all(
            same_pattern_shape(x, y) for x, y in zip(p.args, q.args))
    if isinstance(p, PTuple):
        return len(p.elems) == len(q.elems) and all(
            same_pattern_shape(x, y) for x, y in zip(p.elems, q.elems))
    if isinstance(p, PAs):
        return same_pattern_shape(p.inner, q.inner)
    return True


def leaf_count(t) -> int:
    if isinstance(t, (Var, Const, NumLit, StrLit)):
        return 1
    if isinstance(t, App):
        return leaf_count(t.fun) + leaf_count(t.arg)
    if isinstance(t, Abs):
        return leaf_count(t.body)
    if isinstance(t, Let):
        return leaf_count(t.value) + leaf_count(t.body)
    if isinstance(t, Case):
        return leaf_count(t.scrutinee) + sum(leaf_count(b) for _, b in t.branches)
    return sum(leaf_count(e) for e in t.elems)


def _children(t):
    if isinstance(t, Abs):
        return [t.body]
    if isinstance(t, Let):
        return [t.value, t.body]
    if isinstance(t, Case):
        return [t.scrutinee] + [b for _, b in t.branches]
    if isinstance(t, Tuple):
        return list(t.elems)
    return []


def sibling_depth(t) -> int:
    if isinstance(t, App):
        kids = []
        while isinstance(t, App):
            kids.append(t.arg)
            t = t.fun
        kids.append(t)
        return 1 + max(sibling_depth(k) for k in kids)
    kids = _children(t)
    return 1 + max((sibling_depth(k) for k in kids), default=0)


def binary_depth(t) -> int:
    if isinstance(t, App):
        return 1 + max(binary_depth(t.fun), binary_depth(t.arg))
    kids = _children(t)
    return 1 + max((binary_depth(k) for k in kids), default=0)


def quantifiers(t) -> int:
    if isinstance(t, Const):
        return int(t.name in ("forall", "exists"))
    if isinstance(t, App):
        return quantifiers(t.fun) + quantifiers(t.arg)
    return sum(quantifiers(k) for k in _children(t))


def percentile_oracle(values, p) -> object:
    """Nearest rank by direct enumeration: the least v with at least p% of
    the data <= v."""
    xs = sorted(values)
    for v in xs:
        if 100 * sum(1 for x in xs if x <= v) >= p * len(xs):
            return v
    return xs[-1]


# -- ground evaluation -------------------------------------------------------


class NoMatch(Exception):
    pass


def evaluate(t, env=None):
    """Evaluate a ground first-order term over lists, tuples and integers.

    Constructor applications become tuples ``(name, *args)``.
    """
    env = env or {}
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, (NumLit, StrLit)):
        return t.value
    if isinstance(t, Const):
        return (t.name,)
    if isinstance(t, App):
        f = evaluate(t.fun, env)
        return f + (evaluate(t.arg, env),)
    if isinstance(t, Tuple):
        return ("%tuple",) + tuple(evaluate(e, env) for e in t.elems)
    if isinstance(t, Let):
        return evaluate(t.body, {**env, t.binder: evaluate(t.value, env)})
    if isinstance(t, Case):
        v = evaluate(t.scrutinee, env)
        for p, b in t.branches:
            bind = {}
            if match(p, v, bind):
                return evaluate(b, {**env, **bind})
        raise NoMatch
    raise TypeError(t)


def match(p, v, bind) -> bool:
    if isinstance(p, PWild):
        return True
    if isinstance(p, PVar):
        bind[p.name] = v
        return True
    if isinstance(p, PAs):
        bind[p.name] = v
        return match(p.inner, v, bind)
    if isinstance(p, PCon):
        return (isinstance(v, tuple) and v[0] == p.constructor and len(v) == 1 + len(p.args)
                and all(match(q, w, bind) for q, w in zip(p.args, v[1:])))
    if isinstance(p, PTuple):
        return (isinstance(v, tuple) and v[0] == "%tuple" and len(v) == 1 + len(p.elems)
                and all(match(q, w, bind) for q, w in zip(p.elems, v[1:])))
    raise TypeError(p)
