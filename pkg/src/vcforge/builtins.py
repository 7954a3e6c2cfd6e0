"""Demonstrative vocabulary of source-logic builtins.

Dumped ASTs refer to these constants and type constructors without
declaring them. The table gives each constant a type so that type-based
operation categories can be computed; it is data, not logic, and users
extend it through the taxonomy and profile config files.
"""

from __future__ import annotations

from .terms import TyArrow, TyCon, TyTuple, TyVar, arrows

INT = TyCon("int")
REAL = TyCon("real")
BOOL = TyCon("bool")
STRING = TyCon("string")
A = TyVar("a")
B = TyVar("b")


def _list(t):
    return TyCon("list", (t,))


def _array(t):
    return TyCon("array", (t,))


def _seq(t):
    return TyCon("seq", (t,))


def _set(t):
    return TyCon("set", (t,))


def _map(k, v):
    return TyCon("map", (k, v))


ADDR = TyCon("Memory.addr")

BUILTIN_TYPES: dict[str, int] = {
    "int": 0, "real": 0, "bool": 0, "string": 0, "nat": 0,
    "list": 1, "array": 1, "seq": 1, "set": 1, "fset": 1, "bag": 1,
    "map": 2, "fmap": 2, "hashtbl": 2, "tree": 1, "matrix": 1,
    "option": 1, "Memory.addr": 0, "Memory.table": 0,
}

_int2 = arrows([INT, INT], INT)
_intrel = arrows([INT, INT], BOOL)
_real2 = arrows([REAL, REAL], REAL)
_realrel = arrows([REAL, REAL], BOOL)
_prop2 = arrows([BOOL, BOOL], BOOL)

BUILTIN_CONSTANTS: dict[str, object] = {
    # logic
    "forall": TyArrow(TyArrow(A, BOOL), BOOL),
    "exists": TyArrow(TyArrow(A, BOOL), BOOL),
    "and": _prop2, "or": _prop2, "implies": _prop2, "iff": _prop2,
    "not": TyArrow(BOOL, BOOL),
    "True": BOOL, "False": BOOL,
    "=": arrows([A, A], BOOL), "<>": arrows([A, A], BOOL),
    "ite": arrows([BOOL, A, A], A),
    # integers
    "Int.+": _int2, "Int.-": _int2, "Int.*": _int2,
    "Int.neg": TyArrow(INT, INT),
    "Int.div": _int2, "Int.mod": _int2, "Int.pow": _int2,
    "Int.<": _intrel, "Int.<=": _intrel, "Int.>": _intrel, "Int.>=": _intrel,
    "Int.abs": TyArrow(INT, INT), "Int.min": _int2, "Int.max": _int2,
    "Int.to_nat": TyArrow(INT, TyCon("nat")), "Int.int": TyArrow(TyCon("nat"), INT),
    "Int.sqrt": TyArrow(INT, INT), "Int.fact": TyArrow(INT, INT),
    "BV.and": _int2, "BV.or": _int2, "BV.xor": _int2, "BV.lsl": _int2, "BV.lsr": _int2,
    "Cint.to_uint32": TyArrow(INT, INT), "Cint.is_uint16": TyArrow(INT, BOOL),
    # reals
    "Real.+": _real2, "Real.-": _real2, "Real.*": _real2, "Real./": _real2,
    "Real.neg": TyArrow(REAL, REAL), "Real.<": _realrel, "Real.<=": _realrel,
    "Real.from_int": TyArrow(INT, REAL), "Real.sqrt": TyArrow(REAL, REAL),
    # lists, sequences, arrays
    "List.Nil": _list(A), "List.Cons": arrows([A, _list(A)], _list(A)),
    "Why3.length": TyArrow(_list(A), INT),
    "List.nth": arrows([INT, _list(A)], A),
    "List.mem": arrows([A, _list(A)], BOOL),
    "List.++": arrows([_list(A), _list(A)], _list(A)),
    "List.rev": TyArrow(_list(A), _list(A)),
    "Seq.length": TyArrow(_seq(A), INT), "Seq.get": arrows([_seq(A), INT], A),
    "Seq.empty": _seq(A), "Seq.snoc": arrows([_seq(A), A], _seq(A)),
    "Array.length": TyArrow(_array(A), INT), "Array.get": arrows([_array(A), INT], A),
    "Array.set": arrows([_array(A), INT, A], _array(A)),
    "Array.nth": arrows([_array(A), TyCon("nat")], A),
    # sets, maps, bags
    "Set.mem": arrows([A, _set(A)], BOOL), "Set.add": arrows([A, _set(A)], _set(A)),
    "Set.union": arrows([_set(A), _set(A)], _set(A)), "Set.empty": _set(A),
    "Set.cardinal": TyArrow(_set(A), INT),
    "Map.get": arrows([_map(A, B), A], B), "Map.set": arrows([_map(A, B), A, B], _map(A, B)),
    "Bag.nb_occ": arrows([A, TyCon("bag", (A,))], INT),
    # trees, strings, matrices
    "Tree.Empty": TyCon("tree", (A,)),
    "Tree.Node": arrows([TyCon("tree", (A,)), A, TyCon("tree", (A,))], TyCon("tree", (A,))),
    "Tree.size": TyArrow(TyCon("tree", (A,)), INT),
    "String.length": TyArrow(STRING, INT), "String.concat": arrows([STRING, STRING], STRING),
    "Matrix.get": arrows([TyCon("matrix", (A,)), INT, INT], A),
    # Frama-C style memory model
    "Memory.shift": arrows([ADDR, INT], ADDR),
    "Memory.valid_rd": arrows([TyCon("Memory.table"), ADDR, INT], BOOL),
    "Memory.valid_rw": arrows([TyCon("Memory.table"), ADDR, INT], BOOL),
    "Memory.region": TyArrow(INT, INT),
    "Memory.base": TyArrow(ADDR, INT),
    "Memory.framed": TyArrow(TyArrow(ADDR, ADDR), BOOL),
    "Memory.havoc": arrows([TyArrow(ADDR, INT), TyArrow(ADDR, INT), ADDR, INT], TyArrow(ADDR, INT)),
    # misc
    "Tuple.fst": TyArrow(TyTuple((A, B)), A), "Tuple.snd": TyArrow(TyTuple((A, B)), B),
}


def builtin_type_of(name: str):
    return BUILTIN_CONSTANTS.get(name)
