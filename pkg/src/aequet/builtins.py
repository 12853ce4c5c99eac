"""Native evaluable predicates: arithmetic, date handling, naming.

Evaluation is substitution-based: eval_builtin returns None when the atom is
not a builtin or is insufficiently instantiated to run, else a list of
substitution extensions (empty list means provably false).  Everything here
costs nothing in proof budgets; these are table lookups, not inference.
"""

from __future__ import annotations

from typing import Optional

from .terms import (
    Atom,
    Compound,
    Const,
    Term,
    Typed,
    Unique,
    Var,
    is_ground,
    is_list,
    resolve,
    unify,
)

ARITHMETIC_PREDS = {
    "<", ">", "=<", ">=", "gt", "lt",
    "plus", "dist", "t_precedes", "sql_date_=<",
    "member", "different_ground_terms", "ground_action",
}

NAMING_PREDS = {
    "sql_date_convert", "sql_number_convert", "named_object", "amount_object",
}

EXECUTABLE_PREDS = {"execute_in_future", "executed_in_past"}

_MONTHS = ["JAN", "FEB", "MAR", "APR", "MAY", "JUN",
           "JUL", "AUG", "SEP", "OCT", "NOV", "DEC"]


def date_key(t: Term):
    """Collation key for a date: accepts date(Y,M,D) terms and 'D-MON-YY' text."""
    if isinstance(t, Compound) and t.functor == "date" and len(t.args) == 3:
        parts = [a.value for a in t.args if isinstance(a, Const)]
        if len(parts) == 3 and all(isinstance(p, int) for p in parts):
            return tuple(parts)
        return None
    if isinstance(t, Const) and isinstance(t.value, str):
        bits = t.value.upper().split("-")
        if len(bits) == 3 and bits[1] in _MONTHS:
            try:
                day = int(bits[0])
                yy = int(bits[2])
            except ValueError:
                return None
            year = yy if yy >= 100 else (1900 + yy if yy >= 50 else 2000 + yy)
            return (year, _MONTHS.index(bits[1]) + 1, day)
    return None


def date_text(t: Term) -> Optional[str]:
    """Render date(Y,M,D) in the store's textual format, e.g. 1-JAN-90."""
    key = date_key(t)
    if key is None:
        return None
    y, m, d = key
    return f"{d}-{_MONTHS[m - 1]}-{y % 100:02d}"


def text_date(s: str) -> Optional[Compound]:
    key = date_key(Const(s))
    if key is None:
        return None
    y, m, d = key
    return Compound("date", (Const(y), Const(m), Const(d)))


def _num(t: Term):
    if isinstance(t, Const) and isinstance(t.value, (int, float)):
        return t.value
    return None


def _comparable(t: Term):
    n = _num(t)
    if n is not None:
        return ("num", n)
    k = date_key(t)
    if k is not None:
        return ("date", k)
    return None


_CMP = {
    "<": lambda a, b: a < b,
    "gt": lambda a, b: a > b,
    ">": lambda a, b: a > b,
    "lt": lambda a, b: a < b,
    "=<": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
}


def is_builtin(pred: str, arity: int) -> bool:
    if pred in ("plus", "dist"):
        return arity == 3
    if pred in NAMING_PREDS:
        return arity in (2, 3)
    return pred in ARITHMETIC_PREDS


def eval_builtin(atom: Atom, s: dict) -> Optional[list]:
    """None: not applicable here.  []: false.  [s', ...]: solutions."""
    pred = atom.pred
    args = tuple(resolve(a, s) for a in atom.args)

    if pred in _CMP and len(args) == 2:
        a, b = _comparable(args[0]), _comparable(args[1])
        if a is None or b is None or a[0] != b[0]:
            return None
        return [s] if _CMP[pred](a[1], b[1]) else []

    if pred == "t_precedes" and len(args) == 2:
        a, b = date_key(args[0]), date_key(args[1])
        if a is None or b is None:
            return None
        return [s] if a <= b else []

    if pred == "sql_date_=<" and len(args) == 2:
        a, b = date_key(args[0]), date_key(args[1])
        if a is None or b is None:
            return None
        return [s] if a <= b else []

    if pred == "plus" and len(args) == 3:
        ns = [_num(a) for a in args]
        known = sum(1 for n in ns if n is not None)
        if known < 2:
            return None
        if known == 3:
            return [s] if ns[0] + ns[1] == ns[2] else []
        if ns[2] is None:
            out = unify(args[2], Const(ns[0] + ns[1]), s)
        elif ns[1] is None:
            out = unify(args[1], Const(ns[2] - ns[0]), s)
        else:
            out = unify(args[0], Const(ns[2] - ns[1]), s)
        return [out] if out is not None else []

    if pred == "dist" and len(args) == 3:
        # one-dimensional coordinates: distance is the absolute difference
        a, b = _num(args[0]), _num(args[1])
        if a is None or b is None:
            return None
        d = abs(a - b)
        c = _num(args[2])
        if c is not None:
            return [s] if c == d else []
        out = unify(args[2], Const(d), s)
        return [out] if out is not None else []

    if pred == "sql_date_convert" and len(args) == 2:
        d, txt = args
        if date_key(d) is not None and isinstance(d, Compound):
            rendered = date_text(d)
            out = unify(txt, Const(rendered), s)
            return [out] if out is not None else []
        if isinstance(txt, Const) and isinstance(txt.value, str):
            parsed = text_date(txt.value)
            if parsed is None:
                return []
            out = unify(d, parsed, s)
            return [out] if out is not None else []
        return None

    if pred == "sql_number_convert" and len(args) == 2:
        a, b = args
        if _num(a) is not None or _num(b) is not None:
            out = unify(a, b, s)
            return [out] if out is not None else []
        return None

    if pred == "named_object" and len(args) == 3:
        obj, typ, ident = args
        if isinstance(obj, Typed):
            out = unify(typ, Const(obj.type_name), s)
            if out is None:
                return []
            out = unify(ident, obj.ident, out)
            return [out] if out is not None else []
        if isinstance(typ, Const) and isinstance(typ.value, str) and is_ground(ident):
            out = unify(obj, Typed(typ.value, ident), s)
            return [out] if out is not None else []
        return None

    if pred == "amount_object" and len(args) == 3:
        amt, unit, num = args
        if isinstance(amt, Compound) and amt.functor == "amount" and len(amt.args) == 2:
            out = unify(num, amt.args[0], s)
            if out is None:
                return []
            out = unify(unit, amt.args[1], out)
            return [out] if out is not None else []
        if is_ground(unit) and is_ground(num):
            out = unify(amt, Compound("amount", (num, unit)), s)
            return [out] if out is not None else []
        return None

    if pred == "member" and len(args) == 2:
        x, lst = args
        if not is_list(lst):
            return None
        outs = []
        for item in lst.args:
            out = unify(x, item, s)
            if out is not None:
                outs.append(out)
        return outs

    if pred == "different_ground_terms" and len(args) == 2:
        a, b = args
        if not (is_ground(a, treat_unique_as_ground=False)
                and is_ground(b, treat_unique_as_ground=False)):
            return []
        return [s] if a != b else []

    if pred == "ground_action" and len(args) == 1:
        return [s] if is_ground(args[0], treat_unique_as_ground=False) else []

    return None


# Builtin call patterns for the planner: (ins, outs) index tuples, tried in
# order.  Database relations and declared patterns are handled by the theory.


def builtin_call_patterns(pred: str, arity: int):
    if pred in _CMP or pred in ("t_precedes", "sql_date_=<"):
        if arity == 2:
            return [((0, 1), ())]
    if pred == "plus" and arity == 3:
        return [((0, 1), (2,)), ((0, 2), (1,)), ((1, 2), (0,))]
    if pred == "dist" and arity == 3:
        return [((0, 1), (2,)), ((0, 1, 2), ())]
    if pred in ("sql_date_convert", "sql_number_convert") and arity == 2:
        return [((0,), (1,)), ((1,), (0,))]
    if pred == "named_object" and arity == 3:
        return [((0,), (1, 2)), ((1, 2), (0,))]
    if pred == "amount_object" and arity == 3:
        return [((0,), (1, 2)), ((1, 2), (0,))]
    if pred == "member" and arity == 2:
        return [((1,), (0,))]
    if pred == "different_ground_terms" and arity == 2:
        return [((0, 1), ())]
    if pred == "ground_action" and arity == 1:
        return [((0,), ())]
    return []
