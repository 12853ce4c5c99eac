"""Concrete syntax for terms and forms.

The textual language is Prolog-flavoured:

    and(P,Q)  or(P,Q)  not(P)  impl(P,Q)  P <-> Q  Q <- P
    exists([X,Y],P)  forall([X],P)
    cardinality(N, X^P)  sum(S, X^P)  order(Sel, X^D^P, Dir)
    kw(P)  def(P)  true  false  T1 = T2  X < Y  X =< Y
    pred(args)  'QUOTED name'(args)  payee1#bt  [a,b,c]  date(1990,1,1)

Identifiers starting with an upper-case letter or underscore are variables.
Quoted atoms escape the quote by doubling it.  Unique constants print as
'$k'(Kind,Serial) which reads back as an ordinary compound, so they can never
be forged from text.
"""

from __future__ import annotations

import re

from .terms import (
    And,
    Atom,
    Compound,
    Const,
    Count,
    Def,
    Eq,
    Equiv,
    Exists,
    FALSE,
    Forall,
    Form,
    Impl,
    Kw,
    LIST_FUNCTOR,
    Mismatch,
    Not,
    Or,
    Order,
    Sum,
    TRUE,
    Term,
    TrueF,
    FalseF,
    Typed,
    Unique,
    Var,
    is_list,
    mklist,
)

RESERVED = {
    "and", "or", "not", "impl", "exists", "forall",
    "cardinality", "sum", "order", "kw", "def", "true", "false", "mismatch",
}

COMPARISONS = {"<", ">", "=<", ">="}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<num>\d+\.\d+|\d+)
  | (?P<qatom>'(?:[^']|'')*')
  | (?P<name>[a-zA-Z_][a-zA-Z0-9_]*)
  | (?P<op><->|<-|:-|->|=<|>=|[()\[\],^#=<>./])
    """,
    re.VERBOSE,
)


class SyntaxErr(ValueError):
    pass


def tokenize(text: str):
    out = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise SyntaxErr(f"bad character {text[pos]!r} at offset {pos}")
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        kind = m.lastgroup
        val = m.group()
        if kind == "num":
            out.append(("num", float(val) if "." in val else int(val)))
        elif kind == "qatom":
            out.append(("qatom", val[1:-1].replace("''", "'")))
        elif kind == "name":
            if val[0].isupper() or val[0] == "_":
                out.append(("var", val))
            else:
                out.append(("atom", val))
        else:
            out.append(("op", val))
    return out


class Tokens:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("eof", None)

    def next(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, kind, val=None):
        k, v = self.next()
        if k != kind or (val is not None and v != val):
            raise SyntaxErr(f"expected {val or kind}, got {v!r}")
        return v

    def at_op(self, val):
        k, v = self.peek()
        return k == "op" and v == val

    def eat_op(self, val):
        if self.at_op(val):
            self.next()
            return True
        return False

    @property
    def done(self):
        return self.i >= len(self.toks)


# ---------------------------------------------------------------------------
# Term parsing


def parse_term_tokens(ts: Tokens) -> Term:
    k, v = ts.peek()
    if k == "var":
        ts.next()
        return Var(v)
    if k == "num":
        ts.next()
        return Const(v)
    if k == "op" and v == "-":
        pass  # no infix arithmetic; fallthrough to error below
    if k == "op" and v == "[":
        ts.next()
        items = []
        if not ts.at_op("]"):
            items.append(parse_term_tokens(ts))
            while ts.eat_op(","):
                items.append(parse_term_tokens(ts))
        ts.expect("op", "]")
        return mklist(items)
    if k in ("atom", "qatom"):
        ts.next()
        name = v
        if ts.eat_op("("):
            args = [parse_term_tokens(ts)]
            while ts.eat_op(","):
                args.append(parse_term_tokens(ts))
            ts.expect("op", ")")
            t: Term = Compound(name, tuple(args))
        else:
            t = Const(name)
        if ts.eat_op("#"):
            if not isinstance(t, Const) or not isinstance(t.value, str):
                raise SyntaxErr("type name before # must be a plain atom")
            ident = parse_term_tokens(ts)
            return Typed(t.value, ident)
        return t
    raise SyntaxErr(f"cannot parse term at {v!r}")


# ---------------------------------------------------------------------------
# Form parsing


def _parse_varlist(ts: Tokens):
    ts.expect("op", "[")
    vs = []
    if not ts.at_op("]"):
        while True:
            k, v = ts.next()
            if k != "var":
                raise SyntaxErr(f"expected variable in binder list, got {v!r}")
            vs.append(Var(v))
            if not ts.eat_op(","):
                break
    ts.expect("op", "]")
    return tuple(vs)


def _parse_primary(ts: Tokens) -> Form:
    k, v = ts.peek()
    if k == "op" and v == "(":
        ts.next()
        f = _parse_form(ts)
        ts.expect("op", ")")
        return f
    if k == "atom" and v in RESERVED:
        ts.next()
        if v == "true":
            return TRUE
        if v == "false":
            return FALSE
        ts.expect("op", "(")
        if v in ("and", "or", "impl"):
            a = _parse_form(ts)
            ts.expect("op", ",")
            b = _parse_form(ts)
            ts.expect("op", ")")
            return {"and": And, "or": Or, "impl": Impl}[v](a, b)
        if v == "not":
            a = _parse_form(ts)
            ts.expect("op", ")")
            return Not(a)
        if v in ("kw", "def"):
            a = _parse_form(ts)
            ts.expect("op", ")")
            return Kw(a) if v == "kw" else Def(a)
        if v in ("exists", "forall"):
            vs = _parse_varlist(ts)
            ts.expect("op", ",")
            body = _parse_form(ts)
            ts.expect("op", ")")
            return (Exists if v == "exists" else Forall)(vs, body)
        if v in ("cardinality", "sum"):
            res = parse_term_tokens(ts)
            ts.expect("op", ",")
            x = Var(ts.expect("var"))
            ts.expect("op", "^")
            body = _parse_form(ts)
            ts.expect("op", ")")
            return (Count if v == "cardinality" else Sum)(res, x, body)
        if v == "order":
            sel = parse_term_tokens(ts)
            ts.expect("op", ",")
            x = Var(ts.expect("var"))
            ts.expect("op", "^")
            d = Var(ts.expect("var"))
            ts.expect("op", "^")
            body = _parse_form(ts)
            ts.expect("op", ",")
            direction = parse_term_tokens(ts)
            ts.expect("op", ")")
            return Order(sel, x, d, body, direction)
        if v == "mismatch":
            a = parse_term_tokens(ts)
            ts.expect("op", ",")
            b = parse_term_tokens(ts)
            ts.expect("op", ")")
            return Mismatch(a, b)
        raise SyntaxErr(f"unhandled connective {v}")
    # an atom, equality or comparison built from terms
    t = parse_term_tokens(ts)
    if ts.eat_op("="):
        return Eq(t, parse_term_tokens(ts))
    for op in COMPARISONS:
        if ts.at_op(op):
            ts.next()
            return Atom(op, (t, parse_term_tokens(ts)))
    if isinstance(t, Compound) and not is_list(t):
        return Atom(t.functor, t.args)
    if isinstance(t, Const) and isinstance(t.value, str):
        return Atom(t.value, ())
    raise SyntaxErr(f"term {t!r} is not a formula")


def _parse_form(ts: Tokens) -> Form:
    f = _parse_primary(ts)
    if ts.eat_op("<->"):
        g = _parse_primary(ts)
        f = Equiv(f, g)
    if ts.eat_op("<-"):
        g = _parse_form(ts)
        return Impl(g, f)
    return f


def parse_form(text: str) -> Form:
    ts = Tokens(tokenize(text))
    f = _parse_form(ts)
    ts.eat_op(".")
    if not ts.done:
        raise SyntaxErr(f"trailing input at token {ts.peek()!r}")
    return f


def parse_lambda(text: str):
    """A lambda([X,..], Body) input as (vars, body), or None if the text
    does not start that way.  The display sugar for WH-questions."""
    ts = Tokens(tokenize(text))
    k, v = ts.peek()
    if k != "atom" or v != "lambda":
        return None
    ts.next()
    ts.expect("op", "(")
    vs = _parse_varlist(ts)
    ts.expect("op", ",")
    body = _parse_form(ts)
    ts.expect("op", ")")
    ts.eat_op(".")
    if not ts.done:
        raise SyntaxErr(f"trailing input at token {ts.peek()!r}")
    return vs, body


def parse_term(text: str) -> Term:
    ts = Tokens(tokenize(text))
    t = parse_term_tokens(ts)
    if not ts.done:
        raise SyntaxErr(f"trailing input at token {ts.peek()!r}")
    return t


# ---------------------------------------------------------------------------
# Printing

_BARE_RE = re.compile(r"^[a-z][a-zA-Z0-9_]*$")


def atom_text(name: str) -> str:
    if _BARE_RE.match(name) and name not in RESERVED:
        return name
    return "'" + name.replace("'", "''") + "'"


def print_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        if isinstance(t.value, str):
            return atom_text(t.value)
        return repr(t.value) if not isinstance(t.value, float) else format(t.value, "g")
    if isinstance(t, Unique):
        return f"'$k'({atom_text(t.kind)},{t.serial})"
    if isinstance(t, Typed):
        return f"{atom_text(t.type_name)}#{print_term(t.ident)}"
    if isinstance(t, Compound):
        if t.functor == LIST_FUNCTOR:
            return "[" + ",".join(print_term(a) for a in t.args) + "]"
        return atom_text(t.functor) + "(" + ",".join(print_term(a) for a in t.args) + ")"
    shown = getattr(t, "display", None)
    if shown is not None:
        return shown
    raise TypeError(f"cannot print {t!r}")


def print_form(f: Form) -> str:
    if isinstance(f, Atom):
        if f.pred in COMPARISONS and len(f.args) == 2:
            return f"{print_term(f.args[0])} {f.pred} {print_term(f.args[1])}"
        if not f.args:
            return atom_text(f.pred)
        return atom_text(f.pred) + "(" + ",".join(print_term(a) for a in f.args) + ")"
    if isinstance(f, And):
        return f"and({print_form(f.left)},{print_form(f.right)})"
    if isinstance(f, Or):
        return f"or({print_form(f.left)},{print_form(f.right)})"
    if isinstance(f, Not):
        return f"not({print_form(f.body)})"
    if isinstance(f, Impl):
        return f"impl({print_form(f.lhs)},{print_form(f.rhs)})"
    if isinstance(f, Equiv):
        return f"({print_form(f.lhs)} <-> {print_form(f.rhs)})"
    if isinstance(f, Exists):
        return "exists([" + ",".join(v.name for v in f.vars) + f"],{print_form(f.body)})"
    if isinstance(f, Forall):
        return "forall([" + ",".join(v.name for v in f.vars) + f"],{print_form(f.body)})"
    if isinstance(f, Count):
        return f"cardinality({print_term(f.result)},{f.var.name}^{print_form(f.body)})"
    if isinstance(f, Sum):
        return f"sum({print_term(f.result)},{f.var.name}^{print_form(f.body)})"
    if isinstance(f, Order):
        return (
            f"order({print_term(f.selected)},{f.var.name}^{f.degree.name}^"
            f"{print_form(f.body)},{print_term(f.direction)})"
        )
    if isinstance(f, Kw):
        return f"kw({print_form(f.body)})"
    if isinstance(f, Def):
        return f"def({print_form(f.body)})"
    if isinstance(f, Eq):
        return f"{print_term(f.left)} = {print_term(f.right)}"
    if isinstance(f, Mismatch):
        return f"mismatch({print_term(f.left)},{print_term(f.right)})"
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    raise TypeError(f"cannot print {f!r}")
