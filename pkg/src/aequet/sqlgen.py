"""SQL synthesis and in-memory execution.

Database conjunctions in an effective form are grouped into SELECT
statements.  The pipeline: rewrite representation-independent predicates
into access-language primitives with the on-demand sql_primitives rule
group, alias each database atom occurrence, group each conjunction's
database atoms together with the comparison conjuncts they cover, extract
selected variables and fixed-value and join conditions, replace the group
by an sql_select predication over an opaque query term, and finally drop
naming conversions whose variable went vacuous.

sql_select(Vars, Query) holds iff Vars is a row selected by Query; the
evaluator runs it against the in-memory relation stores with the same
semantics as the emitted text.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .builtins import date_key
from .terms import (
    And,
    Atom,
    Const,
    Count,
    Equiv,
    Exists,
    Forall,
    Form,
    Impl,
    Not,
    Or,
    Order,
    Sum,
    Term,
    Var,
    conjuncts,
    free_vars,
    mkand,
    mklist,
)
from .theory import Theory

SQL_COMPARISONS = {"sql_date_=<": "<=", "=<": "<=", "<": "<", ">=": ">=", ">": ">"}
TOTAL_CONVERTERS = {"sql_date_convert", "sql_number_convert"}


@dataclass(frozen=True)
class ColRef:
    alias: str
    column: str
    position: int

    @property
    def display(self):
        return f"{self.alias}.{self.column}"


@dataclass(frozen=True)
class SqlCond:
    op: str                # "=", "<=", "<", ">=", ">"
    left: object           # ColRef or Const
    right: object


@dataclass(frozen=True)
class SqlQuery:
    select: tuple                       # ColRefs
    from_: tuple                        # (relation name, alias) pairs
    where: tuple                        # SqlConds
    aggregate: Optional[str] = None     # None | "count" | "sum"


@dataclass(frozen=True)
class SqlQueryTerm(Term):
    """Abstract SELECT syntax wrapped as an inert term."""

    query: SqlQuery

    @property
    def display(self):
        q = self.query
        sel = ",".join(c.display for c in q.select)
        if q.aggregate:
            sel = f"{q.aggregate}({sel})"
        frm = ",".join(f"alias({rel},{al})" for rel, al in q.from_)
        whr = ",".join(_abstract_cond(c) for c in q.where)
        return f"SELECT([{sel}],FROM([{frm}]),WHERE([{whr}]))"


def _abstract_cond(c: SqlCond) -> str:
    l, r = _abstract_side(c.left), _abstract_side(c.right)
    if c.op == "=":
        return f"{l}={r}"
    return f"'{c.op}'({l},{r})"


def _abstract_side(x) -> str:
    if isinstance(x, ColRef):
        return x.display
    from .syntax import print_term

    return print_term(x)


# ---------------------------------------------------------------------------
# Grouping


def to_sql(form: Form, theory: Theory, outside=frozenset()) -> Form:
    """Replace database conjunctions throughout the form by sql_select
    goals.  outside: variables of the form that are significant to the
    caller (they are always selected when they fall in a group)."""
    form = _apply_primitives(form, theory)
    return _finish(_group(form, theory, set(outside)))


def _apply_primitives(form: Form, theory: Theory) -> Form:
    if not theory.rules_in_group("sql_primitives"):
        return form
    from .simplifier import simplify
    from .translator import TranslateConfig, Translator

    tr = Translator(theory, TranslateConfig(assume_conditions=False))
    form = tr.run_group(form, "sql_primitives", [])
    return simplify(form, theory)


def _is_db_atom(a, theory: Theory) -> bool:
    return (isinstance(a, Atom)
            and a.pred in theory.relations
            and theory.relations[a.pred].arity == len(a.args))


def _sql_side(t, colmap):
    if isinstance(t, Var):
        return colmap.get(t)
    if isinstance(t, Const):
        return t
    return None


def _group_conjunction(parts, theory: Theory, outside: set):
    """Group the database atoms of one conjunct list, together with every
    comparison conjunct they cover, into a single query.  Returns the new
    conjunct list, or None when there are no database atoms."""
    db = [p for p in parts if _is_db_atom(p, theory)]
    if not db:
        return None

    aliases = []
    colmap = {}
    fixed = []
    joins = []
    for i, a in enumerate(db):
        alias = f"t_{i + 1}"
        aliases.append((a.pred, alias))
        store = theory.relations[a.pred]
        for pos, (arg, col) in enumerate(zip(a.args, store.columns)):
            ref = ColRef(alias, col, pos)
            if isinstance(arg, Var):
                if arg in colmap:
                    joins.append(SqlCond("=", colmap[arg], ref))
                else:
                    colmap[arg] = ref
            elif isinstance(arg, Const):
                fixed.append(SqlCond("=", ref, arg))
            else:
                return None     # structured cell value: not groupable

    comps = []
    leftover = []
    for p in parts:
        if _is_db_atom(p, theory):
            continue
        if isinstance(p, Atom) and p.pred in SQL_COMPARISONS and len(p.args) == 2:
            l = _sql_side(p.args[0], colmap)
            r = _sql_side(p.args[1], colmap)
            if (l is not None and r is not None
                    and (isinstance(l, ColRef) or isinstance(r, ColRef))):
                comps.append(SqlCond(SQL_COMPARISONS[p.pred], l, r))
                continue
        leftover.append(p)

    wanted = set(outside)
    for p in leftover:
        wanted |= free_vars(p)
    sel = [v for v in colmap if v in wanted] or list(colmap)
    sel.sort(key=lambda v: (colmap[v].alias, colmap[v].position))
    query = SqlQuery(
        select=tuple(colmap[v] for v in sel),
        from_=tuple(aliases),
        where=tuple(fixed + joins + comps),
    )
    goal = Atom("sql_select", (mklist(sel), SqlQueryTerm(query)))
    return [goal] + leftover


def _aggregate(f, theory: Theory, kind: str):
    """Fold a Count or Sum whose body groups into a single query."""
    grouped = _finish(_group(f.body, theory, {f.var}))
    parts = conjuncts(grouped)
    if len(parts) != 1:
        return None
    (goal,) = parts
    if not (isinstance(goal, Atom) and goal.pred == "sql_select"):
        return None
    q = goal.args[1].query
    if q.aggregate is not None:
        return None
    col = None
    for v, ref in zip(goal.args[0].args, q.select):
        if v == f.var:
            col = ref
    if col is None:
        return None
    agg = SqlQuery(select=(col,), from_=q.from_, where=q.where, aggregate=kind)
    return Atom("sql_select", (mklist([f.result]), SqlQueryTerm(agg)))


def _group(f: Form, theory: Theory, outside: set) -> Form:
    if isinstance(f, And):
        parts = conjuncts(f)
        done = []
        for i, p in enumerate(parts):
            if isinstance(p, Atom):
                done.append(p)
                continue
            sibs = set()
            for q in parts[:i] + parts[i + 1:]:
                sibs |= free_vars(q)
            done.append(_group(p, theory, outside | sibs))
        got = _group_conjunction(done, theory, outside)
        return mkand(got) if got is not None else mkand(done)
    if isinstance(f, Atom):
        if _is_db_atom(f, theory):
            got = _group_conjunction([f], theory, outside)
            if got is not None:
                return mkand(got)
        return f
    if isinstance(f, Exists):
        return Exists(f.vars, _group(f.body, theory, outside - set(f.vars)))
    if isinstance(f, Forall):
        inner = outside - set(f.vars)
        if isinstance(f.body, Impl):
            lhs = _group(f.body.lhs, theory, inner | free_vars(f.body.rhs))
            rhs = _group(f.body.rhs, theory, inner | free_vars(f.body.lhs))
            return Forall(f.vars, Impl(lhs, rhs))
        return Forall(f.vars, _group(f.body, theory, inner))
    if isinstance(f, Impl):
        lhs = _group(f.lhs, theory, outside | free_vars(f.rhs))
        rhs = _group(f.rhs, theory, outside | free_vars(f.lhs))
        return Impl(lhs, rhs)
    if isinstance(f, Or):
        return Or(_group(f.left, theory, outside), _group(f.right, theory, outside))
    if isinstance(f, Equiv):
        return Equiv(_group(f.left, theory, outside), _group(f.right, theory, outside))
    if isinstance(f, Not):
        return Not(_group(f.body, theory, outside | free_vars(f.body)))
    if isinstance(f, Count):
        agg = _aggregate(f, theory, "count")
        return agg if agg is not None else Count(
            f.result, f.var, _group(f.body, theory, outside | {f.var}))
    if isinstance(f, Sum):
        agg = _aggregate(f, theory, "sum")
        return agg if agg is not None else Sum(
            f.result, f.var, _group(f.body, theory, outside | {f.var}))
    if isinstance(f, Order):
        return Order(f.selected, f.var, f.degree,
                     _group(f.body, theory, outside | {f.var, f.degree}),
                     f.direction)
    return f


# ---------------------------------------------------------------------------
# Finishing: vacuous conversions


def _finish(f: Form) -> Form:
    if isinstance(f, (Exists, Forall)):
        body = _drop_vacuous(set(f.vars), _finish(f.body))
        vs = tuple(v for v in f.vars if v in free_vars(body))
        return type(f)(vs, body) if vs else body
    if isinstance(f, And):
        return mkand([_finish(p) for p in conjuncts(f)])
    if isinstance(f, Impl):
        return Impl(_finish(f.lhs), _finish(f.rhs))
    if isinstance(f, (Or, Equiv)):
        return type(f)(_finish(f.left), _finish(f.right))
    if isinstance(f, Not):
        return Not(_finish(f.body))
    if isinstance(f, (Count, Sum)):
        return type(f)(f.result, f.var, _finish(f.body))
    if isinstance(f, Order):
        return Order(f.selected, f.var, f.degree, _finish(f.body), f.direction)
    return f


def _drop_vacuous(vs: set, body: Form) -> Form:
    """Remove total conversion atoms whose only job was to name one of the
    binder variables vs, when that variable has no other occurrence."""
    if isinstance(body, Impl):
        return Impl(_drop_in_conj(vs, body.lhs, free_vars(body.rhs)), body.rhs)
    if isinstance(body, (And, Atom)):
        return _drop_in_conj(vs, body, set())
    return body


def _drop_in_conj(vs: set, conj: Form, extern: set) -> Form:
    kept = conjuncts(conj)
    changed = True
    while changed:
        changed = False
        for p in kept:
            if not (isinstance(p, Atom) and p.pred in TOTAL_CONVERTERS
                    and len(p.args) == 2):
                continue
            elsewhere = set(extern)
            for q in kept:
                if q is not p:
                    elsewhere |= free_vars(q)
            for k, arg in enumerate(p.args):
                if (isinstance(arg, Var) and arg in vs
                        and arg not in elsewhere
                        and arg not in free_vars(p.args[1 - k])):
                    kept.remove(p)
                    changed = True
                    break
            if changed:
                break
    return mkand(kept)


# ---------------------------------------------------------------------------
# Concrete syntax


def _literal(x: Const) -> str:
    v = x.value
    text = format(v, "g") if isinstance(v, float) else str(v)
    return "'" + text.replace("'", "''") + "'"


def _side_text(x) -> str:
    return x.display if isinstance(x, ColRef) else _literal(x)


def emit_sql(q: SqlQuery) -> str:
    if q.aggregate == "count":
        sel = f"COUNT ( DISTINCT {q.select[0].display} )"
    elif q.aggregate == "sum":
        sel = f"SUM ( DISTINCT {q.select[0].display} )"
    else:
        sel = "DISTINCT " + " , ".join(c.display for c in q.select)
    lines = [f"SELECT {sel}",
             "FROM " + " , ".join(f"{rel} {al}" for rel, al in q.from_)]
    for i, c in enumerate(q.where):
        kw = "WHERE" if i == 0 else "AND"
        lines.append(f"{kw} {_side_text(c.left)} {c.op} {_side_text(c.right)}")
    return "\n".join(lines)


def sql_statements(form: Form) -> list:
    """Every query in the form, in tree order."""
    out = []

    def go(f):
        if isinstance(f, Atom):
            for a in f.args:
                if isinstance(a, SqlQueryTerm):
                    out.append(a.query)
        elif isinstance(f, (And, Or, Equiv)):
            go(f.left)
            go(f.right)
        elif isinstance(f, Impl):
            go(f.lhs)
            go(f.rhs)
        elif isinstance(f, (Not, Exists, Forall, Count, Sum, Order)):
            go(f.body)

    go(form)
    return out


# ---------------------------------------------------------------------------
# In-memory execution


def _cmp_key(v):
    if isinstance(v, Const):
        k = date_key(v)
        if k is not None:
            return ("date",) + k
        if isinstance(v.value, (int, float)):
            return ("num", v.value)
        return ("str", str(v.value))
    return ("term", repr(v))


def _cond_holds(c: SqlCond, env: dict) -> bool:
    def val(x):
        return env[(x.alias, x.position)] if isinstance(x, ColRef) else x

    l, r = val(c.left), val(c.right)
    if c.op == "=":
        return l == r
    lk, rk = _cmp_key(l), _cmp_key(r)
    if lk[0] != rk[0]:
        return False
    return {"<=": lk <= rk, "<": lk < rk, ">=": lk >= rk, ">": lk > rk}[c.op]


def run_select(q: SqlQuery, relations: dict) -> list:
    """Rows (tuples of ground terms) produced by the query."""
    envs = [{}]
    for rel, alias in q.from_:
        store = relations[rel]
        envs = [
            {**env, **{(alias, pos): cell for pos, cell in enumerate(row)}}
            for env in envs
            for row in store.rows
        ]
    sat = [e for e in envs if all(_cond_holds(c, e) for c in q.where)]
    col = q.select[0] if q.select else None
    if q.aggregate == "count":
        vals = {e[(col.alias, col.position)] for e in sat}
        return [(Const(len(vals)),)]
    if q.aggregate == "sum":
        vals = {e[(col.alias, col.position)] for e in sat}
        total = sum(v.value for v in vals if isinstance(v, Const))
        return [(Const(total),)]
    out = []
    seen = set()
    for e in sat:
        row = tuple(e[(c.alias, c.position)] for c in q.select)
        if row not in seen:
            seen.add(row)
            out.append(row)
    return out
