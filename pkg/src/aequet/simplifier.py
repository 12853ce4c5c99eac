"""Logical-form simplification.

A cycle of meaning-preserving rewrites run to a fixpoint: boolean
normalization, quantifier raising, equality elimination, partial evaluation
of naming predicates, ground evaluation of builtin predications, functional
merging, and removal of conjuncts already implied by the context.  The cycle
is what turns a raw translation result into something a planner can order
and an evaluator can execute; it is also where sortal mismatches surface as
an explicit mismatch form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .builtins import eval_builtin, is_builtin
from .terms import (
    And,
    Atom,
    Compound,
    Const,
    Count,
    Eq,
    Equiv,
    Exists,
    FALSE,
    FalseF,
    Forall,
    Form,
    Gen,
    Impl,
    Mismatch,
    Not,
    Or,
    Order,
    Sum,
    TRUE,
    TrueF,
    Typed,
    Unique,
    Var,
    conjuncts,
    free_vars,
    is_ground,
    mkand,
    occurs,
    subst,
    term_uniques,
    unify,
)
from .theory import Theory


@dataclass
class SimplifyConfig:
    max_cycles: int = 40
    implied_removal: bool = True
    merging: bool = True
    implied_limits: tuple = (4, 8)


def simplify(form: Form, theory: Optional[Theory] = None, context=(),
             config: Optional[SimplifyConfig] = None) -> Form:
    """Run the inferential cycle to a fixpoint."""
    config = config or SimplifyConfig()
    for _ in range(config.max_cycles):
        new = normalize(form)
        new = raise_quantifiers(new)
        new = eliminate_equalities(new)
        new = partial_eval(new)
        new = eval_ground(new)
        if theory is not None and config.merging:
            new = merge_functional(new, theory, context)
        if theory is not None and config.implied_removal:
            new = remove_implied(new, theory, context, config)
        new = normalize(new)
        if new == form:
            return new
        form = new
    return form


# ---------------------------------------------------------------------------
# Boolean normalization


def _conjunction(parts) -> Form:
    out = []
    for p in parts:
        if isinstance(p, TrueF):
            continue
        if isinstance(p, FalseF):
            return FALSE
        if isinstance(p, Mismatch):
            return p
        out.extend(conjuncts(p))
    return mkand(out)


def normalize(f: Form) -> Form:
    if isinstance(f, And):
        return _conjunction([normalize(f.left), normalize(f.right)])
    if isinstance(f, Or):
        l, r = normalize(f.left), normalize(f.right)
        if isinstance(l, TrueF) or isinstance(r, TrueF):
            return TRUE
        if isinstance(l, (FalseF, Mismatch)):
            return r
        if isinstance(r, (FalseF, Mismatch)):
            return l
        return Or(l, r)
    if isinstance(f, Not):
        b = normalize(f.body)
        if isinstance(b, TrueF):
            return FALSE
        if isinstance(b, (FalseF, Mismatch)):
            return TRUE
        if isinstance(b, Not):
            return b.body
        return Not(b)
    if isinstance(f, Impl):
        l, r = normalize(f.lhs), normalize(f.rhs)
        if isinstance(l, TrueF):
            return r
        if isinstance(l, (FalseF, Mismatch)):
            return TRUE
        if isinstance(r, TrueF):
            return TRUE
        if isinstance(r, (FalseF, Mismatch)):
            return normalize(Not(l))
        return Impl(l, r)
    if isinstance(f, Equiv):
        l, r = normalize(f.left), normalize(f.right)
        if isinstance(l, TrueF):
            return r
        if isinstance(r, TrueF):
            return l
        return Equiv(l, r)
    if isinstance(f, Exists):
        b = normalize(f.body)
        if isinstance(b, (TrueF, FalseF, Mismatch)):
            return b
        fv = free_vars(b)
        vs = tuple(v for v in f.vars if v in fv)
        return b if not vs else Exists(vs, b)
    if isinstance(f, Forall):
        b = normalize(f.body)
        if isinstance(b, TrueF):
            return TRUE
        if isinstance(b, (FalseF, Mismatch)):
            return b
        if isinstance(b, Impl) and isinstance(b.rhs, (FalseF, Mismatch)):
            return normalize(Not(Exists(f.vars, b.lhs)))
        if isinstance(b, Not):
            return normalize(Not(Exists(f.vars, b.body)))
        fv = free_vars(b)
        vs = tuple(v for v in f.vars if v in fv)
        return b if not vs else Forall(vs, b)
    if isinstance(f, Count):
        return Count(f.result, f.var, normalize(f.body))
    if isinstance(f, Sum):
        return Sum(f.result, f.var, normalize(f.body))
    if isinstance(f, Order):
        return Order(f.selected, f.var, f.degree, normalize(f.body), f.direction)
    return f


# ---------------------------------------------------------------------------
# Quantifier raising


def _freshen(vs, body, taken):
    """Rename members of vs clashing with taken."""
    clash = [v for v in vs if v in taken]
    if not clash:
        return vs, body
    n = 0
    mapping = {}
    for v in clash:
        while True:
            n += 1
            cand = Var(f"{v.name}_q{n}")
            if cand not in taken and cand not in vs:
                break
        mapping[v] = cand
    vs2 = tuple(mapping.get(v, v) for v in vs)
    return vs2, subst(body, mapping)


def raise_quantifiers(f: Form) -> Form:
    """Raise existentials through conjunctions, merge nested binders, and
    turn an existential implication antecedent into a universal."""
    if isinstance(f, And):
        l, r = raise_quantifiers(f.left), raise_quantifiers(f.right)
        if isinstance(l, Exists):
            vs, body = _freshen(l.vars, l.body, free_vars(r))
            return raise_quantifiers(Exists(vs, And(body, r)))
        if isinstance(r, Exists):
            vs, body = _freshen(r.vars, r.body, free_vars(l))
            return raise_quantifiers(Exists(vs, And(l, body)))
        return And(l, r)
    if isinstance(f, Exists):
        b = raise_quantifiers(f.body)
        if isinstance(b, Exists):
            vs, inner = _freshen(b.vars, b.body, set(f.vars))
            return Exists(f.vars + vs, inner)
        return Exists(f.vars, b)
    if isinstance(f, Forall):
        b = raise_quantifiers(f.body)
        if isinstance(b, Forall):
            vs, inner = _freshen(b.vars, b.body, set(f.vars))
            return Forall(f.vars + vs, inner)
        return Forall(f.vars, b)
    if isinstance(f, Impl):
        l, r = raise_quantifiers(f.lhs), raise_quantifiers(f.rhs)
        if isinstance(l, Exists):
            vs, body = _freshen(l.vars, l.body, free_vars(r))
            return raise_quantifiers(Forall(vs, Impl(body, r)))
        if isinstance(r, Forall):
            vs, body = _freshen(r.vars, r.body, free_vars(l))
            return raise_quantifiers(Forall(vs, Impl(l, body)))
        return Impl(l, r)
    if isinstance(f, Or):
        return Or(raise_quantifiers(f.left), raise_quantifiers(f.right))
    if isinstance(f, Not):
        return Not(raise_quantifiers(f.body))
    if isinstance(f, Equiv):
        return Equiv(raise_quantifiers(f.left), raise_quantifiers(f.right))
    if isinstance(f, Count):
        return Count(f.result, f.var, raise_quantifiers(f.body))
    if isinstance(f, Sum):
        return Sum(f.result, f.var, raise_quantifiers(f.body))
    if isinstance(f, Order):
        return Order(f.selected, f.var, f.degree, raise_quantifiers(f.body), f.direction)
    return f


# ---------------------------------------------------------------------------
# Equality elimination


def _decompose_eq(eq: Eq):
    """Rewrite one equality without reference to binders.  Returns a form or
    None when nothing structural applies."""
    l, r = eq.left, eq.right
    if l == r:
        return TRUE
    lg, rg = is_ground(l, treat_unique_as_ground=False), is_ground(r, treat_unique_as_ground=False)
    if lg and rg:
        return TRUE if unify(l, r) is not None else Mismatch(l, r)
    if isinstance(l, Compound) and isinstance(r, Compound):
        if l.functor != r.functor or len(l.args) != len(r.args):
            return Mismatch(l, r)
        return mkand([Eq(a, b) for a, b in zip(l.args, r.args)])
    if isinstance(l, Typed) and isinstance(r, Typed):
        if l.type_name != r.type_name:
            return Mismatch(l, r)
        return Eq(l.ident, r.ident)
    kinds = (Compound, Typed, Const)
    if isinstance(l, kinds) and isinstance(r, kinds) and type(l) is not type(r):
        return Mismatch(l, r)
    return None


def _pick_elimination(eq: Eq, bound_order: dict):
    """Return (var, term) when one side is an eliminable bound variable.  When
    both sides qualify the later-introduced variable is eliminated."""
    cands = []
    for v, t in ((eq.left, eq.right), (eq.right, eq.left)):
        if isinstance(v, Var) and v in bound_order and not occurs(v, t, {}):
            cands.append((bound_order[v], v, t))
    if not cands:
        return None
    cands.sort(key=lambda c: c[0], reverse=True)
    _, v, t = cands[0]
    return v, t


def _eliminate_in_scope(vs, parts, rest_sub=None):
    """Try to consume one equality defining a variable of vs among the
    conjuncts `parts`; also substitutes in `rest_sub` if given.  Returns
    (vs', parts', rest_sub', progress)."""
    order = {v: i for i, v in enumerate(vs)}
    for i, p in enumerate(parts):
        if not isinstance(p, Eq):
            continue
        d = _decompose_eq(p)
        if d is not None:
            parts = parts[:i] + conjuncts(d) + parts[i + 1:]
            return vs, parts, rest_sub, True
        pick = _pick_elimination(p, order)
        if pick is None:
            continue
        v, t = pick
        mapping = {v: t}
        parts = [subst(q, mapping) for q in parts[:i] + parts[i + 1:]]
        vs = tuple(w for w in vs if w != v)
        if rest_sub is not None:
            rest_sub = subst(rest_sub, mapping)
        return vs, parts, rest_sub, True
    return vs, parts, rest_sub, False


def eliminate_equalities(f: Form) -> Form:
    if isinstance(f, Exists):
        body = eliminate_equalities(f.body)
        vs, parts = f.vars, conjuncts(body)
        while True:
            vs, parts, _, moved = _eliminate_in_scope(vs, parts)
            if not moved:
                break
        return normalize(Exists(vs, _conjunction(parts))) if vs else normalize(_conjunction(parts))
    if isinstance(f, Forall):
        body = eliminate_equalities(f.body)
        if isinstance(body, Impl):
            vs, parts = f.vars, conjuncts(body.lhs)
            rhs = body.rhs
            while True:
                vs, parts, rhs, moved = _eliminate_in_scope(vs, parts, rhs)
                if not moved:
                    break
            inner = Impl(_conjunction(parts), rhs)
            return normalize(Forall(vs, inner)) if vs else normalize(inner)
        return normalize(Forall(f.vars, body))
    if isinstance(f, And):
        parts = [eliminate_equalities(p) for p in conjuncts(f)]
        out = []
        for p in parts:
            if isinstance(p, Eq):
                d = _decompose_eq(p)
                out.extend(conjuncts(d) if d is not None else [p])
            else:
                out.append(p)
        return _conjunction(out)
    if isinstance(f, Eq):
        d = _decompose_eq(f)
        return d if d is not None else f
    if isinstance(f, Or):
        return Or(eliminate_equalities(f.left), eliminate_equalities(f.right))
    if isinstance(f, Not):
        return Not(eliminate_equalities(f.body))
    if isinstance(f, Impl):
        return Impl(eliminate_equalities(f.lhs), eliminate_equalities(f.rhs))
    if isinstance(f, Equiv):
        return Equiv(eliminate_equalities(f.left), eliminate_equalities(f.right))
    if isinstance(f, Count):
        return Count(f.result, f.var, eliminate_equalities(f.body))
    if isinstance(f, Sum):
        return Sum(f.result, f.var, eliminate_equalities(f.body))
    if isinstance(f, Order):
        return Order(f.selected, f.var, f.degree, eliminate_equalities(f.body), f.direction)
    return f


# ---------------------------------------------------------------------------
# Partial evaluation of naming predications


def _partial_eval_atom(a: Atom):
    """Naming predicates with enough instantiation become equalities; a
    deterministic builtin solution becomes the conjunction of its bindings."""
    if a.pred == "named_object" and len(a.args) == 3:
        obj, typ, ident = a.args
        if isinstance(typ, Const) and isinstance(typ.value, str):
            return Eq(obj, Typed(typ.value, ident))
        return None
    if a.pred == "amount_object" and len(a.args) == 3:
        obj, unit, num = a.args
        return Eq(obj, Compound("amount", (num, unit)))
    if a.pred == "sql_number_convert" and len(a.args) == 2:
        return Eq(a.args[0], a.args[1])
    if a.pred == "sql_date_convert" and len(a.args) == 2:
        if term_uniques(a):
            return None
        if is_ground(a.args[0]) != is_ground(a.args[1]):
            sols = eval_builtin(a, {})
            if sols and len(sols) == 1 and sols[0]:
                return mkand([Eq(v, t) for v, t in sols[0].items()])
        return None
    if a.pred == "plus" and len(a.args) == 3:
        if term_uniques(a):
            return None
        if sum(1 for t in a.args if is_ground(t)) == 2:
            sols = eval_builtin(a, {})
            if sols and len(sols) == 1 and sols[0]:
                return mkand([Eq(v, t) for v, t in sols[0].items()])
        return None
    return None


def partial_eval(f: Form) -> Form:
    if isinstance(f, Atom):
        got = _partial_eval_atom(f)
        return got if got is not None else f
    if isinstance(f, And):
        return _conjunction([partial_eval(p) for p in conjuncts(f)])
    if isinstance(f, Or):
        return Or(partial_eval(f.left), partial_eval(f.right))
    if isinstance(f, Not):
        return Not(partial_eval(f.body))
    if isinstance(f, Impl):
        return Impl(partial_eval(f.lhs), partial_eval(f.rhs))
    if isinstance(f, Equiv):
        return Equiv(partial_eval(f.left), partial_eval(f.right))
    if isinstance(f, Exists):
        return Exists(f.vars, partial_eval(f.body))
    if isinstance(f, Forall):
        return Forall(f.vars, partial_eval(f.body))
    if isinstance(f, Count):
        return Count(f.result, f.var, partial_eval(f.body))
    if isinstance(f, Sum):
        return Sum(f.result, f.var, partial_eval(f.body))
    if isinstance(f, Order):
        return Order(f.selected, f.var, f.degree, partial_eval(f.body), f.direction)
    return f


# ---------------------------------------------------------------------------
# Ground evaluation of builtin predications


def eval_ground(f: Form) -> Form:
    """Ground builtin predications that check out are replaced by true.
    False ones are left in place; only equalities may turn into mismatch."""
    if isinstance(f, Atom):
        if is_builtin(f.pred, len(f.args)) and is_ground(f, treat_unique_as_ground=False):
            sols = eval_builtin(f, {})
            if sols:
                return TRUE
        return f
    if isinstance(f, And):
        return _conjunction([eval_ground(p) for p in conjuncts(f)])
    if isinstance(f, Or):
        return normalize(Or(eval_ground(f.left), eval_ground(f.right)))
    if isinstance(f, Not):
        return normalize(Not(eval_ground(f.body)))
    if isinstance(f, Impl):
        return normalize(Impl(eval_ground(f.lhs), eval_ground(f.rhs)))
    if isinstance(f, Equiv):
        return normalize(Equiv(eval_ground(f.left), eval_ground(f.right)))
    if isinstance(f, Exists):
        return normalize(Exists(f.vars, eval_ground(f.body)))
    if isinstance(f, Forall):
        return normalize(Forall(f.vars, eval_ground(f.body)))
    if isinstance(f, Count):
        return Count(f.result, f.var, eval_ground(f.body))
    if isinstance(f, Sum):
        return Sum(f.result, f.var, eval_ground(f.body))
    if isinstance(f, Order):
        return Order(f.selected, f.var, f.degree, eval_ground(f.body), f.direction)
    return f


# ---------------------------------------------------------------------------
# Functional merging


def merge_functional(f: Form, theory: Theory, context=()) -> Form:
    """Apply the merge rules derived from function declarations.  Two
    predications agreeing on a key collapse into one plus equalities on the
    dependents; the second copy may live in the conjunctive context."""
    rules = theory.merge_rules()
    if not rules:
        return f
    from .translator import rewrite_with_rules

    return rewrite_with_rules(f, rules, theory, context)


# ---------------------------------------------------------------------------
# Context-implied conjunct removal


def remove_implied(f: Form, theory: Theory, context=(), config=None) -> Form:
    """Drop conjuncts provable, without assumptions, from the context plus
    their sibling conjuncts.  Bound variables are frozen to unique constants
    for the proof so that it cannot instantiate anything shared."""
    config = config or SimplifyConfig()
    from .reasoner import Prover, SearchConfig

    sc = SearchConfig(limit_schedule=config.implied_limits)
    gen = Gen()

    def provable(goal: Atom, ctx, theta) -> bool:
        p = Prover(theory, sc, context=tuple(subst(c, theta) for c in ctx),
                   assumables=False)
        return p.prove_first(subst(goal, theta)) is not None

    def scan(parts, ctx, theta):
        kept = []
        for i, p in enumerate(parts):
            if isinstance(p, Atom):
                siblings = tuple(q for q in kept + parts[i + 1:] if isinstance(q, Atom))
                if provable(p, tuple(ctx) + siblings, theta):
                    continue
            kept.append(p)
        return kept

    def frozen(theta, vs):
        theta = dict(theta)
        for v in vs:
            theta[v] = gen.unique(v.name)
        return theta

    def go(g, ctx, theta):
        if isinstance(g, And):
            parts = [go(p, ctx, theta) for p in conjuncts(g)]
            return _conjunction(scan(parts, ctx, theta))
        if isinstance(g, Exists):
            return normalize(Exists(g.vars, go(g.body, ctx, frozen(theta, g.vars))))
        if isinstance(g, Forall):
            return normalize(Forall(g.vars, go(g.body, ctx, frozen(theta, g.vars))))
        if isinstance(g, Impl):
            lhs_parts = scan(conjuncts(g.lhs), ctx, theta)
            lhs_atoms = tuple(a for a in lhs_parts if isinstance(a, Atom))
            rhs = go(g.rhs, tuple(ctx) + lhs_atoms, theta)
            return normalize(Impl(_conjunction(lhs_parts), rhs))
        if isinstance(g, Atom):
            return TRUE if provable(g, tuple(ctx), theta) else g
        return g

    return go(f, tuple(context), {})
