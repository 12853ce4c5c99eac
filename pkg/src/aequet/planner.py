"""Evaluation planning.

A form is effectively evaluable when every predicate in it belongs to the
target vocabulary and its conjunctions can be rearranged so that each
conjunct is callable at the point it is reached: a database atom can run
under any instantiation and binds everything, while arithmetic, naming and
executable predicates carry call patterns saying which argument positions
must be instantiated before the call and which become instantiated after.

The rearrangement works on an abstract instantiation state, a set of
variables known to be bound.  Binding only ever grows, so picking any
callable conjunct first never blocks another, and the greedy pass is
complete.  A universally quantified implication is evaluable when its
antecedent plans as a generator that binds every quantified variable and
its consequent then plans under those bindings; a bare universal does not
plan at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .terms import (
    And,
    Atom,
    Count,
    Eq,
    Exists,
    FalseF,
    Forall,
    Form,
    Impl,
    Mismatch,
    Not,
    Or,
    Order,
    Sum,
    TrueF,
    Var,
    conjuncts,
    free_vars,
    mkand,
    term_vars,
)
from .theory import Theory


@dataclass
class PlanResult:
    effective: bool
    form: Optional[Form]
    offenders: tuple = ()
    reason: str = ""


def _atom_exports(atom: Atom, state: set, theory: Theory) -> Optional[set]:
    """The variables an atom call would newly bind, or None if no call
    pattern is satisfied."""
    patterns = theory.call_patterns_for(atom.pred, len(atom.args))
    if not patterns:
        return None
    for ins, outs in patterns:
        if all(term_vars(atom.args[i]) <= state for i in ins):
            new = set()
            for o in outs:
                new |= term_vars(atom.args[o]) - state
            return new
    return None


def _plan(f: Form, state: set, theory: Theory):
    """Return (planned form, exported variables) or None."""
    if isinstance(f, (TrueF, FalseF, Mismatch)):
        return f, set()
    if isinstance(f, Atom):
        got = _atom_exports(f, state, theory)
        return None if got is None else (f, got)
    if isinstance(f, Eq):
        l_ok = term_vars(f.left) <= state
        r_ok = term_vars(f.right) <= state
        if l_ok and r_ok:
            return f, set()
        if l_ok:
            return f, term_vars(f.right) - state
        if r_ok:
            return f, term_vars(f.left) - state
        return None
    if isinstance(f, And):
        got = _rearrange(conjuncts(f), state, theory)
        if got is None:
            return None
        ordered, exports = got
        return mkand(ordered), exports
    if isinstance(f, Exists):
        got = _plan(f.body, set(state), theory)
        if got is None:
            return None
        body, exports = got
        if not (set(f.vars) <= state | exports):
            return None
        return Exists(f.vars, body), exports - set(f.vars)
    if isinstance(f, Forall):
        if not isinstance(f.body, Impl):
            return None
        got = _plan_impl(f.vars, f.body.lhs, f.body.rhs, state, theory)
        if got is None:
            return None
        lhs, rhs = got
        return Forall(f.vars, Impl(lhs, rhs)), set()
    if isinstance(f, Impl):
        got = _plan_impl((), f.lhs, f.rhs, state, theory)
        if got is None:
            return None
        lhs, rhs = got
        return Impl(lhs, rhs), set()
    if isinstance(f, Or):
        lg = _plan(f.left, set(state), theory)
        rg = _plan(f.right, set(state), theory)
        if lg is None or rg is None:
            return None
        return Or(lg[0], rg[0]), lg[1] & rg[1]
    if isinstance(f, Not):
        if not (free_vars(f) <= state):
            return None
        got = _plan(f.body, set(state), theory)
        if got is None:
            return None
        return Not(got[0]), set()
    if isinstance(f, (Count, Sum)):
        got = _plan(f.body, set(state), theory)
        if got is None:
            return None
        body, exports = got
        if f.var not in state | exports:
            return None
        out = {f.result} - state if isinstance(f.result, Var) else set()
        return type(f)(f.result, f.var, body), out
    if isinstance(f, Order):
        got = _plan(f.body, set(state), theory)
        if got is None:
            return None
        body, exports = got
        if not ({f.var, f.degree} <= state | exports):
            return None
        out = {f.selected} - state if isinstance(f.selected, Var) else set()
        return Order(f.selected, f.var, f.degree, body, f.direction), out
    return None


def _plan_impl(vs, lhs, rhs, state, theory):
    got = _plan(lhs, set(state), theory)
    if got is None:
        return None
    lhs_p, lex = got
    if not (set(vs) <= state | lex):
        return None
    got = _plan(rhs, state | lex | set(vs), theory)
    if got is None:
        return None
    return lhs_p, got[0]


def _rearrange(parts, state, theory):
    """Greedy: repeatedly take the leftmost conjunct callable under the
    current instantiation state."""
    state = set(state)
    pending = list(parts)
    ordered = []
    exports = set()
    progress = True
    while pending and progress:
        progress = False
        for i, p in enumerate(pending):
            got = _plan(p, state, theory)
            if got is not None:
                planned, new = got
                ordered.append(planned)
                state |= new
                exports |= new
                del pending[i]
                progress = True
                break
    if pending:
        return None
    return ordered, exports


def plan(form: Form, theory: Theory, instantiated=()) -> PlanResult:
    """Order the form for evaluation and classify it."""
    offenders = tuple(
        key for key in _pred_keys(form) if not theory.is_target(*key)
    )
    if offenders:
        return PlanResult(False, None, offenders,
                          "predicates outside the target vocabulary")
    got = _plan(form, set(instantiated), theory)
    if got is None:
        return PlanResult(False, None, (), "no evaluable ordering exists")
    return PlanResult(True, got[0])


def plan_generator(form: Form, theory: Theory, instantiated=()) -> Optional[Form]:
    """Plan a conjunction as a generator: callable throughout and binding
    every free variable by the end."""
    got = _plan(form, set(instantiated), theory)
    if got is None:
        return None
    planned, exports = got
    if not (free_vars(form) <= set(instantiated) | exports):
        return None
    return planned


def classify_effective(form: Form, theory: Theory) -> bool:
    return plan(form, theory).effective


def _pred_keys(form: Form):
    from .terms import atoms_in

    seen = []
    for a in atoms_in(form):
        key = (a.pred, len(a.args))
        if key not in seen:
            seen.append(key)
    return seen
