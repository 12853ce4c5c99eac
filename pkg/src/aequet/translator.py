"""Equivalential translation.

The translator rewrites one atom at a time.  A step finds the leftmost atom
for which some rule of the current group applies (rules are tried in file
order), replaces it by the rule body under the matching substitution, and
keeps the surrounding quantifier structure intact.  Binder variables are
opened to unique constants only along the descent path; sibling subtrees stay
closed and the binders re-close on the way back up, dropping variables that
the step consumed or left vacuous.

Rule groups run in the declared sequence, each to quiescence, with the
simplifier run between steps.  Universal rules require their conditions to be
proved from the conjunctive context: the sibling conjuncts, anything exported
from an implication antecedent into its consequent, plus whatever the caller
supplies.  Existential rules instead consume marked constants, the images of
existential variables that occur in exactly one atom reachable through
conjunctions alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .reasoner import Prover, SearchConfig, _match, _merge_assumptions
from .simplifier import SimplifyConfig, simplify
from .terms import (
    And,
    Atom,
    Count,
    Eq,
    Equiv,
    Exists,
    Forall,
    Form,
    Gen,
    Impl,
    Not,
    Or,
    Order,
    Sum,
    Var,
    conjuncts,
    free_vars,
    marked_ok,
    mkand,
    replace_terms,
    resolve,
    subst,
    term_uniques,
)
from .theory import EquivRule, Theory

_rule_fresh = [0]


class TranslationError(Exception):
    pass


@dataclass
class TranslateConfig:
    search: SearchConfig = field(default_factory=lambda: SearchConfig(limit_schedule=(4, 8)))
    simplify: SimplifyConfig = field(default_factory=SimplifyConfig)
    simplify_between: bool = True
    assume_conditions: bool = True
    prove_from_context_only: bool = False
    max_steps_per_group: int = 100
    trace: Optional[callable] = None


@dataclass
class Step:
    group: str
    rule: str
    atom: Atom
    replacement: Form
    assumptions: tuple = ()
    result: Form = None


@dataclass
class TranslationResult:
    form: Form
    steps: list
    residue: tuple
    assumptions: tuple = ()
    effective: Optional[bool] = None

    @property
    def translated(self) -> bool:
        return not self.residue


@dataclass
class _Env:
    bound: dict
    marked: frozenset
    context: tuple


def _rename_rule(rule: EquivRule):
    _rule_fresh[0] += 1
    n = _rule_fresh[0]
    vs = free_vars(rule.head) | free_vars(rule.conds) | free_vars(rule.body) | set(rule.ex_vars)
    mapping = {v: Var(f"{v.name}~r{n}") for v in vs}
    return (
        subst(rule.head, mapping),
        subst(rule.conds, mapping),
        subst(rule.body, mapping),
        tuple(mapping[v] for v in rule.ex_vars),
    )


def _context_from(parts, bound, gen):
    """Atoms asserted by the given closed subforms, opening existential
    binders with fresh constants."""
    out = []

    def collect(f, bnd):
        if isinstance(f, Atom):
            out.append(subst(f, bnd))
        elif isinstance(f, And):
            collect(f.left, bnd)
            collect(f.right, bnd)
        elif isinstance(f, Exists):
            b2 = dict(bnd)
            for v in f.vars:
                b2[v] = gen.unique(v.name)
            collect(f.body, b2)

    for p in parts:
        collect(p, bound)
    return tuple(out)


class Translator:
    def __init__(self, theory: Theory, config: TranslateConfig = None, context=()):
        self.theory = theory
        self.config = config or TranslateConfig()
        self.base_context = tuple(context)
        self.gen = Gen()

    # -- rule application ---------------------------------------------------

    def _apply_rule(self, rule: EquivRule, atom: Atom, env: _Env):
        head, conds, body, ex_vars = _rename_rule(rule)
        theta = _match(head, atom)
        if theta is None:
            return None
        if rule.existential:
            consumed = []
            for x in ex_vars:
                c = theta.get(x)
                if c is None or c not in env.marked or c in consumed:
                    return None
                consumed.append(c)
            consumed = set(consumed)
            for v, t in theta.items():
                if v in ex_vars:
                    continue
                if term_uniques(t) & consumed:
                    return None
            return subst(body, theta), ()
        goal = subst(conds, theta)
        prover = Prover(self.theory, self.config.search, context=env.context,
                        assumables=self.config.assume_conditions,
                        context_only=self.config.prove_from_context_only)
        got = prover.prove_first(goal)
        if got is None:
            return None
        return resolve(subst(body, theta), got.subst), got.assumptions

    def _step_atom(self, f: Atom, env: _Env, rules):
        opened = subst(f, env.bound)
        for rule in rules:
            got = self._apply_rule(rule, opened, env)
            if got is not None:
                new_form, assum = got
                new_free = free_vars(new_form) - set(env.bound.keys())
                if new_free:
                    new_form = Exists(tuple(sorted(new_free, key=lambda v: v.name)),
                                      new_form)
                return new_form, Step(rule.group, rule.ident, opened, new_form,
                                      assumptions=assum)
        return None

    # -- the walker -----------------------------------------------------------

    def _go(self, f: Form, env: _Env, rules):
        if isinstance(f, Atom):
            return self._step_atom(f, env, rules)
        if isinstance(f, And):
            parts = conjuncts(f)
            for i, p in enumerate(parts):
                siblings = parts[:i] + parts[i + 1:]
                env_i = replace(env, context=env.context +
                                _context_from(siblings, env.bound, self.gen))
                got = self._go(p, env_i, rules)
                if got is not None:
                    new_p, info = got
                    return mkand(parts[:i] + [new_p] + parts[i + 1:]), info
            return None
        if isinstance(f, Exists):
            bound = dict(env.bound)
            marked = set(env.marked)
            pairs = []
            for v in f.vars:
                c = self.gen.unique(v.name, marked=marked_ok(f.body, v))
                if c.marked:
                    marked.add(c)
                bound[v] = c
                pairs.append((v, c))
            got = self._go(f.body, replace(env, bound=bound, marked=frozenset(marked)), rules)
            if got is None:
                return None
            new_body, info = got
            new_body = replace_terms(new_body, {c: v for v, c in pairs})
            keep = tuple(v for v in f.vars if v in free_vars(new_body))
            return (Exists(keep, new_body) if keep else new_body), info
        if isinstance(f, Forall):
            bound = dict(env.bound)
            pairs = []
            for v in f.vars:
                c = self.gen.unique(v.name)
                bound[v] = c
                pairs.append((v, c))
            got = self._go(f.body, replace(env, bound=bound), rules)
            if got is None:
                return None
            new_body, info = got
            new_body = replace_terms(new_body, {c: v for v, c in pairs})
            keep = tuple(v for v in f.vars if v in free_vars(new_body))
            return (Forall(keep, new_body) if keep else new_body), info
        if isinstance(f, Impl):
            got = self._go(f.lhs, env, rules)
            if got is not None:
                return Impl(got[0], f.rhs), got[1]
            exported = _context_from([f.lhs], env.bound, self.gen)
            got = self._go(f.rhs, replace(env, context=env.context + exported), rules)
            if got is not None:
                return Impl(f.lhs, got[0]), got[1]
            return None
        if isinstance(f, (Or, Equiv)):
            got = self._go(f.left, env, rules)
            if got is not None:
                return type(f)(got[0], f.right), got[1]
            got = self._go(f.right, env, rules)
            if got is not None:
                return type(f)(f.left, got[0]), got[1]
            return None
        if isinstance(f, Not):
            got = self._go(f.body, env, rules)
            if got is not None:
                return Not(got[0]), got[1]
            return None
        if isinstance(f, (Count, Sum)):
            bound = dict(env.bound)
            c = self.gen.unique(f.var.name)
            bound[f.var] = c
            got = self._go(f.body, replace(env, bound=bound), rules)
            if got is None:
                return None
            new_body = replace_terms(got[0], {c: f.var})
            return type(f)(f.result, f.var, new_body), got[1]
        if isinstance(f, Order):
            bound = dict(env.bound)
            c1 = self.gen.unique(f.var.name)
            c2 = self.gen.unique(f.degree.name)
            bound[f.var] = c1
            bound[f.degree] = c2
            got = self._go(f.body, replace(env, bound=bound), rules)
            if got is None:
                return None
            new_body = replace_terms(got[0], {c1: f.var, c2: f.degree})
            return Order(f.selected, f.var, f.degree, new_body, f.direction), got[1]
        return None

    def step(self, form: Form, rules):
        env = _Env(bound={}, marked=frozenset(), context=self.base_context)
        return self._go(form, env, rules)

    # -- driving --------------------------------------------------------------

    def run_group(self, form: Form, group: str, steps: list):
        rules = self.theory.rules_in_group(group)
        if not rules:
            return form
        for _ in range(self.config.max_steps_per_group):
            got = self.step(form, rules)
            if got is None:
                return form
            form, info = got
            if self.config.simplify_between:
                form = simplify(form, self.theory, self.base_context, self.config.simplify)
            info.result = form
            steps.append(info)
            if self.config.trace:
                self.config.trace(info)
        raise TranslationError(
            f"group {group} did not reach quiescence in "
            f"{self.config.max_steps_per_group} steps")

    def translate(self, form: Form) -> TranslationResult:
        steps = []
        form = simplify(form, self.theory, self.base_context, self.config.simplify)
        for group in self.theory.group_sequence:
            form = self.run_group(form, group, steps)
        form = simplify(form, self.theory, self.base_context, self.config.simplify)
        assum = ()
        for st in steps:
            assum = _merge_assumptions(assum, st.assumptions)
        return TranslationResult(form=form, steps=steps,
                                 residue=residue(form, self.theory),
                                 assumptions=assum)


def residue(form: Form, theory: Theory) -> tuple:
    """Predicates of the form that are outside the target vocabulary."""
    out = []
    for a in _all_atoms(form):
        key = (a.pred, len(a.args))
        if not theory.is_target(*key) and key not in out:
            out.append(key)
    return tuple(out)


def _all_atoms(f: Form):
    from .terms import atoms_in

    return atoms_in(f)


def translate(form: Form, theory: Theory, context=(), config: TranslateConfig = None):
    return Translator(theory, config, context).translate(form)


def rewrite_with_rules(form: Form, rules, theory: Theory, context=()) -> Form:
    """Rewrite to quiescence with one fixed rule list and no interleaved
    simplification.  Used for functional merging, so rule conditions must
    hold outright from the form itself: nothing may be assumed here because
    the caller has no way to report it, and nothing may come from the stored
    relations because merging collapses copies of a predication, it does not
    evaluate the form against the data."""
    tr = Translator(theory,
                    TranslateConfig(simplify_between=False, assume_conditions=False,
                                    prove_from_context_only=True),
                    context)
    for _ in range(tr.config.max_steps_per_group):
        got = tr.step(form, rules)
        if got is None:
            return form
        form = got[0]
    raise TranslationError("functional merging did not reach quiescence")
