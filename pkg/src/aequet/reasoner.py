"""Abductive Horn-clause reasoner with cost-bounded iterative deepening.

prove() enumerates proofs of a goal from the theory's clauses, the database,
the builtin evaluators, the conjunctive context (at no cost), and assumable
declarations (recording an Assumption).  Search runs depth-first under a cost
limit taken from a schedule: each rule or row application costs one unit, and
a branch is cut as soon as cost spent plus one unit per pending goal exceeds
the limit.  A cut sets a flag so the next limit is tried; exhausting a limit
without a cut is a definitive failure.

Loop handling: a goal identical to an ancestor is pruned (also checked one
step ahead when a clause is about to stack its body); a goal merely subsumed
by an ancestor costs a penalty instead.  Ground goals that were proved without
assumptions are cached and, when the recorded cost is small relative to the
limit, later attempts yield the cached success and search no further.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

from .builtins import eval_builtin
from .terms import (
    And,
    Atom,
    Const,
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
    Sum,
    Term,
    TrueF,
    Var,
    conjuncts,
    free_vars,
    is_ground,
    is_list,
    mklist,
    resolve,
    subst,
    unify,
    unify_atoms,
)
from .theory import DATABASE, Theory

_fresh = itertools.count(1)


def rename_clause(head, body):
    """Fresh variables throughout one clause."""
    n = next(_fresh)
    mapping = {v: Var(f"{v.name}~{n}") for v in (free_vars(head) | free_vars(body))}
    return subst(head, mapping), subst(body, mapping)


def rename_form(f):
    n = next(_fresh)
    mapping = {v: Var(f"{v.name}~{n}") for v in free_vars(f)}
    return subst(f, mapping)


@dataclass(frozen=True)
class Assumption:
    goal: Atom
    justification: Term
    kind: str
    cost: float
    context: tuple = ()

    @property
    def key(self):
        return (self.goal, self.justification)


@dataclass
class SearchConfig:
    limit_schedule: tuple = (8, 16, 32, 64)
    rule_cost: float = 1.0
    pending_estimate: float = 1.0
    ground_cache_fraction: float = 1 / 3
    subsumption_penalty: float = 2.0
    backward: bool = False
    trace: Optional[Callable] = None


@dataclass
class Stats:
    cuts: int = 0
    loop_prunes: int = 0
    lookahead_prunes: int = 0
    subsumption_penalties: int = 0
    cache_hits: int = 0
    cache_stores: int = 0
    clause_applications: int = 0
    final_limit: float = 0


@dataclass
class TraceEvent:
    kind: str
    detail: dict


@dataclass
class ProofResult:
    subst: dict
    assumptions: tuple
    cost: float


@dataclass
class _State:
    limit: float
    cut: bool = False
    cache: dict = field(default_factory=dict)
    stats: Stats = None


def _match(pattern, instance, s=None):
    """One-way: bind pattern variables only."""
    if s is None:
        s = {}
    if isinstance(pattern, Atom):
        if not isinstance(instance, Atom) or pattern.key != instance.key:
            return None
        for p, i in zip(pattern.args, instance.args):
            s = _match(p, i, s)
            if s is None:
                return None
        return s
    from .terms import Compound, Typed

    if isinstance(pattern, Var):
        if pattern in s:
            return s if s[pattern] == instance else None
        s = dict(s)
        s[pattern] = instance
        return s
    if isinstance(pattern, Compound) and isinstance(instance, Compound):
        if pattern.functor != instance.functor or len(pattern.args) != len(instance.args):
            return None
        for p, i in zip(pattern.args, instance.args):
            s = _match(p, i, s)
            if s is None:
                return None
        return s
    if isinstance(pattern, Typed) and isinstance(instance, Typed):
        if pattern.type_name != instance.type_name:
            return None
        return _match(pattern.ident, instance.ident, s)
    return s if pattern == instance else None


class Prover:
    def __init__(self, theory: Theory, config: SearchConfig = None,
                 context=(), assumables=True, eval_closed=False, stats: Stats = None,
                 context_only=False):
        self.theory = theory
        self.config = config or SearchConfig()
        self.context = tuple(context)
        self.assumables = assumables
        self.eval_closed = eval_closed
        self.stats = stats if stats is not None else Stats()
        # context_only: the conjunctive context is the sole source of atomic
        # facts (no rows, clauses or assumables).  Builtin evaluation stays.
        self.context_only = context_only
        self.state: _State = None

    def _trace(self, kind, **detail):
        if self.config.trace:
            self.config.trace(TraceEvent(kind, detail))

    # -- public -------------------------------------------------------------

    def prove(self, form: Form, s0: Optional[dict] = None):
        """Iterate ProofResults under the limit schedule."""
        s0 = s0 or {}
        for limit in self.config.limit_schedule:
            self.state = _State(limit=limit, stats=self.stats)
            self.stats.final_limit = limit
            found = False
            budget_in = limit
            for s, assum, cost in self._seq([form], s0, (), 0.0, 0, ()):
                found = True
                self._trace("prove_exit", units_in=budget_in, units_out=limit - cost,
                            goal=resolve(form, s), assumptions=assum)
                yield ProofResult(s, assum, cost)
            if found:
                return
            if not self.state.cut:
                return

    def prove_first(self, form: Form, s0=None) -> Optional[ProofResult]:
        for r in self.prove(form, s0):
            return r
        return None

    # -- sequencing ---------------------------------------------------------

    def _seq(self, goals, s, assum, spent, pending, anc):
        """Prove goals left to right; yields (s, assumptions, total cost spent here)."""
        if not goals:
            yield s, assum, spent
            return
        head, rest = goals[0], goals[1:]
        for s1, a1, c1 in self._one(head, s, assum, spent, pending + len(rest), anc):
            yield from self._seq(rest, s1, a1, c1, pending, anc)

    def _check_budget(self, spent, pending) -> bool:
        if spent + self.config.pending_estimate * (pending + 1) > self.state.limit:
            self.state.cut = True
            self.stats.cuts += 1
            return False
        return True

    # -- single goal ---------------------------------------------------------

    def _one(self, goal, s, assum, spent, pending, anc):
        if not self._check_budget(spent, pending):
            return
        g = resolve(goal, s)

        if isinstance(g, TrueF):
            yield s, assum, spent
            return
        if isinstance(g, FalseF) or isinstance(g, Mismatch):
            return
        if isinstance(g, And):
            yield from self._seq(conjuncts(g), s, assum, spent, pending, anc)
            return
        if isinstance(g, Eq):
            s1 = unify(g.left, g.right, s)
            if s1 is not None:
                yield s1, assum, spent
            return
        if isinstance(g, Exists):
            n = next(_fresh)
            body = subst(g.body, {v: Var(f"{v.name}~e{n}") for v in g.vars})
            yield from self._one(body, s, assum, spent, pending, anc)
            return
        if isinstance(g, Or):
            yield from self._one(g.left, s, assum, spent, pending, anc)
            yield from self._one(g.right, s, assum, spent, pending, anc)
            return
        if isinstance(g, Not):
            if not self.eval_closed:
                raise ValueError("negation is only evaluable in closed evaluation mode")
            for _ in self._one(g.body, s, assum, spent, pending, anc):
                return
            yield s, assum, spent
            return
        if isinstance(g, Impl):
            if not self.eval_closed:
                raise ValueError("implication goals are only evaluable in closed mode")
            vs = tuple(free_vars(g.lhs))
            yield from self._eval_impl(vs, g.lhs, g.rhs, s, assum, spent, pending, anc)
            return
        if isinstance(g, Forall):
            body = g.body
            if isinstance(body, Impl):
                yield from self._eval_impl(g.vars, body.lhs, body.rhs, s, assum, spent, pending, anc)
            else:
                raise ValueError("a bare forall is not effectively evaluable")
            return
        if isinstance(g, (Count, Sum)):
            yield from self._eval_aggregate(g, s, assum, spent, pending, anc)
            return
        if isinstance(g, Atom):
            yield from self._atom(g, s, assum, spent, pending, anc)
            return
        raise ValueError(f"cannot prove {type(g).__name__}")

    # -- atoms ---------------------------------------------------------------

    def _atom(self, g: Atom, s, assum, spent, pending, anc):
        # loop check against ancestors
        for a in anc:
            a_now = resolve(a, s)
            if a_now == g:
                self.stats.loop_prunes += 1
                return
            if _match(rename_form(a_now), g) is not None:
                self.stats.subsumption_penalties += 1
                spent = spent + self.config.subsumption_penalty
                if not self._check_budget(spent, pending):
                    return
                break

        if g.pred == "sql_select" and len(g.args) == 2:
            yield from self._sql_select(g, s, assum, spent)
            return

        ground = is_ground(g)
        cache_key = g if ground else None
        if cache_key is not None and cache_key in self.state.cache:
            cost0 = self.state.cache[cache_key]
            if cost0 <= self.state.limit * self.config.ground_cache_fraction:
                self.stats.cache_hits += 1
                yield s, assum, spent
                return

        built = eval_builtin(g, s)
        if built is not None:
            for s1 in built:
                yield s1, assum, spent
            return

        first_proof_cost = None

        # the conjunctive context is free
        for c in self.context:
            s1 = unify_atoms(g, resolve(c, s), s)
            if s1 is not None:
                if first_proof_cost is None and cache_key is not None:
                    first_proof_cost = 0
                    self._store_cache(cache_key, 0)
                yield s1, assum, spent

        if self.context_only:
            return

        # database rows
        store = self.theory.relations.get(g.pred)
        if store is not None and store.arity == len(g.args):
            for row in store.rows:
                s1 = s
                for a, v in zip(g.args, row):
                    s1 = unify(a, v, s1)
                    if s1 is None:
                        break
                if s1 is not None:
                    cost = spent + self.config.rule_cost
                    if not self._check_budget(cost, pending):
                        continue
                    if first_proof_cost is None and cache_key is not None:
                        first_proof_cost = self.config.rule_cost
                        self._store_cache(cache_key, first_proof_cost)
                    yield s1, assum, cost

        # clauses
        for clause in self.theory.clauses_for(g.pred, len(g.args), backward=self.config.backward):
            head, body = rename_clause(clause.head, clause.body)
            s1 = unify_atoms(g, head, s)
            if s1 is None:
                continue
            body_goals = [b for b in conjuncts(resolve(body, s1)) if not isinstance(b, TrueF)]
            if self._lookahead_loop(body_goals, g, anc, s1):
                continue
            body_goals = self._apply_quick_tests(body_goals, s1)
            if body_goals is None:
                continue
            self.stats.clause_applications += 1
            self._trace("clause", ident=clause.ident, goal=g)
            base = spent + self.config.rule_cost
            for s2, a2, c2 in self._seq(body_goals, s1, assum, base, pending, anc + (g,)):
                if a2 == assum and cache_key is not None and first_proof_cost is None:
                    first_proof_cost = c2 - spent
                    self._store_cache(cache_key, first_proof_cost)
                yield s2, a2, c2

        # abductive leaves
        if self.assumables:
            for decl in self.theory.assumables_for(g.pred, len(g.args)):
                n = next(_fresh)
                mapping = {v: Var(f"{v.name}~a{n}")
                           for v in (free_vars(decl.goal) | free_vars(decl.cond)
                                     | free_vars(decl.justification))}
                pat = subst(decl.goal, mapping)
                cond = subst(decl.cond, mapping)
                just = subst(decl.justification, mapping)
                s1 = unify_atoms(g, pat, s)
                if s1 is None:
                    continue
                sub = Prover(self.theory, self.config, self.context,
                             assumables=False, eval_closed=self.eval_closed, stats=self.stats)
                sub.state = self.state
                for s2, a2, c2 in sub._seq([cond], s1, assum, spent, pending, anc + (g,)):
                    goal_inst = resolve(g, s2)
                    just_inst = resolve(just, s2)
                    key = (goal_inst, just_inst)
                    if any(x.key == key for x in a2):
                        yield s2, a2, c2
                        continue
                    cost = c2 + decl.cost
                    if not self._check_budget(cost, pending):
                        continue
                    new = Assumption(
                        goal=goal_inst,
                        justification=just_inst,
                        kind=decl.kind,
                        cost=decl.cost,
                        context=tuple(resolve(c, s2) for c in self.context),
                    )
                    self._trace("assume", assumption=new)
                    yield s2, a2 + (new,), cost

    def _store_cache(self, key, cost):
        if key not in self.state.cache:
            self.state.cache[key] = cost
            self.stats.cache_stores += 1

    def _lookahead_loop(self, body_goals, g, anc, s):
        for b in body_goals:
            if isinstance(b, Atom):
                b_res = resolve(b, s)
                if b_res == g or any(b_res == resolve(a, s) for a in anc):
                    self.stats.lookahead_prunes += 1
                    return True
        return False

    def _apply_quick_tests(self, body_goals, s):
        """quick_failure: a matching subgoal kills the clause.  quick_determinism:
        a matching subgoal is promoted to the front."""
        out = list(body_goals)
        for b in out:
            if not isinstance(b, Atom):
                continue
            for qt in self.theory.quick_failure:
                m = _match(rename_form(qt.pattern), resolve(b, s))
                if m is not None and self._quick_cond(qt.cond, m):
                    return None
        for i, b in enumerate(out):
            if not isinstance(b, Atom):
                continue
            promoted = False
            for qt in self.theory.quick_determinism:
                pat = rename_form(qt.pattern)
                m = _match(pat, resolve(b, s))
                if m is not None and self._quick_cond(qt.cond, m):
                    out.insert(0, out.pop(i))
                    promoted = True
                    break
            if promoted:
                break
        return out

    def _quick_cond(self, cond: Form, m: dict) -> bool:
        """Cheap instantiation checks only."""
        if isinstance(cond, TrueF):
            return True
        if isinstance(cond, And):
            return self._quick_cond(cond.left, m) and self._quick_cond(cond.right, m)
        if isinstance(cond, Not):
            return not self._quick_cond(cond.body, m)
        if isinstance(cond, Eq):
            return unify(resolve(subst(cond.left, m), {}), resolve(subst(cond.right, m), {})) is not None
        if isinstance(cond, Atom) and len(cond.args) == 1:
            t = subst(cond.args[0], m)
            if cond.pred == "ground":
                return is_ground(t)
            if cond.pred == "nonvar":
                return not isinstance(t, Var)
            if cond.pred == "var":
                return isinstance(t, Var)
        built = eval_builtin(subst(cond, m) if isinstance(cond, Atom) else cond, {})
        return bool(built)

    # -- sql, aggregates, quantified evaluation -------------------------------

    def _sql_select(self, g, s, assum, spent):
        from .sqlgen import SqlQueryTerm, run_select

        vars_t, q = resolve(g.args[0], s), resolve(g.args[1], s)
        if not isinstance(q, SqlQueryTerm) or not is_list(vars_t):
            return
        for row in sorted(run_select(q.query, self.theory.relations), key=repr):
            s1 = unify(vars_t, mklist(row), s)
            if s1 is not None:
                yield s1, assum, spent

    def _eval_aggregate(self, g, s, assum, spent, pending, anc):
        n = next(_fresh)
        v = Var(f"{g.var.name}~g{n}")
        body = subst(g.body, {g.var: v})
        values = []
        a_all = assum
        cost = spent
        for s1, a1, c1 in self._one(body, s, assum, spent, pending, anc):
            val = resolve(v, s1)
            if not is_ground(val):
                raise ValueError("aggregate over an unbound variable")
            if val not in values:
                values.append(val)
            a_all = _merge_assumptions(a_all, a1)
            cost = max(cost, c1)
        if isinstance(g, Count):
            result = Const(len(values))
        else:
            total = 0
            for val in values:
                if not (isinstance(val, Const) and isinstance(val.value, (int, float))):
                    raise ValueError("sum over a non-numeric value")
                total += val.value
            result = Const(total)
        s1 = unify(g.result, result, s)
        if s1 is not None:
            yield s1, a_all, cost

    def _eval_impl(self, vars_, lhs, rhs, s, assum, spent, pending, anc):
        res = self.prove_forall_impl(vars_, lhs, rhs, strategy="extensional",
                                     s0=s, spent=spent, pending=pending, anc=anc)
        if res is not None:
            yield s, _merge_assumptions(assum, res.assumptions), res.cost

    # -- universally quantified implications ----------------------------------

    def prove_forall_impl(self, vars_, lhs, rhs, strategy="auto",
                          s0=None, spent=0.0, pending=0, anc=()):
        s0 = s0 or {}
        if strategy == "auto":
            strategy = "extensional" if self._finite_lhs(lhs, vars_, s0) else "intensional"
        if strategy == "intensional":
            return self._forall_intensional(vars_, lhs, rhs, s0, spent, pending, anc)
        return self._forall_extensional(vars_, lhs, rhs, s0, spent, pending, anc)

    def _finite_lhs(self, lhs, vars_, s0):
        from .planner import plan_generator

        lhs_r = resolve(lhs, s0)
        if any(not self.theory.is_target(a.pred, len(a.args)) for a in _lhs_atoms(lhs_r)):
            return False
        outer = free_vars(lhs_r) - set(vars_)
        return plan_generator(lhs_r, self.theory, instantiated=outer) is not None

    def _forall_intensional(self, vars_, lhs, rhs, s0, spent, pending, anc):
        from .terms import Gen, replace_bound

        gen = Gen()
        cmap = {v: gen.unique(v.name) for v in vars_}
        lhs_i = subst(resolve(lhs, s0), cmap)
        rhs_i = subst(resolve(rhs, s0), cmap)
        opened, _, _ = replace_bound(lhs_i, gen, kinds=("exists",))
        extra = tuple(c for c in conjuncts(opened) if isinstance(c, Atom))
        sub = Prover(self.theory, self.config, self.context + extra,
                     assumables=self.assumables, eval_closed=self.eval_closed,
                     stats=self.stats)
        best = None
        for r in sub.prove(rhs_i):
            best = r
            break
        if best is None:
            return None
        return ForallResult(cases=(), assumptions=best.assumptions, cost=best.cost,
                            strategy="intensional")

    def _forall_extensional(self, vars_, lhs, rhs, s0, spent, pending, anc):
        n = next(_fresh)
        vmap = {v: Var(f"{v.name}~f{n}") for v in vars_}
        lhs_i = subst(resolve(lhs, s0), vmap)
        rhs_i = subst(resolve(rhs, s0), vmap)
        case_vars = tuple(vmap[v] for v in vars_)
        solutions = []
        seen = set()
        all_assum: tuple = ()
        cost = spent
        for s1, a1, c1 in self._one(lhs_i, s0, (), spent, pending, anc):
            binding = tuple(resolve(cv, s1) for cv in case_vars)
            if binding in seen:
                continue
            seen.add(binding)
            solutions.append((binding, s1))
            all_assum = _merge_assumptions(all_assum, a1)
            cost = max(cost, c1)
        cases = []
        for binding, s1 in solutions:
            got = None
            for s2, a2, c2 in self._one(rhs_i, s1, (), spent, pending, anc):
                got = (s2, a2, c2)
                break
            if got is None:
                return None
            _, a2, c2 = got
            all_assum = _merge_assumptions(all_assum, a2)
            cost = max(cost, c2)
            cases.append((dict(zip(vars_, binding)), a2))
        return ForallResult(cases=tuple(cases), assumptions=all_assum, cost=cost,
                            strategy="extensional")


@dataclass
class ForallResult:
    cases: tuple
    assumptions: tuple
    cost: float
    strategy: str


def _lhs_atoms(f):
    out = []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, And):
            stack.extend((g.left, g.right))
        elif isinstance(g, Exists):
            stack.append(g.body)
        elif isinstance(g, Atom):
            out.append(g)
    return out


def _merge_assumptions(a, b):
    out = list(a)
    keys = {x.key for x in a}
    for x in b:
        if x.key not in keys:
            keys.add(x.key)
            out.append(x)
    return tuple(out)


# ---------------------------------------------------------------------------
# Convenience wrappers


def prove(form, theory, context=(), config=None, assumables=True,
          eval_closed=False, stats=None):
    p = Prover(theory, config, context, assumables, eval_closed, stats)
    yield from p.prove(form)


def prove_first(form, theory, context=(), config=None, assumables=True,
                eval_closed=False, stats=None):
    p = Prover(theory, config, context, assumables, eval_closed, stats)
    return p.prove_first(form)


def prove_neg(goal: Atom, theory, context=(), config=None, stats=None):
    """Try to show the theory plus context refutes the goal, using the
    dedicated neg clauses."""
    p = Prover(theory, config, context, assumables=False, stats=stats)
    for clause in theory.neg_clauses_for(goal.pred, len(goal.args)):
        head, body = rename_clause(clause.head, clause.body)
        s = unify_atoms(goal, head)
        if s is None:
            continue
        got = p.prove_first(resolve(body, s))
        if got is not None:
            return got
    return None


def check_assumptions(assumptions, theory, config=None, stats=None):
    """Split assumptions into (kept, violated)."""
    kept, violated = [], []
    for a in assumptions:
        bad = prove_neg(a.goal, theory, context=a.context, config=config, stats=stats)
        (violated if bad is not None else kept).append(a)
    return kept, violated


def compile_lemmas(theory, preds, config=None, max_arith=3):
    """Implicational lemmas: prove each predication allowing arithmetic atoms
    and at most one conceptual atom as assumed leaves; emit
    arithmetic -> (conceptual -> goal) clauses."""
    from .theory import ARITHMETIC, CONCEPTUAL

    out = []
    config = config or SearchConfig(limit_schedule=(6, 10))
    for pred, arity in preds:
        goal = Atom(pred, tuple(Var(f"L{i}") for i in range(arity)))
        lemmas = _lemma_search(goal, theory, config, max_arith)
        out.extend(lemmas)
    return out


def _lemma_search(goal, theory, config, max_arith):
    results = []

    def go(goals, s, arith, conceptual, depth):
        if depth > 6:
            return
        if not goals:
            g = resolve(goal, s)
            results.append((g, tuple(resolve(a, s) for a in arith),
                            tuple(resolve(c, s) for c in conceptual)))
            return
        g, rest = resolve(goals[0], s), goals[1:]
        if isinstance(g, TrueF):
            go(rest, s, arith, conceptual, depth)
            return
        if isinstance(g, And):
            go(conjuncts(g) + rest, s, arith, conceptual, depth)
            return
        if isinstance(g, Eq):
            s1 = unify(g.left, g.right, s)
            if s1 is not None:
                go(rest, s1, arith, conceptual, depth)
            return
        if not isinstance(g, Atom):
            return
        cls = theory.predicate_class(g.pred, len(g.args))
        if cls == ARITHMETIC and len(arith) < max_arith:
            go(rest, s, arith + [g], conceptual, depth)
        if cls == CONCEPTUAL and not conceptual:
            go(rest, s, arith, conceptual + [g], depth)
        for clause in theory.clauses_for(g.pred, len(g.args)):
            head, body = rename_clause(clause.head, clause.body)
            s1 = unify_atoms(g, head, s)
            if s1 is not None:
                go([body] + rest, s1, arith, conceptual, depth + 1)

    go([goal], {}, [], [], 0)
    lemmas = []
    for g, arith, conceptual in results:
        if not arith and not conceptual:
            continue
        inner = Impl(mkand_list(conceptual), g) if conceptual else g
        lemmas.append(Impl(mkand_list(arith), inner) if arith else inner)
    return lemmas


def mkand_list(fs):
    from .terms import mkand

    return mkand(list(fs))
