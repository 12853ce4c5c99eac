"""Linguistic domain theories: equivalences, Horn clauses, declarations.

A theory file is a sequence of statements terminated by periods, with %%
comments.  Statements:

    group <name>.
    group_sequence([g1,g2,...]).
    <LHS> <-> <RHS>.                      equivalence
    (<LHS> <-> <RHS>) <- <Conds>.         conditional equivalence
    <Head> <- <Body>.                     Horn clause
    <Head>.                               unit clause
    neg(<Goal>) <- <Body>.                consistency clause
    relation('NAME', [col1,...]).         database relation schema
    function(<Template>, [Keys] -> [Deps]).
    assumable(<Goal>, <Cost>, <Justification>, <Type>, <Cond>).
    call_pattern(<Template>, [InVars], [OutVars]).
    predicate_class(<pred>/<arity>, <class>).
    quick_failure_test(<Goal>) :- <Conds>.
    quick_determinism_test(<Goal>) :- <Conds>.

Equivalences compile into directed rules: one per left conjunct for universal
rules, or a single existential rule when the left side is one existentially
quantified atom.  A quantified multi-atom left side is split through a fresh
$split predicate into a universal part plus an existential part.  Each
equivalence also yields its Horn clause readings; the backward readings are
kept but only used when explicitly enabled.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

from . import builtins as bi
from .syntax import SyntaxErr, Tokens, parse_term_tokens, tokenize, _parse_form
from .terms import (
    And,
    Atom,
    Compound,
    Const,
    Eq,
    Equiv,
    Exists,
    Form,
    Impl,
    Not,
    Or,
    TRUE,
    TrueF,
    Term,
    Var,
    conjuncts,
    free_vars,
    is_list,
    mkand,
    subst,
)

DATABASE, ARITHMETIC, EXECUTABLE, NAMING = "database", "arithmetic", "executable", "naming"
LINGUISTIC, CONCEPTUAL, ATTRIBUTE, SPLIT = "linguistic", "conceptual", "attribute", "split"
TARGET_CLASSES = {DATABASE, ARITHMETIC, EXECUTABLE, NAMING}
ASSUMPTION_KINDS = {"specialization", "limitation", "approximation", "action"}


class TheoryError(ValueError):
    pass


@dataclass
class EquivRule:
    ident: str
    group: str
    head: Atom
    conds: Form
    ex_vars: tuple
    body: Form

    def __post_init__(self):
        if self.ex_vars and not isinstance(self.conds, TrueF):
            raise TheoryError(f"{self.ident}: existential rule cannot carry conditions")

    @property
    def existential(self):
        return bool(self.ex_vars)


@dataclass
class HornClause:
    ident: str
    head: Atom
    body: Form
    negated: bool = False
    backward: bool = False


@dataclass
class Assumable:
    ident: str
    goal: Atom
    cost: float
    justification: Term
    kind: str
    cond: Form


@dataclass
class FunctionDecl:
    pred: str
    arity: int
    keys: tuple
    deps: tuple


@dataclass
class QuickTest:
    pattern: Atom
    cond: Form


class RelationStore:
    def __init__(self, name: str, columns):
        self.name = name
        self.columns = tuple(columns)
        self.rows: list = []
        self._seen = set()

    @property
    def arity(self):
        return len(self.columns)

    def key_conflict(self, row, functions) -> Optional[tuple]:
        """Existing row agreeing on some declared key but not everywhere."""
        for fd in functions:
            if fd.pred != self.name or fd.arity != self.arity:
                continue
            for old in self.rows:
                if all(old[k] == row[k] for k in fd.keys) and old != row:
                    return old
        return None

    def add_row(self, row, functions=(), where="row"):
        row = tuple(row)
        if len(row) != self.arity:
            raise TheoryError(
                f"{self.name}: {where} has {len(row)} fields, expected {self.arity}"
            )
        if row in self._seen:
            return False
        clash = self.key_conflict(row, functions)
        if clash is not None:
            raise TheoryError(
                f"{self.name}: {where} conflicts with {clash} on a declared key"
            )
        self._seen.add(row)
        self.rows.append(row)
        return True


def cell_term(text: str) -> Term:
    text = text.strip()
    try:
        return Const(int(text))
    except ValueError:
        pass
    try:
        return Const(float(text))
    except ValueError:
        pass
    return Const(text)


class Theory:
    def __init__(self):
        self.group_sequence: list = []
        self.rules: list = []
        self.clauses: list = []
        self.assumables: list = []
        self.functions: list = []
        self.call_patterns: dict = {}
        self.quick_failure: list = []
        self.quick_determinism: list = []
        self.relations: dict = {}
        self.declared_classes: dict = {}
        self._merge_rules = None

    # -- classification ----------------------------------------------------

    def predicate_class(self, pred: str, arity: int) -> str:
        got = self.declared_classes.get((pred, arity))
        if got:
            return got
        if pred in self.relations and self.relations[pred].arity == arity:
            return DATABASE
        if pred == "sql_select" and arity == 2:
            return DATABASE
        if pred.startswith("$split"):
            return SPLIT
        if pred in bi.EXECUTABLE_PREDS:
            return EXECUTABLE
        if pred in bi.NAMING_PREDS:
            return NAMING
        if pred in bi.ARITHMETIC_PREDS:
            return ARITHMETIC
        return LINGUISTIC

    def is_target(self, pred: str, arity: int) -> bool:
        return self.predicate_class(pred, arity) in TARGET_CLASSES

    # -- lookup ------------------------------------------------------------

    def rules_in_group(self, group: str):
        return [r for r in self.rules if r.group == group]

    def clauses_for(self, pred: str, arity: int, backward: bool = False):
        return [
            c
            for c in self.clauses
            if not c.negated
            and c.head.key == (pred, arity)
            and (backward or not c.backward)
        ]

    def neg_clauses_for(self, pred: str, arity: int):
        return [c for c in self.clauses if c.negated and c.head.key == (pred, arity)]

    def assumables_for(self, pred: str, arity: int):
        return [a for a in self.assumables if a.goal.key == (pred, arity)]

    def functions_for(self, pred: str, arity: int):
        return [f for f in self.functions if f.pred == pred and f.arity == arity]

    def call_patterns_for(self, pred: str, arity: int):
        if pred == "sql_select" and arity == 2:
            return [((), (0,))]
        pats = list(self.call_patterns.get((pred, arity), ()))
        pats.extend(bi.builtin_call_patterns(pred, arity))
        cls = self.predicate_class(pred, arity)
        if cls == DATABASE:
            pats.append(((), tuple(range(arity))))
        elif cls == EXECUTABLE:
            pats.append((tuple(range(arity)), ()))
        return pats

    def merge_rules(self):
        """Function declarations read as conditional equivalences: when two
        atoms agree on a key, the dependents are equal."""
        if self._merge_rules is None:
            out = []
            for i, fd in enumerate(self.functions):
                hvars = tuple(Var(f"_M{i}_{j}") for j in range(fd.arity))
                cvars = list(hvars)
                eqs = []
                for j in fd.deps:
                    w = Var(f"_M{i}_{j}_c")
                    cvars[j] = w
                    eqs.append(Eq(hvars[j], w))
                out.append(
                    EquivRule(
                        ident=f"merge:{fd.pred}/{fd.arity}#{i}",
                        group="$merge",
                        head=Atom(fd.pred, hvars),
                        conds=Atom(fd.pred, tuple(cvars)),
                        ex_vars=(),
                        body=mkand(eqs),
                    )
                )
            self._merge_rules = out
        return self._merge_rules


# ---------------------------------------------------------------------------
# Equivalence compilation


def _strip_exists(f: Form):
    vs = []
    while isinstance(f, Exists):
        vs.extend(f.vars)
        f = f.body
    return tuple(vs), f


def _atom_conjuncts(f: Form, what: str):
    cjs = conjuncts(f)
    for c in cjs:
        if not isinstance(c, Atom):
            raise TheoryError(f"{what} must be a conjunction of atoms, found {type(c).__name__}")
    return cjs


class _Counters:
    def __init__(self):
        self.split = 0
        self.skolem = 0
        self.rule = 0
        self.clause = 0


def _skolemize(atoms_or_form, ex_vars, univ_vars, counters: _Counters):
    if not ex_vars:
        return atoms_or_form
    args = tuple(sorted(univ_vars, key=lambda v: v.name))
    smap = {}
    for v in ex_vars:
        counters.skolem += 1
        smap[v] = Compound(f"$sk{counters.skolem}", args) if args else Const(f"$sk{counters.skolem}")
    return subst(atoms_or_form, smap)


def compile_equivalence(stmt: Form, group: str, counters: _Counters):
    """Compile one (possibly conditional) equivalence statement.

    Returns (rules, clauses): the directed translation rules and the Horn
    clause readings (normal plus backward, the latter flagged).
    """
    conds = TRUE
    eq = stmt
    if isinstance(stmt, Impl) and isinstance(stmt.rhs, Equiv):
        conds, eq = stmt.lhs, stmt.rhs
    if not isinstance(eq, Equiv):
        raise TheoryError("not an equivalence statement")

    lhs_vars, lhs_body = _strip_exists(eq.lhs)
    lhs_conjs = _atom_conjuncts(lhs_body, "equivalence left side")
    rhs = eq.rhs
    rhs_vars, rhs_body = _strip_exists(rhs)
    rhs_conjs = conjuncts(rhs_body)

    rules = []
    clauses = []
    counters.rule += 1
    base = f"{group}#{counters.rule}"
    cond_list = [] if isinstance(conds, TrueF) else [conds]

    if not lhs_vars:
        for i, cj in enumerate(lhs_conjs):
            rest = [c for j, c in enumerate(lhs_conjs) if j != i]
            rules.append(
                EquivRule(
                    ident=f"{base}.{cj.pred}",
                    group=group,
                    head=cj,
                    conds=mkand(rest + cond_list),
                    ex_vars=(),
                    body=rhs,
                )
            )
    elif len(lhs_conjs) == 1 and isinstance(conds, TrueF):
        rules.append(
            EquivRule(
                ident=f"{base}.{lhs_conjs[0].pred}",
                group=group,
                head=lhs_conjs[0],
                conds=TRUE,
                ex_vars=lhs_vars,
                body=rhs,
            )
        )
    else:
        # split: universal part rewrites the conjunction to a fresh predicate,
        # an existential part consumes the quantifier
        counters.split += 1
        inner_free = sorted(free_vars(lhs_body), key=lambda v: v.name)
        ex_first = [v for v in lhs_vars if v in inner_free]
        others = [v for v in inner_free if v not in lhs_vars]
        split_args = tuple(ex_first + others)
        split_atom = Atom(f"$split_{counters.split}", split_args)
        for i, cj in enumerate(lhs_conjs):
            rest = [c for j, c in enumerate(lhs_conjs) if j != i]
            rules.append(
                EquivRule(
                    ident=f"{base}.{cj.pred}",
                    group=group,
                    head=cj,
                    conds=mkand(rest + cond_list),
                    ex_vars=(),
                    body=split_atom,
                )
            )
        rules.append(
            EquivRule(
                ident=f"{base}.$split_{counters.split}",
                group=group,
                head=split_atom,
                conds=TRUE,
                ex_vars=tuple(ex_first),
                body=rhs,
            )
        )
        # normal readings of the split part keep context simplification able
        # to discharge the residual conjuncts
        for cj in lhs_conjs:
            counters.clause += 1
            clauses.append(
                HornClause(
                    ident=f"{base}.split_reading#{counters.clause}",
                    head=cj,
                    body=mkand([split_atom] + cond_list),
                )
            )

    univ = free_vars(stmt)
    # normal readings: left-side conjunct implied by the right side
    for cj in lhs_conjs:
        counters.clause += 1
        head = _skolemize(cj, [v for v in lhs_vars if v in free_vars(cj)], univ, counters)
        clauses.append(
            HornClause(
                ident=f"{base}.normal#{counters.clause}",
                head=head,
                body=mkand(list(rhs_conjs) + cond_list),
            )
        )
    # backward readings: right-side conjunct implied by the left side
    for cj in rhs_conjs:
        if not isinstance(cj, Atom):
            continue
        counters.clause += 1
        head = _skolemize(cj, [v for v in rhs_vars if v in free_vars(cj)], univ, counters)
        clauses.append(
            HornClause(
                ident=f"{base}.backward#{counters.clause}",
                head=head,
                body=mkand(list(lhs_conjs) + cond_list),
                backward=True,
            )
        )
    return rules, clauses


# ---------------------------------------------------------------------------
# Statement-level parsing


def term_to_form(t) -> Form:
    if isinstance(t, Form):
        return t
    if isinstance(t, Const):
        if t.value == "true":
            return TRUE
        if isinstance(t.value, str):
            return Atom(t.value, ())
    if isinstance(t, Compound) and not is_list(t):
        if t.functor == "and" and len(t.args) == 2:
            return And(term_to_form(t.args[0]), term_to_form(t.args[1]))
        if t.functor == "or" and len(t.args) == 2:
            return Or(term_to_form(t.args[0]), term_to_form(t.args[1]))
        if t.functor == "not" and len(t.args) == 1:
            return Not(term_to_form(t.args[0]))
        return Atom(t.functor, t.args)
    raise TheoryError(f"cannot read {t!r} as a goal")


def _split_statements(tokens):
    out = []
    cur = []
    for tok in tokens:
        if tok == ("op", "."):
            if cur:
                out.append(cur)
                cur = []
        else:
            cur.append(tok)
    if cur:
        raise TheoryError("missing final period")
    return out


def _int_positions(template: Atom, varlist, what: str):
    pos = []
    for v in varlist.args:
        if v not in template.args:
            raise TheoryError(f"{what}: {v!r} is not an argument of the template")
        pos.append(template.args.index(v))
    return tuple(pos)


def load_theory_text(text: str, source: str = "<theory>") -> Theory:
    th = Theory()
    counters = _Counters()
    group = "main"
    groups_seen = []
    explicit_sequence = None
    clause_n = 0

    for stmt_tokens in _split_statements(tokenize(text)):
        ts = Tokens(stmt_tokens)
        k, v = ts.peek()

        if k == "atom" and v == "group" and len(stmt_tokens) == 2:
            group = stmt_tokens[1][1]
            if group not in groups_seen:
                groups_seen.append(group)
            continue

        if k == "atom" and v == "function":
            ts.next()
            ts.expect("op", "(")
            template = parse_term_tokens(ts)
            if not isinstance(template, Compound):
                raise TheoryError("function template must be a compound")
            ts.expect("op", ",")
            keys = parse_term_tokens(ts)
            ts.expect("op", "->")
            deps = parse_term_tokens(ts)
            ts.expect("op", ")")
            tml = Atom(template.functor, template.args)
            kpos = _int_positions(tml, keys, "function keys")
            dpos = _int_positions(tml, deps, "function deps")
            if set(kpos) & set(dpos):
                raise TheoryError(f"function {template.functor}: keys and deps overlap")
            th.functions.append(FunctionDecl(tml.pred, len(tml.args), kpos, dpos))
            continue

        if k == "atom" and v == "predicate_class":
            ts.next()
            ts.expect("op", "(")
            pred = ts.next()[1]
            ts.expect("op", "/")
            arity = ts.expect("num")
            ts.expect("op", ",")
            cls = ts.next()[1]
            ts.expect("op", ")")
            if cls not in {DATABASE, ARITHMETIC, EXECUTABLE, NAMING, LINGUISTIC, CONCEPTUAL, ATTRIBUTE}:
                raise TheoryError(f"unknown predicate class {cls}")
            th.declared_classes[(pred, arity)] = cls
            continue

        if k == "atom" and v in ("quick_failure_test", "quick_determinism_test"):
            op_index = next(
                (i for i, t in enumerate(stmt_tokens) if t == ("op", ":-")), None
            )
            if op_index is None:
                raise TheoryError(f"{v} needs a :- condition part")
            head_ts = Tokens(stmt_tokens[:op_index])
            head_ts.next()
            head_ts.expect("op", "(")
            goal = term_to_form(parse_term_tokens(head_ts))
            head_ts.expect("op", ")")
            cond = _parse_form(Tokens(stmt_tokens[op_index + 1:]))
            test = QuickTest(goal, cond)
            (th.quick_failure if v == "quick_failure_test" else th.quick_determinism).append(test)
            continue

        try:
            form = _parse_form(ts)
        except SyntaxErr as e:
            raise TheoryError(f"{source}: bad statement near {stmt_tokens[:4]}: {e}")
        if not ts.done:
            raise TheoryError(f"{source}: trailing tokens in statement near {ts.peek()}")

        if isinstance(form, Atom) and form.pred == "group_sequence" and len(form.args) == 1:
            seq = form.args[0]
            if not is_list(seq):
                raise TheoryError("group_sequence expects a list")
            explicit_sequence = [c.value for c in seq.args]
            continue

        if isinstance(form, Atom) and form.pred == "relation" and len(form.args) == 2:
            nm, cols = form.args
            if not (isinstance(nm, Const) and is_list(cols)):
                raise TheoryError("relation expects a name and a column list")
            colnames = [c.value for c in cols.args]
            if len(set(colnames)) != len(colnames):
                raise TheoryError(f"relation {nm.value}: duplicate column names")
            th.relations[nm.value] = RelationStore(nm.value, colnames)
            continue

        if isinstance(form, Atom) and form.pred == "assumable" and len(form.args) == 5:
            goal_t, cost_t, just, kind_t, cond_t = form.args
            goal = term_to_form(goal_t)
            if not isinstance(goal, Atom):
                raise TheoryError("assumable goal must be atomic")
            if not (isinstance(cost_t, Const) and isinstance(cost_t.value, (int, float))):
                raise TheoryError("assumable cost must be a number")
            kind = kind_t.value if isinstance(kind_t, Const) else None
            if kind not in ASSUMPTION_KINDS:
                raise TheoryError(f"assumable type must be one of {sorted(ASSUMPTION_KINDS)}")
            th.assumables.append(
                Assumable(
                    ident=f"assumable:{goal.pred}/{len(goal.args)}#{len(th.assumables)+1}",
                    goal=goal,
                    cost=cost_t.value,
                    justification=just,
                    kind=kind,
                    cond=term_to_form(cond_t),
                )
            )
            continue

        if isinstance(form, Atom) and form.pred == "call_pattern" and len(form.args) == 3:
            tmpl_t, ins, outs = form.args
            tmpl = term_to_form(tmpl_t)
            if not isinstance(tmpl, Atom) or not (is_list(ins) and is_list(outs)):
                raise TheoryError("call_pattern expects template and two variable lists")
            key = tmpl.key
            th.call_patterns.setdefault(key, []).append(
                (_int_positions(tmpl, ins, "call_pattern ins"),
                 _int_positions(tmpl, outs, "call_pattern outs"))
            )
            continue

        if isinstance(form, Equiv) or (isinstance(form, Impl) and isinstance(form.rhs, Equiv)):
            if group not in groups_seen:
                groups_seen.append(group)
            rules, clauses = compile_equivalence(form, group, counters)
            th.rules.extend(rules)
            th.clauses.extend(clauses)
            continue

        if isinstance(form, Impl) or isinstance(form, Atom):
            head = form.rhs if isinstance(form, Impl) else form
            body = form.lhs if isinstance(form, Impl) else TRUE
            if not isinstance(head, Atom):
                raise TheoryError(f"clause head must be atomic, got {type(head).__name__}")
            clause_n += 1
            if head.pred == "neg" and len(head.args) == 1:
                inner = term_to_form(head.args[0])
                if not isinstance(inner, Atom):
                    raise TheoryError("neg(...) must wrap an atomic goal")
                th.clauses.append(
                    HornClause(f"neg:{inner.pred}/{len(inner.args)}#{clause_n}", inner, body, negated=True)
                )
            else:
                th.clauses.append(
                    HornClause(f"hc:{head.pred}/{len(head.args)}#{clause_n}", head, body)
                )
            continue

        raise TheoryError(f"{source}: cannot interpret statement {form!r}")

    th.group_sequence = explicit_sequence if explicit_sequence is not None else groups_seen
    # groups with rules that are absent from an explicit sequence are legal:
    # they run on demand (sql_primitives is applied by SQL synthesis, not by
    # the main translation).  A sequence entry nobody declared is a typo.
    unknown = set(th.group_sequence) - set(groups_seen)
    if unknown:
        raise TheoryError(f"group sequence names unknown groups {sorted(unknown)}")
    return th


def load_theory(path: str) -> Theory:
    with open(path) as fh:
        return load_theory_text(fh.read(), source=path)


def load_relation_csv(theory: Theory, name: str, path: str):
    store = theory.relations.get(name)
    if store is None:
        raise TheoryError(f"relation {name} is not declared in the theory")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TheoryError(f"{path}: empty file, expected a header row")
        if tuple(h.strip() for h in header) != store.columns:
            raise TheoryError(
                f"{path}: header {header} does not match declared columns {list(store.columns)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            store.add_row(
                tuple(cell_term(c) for c in row),
                functions=theory.functions,
                where=f"{path} line {lineno}",
            )
    return store
