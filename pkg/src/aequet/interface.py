"""Interfacing functionality: turning translations into answers.

The engine proper stops at an effectively evaluable formula.  This module
decides what a given kind of input should do with one: answer a yes-no
question, carry out a command (which covers WH-questions via the display
encoding), absorb an assertion into the database or the discourse context,
or answer a meta-question about the system's own competence.

Each entry point runs the same front half, translate then vet the
assumptions then plan, and differs in what it does with the evaluable form.
The case analyses are deliberately written as flat if-chains mirroring the
response tables they implement; resist the urge to compress them.
"""

from __future__ import annotations

from typing import Optional

from dataclasses import dataclass, field

from .planner import plan
from .reasoner import (
    Prover,
    SearchConfig,
    check_assumptions,
    _merge_assumptions,
)
from .syntax import print_form, print_term
from .terms import (
    And,
    Atom,
    Compound,
    Const,
    Exists,
    FalseF,
    Forall,
    Form,
    Gen,
    Impl,
    Kw,
    Mismatch,
    TRUE,
    TrueF,
    Var,
    conjuncts,
    free_vars,
    mkand,
    mklist,
)
from .theory import Theory, TheoryError
from .translator import TranslateConfig, _context_from, translate

# Verdicts.  Questions get the first six, commands the middle four,
# assertions the last three; DontKnow and ViolatedAssumption are shared.
YES = "Yes"
NO = "No"
DONT_KNOW = "DontKnow"
YES_CONDITIONAL = "YesConditional"
NO_CONDITIONAL = "NoConditional"
VIOLATED_ASSUMPTION = "ViolatedAssumption"
EXECUTED = "Executed"
EXECUTED_WITH_CAVEAT = "ExecutedWithCaveat"
CANNOT_EXECUTE = "CannotExecute"
CANNOT_EXECUTE_UNDER_ASSUMPTIONS = "CannotExecuteUnderAssumptions"
TUPLE_ADDED = "TupleAdded"
CONTEXT_UPDATED = "ContextUpdated"
CONTRADICTION_REPORTED = "ContradictionReported"

VERDICTS = (
    YES, NO, DONT_KNOW, YES_CONDITIONAL, NO_CONDITIONAL, VIOLATED_ASSUMPTION,
    EXECUTED, EXECUTED_WITH_CAVEAT, CANNOT_EXECUTE,
    CANNOT_EXECUTE_UNDER_ASSUMPTIONS,
    TUPLE_ADDED, CONTEXT_UPDATED, CONTRADICTION_REPORTED,
)

INCOMPLETE_WARNING = (
    "(Warning: the response is based on possibly incomplete information).")
APPROXIMATE_WARNING = (
    "(Warning: the response is based on a possibly inaccurate approximation).")


@dataclass
class Response:
    verdict: str
    assumptions: tuple = ()  # Assumption objects the answer relies on
    violated: tuple = ()     # assumptions contradicted by their own context
    actions: tuple = ()      # ground action terms performed by a command
    warnings: tuple = ()
    form: Optional[Form] = None  # the final translated form
    residue: tuple = ()      # (pred, arity) pairs outside the target classes
    steps: tuple = ()
    tuples: tuple = ()       # database atoms added by an assertion
    sql: tuple = ()          # emitted SQL text, when requested


def wh_command(vars_, body: Form) -> Form:
    """The display encoding of a WH-question: show every instantiation of
    the requested variables that satisfies the body."""
    action = Compound("display", (mklist(vars_),))
    return Forall(tuple(vars_), Impl(body, Atom("execute_in_future", (action,))))


def parse_query(text: str):
    """Parse one user input.  Returns (form, is_wh); a leading
    lambda([X..], Body) expands to the display command encoding."""
    from .syntax import parse_form, parse_lambda

    got = parse_lambda(text)
    if got is not None:
        vars_, body = got
        return wh_command(vars_, body), True
    return parse_form(text), False


def display_text(action) -> str:
    """Render a performed action the way the answer listing prints it:
    display rows come out as bracketed tuples, one-column rows and other
    actions as bare terms."""
    if isinstance(action, Compound) and action.functor == "display":
        row = action.args[0]
        cells = [_cell_text(c) for c in row.args]
        if len(cells) == 1:
            return cells[0]
        return "[" + ",".join(cells) + "]"
    return print_term(action)


def _cell_text(t) -> str:
    if isinstance(t, Const):
        return str(t.value)
    return print_term(t)


class Session:
    """One user's standing state: the theory, the logical discourse context
    built up by assertions, and the log of performed actions (which is what
    makes executed_in_past provable).  The log only ever grows."""

    def __init__(self, theory: Theory, emit_sql: bool = False,
                 backward: bool = False, trace_translation=None,
                 trace_inference=None,
                 translate_config: TranslateConfig = None,
                 search: SearchConfig = None):
        self.theory = theory
        self.discourse: Form = TRUE
        self.action_log: list = []
        self.emit_sql = emit_sql
        self.translate_config = translate_config or TranslateConfig()
        self.search = search or SearchConfig()
        self.trace_sinks = {"translation": trace_translation,
                            "inference": trace_inference}
        if backward:
            self.search.backward = True
            self.translate_config.search.backward = True
        if trace_translation:
            self.translate_config.trace = trace_translation
        if trace_inference:
            self.search.trace = trace_inference
            self.translate_config.search.trace = trace_inference

    # -- session state as conjunctive context --------------------------------

    def log_context(self) -> tuple:
        return tuple(Atom("executed_in_past", (a,)) for a in self.action_log)

    def context(self) -> tuple:
        return self.log_context() + _context_from([self.discourse], {}, Gen())

    # -- shared front half ----------------------------------------------------

    def _translate(self, form: Form, context: tuple):
        res = translate(form, self.theory, context, self.translate_config)
        kept, violated = check_assumptions(res.assumptions, self.theory,
                                           self.search)
        return res, tuple(kept), tuple(violated)

    def _emit(self, form: Form) -> tuple:
        if not self.emit_sql:
            return ()
        from .sqlgen import emit_sql, sql_statements, to_sql

        return tuple(emit_sql(q) for q in sql_statements(to_sql(form, self.theory)))

    def _prove(self, form: Form, assumables: bool):
        prover = Prover(self.theory, self.search, context=self.context(),
                        assumables=assumables, eval_closed=True)
        return prover.prove_first(form)

    # -- yes-no questions -------------------------------------------------------

    def answer_ynq(self, form: Form) -> Response:
        res, kept, violated = self._translate(form, self.context())
        base = dict(assumptions=kept, form=res.form, residue=res.residue,
                    steps=tuple(res.steps))
        if violated:
            return Response(VIOLATED_ASSUMPTION, violated=violated,
                            warnings=_violation_warnings(violated), **base)
        pr = plan(res.form, self.theory)
        if not pr.effective:
            return Response(DONT_KNOW,
                            warnings=("no effective translation: "
                                      + pr.reason,), **base)
        base["sql"] = self._emit(pr.form)
        if isinstance(pr.form, Mismatch):
            # A sortal clash inside a question just makes it false.
            got = None
        else:
            got = self._prove(pr.form, assumables=False)
        conditional = any(a.kind != "specialization" for a in kept)
        warnings = _caveat_warnings(kept)
        if got is not None:
            verdict = YES_CONDITIONAL if conditional else YES
        else:
            verdict = NO_CONDITIONAL if conditional else NO
        return Response(verdict, warnings=warnings, **base)

    # -- commands and WH-questions ---------------------------------------------

    def run_command(self, form: Form) -> Response:
        res, kept, violated = self._translate(form, self.context())
        base = dict(form=res.form, residue=res.residue, steps=tuple(res.steps))
        if violated:
            return Response(VIOLATED_ASSUMPTION, assumptions=kept,
                            violated=violated,
                            warnings=_violation_warnings(violated), **base)
        pr = plan(res.form, self.theory)
        if not pr.effective:
            return Response(DONT_KNOW, assumptions=kept,
                            warnings=("no effective translation: "
                                      + pr.reason,), **base)
        base["sql"] = self._emit(pr.form)
        got = None if isinstance(pr.form, Mismatch) else \
            self._prove(pr.form, assumables=True)
        caveat = any(a.kind in ("limitation", "approximation") for a in kept)
        if got is None:
            verdict = CANNOT_EXECUTE_UNDER_ASSUMPTIONS if caveat \
                else CANNOT_EXECUTE
            return Response(verdict, assumptions=kept,
                            warnings=_caveat_warnings(kept), **base)
        # Proof assumptions: actions are promissory notes discharged by
        # doing, anything else conditions the answer like a translation
        # assumption would.
        actions = [a for a in got.assumptions if a.kind == "action"]
        others = [a for a in got.assumptions if a.kind != "action"]
        if others:
            kept2, violated2 = check_assumptions(others, self.theory,
                                                 self.search)
            if violated2:
                return Response(VIOLATED_ASSUMPTION, assumptions=kept,
                                violated=tuple(violated2),
                                warnings=_violation_warnings(violated2),
                                **base)
            kept = tuple(_merge_assumptions(kept, tuple(kept2)))
            caveat = any(a.kind in ("limitation", "approximation")
                         for a in kept)
        performed = []
        for a in actions:
            act = a.goal.args[0]
            self.action_log.append(act)
            performed.append(act)
        verdict = EXECUTED_WITH_CAVEAT if caveat else EXECUTED
        return Response(verdict, assumptions=kept, actions=tuple(performed),
                        warnings=_caveat_warnings(kept), **base)

    # -- assertions ---------------------------------------------------------------

    def assert_statement(self, form: Form) -> Response:
        lam_in = self.discourse
        combined = form if isinstance(lam_in, TrueF) else And(form, lam_in)
        # The discourse is part of the statement here, so it must not also
        # sit in the proof context or its content would be simplified away.
        res, kept, violated = self._translate(combined, self.log_context())
        base = dict(assumptions=kept, form=res.form, steps=tuple(res.steps))
        if violated:
            return Response(VIOLATED_ASSUMPTION, violated=violated,
                            warnings=_violation_warnings(violated), **base)
        if isinstance(res.form, (FalseF, Mismatch)):
            if isinstance(res.form, Mismatch):
                w = ("that cannot be true: it would force {} to equal {}"
                     .format(print_term(res.form.left),
                             print_term(res.form.right)))
            else:
                w = "that cannot be true given what was said before"
            return Response(CONTRADICTION_REPORTED, warnings=(w,), **base)
        delta, lam_out = self._split_tuples(res.form)
        if not delta:
            self.discourse = res.form
            return Response(CONTEXT_UPDATED,
                            warnings=("no complete tuple description yet",),
                            **base)
        added = []
        for atom in delta:
            store = self.theory.relations[atom.pred]
            try:
                store.add_row(atom.args, functions=self.theory.functions,
                              where="asserted tuple")
            except TheoryError as e:
                return Response(CONTRADICTION_REPORTED,
                                warnings=(str(e),), **base)
            added.append(atom)
        self.discourse = lam_out
        return Response(TUPLE_ADDED, tuples=tuple(added),
                        warnings=tuple("added " + print_form(a)
                                       for a in added), **base)

    def _split_tuples(self, f: Form):
        """Separate a translated assertion into complete tuple descriptions
        and the remainder that stays in the discourse."""
        binders = []
        g = f
        while isinstance(g, Exists):
            binders.extend(g.vars)
            g = g.body
        parts = conjuncts(g)
        delta = [p for p in parts if self._is_tuple_desc(p)]
        rest = [p for p in parts if not self._is_tuple_desc(p)]
        lam = mkand(rest)
        keep = tuple(v for v in binders if v in free_vars(lam))
        if keep:
            lam = Exists(keep, lam)
        return delta, lam

    def _is_tuple_desc(self, p: Form) -> bool:
        if not isinstance(p, Atom):
            return False
        store = self.theory.relations.get(p.pred)
        if store is None or store.arity != len(p.args):
            return False
        return all(isinstance(a, Const) for a in p.args)

    # -- meta-questions --------------------------------------------------------

    def answer_meta(self, form: Form) -> Response:
        q = form.body if isinstance(form, Kw) else form
        res, kept, violated = self._translate(q, self.context())
        base = dict(assumptions=kept, form=res.form, residue=res.residue,
                    steps=tuple(res.steps))
        if violated:
            return Response(VIOLATED_ASSUMPTION, violated=violated,
                            warnings=_violation_warnings(violated), **base)
        pr = plan(res.form, self.theory)
        if not pr.effective:
            return Response(NO, warnings=("no effective translation: "
                                          + pr.reason,), **base)
        blockers = [a for a in kept if a.kind != "specialization"]
        if blockers:
            ws = tuple("only under the assumption: "
                       + print_term(a.justification) for a in blockers)
            return Response(NO, warnings=ws, **base)
        return Response(YES, **base)


def _violation_warnings(violated) -> tuple:
    ws = ["could not be answered without violating the following:"]
    ws += ["  " + print_term(a.justification) for a in violated]
    return tuple(ws)


def _caveat_warnings(kept) -> tuple:
    ws = []
    if any(a.kind == "limitation" for a in kept):
        ws.append(INCOMPLETE_WARNING)
    if any(a.kind == "approximation" for a in kept):
        ws.append(APPROXIMATE_WARNING)
    return tuple(ws)
