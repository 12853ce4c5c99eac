"""HTTP facade over one session.

The app wraps a single Session: one theory, one discourse, one action log.
Clients send forms as text; /ask routes like the REPL does (kw goes to the
meta-question handler, the lambda sugar to the command handler, everything
else is a yes-no question), /command and /assert are explicit.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import __version__
from .interface import Response, Session, display_text, parse_query
from .schemas import (
    ActionsModel,
    AssumptionModel,
    DiscourseModel,
    FormRequest,
    HealthModel,
    ResponseModel,
    StepModel,
)
from .syntax import SyntaxErr, print_form, print_term
from .terms import Kw


def assumption_model(a) -> AssumptionModel:
    return AssumptionModel(goal=print_form(a.goal),
                           justification=print_term(a.justification),
                           kind=a.kind, cost=a.cost)


def response_model(r: Response, trace: bool = False) -> ResponseModel:
    steps = []
    if trace:
        steps = [
            StepModel(group=s.group, rule=s.rule, atom=print_form(s.atom),
                      replacement=print_form(s.replacement),
                      result=print_form(s.result) if s.result is not None else None,
                      assumptions=[print_term(a.justification)
                                   for a in s.assumptions])
            for s in r.steps
        ]
    return ResponseModel(
        verdict=r.verdict,
        assumptions=[assumption_model(a) for a in r.assumptions],
        violated=[assumption_model(a) for a in r.violated],
        actions=[display_text(a) for a in r.actions],
        warnings=list(r.warnings),
        form=print_form(r.form) if r.form is not None else None,
        residue=[f"{p}/{n}" for p, n in r.residue],
        tuples=[print_form(t) for t in r.tuples],
        sql=list(r.sql),
        steps=steps,
    )


def make_app(session: Session) -> FastAPI:
    app = FastAPI(title="aequet", version=__version__)

    def parse(text: str, allow_wh: bool = True):
        try:
            form, is_wh = parse_query(text)
        except SyntaxErr as e:
            raise HTTPException(status_code=422, detail=str(e))
        if is_wh and not allow_wh:
            raise HTTPException(status_code=422,
                                detail="lambda form is only a question or command")
        return form, is_wh

    @app.get("/health", response_model=HealthModel)
    def health():
        return HealthModel(status="ok",
                           relations=sorted(session.theory.relations),
                           groups=list(session.theory.group_sequence))

    @app.post("/ask", response_model=ResponseModel)
    def ask(req: FormRequest):
        form, is_wh = parse(req.form)
        if isinstance(form, Kw):
            r = session.answer_meta(form)
        elif is_wh:
            r = session.run_command(form)
        else:
            r = session.answer_ynq(form)
        return response_model(r, req.trace)

    @app.post("/command", response_model=ResponseModel)
    def command(req: FormRequest):
        form, _ = parse(req.form)
        return response_model(session.run_command(form), req.trace)

    @app.post("/assert", response_model=ResponseModel)
    def assert_(req: FormRequest):
        form, _ = parse(req.form, allow_wh=False)
        return response_model(session.assert_statement(form), req.trace)

    @app.get("/discourse", response_model=DiscourseModel)
    def discourse():
        return DiscourseModel(form=print_form(session.discourse))

    @app.get("/actions", response_model=ActionsModel)
    def actions():
        return ActionsModel(actions=[display_text(a)
                                     for a in session.action_log])

    return app
