"""Request and response models for the HTTP service.

Everything crossing the wire is text: forms in the concrete syntax,
assumptions as their justification terms, SQL as the emitted statements.
The server parses, the client never has to.
"""

from __future__ import annotations

from typing import List, Optional

from pydantic import BaseModel, Field


class AssumptionModel(BaseModel):
    goal: str
    justification: str
    kind: str
    cost: float = 0.0


class StepModel(BaseModel):
    group: str
    rule: str
    atom: str
    replacement: str
    result: Optional[str] = None
    assumptions: List[str] = Field(default_factory=list)


class ResponseModel(BaseModel):
    verdict: str
    assumptions: List[AssumptionModel] = Field(default_factory=list)
    violated: List[AssumptionModel] = Field(default_factory=list)
    actions: List[str] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)
    form: Optional[str] = None
    residue: List[str] = Field(default_factory=list)
    tuples: List[str] = Field(default_factory=list)
    sql: List[str] = Field(default_factory=list)
    steps: List[StepModel] = Field(default_factory=list)


class FormRequest(BaseModel):
    form: str
    trace: bool = False  # include translation steps in the response


class HealthModel(BaseModel):
    status: str
    relations: List[str] = Field(default_factory=list)
    groups: List[str] = Field(default_factory=list)


class DiscourseModel(BaseModel):
    form: str


class ActionsModel(BaseModel):
    actions: List[str] = Field(default_factory=list)
