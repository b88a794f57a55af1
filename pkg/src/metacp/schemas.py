"""Pydantic request/response models for the designer service API."""
from __future__ import annotations

from pydantic import BaseModel, Field

from .diagnostics import Diagnostic


class DiagnosticModel(BaseModel):
    severity: str
    code: str
    message: str
    line: int | None = None
    column: int | None = None
    stepIndex: int | None = None

    @classmethod
    def from_diagnostic(cls, diag: Diagnostic) -> "DiagnosticModel":
        return cls(
            severity=diag.severity.value,
            code=diag.code,
            message=diag.message,
            line=diag.line,
            column=diag.column,
            stepIndex=diag.step_index,
        )


class ValidateResponse(BaseModel):
    ok: bool
    diagnostics: list[DiagnosticModel] = Field(default_factory=list)


class ErrorBody(BaseModel):
    code: str
    message: str


class ErrorEnvelope(BaseModel):
    error: ErrorBody


class NamesResponse(BaseModel):
    names: list[str]
