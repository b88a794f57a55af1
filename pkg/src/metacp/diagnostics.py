"""Located diagnostics and the stable code registry.

Codes are a documented contract: tools and tests match on them, so they
never change meaning across releases. PSV0xx codes come from parsing and
schema validation, EXE/GOAL codes from the executability analysis, and
PSVWxx codes are warnings.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


#: code -> one-line description; the single source for docs and tests.
CODE_REGISTRY: dict[str, str] = {
    "PSV001": "malformed XML syntax",
    "PSV002": "DOCTYPE declarations and entity definitions are not allowed",
    "PSV003": "document exceeds the size cap",
    "PSV010": "unknown element",
    "PSV011": "unknown attribute",
    "PSV012": "missing required attribute",
    "PSV013": "attribute value is not valid here",
    "PSV014": "wrong number of child elements",
    "PSV015": "unsupported format version",
    "PSV016": "unexpected text content",
    "PSV020": "duplicate role name",
    "PSV021": "duplicate function declaration",
    "PSV022": "reference to an undeclared role",
    "PSV023": "reference to an undeclared function",
    "PSV024": "function applied with the wrong number of arguments",
    "PSV025": "conflicting sorts for the same name",
    "PSV026": "name is not a valid identifier",
    "PSV027": "message indices must be contiguous from 1 in document order",
    "PSV028": "message sender and receiver are the same role",
    "PSV029": "declaration redefines a theory bundle symbol",
    "PSV030": "fresh value declared or listed more than once",
    "PSV031": "equation right side uses variables absent from the left side",
    "PSV032": "equation is not a valid destructor",
    "PSV033": "unknown theory bundle",
    "PSV034": "role starts out knowing another role's fresh value",
    "PSV035": "fresh variable is not declared by any role",
    "PSV036": "asymmetric keys require the asymmetric-encryption or signing bundle",
    "PSV090": "document violates a model invariant",
    "PSV099": "internal parser failure (please report)",
    "PSVW01": "unoriented equation is ignored by the executability analysis",
    "EXE001": "sender cannot derive the message payload",
    "EXE002": "receiver cannot open an atomic message",
    "GOAL001": "goal term is not derivable by its role",
    "TAM001": "construct not expressible in the backend target",
}


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    line: int | None = None
    column: int | None = None
    step_index: int | None = None

    def __post_init__(self) -> None:
        if self.code not in CODE_REGISTRY:
            raise ValueError(f"diagnostic code {self.code!r} is not registered")
        if not self.message:
            raise ValueError("diagnostic messages must not be empty")

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def to_dict(self) -> dict:
        out: dict = {
            "severity": self.severity.value,
            "code": self.code,
            "message": self.message,
        }
        if self.line is not None:
            out["line"] = self.line
        if self.column is not None:
            out["column"] = self.column
        if self.step_index is not None:
            out["stepIndex"] = self.step_index
        return out

    def render(self, filename: str = "<input>") -> str:
        """The `file:line:col: severity code message` form used by the CLI."""
        where = filename
        if self.line is not None:
            where += f":{self.line}:{self.column if self.column is not None else 0}"
        return f"{where}: {self.severity.value} {self.code} {self.message}"


def error(code: str, message: str, **kw) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, **kw)


def warning(code: str, message: str, **kw) -> Diagnostic:
    return Diagnostic(Severity.WARNING, code, message, **kw)


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(d.is_error for d in diagnostics)
