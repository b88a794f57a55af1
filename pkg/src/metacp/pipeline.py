"""The one validation pipeline both the CLI and the service run:
schema parse, executability, goal well-formedness, analysis warnings."""
from __future__ import annotations

from .analysis import (
    analysis_warnings,
    check_executability,
    check_goals,
    violations_to_diagnostics,
)
from .diagnostics import Diagnostic
from .psv import PsvDocument, try_parse_psv


def run_validation(data: bytes) -> tuple[PsvDocument | None, list[Diagnostic]]:
    """Full pipeline. The document is present iff the schema parse
    succeeded; later phases only add diagnostics."""
    doc, diags = try_parse_psv(data)
    if doc is None:
        return None, diags
    spec = doc.spec
    diags = diags + analysis_warnings(spec)
    report = check_executability(spec)
    if not report.ok:
        return doc, diags + violations_to_diagnostics(report)
    return doc, diags + check_goals(spec, report)
