"""Backend plugin registry.

A plugin is a pure, deterministic translator from a protocol spec to
target-language text plus diagnostics; it enforces the target's
semantics on the otherwise semantics-light document. The shipped set is
just the Tamarin backend; new targets register at import time.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

from .analysis import (
    analysis_warnings,
    check_executability,
    check_goals,
    violations_to_diagnostics,
)
from .diagnostics import Diagnostic, has_errors
from .protocol import ProtocolSpec
from .tamarin import UnsupportedConstruct, compile_tamarin, render_theory


class BackendPlugin(Protocol):
    id: str
    extension: str

    def compile(self, spec: ProtocolSpec) -> tuple[str, list[Diagnostic]]:
        """Rendered target text plus diagnostics; text is empty on failure."""
        ...


class PluginNotFound(KeyError):
    def __init__(self, plugin_id: str, available: list[str]):
        super().__init__(plugin_id)
        self.plugin_id = plugin_id
        self.available = available

    def __str__(self) -> str:
        return (
            f"no backend named {self.plugin_id!r}; available: "
            f"{', '.join(self.available)}"
        )


@dataclass(frozen=True)
class TamarinPlugin:
    id: str = "tamarin"
    extension: str = ".spthy"

    def compile(self, spec: ProtocolSpec) -> tuple[str, list[Diagnostic]]:
        diagnostics = analysis_warnings(spec)
        report = check_executability(spec)
        if not report.ok:
            return "", diagnostics + violations_to_diagnostics(report)
        diagnostics += check_goals(spec, report)
        if has_errors(diagnostics):
            return "", diagnostics
        try:
            theory = compile_tamarin(spec)
        except UnsupportedConstruct as exc:
            return "", diagnostics + [exc.diagnostic]
        return render_theory(theory), diagnostics


_REGISTRY: dict[str, BackendPlugin] = {}


def register_plugin(plugin: BackendPlugin) -> None:
    _REGISTRY[plugin.id] = plugin


def list_plugins() -> list[str]:
    return sorted(_REGISTRY)


def get_plugin(plugin_id: str) -> BackendPlugin:
    try:
        return _REGISTRY[plugin_id]
    except KeyError:
        raise PluginNotFound(plugin_id, list_plugins()) from None


register_plugin(TamarinPlugin())
