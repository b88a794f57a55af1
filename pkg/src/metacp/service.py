"""Local HTTP facade for the designer: the same pipeline as the CLI,
plus filesystem persistence and the static designer assets.

The service is a designer's local tool: it binds loopback by default and
holds no state of its own beyond the protocol store directory. Every
request body is a full PSV document; any sequence of API calls is
equivalent to running the CLI pipeline over the stored files.
"""
from __future__ import annotations

import logging
import os
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .diagnostics import has_errors
from .pipeline import run_validation
from .plugins import PluginNotFound, get_plugin, list_plugins
from .psv import serialize_psv, try_parse_psv
from .schemas import DiagnosticModel, ErrorBody, ErrorEnvelope, ValidateResponse
from .store import ProtocolStore, StoreNameError
from . import fixtures

log = logging.getLogger("metacp.service")

DEFAULT_STORE = "protocols"


def _error(status: int, code: str, message: str) -> JSONResponse:
    body = ErrorEnvelope(error=ErrorBody(code=code, message=message))
    return JSONResponse(status_code=status, content=body.model_dump())


def _diag_models(diags) -> list[dict]:
    return [DiagnosticModel.from_diagnostic(d).model_dump(exclude_none=True) for d in diags]


def resolve_store_root(cli_root: str | None) -> str:
    # the environment deliberately wins over the flag, so wrapper scripts
    # can pin a store for every invocation
    return os.environ.get("METACP_STORE") or cli_root or DEFAULT_STORE


def create_app(store_root: str | os.PathLike | None = None, static_dir: str | os.PathLike | None = None) -> FastAPI:
    store = ProtocolStore(resolve_store_root(str(store_root) if store_root else None))
    app = FastAPI(title="MetaCP designer service", version="0.1.0")

    @app.middleware("http")
    async def log_requests(request: Request, call_next):
        response = await call_next(request)
        log.info("%s %s -> %s", request.method, request.url.path, response.status_code)
        return response

    @app.post("/api/validate", response_model=ValidateResponse)
    async def validate(request: Request):
        data = await request.body()
        _, diags = run_validation(data)
        return ValidateResponse(
            ok=not has_errors(diags),
            diagnostics=[DiagnosticModel.from_diagnostic(d) for d in diags],
        )

    @app.post("/api/compile")
    async def compile_endpoint(request: Request, backend: str = "tamarin"):
        try:
            plugin = get_plugin(backend)
        except PluginNotFound as exc:
            return _error(404, "backend-not-found", str(exc))
        data = await request.body()
        doc, diags = try_parse_psv(data)
        if doc is None:
            return JSONResponse(
                status_code=422,
                content={"ok": False, "diagnostics": _diag_models(diags)},
            )
        text, more = plugin.compile(doc.spec)
        diags = diags + more
        if has_errors(diags) or not text:
            return JSONResponse(
                status_code=422,
                content={"ok": False, "diagnostics": _diag_models(diags)},
            )
        return PlainTextResponse(text)

    @app.get("/api/backends", response_model=list[str])
    async def backends():
        return list_plugins()

    @app.get("/api/examples", response_model=list[str])
    async def examples():
        return list(fixtures.fixture_names())

    @app.get("/api/examples/{name}")
    async def example(name: str):
        try:
            return Response(content=fixtures.load_fixture(name), media_type="application/xml")
        except KeyError:
            return _error(404, "not-found", f"no bundled example named {name!r}")

    @app.get("/api/protocols", response_model=list[str])
    async def protocols():
        return store.names()

    @app.get("/api/protocols/{name}")
    async def get_protocol(name: str):
        try:
            if not store.exists(name):
                return _error(404, "not-found", f"no stored protocol named {name!r}")
            return Response(content=store.read(name), media_type="application/xml")
        except StoreNameError as exc:
            return _error(400, "bad-name", str(exc))

    @app.put("/api/protocols/{name}")
    async def put_protocol(name: str, request: Request):
        # schema validation only: drafts may be stored mid-design
        data = await request.body()
        doc, diags = try_parse_psv(data)
        if doc is None:
            return JSONResponse(
                status_code=422,
                content={"ok": False, "diagnostics": _diag_models(diags)},
            )
        try:
            store.write(name, serialize_psv(doc))
        except StoreNameError as exc:
            return _error(400, "bad-name", str(exc))
        return JSONResponse(status_code=200, content={"ok": True, "name": name})

    @app.delete("/api/protocols/{name}")
    async def delete_protocol(name: str):
        try:
            if not store.delete(name):
                return _error(404, "not-found", f"no stored protocol named {name!r}")
        except StoreNameError as exc:
            return _error(400, "bad-name", str(exc))
        return Response(status_code=204)

    @app.get("/api/protocols/{name}/layout")
    async def get_layout(name: str):
        try:
            layout = store.read_layout(name)
        except StoreNameError as exc:
            return _error(400, "bad-name", str(exc))
        if layout is None:
            return _error(404, "not-found", f"no layout stored for {name!r}")
        return JSONResponse(content=layout)

    @app.put("/api/protocols/{name}/layout")
    async def put_layout(name: str, request: Request):
        layout = await request.json()
        try:
            store.write_layout(name, layout)
        except StoreNameError as exc:
            return _error(400, "bad-name", str(exc))
        return JSONResponse(status_code=200, content={"ok": True})

    assets = Path(static_dir) if static_dir else _default_static_dir()
    if assets is not None and assets.is_dir():
        app.mount("/", StaticFiles(directory=assets, html=True), name="designer")
    else:

        @app.get("/")
        async def index():
            return PlainTextResponse(
                "MetaCP designer service. API under /api; "
                "designer assets not built (see frontend/README.md).\n"
            )

    return app


def _default_static_dir() -> Path | None:
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None
