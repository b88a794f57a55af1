"""Command line surface: validate / compile / fmt / serve / backends.

A thin shell over the library: everything here is a few calls into the
pipeline, so any CLI behavior is reproducible programmatically.

Exit codes are a stable contract:
  0 success, 1 diagnostics with errors, 2 usage error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path

from .diagnostics import Diagnostic, has_errors
from .pipeline import run_validation
from .plugins import PluginNotFound, get_plugin, list_plugins
from .psv import serialize_psv, try_parse_psv

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _read(path: str) -> bytes | None:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        print(f"{path}: {exc.strerror or exc}", file=sys.stderr)
        return None


def _print_diagnostics(diags: list[Diagnostic], path: str, as_json: bool) -> None:
    if as_json:
        payload = {"ok": not has_errors(diags), "diagnostics": [d.to_dict() for d in diags]}
        print(json.dumps(payload, indent=2, sort_keys=True))
        return
    for diag in diags:
        print(diag.render(path), file=sys.stderr)


def cmd_validate(args: argparse.Namespace) -> int:
    data = _read(args.file)
    if data is None:
        return EXIT_IO
    _, diags = run_validation(data)
    _print_diagnostics(diags, args.file, args.json)
    return EXIT_DIAGNOSTICS if has_errors(diags) else EXIT_OK


def _default_output(path: str, extension: str) -> str:
    name = Path(path).name
    for suffix in (".psv.xml", ".xml"):
        if name.endswith(suffix):
            return str(Path(path).with_name(name[: -len(suffix)] + extension))
    return str(Path(path).with_name(name + extension))


def cmd_compile(args: argparse.Namespace) -> int:
    try:
        plugin = get_plugin(args.backend)
    except PluginNotFound as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    data = _read(args.file)
    if data is None:
        return EXIT_IO
    doc, diags = try_parse_psv(data)
    if doc is not None:
        text, more = plugin.compile(doc.spec)
        diags = diags + more
    else:
        text = ""
    _print_diagnostics(diags, args.file, args.json)
    if has_errors(diags) or doc is None:
        return EXIT_DIAGNOSTICS
    out = args.out or _default_output(args.file, plugin.extension)
    if out == "-":
        sys.stdout.write(text)
        return EXIT_OK
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        print(f"{out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_fmt(args: argparse.Namespace) -> int:
    data = _read(args.file)
    if data is None:
        return EXIT_IO
    doc, diags = try_parse_psv(data)
    if doc is None:
        _print_diagnostics(diags, args.file, as_json=False)
        return EXIT_DIAGNOSTICS
    canonical = serialize_psv(doc)
    if args.check:
        if canonical != data:
            print(f"{args.file}: not canonical", file=sys.stderr)
            return EXIT_DIAGNOSTICS
        return EXIT_OK
    if canonical != data:
        try:
            Path(args.file).write_bytes(canonical)
        except OSError as exc:
            print(f"{args.file}: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app, resolve_store_root

    root = resolve_store_root(args.root)
    host, port = args.host, args.port
    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
        port = probe.getsockname()[1]
        probe.close()
    except OSError as exc:
        print(f"cannot bind {host}:{port}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    app = create_app(root)
    print(f"serving protocol store {root!r} on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="info")
    return EXIT_OK


def cmd_backends(_args: argparse.Namespace) -> int:
    for plugin_id in list_plugins():
        print(plugin_id)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metacp",
        description="Design, check and compile security protocol specifications.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="schema, executability and goal checks")
    p.add_argument("file")
    p.add_argument("--json", action="store_true", help="machine-readable diagnostics")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compile", help="compile a protocol through a backend plugin")
    p.add_argument("file")
    p.add_argument("--backend", default="tamarin")
    p.add_argument("-o", "--out", help="output path, - for stdout")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("fmt", help="rewrite a document in canonical form")
    p.add_argument("file")
    p.add_argument("--check", action="store_true", help="exit 1 instead of rewriting")
    p.set_defaults(func=cmd_fmt)

    p = sub.add_parser("serve", help="run the designer service")
    p.add_argument("--root", default=None, help="protocol store directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8737)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("backends", help="list available backend plugins")
    p.set_defaults(func=cmd_backends)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
