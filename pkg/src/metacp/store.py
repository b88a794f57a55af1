"""Filesystem protocol store: one PSV file per protocol, plus an opaque
layout sidecar for the designer. The directory IS the database."""
from __future__ import annotations

import json
import os
import re
import tempfile
import threading
from collections import defaultdict
from pathlib import Path

NAME_RE = re.compile(r"[A-Za-z0-9_-]+\Z")


class StoreNameError(ValueError):
    pass


class ProtocolStore:
    """Atomic writes (temp file + rename), per-name write serialization,
    lock-free reads."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()

    def _lock(self, name: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[name]

    @staticmethod
    def check_name(name: str) -> str:
        if not NAME_RE.match(name):
            raise StoreNameError(
                f"protocol name {name!r} must match [A-Za-z0-9_-]+"
            )
        return name

    def _path(self, name: str) -> Path:
        return self.root / f"{self.check_name(name)}.psv.xml"

    def _layout_path(self, name: str) -> Path:
        return self.root / f"{self.check_name(name)}.layout.json"

    def names(self) -> list[str]:
        return sorted(p.name[: -len(".psv.xml")] for p in self.root.glob("*.psv.xml"))

    def exists(self, name: str) -> bool:
        return self._path(name).exists()

    def read(self, name: str) -> bytes:
        return self._path(name).read_bytes()

    def write(self, name: str, data: bytes) -> None:
        self._atomic_write(self._path(name), name, data)

    def delete(self, name: str) -> bool:
        with self._lock(name):
            path = self._path(name)
            found = path.exists()
            if found:
                path.unlink()
            layout = self._layout_path(name)
            if layout.exists():
                layout.unlink()
            return found

    def read_layout(self, name: str) -> dict | None:
        path = self._layout_path(name)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def write_layout(self, name: str, layout: dict) -> None:
        data = json.dumps(layout, indent=2, sort_keys=True).encode("utf-8") + b"\n"
        self._atomic_write(self._layout_path(name), name, data)

    def _atomic_write(self, path: Path, name: str, data: bytes) -> None:
        with self._lock(name):
            fd, tmp = tempfile.mkstemp(dir=self.root, prefix=f".{path.name}.")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
