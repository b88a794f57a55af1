"""Bundled example protocols: the three case studies shipped with the tool."""
from __future__ import annotations

from importlib import resources

FIXTURE_NAMES = ("dhke", "nsp", "nslp")


def fixture_names() -> tuple[str, ...]:
    return FIXTURE_NAMES


def load_fixture(name: str) -> bytes:
    if name not in FIXTURE_NAMES:
        raise KeyError(name)
    return resources.files(__package__).joinpath(f"{name}.psv.xml").read_bytes()
