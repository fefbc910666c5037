"""Bundled query fixtures: ``name.trc`` with an optional ``name.expect`` sidecar.

A sidecar holds ``key: value`` lines.  Known keys: ``verdict`` (safe/unsafe),
``conditions`` (violated condition numbers), ``fragment`` (full/encv/enc),
``db`` (a database file in this directory) with ``result`` (``true``,
``false`` or tuples such as ``(1) (2)``), and ``textbook``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..evaluator import parse_database
from ..parser import parse_query

FIXTURE_DIR = Path(__file__).resolve().parent


@dataclass
class Fixture:
    name: str
    path: Path
    text: str
    expect: dict = field(default_factory=dict)

    @property
    def query(self):
        return parse_query(self.text)

    @property
    def conditions(self) -> set:
        return {int(c) for c in self.expect.get("conditions", "").split()}

    def database(self):
        """The sidecar's database and domain, or None."""
        name = self.expect.get("db")
        if not name:
            return None
        return parse_database((self.path.parent / name).read_text(encoding="utf-8"))


def read_expect(path: Path) -> dict:
    out = {}
    if path.exists():
        for line in path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                key, _, value = line.partition(":")
                out[key.strip()] = value.strip()
    return out


def load_fixtures(directory=None) -> list:
    directory = Path(directory) if directory is not None else FIXTURE_DIR
    fixtures = []
    for path in sorted(directory.glob("*.trc")):
        fixtures.append(
            Fixture(path.stem, path, path.read_text(encoding="utf-8"), read_expect(path.with_suffix(".expect")))
        )
    return fixtures


def fixture(name: str) -> Fixture:
    for fx in load_fixtures():
        if fx.name == name:
            return fx
    raise KeyError(name)
