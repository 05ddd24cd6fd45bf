"""Shipped analyses: rule files, registry, annotation bindings."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..datalog import FactDatabase
from ..errors import SessionError
from ..session import RunResult, Session, format_cell


def rules_dir() -> Path:
    return Path(resources.files("d3re.rulelib")) / "rules"


@dataclass(frozen=True)
class Binding:
    relation: str
    kind: str  # "highlight" | "comment"
    address_column: int
    text: str | None = None

    def render(self, row: tuple) -> str:
        cells = [format_cell(v) for v in row]
        return (self.text or "").format(*cells)


@dataclass(frozen=True)
class Analysis:
    name: str
    rule_file: Path
    outputs: tuple[str, ...]
    bindings: tuple[Binding, ...]

    def source(self) -> str:
        return self.rule_file.read_text(encoding="utf-8")


_registry_cache: dict[str, Analysis] | None = None


def registry() -> dict[str, Analysis]:
    global _registry_cache
    if _registry_cache is None:
        root = rules_dir()
        data = json.loads((root / "registry.json").read_text(encoding="utf-8"))
        out = {}
        for entry in data["analyses"]:
            bindings = tuple(
                Binding(
                    relation=b["relation"],
                    kind=b["kind"],
                    address_column=b["address_column"],
                    text=b.get("text"),
                )
                for b in entry.get("bindings", ())
            )
            out[entry["name"]] = Analysis(
                name=entry["name"],
                rule_file=root / entry["file"],
                outputs=tuple(entry["outputs"]),
                bindings=bindings,
            )
        _registry_cache = out
    return _registry_cache


def annotation_bindings() -> list[Binding]:
    seen = set()
    out = []
    for analysis in registry().values():
        for b in analysis.bindings:
            if b not in seen:
                seen.add(b)
                out.append(b)
    return out


def run_analysis(name: str, session: Session) -> FactDatabase:
    """Run one registered analysis in the session and return its
    output relations (annotations are materialized as a side effect)."""
    analysis = registry().get(name)
    if analysis is None:
        raise SessionError(f"unknown analysis {name}")
    result: RunResult = session.run(analysis.source())
    return result.database.restrict(analysis.outputs)
