"""Souffle-style fact directories: one tab-separated file per relation.

No header, no quoting; strings may not contain tabs or newlines.
Numbers are printed in decimal.  A missing file is an empty relation;
an unknown file is skipped with a warning.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path

from ..datalog import DatalogProgram, FactDatabase
from ..datalog.ast import NUMBER, check_value
from ..datalog.factdb import tuple_sort_key
from ..errors import FactFormatError, ProgramError

log = logging.getLogger(__name__)

FACT_SUFFIX = ".facts"


def load_fact_dir(dir: str | os.PathLike, schema: DatalogProgram) -> FactDatabase:
    """Read every `<relation>.facts` file under `dir` per the schema."""
    root = Path(dir)
    if not root.is_dir():
        raise FactFormatError(f"fact directory {root} does not exist")
    relations: dict[str, set] = {name: set() for name in schema.declarations}
    for path in sorted(root.iterdir()):
        if path.suffix != FACT_SUFFIX or not path.is_file():
            continue
        name = path.stem
        decl = schema.declarations.get(name)
        if decl is None:
            log.warning("ignoring %s: relation %r not in schema", path, name)
            continue
        relations[name] = _read_facts_file(path, name, decl)
    return FactDatabase(relations)


def _read_facts_file(path: Path, relation: str, decl) -> set:
    tuples = set()
    types = decl.column_types()
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if line == "":
                continue
            cols = line.split("\t")
            if len(cols) != decl.arity:
                raise FactFormatError(
                    f"{path}:{lineno}: expected {decl.arity} columns, got {len(cols)}"
                )
            row = []
            for text, ctype in zip(cols, types):
                if ctype == NUMBER:
                    try:
                        row.append(int(text, 10))
                    except ValueError:
                        raise FactFormatError(
                            f"{path}:{lineno}: {text!r} is not an integer"
                        ) from None
                else:
                    row.append(text)
            t = tuple(row)
            try:
                check_value(relation, decl, t)
            except ProgramError as e:
                raise FactFormatError(f"{path}:{lineno}: {e}") from None
            tuples.add(t)
    return tuples


def write_fact_dir(db: FactDatabase, dir: str | os.PathLike) -> None:
    """Write nonempty relations as `<relation>.facts`, rows sorted."""
    root = Path(dir)
    root.mkdir(parents=True, exist_ok=True)
    for name, tuples in sorted(db.nonempty().items()):
        with open(root / f"{name}{FACT_SUFFIX}", "w", encoding="utf-8") as fh:
            for t in sorted(tuples, key=tuple_sort_key):
                fh.write("\t".join(_cell(name, v) for v in t))
                fh.write("\n")


def _cell(relation: str, v) -> str:
    if isinstance(v, int):
        return str(v)
    if "\t" in v or "\n" in v:
        raise FactFormatError(
            f"relation {relation}: string {v!r} contains a tab or newline"
        )
    return v


def merge(base: FactDatabase, overlay: FactDatabase) -> FactDatabase:
    """Relation-wise set union of two fact databases."""
    return base.union(overlay)
