"""Immutable fact databases (sets of named relations over ground tuples)."""

from __future__ import annotations

import hashlib
from typing import Iterable, Mapping

from ..errors import ProgramError
from .canon import format_value


def _cell_key(v):
    return (0, v) if isinstance(v, int) else (1, v)


def tuple_sort_key(t: tuple):
    return tuple(_cell_key(v) for v in t)


class FactDatabase:
    """A frozen map relation-name -> set of ground tuples.

    Equality, hashing and the content fingerprint ignore empty
    relations, so a database round-trips through a fact directory
    (where empty relations have no file) unchanged.
    """

    __slots__ = ("_relations", "_fingerprint")

    def __init__(self, relations: Mapping[str, Iterable[tuple]] | None = None):
        rels: dict[str, frozenset] = {}
        for name, tuples in (relations or {}).items():
            fs = frozenset(tuple(t) for t in tuples)
            arities = {len(t) for t in fs}
            if len(arities) > 1:
                raise ProgramError(f"relation {name}: tuples of mixed arity {arities}")
            rels[name] = fs
        self._relations = rels
        self._fingerprint = None

    @property
    def relations(self) -> dict[str, frozenset]:
        return self._relations

    def relation(self, name: str) -> frozenset:
        return self._relations.get(name, frozenset())

    def relation_names(self) -> list[str]:
        return sorted(self._relations)

    def nonempty(self) -> dict[str, frozenset]:
        return {n: ts for n, ts in self._relations.items() if ts}

    def __len__(self):
        return sum(len(ts) for ts in self._relations.values())

    def __eq__(self, other):
        if not isinstance(other, FactDatabase):
            return NotImplemented
        return self.nonempty() == other.nonempty()

    def __hash__(self):
        return hash(self.fingerprint)

    def sorted_tuples(self, name: str) -> list[tuple]:
        return sorted(self.relation(name), key=tuple_sort_key)

    @property
    def fingerprint(self) -> str:
        if self._fingerprint is None:
            h = hashlib.sha256()
            for name, tuples in sorted(self.nonempty().items()):
                h.update(name.encode("utf-8"))
                h.update(b"\x00")
                for t in sorted(tuples, key=tuple_sort_key):
                    row = "\t".join(format_value(v) for v in t)
                    h.update(row.encode("utf-8"))
                    h.update(b"\n")
                h.update(b"\x01")
            self._fingerprint = h.hexdigest()
        return self._fingerprint

    def with_relations(self, extra: Mapping[str, Iterable[tuple]]) -> "FactDatabase":
        rels = {n: set(ts) for n, ts in self._relations.items()}
        for name, tuples in extra.items():
            rels.setdefault(name, set()).update(tuple(t) for t in tuples)
        return FactDatabase(rels)

    def union(self, other: "FactDatabase") -> "FactDatabase":
        """Relation-wise set union; arities of shared relations must agree."""
        for name, ts in other.nonempty().items():
            mine = self.relation(name)
            if mine and ts:
                if len(next(iter(mine))) != len(next(iter(ts))):
                    raise ProgramError(
                        f"relation {name}: arity conflict in merge"
                    )
        return self.with_relations(other._relations)

    def restrict(self, names: Iterable[str]) -> "FactDatabase":
        keep = set(names)
        return FactDatabase({n: ts for n, ts in self._relations.items() if n in keep})
