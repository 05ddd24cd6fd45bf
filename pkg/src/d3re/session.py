"""Sessions: one loaded binary, an accumulated program, cached runs.

A session's state is a small JSON file inside the store next to the
metadatabase it drives, so a REPL and a server can look at the same
session concurrently (the snapshots they point at are immutable).
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .datalog import (
    DatalogProgram,
    EvalStats,
    FactDatabase,
    evaluate_from,
    merge_programs,
    parse_program,
    canonical_program_text,
)
from .errors import SessionError
from .facts import (
    base_schema,
    binary_digest,
    extract_elf_facts,
    load_fact_dir,
    session_base_program,
)
from .metadb import MetaDatabase

CURSOR_RELATION = "current_address"
HIGHLIGHT_RELATION = "highlight"
COMMENT_RELATION = "comment"


def format_address(v: int) -> str:
    """Zero-padded 8-digit hex, the REPL/UI rendering for numbers."""
    return f"{v:08x}" if v >= 0 else f"-{-v:08x}"


def format_cell(v) -> str:
    return format_address(v) if isinstance(v, int) else str(v)


@dataclass(frozen=True)
class Annotation:
    kind: str  # "highlight" | "comment"
    address: int
    text: str | None
    source_relation: str

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "address": self.address,
            "text": self.text,
            "source_relation": self.source_relation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Annotation":
        return cls(d["kind"], d["address"], d.get("text"), d["source_relation"])


@dataclass
class RunResult:
    node_id: str
    output_relations: list[str]
    stats: EvalStats
    database: FactDatabase


@dataclass
class Session:
    store: MetaDatabase
    session_id: str
    binary_digest: str
    root: str
    current: str
    program_text: str  # canonical accumulated program (with schema)
    source: str
    cursor: int | None = None
    annotations: list[Annotation] = field(default_factory=list)
    _program: DatalogProgram | None = None
    _db: FactDatabase | None = None

    # -- persistence ---------------------------------------------------------

    @property
    def path(self) -> Path:
        return self.store.root_dir / "sessions" / f"{self.session_id}.json"

    def save(self):
        data = {
            "session_id": self.session_id,
            "binary_digest": self.binary_digest,
            "root": self.root,
            "current": self.current,
            "program_text": self.program_text,
            "source": self.source,
            "cursor": self.cursor,
            "annotations": [a.to_dict() for a in self.annotations],
        }
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(data, indent=1), encoding="utf-8")
        os.replace(tmp, self.path)

    @classmethod
    def load(cls, store: MetaDatabase, session_id: str) -> "Session":
        path = store.root_dir / "sessions" / f"{session_id}.json"
        if not path.is_file():
            raise SessionError(f"unknown session {session_id}")
        data = json.loads(path.read_text(encoding="utf-8"))
        return cls(
            store=store,
            session_id=data["session_id"],
            binary_digest=data["binary_digest"],
            root=data["root"],
            current=data["current"],
            program_text=data["program_text"],
            source=data["source"],
            cursor=data.get("cursor"),
            annotations=[Annotation.from_dict(a) for a in data["annotations"]],
        )

    # -- program state ---------------------------------------------------------

    @property
    def program(self) -> DatalogProgram:
        if self._program is None:
            self._program = parse_program(self.program_text)
        return self._program

    def database(self) -> FactDatabase:
        if self._db is None:
            self._db = self.store.load_snapshot(self.current)
        return self._db

    def _merge(self, text: str) -> tuple[DatalogProgram, DatalogProgram]:
        incoming = parse_program(text)
        merged = merge_programs(self.program, incoming)
        return incoming, merged

    def _commit_program(self, merged: DatalogProgram):
        self.program_text = canonical_program_text(merged)
        self._program = merged
        self.save()

    def load_rules(self, text: str) -> DatalogProgram:
        """Parse and append rules; session program unchanged on error."""
        incoming, merged = self._merge(text)
        self._commit_program(merged)
        return incoming

    def assume(self, fact_text: str):
        """Append one ground fact, e.g. `code_in_range(19490,21704).`"""
        merged = parse_program(self.program_text + "\n" + fact_text.strip())
        if len(merged.rules) != len(self.program.rules):
            raise SessionError("assume expects a ground fact, not a rule")
        new = set(merged.facts) - set(self.program.facts)
        if len(new) > 1:
            raise SessionError("assume expects exactly one ground fact")
        self._commit_program(merged)

    def effective_program(
        self, merged: DatalogProgram | None = None
    ) -> DatalogProgram:
        """Accumulated program with the latest viewer cursor fact
        replacing any earlier one."""
        program = merge_programs(merged if merged is not None else self.program)
        if self.cursor is not None:
            program.facts = [
                (rel, t) for rel, t in program.facts if rel != CURSOR_RELATION
            ]
            program.facts.append((CURSOR_RELATION, (self.cursor,)))
        return program

    # -- evaluation ---------------------------------------------------------------

    def run(self, text: str | None = None) -> RunResult:
        """Load `text` (if given) and evaluate the accumulated program,
        reusing the best compatible cached snapshot.  Session state
        only advances if the whole run succeeds."""
        if text is not None:
            submitted, merged = self._merge(text)
        else:
            submitted, merged = None, self.program
        program = self.effective_program(merged)
        seed_id = self.store.find_compatible(program, self.root)
        seed = self.store.node(seed_id)
        snapshot = self.store.load_snapshot(seed_id)
        stats = EvalStats()
        result = evaluate_from(program, snapshot, seed.rule_set, stats)
        node_id = self.store.register_run(seed_id, program, result)
        self.program_text = canonical_program_text(merged)
        self._program = merged
        self.current = node_id
        self._db = result
        self.refresh_annotations()
        self.save()
        outputs = sorted((submitted or program).output_relations)
        return RunResult(node_id, outputs, stats, result)

    def query(self, relation: str) -> list[tuple]:
        if relation not in self.program.declarations:
            raise SessionError(f"unknown relation {relation}")
        return self.database().sorted_tuples(relation)

    # -- annotations -----------------------------------------------------------------

    def refresh_annotations(self):
        """Recompute annotations from the current materialization:
        reserved highlight/comment relations plus registry bindings."""
        from .rulelib import annotation_bindings

        db = self.database()
        found: set[Annotation] = set()
        for (addr,) in db.relation(HIGHLIGHT_RELATION):
            found.add(Annotation("highlight", addr, None, HIGHLIGHT_RELATION))
        for addr, text in db.relation(COMMENT_RELATION):
            found.add(Annotation("comment", addr, text, COMMENT_RELATION))
        for binding in annotation_bindings():
            rows = db.relation(binding.relation)
            for row in rows:
                addr = row[binding.address_column]
                if not isinstance(addr, int):
                    continue
                if binding.kind == "highlight":
                    found.add(Annotation("highlight", addr, None, binding.relation))
                else:
                    text = binding.render(row)
                    found.add(Annotation("comment", addr, text, binding.relation))
        self.annotations = sorted(
            found, key=lambda a: (a.address, a.kind, a.text or "", a.source_relation)
        )

    def annotations_etag(self) -> str:
        payload = json.dumps([a.to_dict() for a in self.annotations]).encode()
        return hashlib.sha256(payload).hexdigest()


# -- opening ------------------------------------------------------------------------


def _next_session_id(store: MetaDatabase) -> str:
    taken = set()
    for path in (store.root_dir / "sessions").glob("s*.json"):
        m = re.fullmatch(r"s(\d+)", path.stem)
        if m:
            taken.add(int(m.group(1)))
    n = 1
    while n in taken:
        n += 1
    return f"s{n}"


def open_session(store: MetaDatabase, source: str | os.PathLike) -> Session:
    """Create a session for a binary or a fact directory and register
    its base facts as a metadatabase root (idempotent per content)."""
    src = Path(source)
    if src.is_dir():
        facts = load_fact_dir(src, base_schema())
        digest = facts.fingerprint
    elif src.is_file():
        facts = extract_elf_facts(src)
        digest = binary_digest(src)
    else:
        raise SessionError(f"no such binary or fact directory: {src}")
    base = session_base_program()
    root_id = store.register_root(facts, digest, base, allow_empty=True)
    session = Session(
        store=store,
        session_id=_next_session_id(store),
        binary_digest=digest,
        root=root_id,
        current=root_id,
        program_text=canonical_program_text(base),
        source=str(src),
    )
    session.save()
    return session
