"""Metadatabase: a DAG of evaluated fact-database snapshots.

Layout under the store directory::

    roots/<binary_digest>            -> {"node_id": ...}
    nodes/<node_id>/manifest.json    -> node metadata (written last)
    nodes/<node_id>/rel/<name>.facts -> snapshot tuples
    locks/<binary_digest>.lock       -> per-lineage writer lock

A node is the materialization of a cumulative program (all rules and
facts run since ingestion) over one binary's base facts.  `node_id` is
the content fingerprint of the stored fact database; the manifest is
written last and renamed into place, so a node without a manifest is
garbage, never a torn read.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from filelock import FileLock

from ..datalog import (
    DatalogProgram,
    FactDatabase,
    canonical_program_text,
    canonical_rule,
    canonical_fact,
    canonical_rule_set,
    merge_programs,
    parse_program,
    program_id,
)
from ..errors import StoreError
from ..facts.factdir import load_fact_dir, write_fact_dir

log = logging.getLogger(__name__)

ROOT_PROGRAM_ID = "root"


@dataclass
class SnapshotNode:
    node_id: str
    parent: str | None
    program_id: str
    program_text: str  # canonical cumulative program, reparseable
    created_at: str
    root: str  # binary digest of the lineage

    def __post_init__(self):
        self._program = None
        self._rule_set = None

    @property
    def program(self) -> DatalogProgram:
        if self._program is None:
            self._program = parse_program(self.program_text)
        return self._program

    @property
    def rule_set(self) -> frozenset[str]:
        if self._rule_set is None:
            self._rule_set = canonical_rule_set(self.program)
        return self._rule_set

    def negated_relations(self) -> set[str]:
        return {a.relation for r in self.program.rules for a in r.negated_atoms()}


class MetaDatabase:
    def __init__(self, store_dir: str | os.PathLike):
        self.root_dir = Path(store_dir)
        for sub in ("roots", "nodes", "locks", "sessions"):
            (self.root_dir / sub).mkdir(parents=True, exist_ok=True)

    # -- paths ---------------------------------------------------------------

    def _node_dir(self, node_id: str) -> Path:
        return self.root_dir / "nodes" / node_id

    def _manifest_path(self, node_id: str) -> Path:
        return self._node_dir(node_id) / "manifest.json"

    def _root_path(self, digest: str) -> Path:
        return self.root_dir / "roots" / digest

    def lineage_lock(self, binary_digest: str) -> FileLock:
        return FileLock(self.root_dir / "locks" / f"{binary_digest}.lock")

    # -- reads ---------------------------------------------------------------

    def has_node(self, node_id: str) -> bool:
        return self._manifest_path(node_id).is_file()

    def node(self, node_id: str) -> SnapshotNode:
        path = self._manifest_path(node_id)
        if not path.is_file():
            raise StoreError(f"unknown node {node_id}")
        data = json.loads(path.read_text(encoding="utf-8"))
        return SnapshotNode(
            node_id=data["node_id"],
            parent=data["parent"],
            program_id=data["program_id"],
            program_text=data["program_text"],
            created_at=data["created_at"],
            root=data["root"],
        )

    def nodes(self) -> list[SnapshotNode]:
        out = []
        nodes_dir = self.root_dir / "nodes"
        for entry in sorted(nodes_dir.iterdir()):
            if (entry / "manifest.json").is_file():
                out.append(self.node(entry.name))
        return out

    def lineage(self, binary_digest: str) -> list[SnapshotNode]:
        return [n for n in self.nodes() if n.root == binary_digest]

    def root_node_id(self, binary_digest: str) -> str | None:
        path = self._root_path(binary_digest)
        if not path.is_file():
            return None
        return json.loads(path.read_text(encoding="utf-8"))["node_id"]

    def load_snapshot(self, node_id: str) -> FactDatabase:
        node = self.node(node_id)
        return load_fact_dir(self._node_dir(node_id) / "rel", node.program)

    # -- writes --------------------------------------------------------------

    def _write_node(self, node: SnapshotNode, db: FactDatabase):
        ndir = self._node_dir(node.node_id)
        rel_dir = ndir / "rel"
        rel_dir.mkdir(parents=True, exist_ok=True)
        write_fact_dir(db, rel_dir)
        manifest = {
            "node_id": node.node_id,
            "parent": node.parent,
            "program_id": node.program_id,
            "program_text": node.program_text,
            "created_at": node.created_at,
            "root": node.root,
        }
        tmp = ndir / "manifest.json.tmp"
        tmp.write_text(json.dumps(manifest, indent=1), encoding="utf-8")
        os.replace(tmp, self._manifest_path(node.node_id))

    def register_root(
        self,
        edb: FactDatabase,
        binary_digest: str,
        schema: DatalogProgram,
        allow_empty: bool = False,
    ) -> str:
        """Store a binary's base facts; idempotent per binary digest."""
        if len(edb) == 0 and not allow_empty:
            raise StoreError("refusing to register an empty fact database")
        with self.lineage_lock(binary_digest):
            existing = self.root_node_id(binary_digest)
            if existing is not None:
                return existing
            node_id = edb.fingerprint
            node = SnapshotNode(
                node_id=node_id,
                parent=None,
                program_id=ROOT_PROGRAM_ID,
                program_text=canonical_program_text(_declarations_only(schema)),
                created_at=_now(),
                root=binary_digest,
            )
            if not self.has_node(node_id):
                self._write_node(node, edb)
            path = self._root_path(binary_digest)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps({"node_id": node_id}), encoding="utf-8")
            os.replace(tmp, path)
            return node_id

    def register_run(
        self, parent_id: str, program: DatalogProgram, result: FactDatabase
    ) -> str:
        """Persist an evaluation result as a child of `parent_id`.

        `result` must be the materialization of parent snapshot +
        `program`.  Re-registering an identical run is a no-op; a run
        that derived nothing new returns the parent unchanged (the
        snapshot content, hence the content id, is the parent's).
        """
        parent = self.node(parent_id)
        node_id = result.fingerprint
        if node_id == parent.node_id:
            return parent_id
        cumulative = merge_programs(parent.program, program)
        with self.lineage_lock(parent.root):
            if self.has_node(node_id):
                return node_id
            node = SnapshotNode(
                node_id=node_id,
                parent=parent_id,
                program_id=program_id(program),
                program_text=canonical_program_text(cumulative),
                created_at=_now(),
                root=parent.root,
            )
            self._write_node(node, result)
            return node_id

    # -- compatibility search --------------------------------------------------

    def find_compatible(self, program: DatalogProgram, root_id: str) -> str:
        """Best cached starting point for `program` under `root_id`.

        A node is compatible when its cumulative rules/facts are a
        subset of the program's, and no rule or fact the program adds
        on top defines a relation the node's rules negate (reuse under
        negation is only sound when the negated relations are final).
        Maximal rule-set size wins; ties break to the newest, then to
        the largest node id.
        """
        root = self.node(root_id)
        target = canonical_rule_set(program)
        rule_by_canon = {canonical_rule(r): r for r in program.rules}
        fact_by_canon = {canonical_fact(rel, t): rel for rel, t in program.facts}

        best = None
        for node in self.lineage(root.root):
            if not node.rule_set <= target:
                continue
            new_defined = set()
            for canon, rule in rule_by_canon.items():
                if canon not in node.rule_set:
                    new_defined.add(rule.head.relation)
            for canon, rel in fact_by_canon.items():
                if canon not in node.rule_set:
                    new_defined.add(rel)
            if new_defined & node.negated_relations():
                continue
            key = (len(node.rule_set), node.created_at, node.node_id)
            if best is None or key > best[0]:
                best = (key, node)
        if best is None:
            raise StoreError(f"unknown root {root_id}")
        return best[1].node_id

    # -- maintenance -------------------------------------------------------------

    def gc(self, live_node_ids: set[str]) -> list[str]:
        """Drop nodes unreachable (via parent chains) from `live_node_ids`."""
        keep: set[str] = set()
        for node_id in live_node_ids:
            cur = node_id
            while cur is not None and cur not in keep:
                keep.add(cur)
                try:
                    cur = self.node(cur).parent
                except StoreError:
                    break
        removed = []
        for node in self.nodes():
            if node.node_id not in keep:
                shutil.rmtree(self._node_dir(node.node_id))
                removed.append(node.node_id)
        for root_file in sorted((self.root_dir / "roots").iterdir()):
            if root_file.suffix == ".tmp":
                continue
            node_id = json.loads(root_file.read_text(encoding="utf-8"))["node_id"]
            if node_id not in keep:
                root_file.unlink()
        return removed


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _declarations_only(program: DatalogProgram) -> DatalogProgram:
    out = DatalogProgram()
    out.declarations = dict(program.declarations)
    out.input_relations = set(program.input_relations)
    out.output_relations = set(program.output_relations)
    return out
