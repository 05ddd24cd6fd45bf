"""Snapshot metadatabase: cached materializations with reuse search."""

from .store import MetaDatabase, SnapshotNode, ROOT_PROGRAM_ID

__all__ = ["MetaDatabase", "SnapshotNode", "ROOT_PROGRAM_ID"]
