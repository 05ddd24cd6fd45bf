"""Base fact production: fact directories, ELF extraction, fixtures."""

from .elf import BinaryImage, binary_digest, extract_elf_facts, load_binary_image
from .factdir import load_fact_dir, merge, write_fact_dir
from .fixturegen import generate_facts
from .schema import base_schema, reserved_relations, session_base_program

__all__ = [
    "BinaryImage",
    "base_schema",
    "binary_digest",
    "extract_elf_facts",
    "generate_facts",
    "load_binary_image",
    "load_fact_dir",
    "merge",
    "reserved_relations",
    "session_base_program",
    "write_fact_dir",
]
