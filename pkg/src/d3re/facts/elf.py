"""Native ELF64 structural fact extraction (no disassembly).

Emits `section`, `defined_symbol`, `function_entry` and `data_byte`
for little-endian 64-bit ELF files.  Instruction-level relations come
from fact directories, not from here.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

from ..datalog import FactDatabase
from ..errors import NotElfError, TruncatedElfError, UnsupportedElfError

_SHT_SYMTAB = 2
_SHT_NOBITS = 8
_SHF_ALLOC = 0x2

_SYM_TYPES = {0: "NOTYPE", 1: "OBJECT", 2: "FUNC"}
_SYM_BINDS = {0: "LOCAL", 1: "GLOBAL", 2: "WEAK"}


@dataclass
class ElfSection:
    name: str
    type: int
    flags: int
    vaddr: int
    size: int
    data: bytes


@dataclass
class ElfSymbol:
    name: str
    value: int
    size: int
    type: str
    scope: str
    section_index: int


@dataclass
class BinaryImage:
    path: str
    digest: str
    format: str
    sections: list[ElfSection]
    symbols: list[ElfSymbol]


def _slice(data: bytes, offset: int, length: int, what: str) -> bytes:
    if offset < 0 or offset + length > len(data):
        raise TruncatedElfError(f"{what} extends past end of file")
    return data[offset:offset + length]


def _cstr(table: bytes, offset: int) -> str:
    if offset >= len(table):
        raise TruncatedElfError("string table offset out of range")
    end = table.find(b"\x00", offset)
    if end < 0:
        end = len(table)
    return table[offset:end].decode("utf-8", "replace")


def load_binary_image(path: str | Path) -> BinaryImage:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != b"\x7fELF":
        raise NotElfError(f"{path}: not an ELF file (bad magic)")
    ei_class, ei_data = raw[4], raw[5]
    if ei_class != 2:
        raise UnsupportedElfError(f"{path}: only 64-bit ELF is supported")
    if ei_data != 1:
        raise UnsupportedElfError(f"{path}: only little-endian ELF is supported")
    header = _slice(raw, 0, 64, "ELF header")
    e_shoff, = struct.unpack_from("<Q", header, 0x28)
    e_shentsize, e_shnum, e_shstrndx = struct.unpack_from("<HHH", header, 0x3A)
    if e_shentsize != 64:
        raise UnsupportedElfError(f"{path}: unexpected section header size {e_shentsize}")

    sections: list[ElfSection] = []
    raw_headers = []
    for i in range(e_shnum):
        sh = _slice(raw, e_shoff + i * 64, 64, f"section header {i}")
        name_off, sh_type, flags, addr, offset, size, link = struct.unpack_from(
            "<IIQQQQI", sh, 0
        )
        raw_headers.append((name_off, sh_type, flags, addr, offset, size, link))
    if e_shstrndx >= len(raw_headers) and e_shnum:
        raise TruncatedElfError(f"{path}: section name table index out of range")
    shstr = b""
    if e_shnum:
        _, _, _, _, off, size, _ = raw_headers[e_shstrndx]
        shstr = _slice(raw, off, size, "section name table")
    for name_off, sh_type, flags, addr, offset, size, link in raw_headers:
        data = b""
        if sh_type != _SHT_NOBITS and size:
            data = _slice(raw, offset, size, "section contents")
        sections.append(
            ElfSection(_cstr(shstr, name_off), sh_type, flags, addr, size, data)
        )

    symbols: list[ElfSymbol] = []
    for i, sec in enumerate(sections):
        if sec.type != _SHT_SYMTAB:
            continue
        strtab_index = raw_headers[i][6]
        if strtab_index >= len(sections):
            raise TruncatedElfError(f"{path}: symbol string table index out of range")
        strtab = sections[strtab_index].data
        count = len(sec.data) // 24
        for n in range(count):
            name_off, info, _other, shndx, value, size = struct.unpack_from(
                "<IBBHQQ", sec.data, n * 24
            )
            stype = _SYM_TYPES.get(info & 0xF)
            sbind = _SYM_BINDS.get(info >> 4)
            if stype is None or sbind is None:
                continue
            symbols.append(
                ElfSymbol(_cstr(strtab, name_off), value, size, stype, sbind, shndx)
            )

    return BinaryImage(
        path=str(path),
        digest=hashlib.sha256(raw).hexdigest(),
        format="elf64",
        sections=sections,
        symbols=symbols,
    )


def extract_elf_facts(path: str | Path) -> FactDatabase:
    """Structural facts of one ELF64 binary."""
    image = load_binary_image(path)
    section = set()
    defined_symbol = set()
    function_entry = set()
    data_byte = set()
    for sec in image.sections:
        if sec.name:
            section.add((sec.name, sec.size, sec.vaddr))
        if sec.flags & _SHF_ALLOC and sec.type != _SHT_NOBITS:
            for i, b in enumerate(sec.data):
                data_byte.add((sec.vaddr + i, b))
    for sym in image.symbols:
        if sym.section_index == 0 or not sym.name:
            continue  # undefined or unnamed
        defined_symbol.add(
            (sym.value, sym.size, sym.type, sym.scope, sym.section_index, sym.name)
        )
        if sym.type == "FUNC":
            function_entry.add((sym.value,))
    return FactDatabase(
        {
            "section": section,
            "defined_symbol": defined_symbol,
            "function_entry": function_entry,
            "data_byte": data_byte,
        }
    )


def binary_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
