"""Fixture generator: build instruction-level fact databases from a
tiny assembly-like description, so tests do not need a disassembler.

See docs/fixtures.md for the language.  In short::

    section .text 0x4c00 0x1000
    symbol swap_word OBJECT GLOBAL 0xa188 8 2
    func main 0x4c22
    block 0x4c22
    i 0x4c2a 8 mov dst:glob:swap_word src:imm:0
    call 0x5030 5 strcpy
    jump 0x4f70

Definitions of a global are instructions with a `dst:glob:` operand;
uses have `src:glob:`.  `block_last_def_global` and `last_def_global`
are derived from the block structure and `jump` flow edges with a
standard reaching-definitions pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..datalog import FactDatabase
from ..errors import FactFormatError


@dataclass
class _Insn:
    ea: int
    size: int
    opcode: str
    operands: list[tuple[str, str, str]]  # (role, kind, value)


@dataclass
class _Block:
    start: int
    func: str | None
    insns: list[_Insn] = field(default_factory=list)
    succs: list[int] = field(default_factory=list)


def _num(text: str, ctx: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise FactFormatError(f"{ctx}: {text!r} is not a number") from None


class FixtureBuilder:
    def __init__(self):
        self.sections: list[tuple[str, int, int]] = []
        self.symbols: dict[str, tuple[int, int, str, str, int]] = {}
        self.functions: list[tuple[str, int]] = []
        self.blocks: dict[int, _Block] = {}
        self.data: list[tuple[int, int]] = []
        self.calls: list[tuple[int, str]] = []  # resolved later
        self._cur: _Block | None = None
        self._op_ids: dict[tuple[str, str], int] = {}

    # -- source parsing -----------------------------------------------------

    def parse(self, text: str) -> "FixtureBuilder":
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            ctx = f"fixture line {lineno}"
            try:
                self._dispatch(parts, ctx)
            except (IndexError, KeyError):
                raise FactFormatError(f"{ctx}: malformed directive {line!r}") from None
        return self

    def _dispatch(self, parts: list[str], ctx: str):
        cmd = parts[0]
        if cmd == "section":
            self.sections.append((parts[1], _num(parts[3], ctx), _num(parts[2], ctx)))
        elif cmd == "symbol":
            name, stype, scope = parts[1], parts[2], parts[3]
            addr, size, secidx = (_num(p, ctx) for p in parts[4:7])
            self.symbols[name] = (addr, size, stype, scope, secidx)
        elif cmd == "func":
            name, addr = parts[1], _num(parts[2], ctx)
            secidx = _num(parts[3], ctx) if len(parts) > 3 else 1
            self.symbols[name] = (addr, 0, "FUNC", "GLOBAL", secidx)
            self.functions.append((name, addr))
        elif cmd == "block":
            start = _num(parts[1], ctx)
            blk = _Block(start=start, func=self.functions[-1][0] if self.functions else None)
            self.blocks[start] = blk
            self._cur = blk
        elif cmd == "i":
            self._insn(parts, ctx)
        elif cmd == "call":
            ea, size, target = _num(parts[1], ctx), _num(parts[2], ctx), parts[3]
            self._add_insn(_Insn(ea, size, "call", []), ctx)
            self.calls.append((ea, target))
        elif cmd == "jump":
            if self._cur is None:
                raise FactFormatError(f"{ctx}: jump outside a block")
            self._cur.succs.extend(_num(p, ctx) for p in parts[1:])
        elif cmd == "bytes":
            addr = _num(parts[1], ctx)
            blob = bytes.fromhex(parts[2])
            self.data.extend((addr + i, b) for i, b in enumerate(blob))
        else:
            raise FactFormatError(f"{ctx}: unknown directive {cmd!r}")

    def _insn(self, parts: list[str], ctx: str):
        ea, size, opcode = _num(parts[1], ctx), _num(parts[2], ctx), parts[3]
        operands = []
        for spec in parts[4:]:
            role, kind, value = spec.split(":", 2)
            if role not in ("src", "dst", "srcdst"):
                raise FactFormatError(f"{ctx}: bad operand role {role!r}")
            if kind not in ("imm", "reg", "glob"):
                raise FactFormatError(f"{ctx}: bad operand kind {kind!r}")
            operands.append((role, kind, value))
        if len(operands) > 4:
            raise FactFormatError(f"{ctx}: more than 4 operands")
        self._add_insn(_Insn(ea, size, opcode, operands), ctx)

    def _add_insn(self, insn: _Insn, ctx: str):
        if self._cur is None:
            raise FactFormatError(f"{ctx}: instruction outside a block")
        self._cur.insns.append(insn)

    # -- fact generation ----------------------------------------------------

    def _op_id(self, kind: str, value: str) -> int:
        key = (kind, value)
        if key not in self._op_ids:
            self._op_ids[key] = len(self._op_ids) + 1
        return self._op_ids[key]

    def _sym_addr(self, name: str, ctx: str) -> int:
        if name in self.symbols:
            return self.symbols[name][0]
        return _num(name, ctx)

    def build(self) -> FactDatabase:
        rels: dict[str, set] = {
            "section": set(),
            "defined_symbol": set(),
            "function_entry": set(),
            "code": set(),
            "code_in_block": set(),
            "instruction": set(),
            "instruction_get_src_op": set(),
            "instruction_get_dest_op": set(),
            "op_immediate": set(),
            "op_regdirect": set(),
            "pc_relative_operand": set(),
            "direct_call": set(),
            "data_byte": set(),
            "block_last_def_global": set(),
            "last_def_global": set(),
        }
        for name, size, addr in self.sections:
            rels["section"].add((name, size, addr))
        for name, (addr, size, stype, scope, secidx) in self.symbols.items():
            rels["defined_symbol"].add((addr, size, stype, scope, secidx, name))
            if stype == "FUNC":
                rels["function_entry"].add((addr,))
        rels["data_byte"].update(self.data)
        for ea, target in self.calls:
            rels["direct_call"].add((ea, self._sym_addr(target, f"call at {ea:#x}")))

        # per-instruction relations; defs/uses of globals collected on the way
        defs_in_block: dict[int, list[tuple[int, int]]] = {}  # block -> [(ea, ga)]
        for blk in self.blocks.values():
            for insn in sorted(blk.insns, key=lambda i: i.ea):
                rels["code"].add((insn.ea,))
                rels["code_in_block"].add((insn.ea, blk.start))
                slots = [0, 0, 0, 0]
                for idx, (role, kind, value) in enumerate(insn.operands, start=1):
                    ctx = f"instruction at {insn.ea:#x}"
                    op = self._op_id(kind, value)
                    slots[idx - 1] = op
                    if kind == "imm":
                        rels["op_immediate"].add((op, _num(value, ctx)))
                    elif kind == "reg":
                        rels["op_regdirect"].add((op, value))
                    else:
                        ga = self._sym_addr(value, ctx)
                        rels["pc_relative_operand"].add((insn.ea, idx, ga))
                    if role in ("src", "srcdst"):
                        rels["instruction_get_src_op"].add((insn.ea, idx, op))
                    if role in ("dst", "srcdst"):
                        rels["instruction_get_dest_op"].add((insn.ea, idx, op))
                        if kind == "glob":
                            ga = self._sym_addr(value, ctx)
                            defs_in_block.setdefault(blk.start, []).append((insn.ea, ga))
                rels["instruction"].add(
                    (insn.ea, insn.size, "", insn.opcode, *slots)
                )

        self._use_def_facts(rels, defs_in_block)
        return FactDatabase(rels)

    def _use_def_facts(self, rels, defs_in_block):
        # block_last_def_global: for every instruction, the latest
        # definition of each global earlier in the same block.
        for blk in self.blocks.values():
            last: dict[int, int] = {}
            events = sorted(defs_in_block.get(blk.start, ()))
            for insn in sorted(blk.insns, key=lambda i: i.ea):
                for ga, ea_def in last.items():
                    rels["block_last_def_global"].add((insn.ea, ea_def, ga))
                for ea_def, ga in events:
                    if ea_def == insn.ea:
                        last[ga] = ea_def

        # last_def_global: reaching definitions at block entry.
        gen: dict[int, dict[int, int]] = {}  # block -> ga -> last def ea
        for start, events in defs_in_block.items():
            g: dict[int, int] = {}
            for ea, ga in sorted(events):
                g[ga] = ea
            gen[start] = g
        reach_in: dict[int, set[tuple[int, int]]] = {b: set() for b in self.blocks}
        changed = True
        while changed:
            changed = False
            for blk in self.blocks.values():
                out = {
                    (ea, ga)
                    for ea, ga in reach_in[blk.start]
                    if ga not in gen.get(blk.start, {})
                }
                out |= {(ea, ga) for ga, ea in gen.get(blk.start, {}).items()}
                for succ in blk.succs:
                    if succ in reach_in and not out <= reach_in[succ]:
                        reach_in[succ] |= out
                        changed = True
        for start, pairs in reach_in.items():
            for ea, ga in pairs:
                rels["last_def_global"].add((start, ea, ga))


def generate_facts(source: str) -> FactDatabase:
    """Fact database for one fixture description."""
    return FixtureBuilder().parse(source).build()
