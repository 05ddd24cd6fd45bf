"""Base fact vocabulary sessions are built on.

These are the disassembler-style relations the shipped analyses
reference, plus the reserved viewer relations (highlight, comment,
current_address).  Sessions merge these declarations into every user
program so partial fact dumps evaluate without boilerplate.
"""

from __future__ import annotations

from ..datalog import DatalogProgram, merge_programs, parse_program

BASE_SCHEMA_SOURCE = """\
.decl code(ea:number)
.decl code_in_block(ea:number, block:number)
.decl instruction(ea:number, size:number, prefix:symbol, opcode:symbol, op1:number, op2:number, op3:number, op4:number)
.decl instruction_get_src_op(ea:number, index:number, op:number)
.decl instruction_get_dest_op(ea:number, index:number, op:number)
.decl op_immediate(op:number, value:number)
.decl op_regdirect(op:number, reg:symbol)
.decl pc_relative_operand(ea:number, index:number, dest:number)
.decl defined_symbol(ea:number, size:number, type:symbol, scope:symbol, sectionIndex:number, name:symbol)
.decl block_last_def_global(ea_used:number, ea_def:number, ga:number)
.decl last_def_global(block:number, ea_def:number, ga:number)
.decl section(name:symbol, size:number, addr:number)
.decl function_entry(ea:number)
.decl direct_call(ea:number, dest:number)
.decl data_byte(ea:number, value:number)
.decl risky_function(name:symbol)
.input code
.input code_in_block
.input instruction
.input instruction_get_src_op
.input instruction_get_dest_op
.input op_immediate
.input op_regdirect
.input pc_relative_operand
.input defined_symbol
.input block_last_def_global
.input last_def_global
.input section
.input function_entry
.input direct_call
.input data_byte
.input risky_function
"""

RESERVED_SOURCE = """\
.decl highlight(addr:number)
.decl comment(addr:number, text:symbol)
.decl current_address(addr:number)
.input current_address
"""

SYMBOL_TYPES = ("OBJECT", "FUNC", "NOTYPE")
SYMBOL_SCOPES = ("GLOBAL", "LOCAL", "WEAK")


def base_schema() -> DatalogProgram:
    return parse_program(BASE_SCHEMA_SOURCE)


def reserved_relations() -> DatalogProgram:
    return parse_program(RESERVED_SOURCE)


def session_base_program() -> DatalogProgram:
    """Schema + reserved relations: the ambient program of a session."""
    return merge_programs(base_schema(), reserved_relations())
