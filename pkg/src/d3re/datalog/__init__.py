"""Datalog core: parsing, stratification, evaluation, canonical forms."""

from .ast import (
    Atom,
    BinExpr,
    Comparison,
    Declaration,
    DatalogProgram,
    NegExpr,
    Rule,
    Var,
    Wildcard,
    merge_programs,
)
from .canon import (
    canonical_fact,
    canonical_program_text,
    canonical_rule,
    canonical_rule_set,
    format_value,
    program_id,
)
from .engine import EvalStats, evaluate, evaluate_from
from .factdb import FactDatabase
from .naive import naive_evaluate
from .parser import parse_program
from .stratify import Stratification, stratify

__all__ = [
    "Atom",
    "BinExpr",
    "Comparison",
    "Declaration",
    "DatalogProgram",
    "EvalStats",
    "FactDatabase",
    "NegExpr",
    "Rule",
    "Stratification",
    "Var",
    "Wildcard",
    "canonical_fact",
    "canonical_program_text",
    "canonical_rule",
    "canonical_rule_set",
    "evaluate",
    "evaluate_from",
    "format_value",
    "merge_programs",
    "naive_evaluate",
    "parse_program",
    "program_id",
    "stratify",
]
