"""Canonical printing and content ids for programs.

The canonical form renames variables in order of first occurrence
(head first, then body left to right), keeps body literals in written
order, sorts rules and facts by their printed form, and sorts
declarations by relation name.  Two programs differing only in rule
order, whitespace, or variable naming print identically.

The program id hashes the rules+facts section only; declarations and
input/output markers are vocabulary, not logic.
"""

from __future__ import annotations

import hashlib

from .ast import (
    Atom,
    BinExpr,
    Comparison,
    DatalogProgram,
    NegExpr,
    Rule,
    Var,
    Wildcard,
)


def _quote(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'


def format_value(v) -> str:
    """Print one ground value the way rule files spell it."""
    return str(v) if isinstance(v, int) else _quote(v)


def _term_str(t, rename: dict[str, str]) -> str:
    if isinstance(t, Var):
        return rename.get(t.name, t.name)
    if isinstance(t, Wildcard):
        return "_"
    return format_value(t)


def _expr_str(e, rename: dict[str, str]) -> str:
    if isinstance(e, BinExpr):
        return f"({_expr_str(e.lhs, rename)}{e.op}{_expr_str(e.rhs, rename)})"
    if isinstance(e, NegExpr):
        return f"(-{_expr_str(e.operand, rename)})"
    return _term_str(e, rename)


def _atom_str(a: Atom, rename: dict[str, str]) -> str:
    args = ",".join(_term_str(t, rename) for t in a.args)
    neg = "!" if a.negated else ""
    return f"{neg}{a.relation}({args})"


def _body_item_str(b, rename: dict[str, str]) -> str:
    if isinstance(b, Comparison):
        return f"{_expr_str(b.lhs, rename)} {b.op} {_expr_str(b.rhs, rename)}"
    return _atom_str(b, rename)


def _rule_var_order(rule: Rule) -> list[str]:
    order: list[str] = []
    seen = set()

    def visit_term(t):
        if isinstance(t, Var) and t.name not in seen:
            seen.add(t.name)
            order.append(t.name)

    def visit_expr(e):
        if isinstance(e, BinExpr):
            visit_expr(e.lhs)
            visit_expr(e.rhs)
        elif isinstance(e, NegExpr):
            visit_expr(e.operand)
        else:
            visit_term(e)

    for t in rule.head.args:
        visit_term(t)
    for b in rule.body:
        if isinstance(b, Atom):
            for t in b.args:
                visit_term(t)
        else:
            visit_expr(b.lhs)
            visit_expr(b.rhs)
    return order


def canonical_rule(rule: Rule) -> str:
    rename = {name: f"V{i}" for i, name in enumerate(_rule_var_order(rule))}
    head = _atom_str(rule.head, rename)
    if not rule.body:
        return f"{head}."
    body = ", ".join(_body_item_str(b, rename) for b in rule.body)
    return f"{head} :- {body}."


def canonical_fact(relation: str, values: tuple) -> str:
    args = ",".join(format_value(v) for v in values)
    return f"{relation}({args})."


def canonical_rule_set(program: DatalogProgram) -> frozenset[str]:
    """The canonical rules+facts of a program, as comparable strings.

    This is the notion of "set of rules (or facts)" the metadatabase
    compares snapshots by.
    """
    rules = {canonical_rule(r) for r in program.rules}
    facts = {canonical_fact(rel, vals) for rel, vals in program.facts}
    return frozenset(rules | facts)


def canonical_program_text(program: DatalogProgram) -> str:
    """Full canonical text, reparseable by parse_program."""
    lines: list[str] = []
    for name in sorted(program.declarations):
        decl = program.declarations[name]
        cols = ", ".join(f"{c}:{t}" for c, t in decl.columns)
        lines.append(f".decl {name}({cols})")
    for name in sorted(program.input_relations):
        lines.append(f".input {name}")
    for name in sorted(program.output_relations):
        lines.append(f".output {name}")
    lines.extend(sorted(canonical_fact(rel, vals) for rel, vals in program.facts))
    lines.extend(sorted(canonical_rule(r) for r in program.rules))
    return "\n".join(lines) + "\n"


def program_id(program: DatalogProgram) -> str:
    """Content digest over the canonical rules and facts."""
    body = "\n".join(sorted(canonical_rule_set(program)))
    return hashlib.sha256(body.encode("utf-8")).hexdigest()
