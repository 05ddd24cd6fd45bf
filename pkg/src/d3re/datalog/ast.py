"""Syntax tree for the Datalog dialect.

Ground values are plain Python ints (signed 64-bit range) and strs.
Variables and wildcards only exist inside rules; fact tuples are always
ground.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ProgramError

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

NUMBER = "number"
SYMBOL = "symbol"


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Wildcard:
    """Anonymous `_`; every occurrence is a distinct existential."""

    def __str__(self):
        return "_"


# A term in an atom: variable, wildcard, or ground constant.
Term = Var | Wildcard | int | str


def is_ground(t: Term) -> bool:
    return isinstance(t, (int, str))


def term_type(value) -> str:
    return NUMBER if isinstance(value, int) else SYMBOL


@dataclass(frozen=True)
class BinExpr:
    op: str  # one of + - * /
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class NegExpr:
    operand: "Expr"


Expr = Var | int | str | BinExpr | NegExpr


def expr_vars(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, BinExpr):
        return expr_vars(e.lhs) | expr_vars(e.rhs)
    if isinstance(e, NegExpr):
        return expr_vars(e.operand)
    return set()


@dataclass(frozen=True)
class Atom:
    relation: str
    args: tuple[Term, ...]
    negated: bool = False

    @property
    def arity(self) -> int:
        return len(self.args)

    def vars(self) -> set[str]:
        return {a.name for a in self.args if isinstance(a, Var)}


@dataclass(frozen=True)
class Comparison:
    """Builtin constraint `lhs op rhs`; a pure filter, never a binder."""

    op: str  # one of < <= > >= = !=
    lhs: Expr
    rhs: Expr

    def vars(self) -> set[str]:
        return expr_vars(self.lhs) | expr_vars(self.rhs)


BodyItem = Atom | Comparison


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[BodyItem, ...]
    line: int = 0

    def positive_atoms(self):
        return [b for b in self.body if isinstance(b, Atom) and not b.negated]

    def negated_atoms(self):
        return [b for b in self.body if isinstance(b, Atom) and b.negated]

    def comparisons(self):
        return [b for b in self.body if isinstance(b, Comparison)]


@dataclass(frozen=True)
class Declaration:
    relation: str
    columns: tuple[tuple[str, str], ...]  # (name, "number"|"symbol")

    @property
    def arity(self) -> int:
        return len(self.columns)

    def column_types(self) -> tuple[str, ...]:
        return tuple(t for _, t in self.columns)


@dataclass
class DatalogProgram:
    declarations: dict[str, Declaration] = field(default_factory=dict)
    input_relations: set[str] = field(default_factory=set)
    output_relations: set[str] = field(default_factory=set)
    rules: list[Rule] = field(default_factory=list)
    facts: list[tuple[str, tuple]] = field(default_factory=list)  # (relation, ground tuple)
    warnings: list[str] = field(default_factory=list)

    def declaration(self, name: str) -> Declaration:
        try:
            return self.declarations[name]
        except KeyError:
            raise ProgramError(f"relation {name!r} is not declared") from None

    def rules_for(self, relation: str) -> list[Rule]:
        return [r for r in self.rules if r.head.relation == relation]

    def derived_relations(self) -> set[str]:
        """Relations with at least one rule head."""
        return {r.head.relation for r in self.rules}


def check_value(relation: str, decl: Declaration, values: tuple) -> None:
    """Validate one ground tuple against a declaration."""
    if len(values) != decl.arity:
        raise ProgramError(
            f"{relation}: expected {decl.arity} columns, got {len(values)}"
        )
    for v, (cname, ctype) in zip(values, decl.columns):
        if ctype == NUMBER:
            if not isinstance(v, int):
                raise ProgramError(
                    f"{relation}.{cname}: expected number, got {v!r}"
                )
            if not (INT64_MIN <= v <= INT64_MAX):
                raise ProgramError(
                    f"{relation}.{cname}: {v} outside signed 64-bit range"
                )
        else:
            if not isinstance(v, str):
                raise ProgramError(
                    f"{relation}.{cname}: expected symbol, got {v!r}"
                )


def merge_programs(*programs: DatalogProgram) -> DatalogProgram:
    """Union of programs: declarations must agree on arity and column
    types; rules and facts are appended with duplicates dropped.
    """
    out = DatalogProgram()
    seen_rules: set = set()
    seen_facts: set = set()
    for p in programs:
        for name, decl in p.declarations.items():
            prev = out.declarations.get(name)
            if prev is None:
                out.declarations[name] = decl
            elif prev.column_types() != decl.column_types():
                raise ProgramError(
                    f"conflicting declarations for {name}: "
                    f"{prev.column_types()} vs {decl.column_types()}"
                )
        out.input_relations |= p.input_relations
        out.output_relations |= p.output_relations
        for r in p.rules:
            key = _rule_key(r)
            if key not in seen_rules:
                seen_rules.add(key)
                out.rules.append(r)
        for f in p.facts:
            if f not in seen_facts:
                seen_facts.add(f)
                out.facts.append(f)
        out.warnings.extend(p.warnings)
    return out


def _rule_key(rule: Rule):
    # Local import: canon depends on ast.
    from .canon import canonical_rule

    return canonical_rule(rule)
