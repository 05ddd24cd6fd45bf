"""Naive fixpoint oracle.

Iterates the immediate-consequence operator per stratum with
brute-force substitution enumeration: no deltas, no indexes, no shared
join or builtin machinery with the semi-naive engine.  Exists as the
independent correctness oracle the engine is tested against.
"""

from __future__ import annotations

from ..errors import EvaluationError
from .ast import (
    Atom,
    BinExpr,
    Comparison,
    DatalogProgram,
    INT64_MAX,
    INT64_MIN,
    NegExpr,
    Rule,
    Var,
    Wildcard,
)
from .engine import _validate_edb
from .factdb import FactDatabase
from .stratify import stratify


def _eval(e, env):
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, (int, str)):
        return e
    if isinstance(e, NegExpr):
        v = _eval(e.operand, env)
        if not isinstance(v, int):
            raise EvaluationError(f"arithmetic on non-integer term {v!r}")
        return _range_check(-v)
    l = _eval(e.lhs, env)
    r = _eval(e.rhs, env)
    if not isinstance(l, int) or not isinstance(r, int):
        raise EvaluationError(f"arithmetic on non-integer terms {l!r}, {r!r}")
    if e.op == "+":
        v = l + r
    elif e.op == "-":
        v = l - r
    elif e.op == "*":
        v = l * r
    else:
        if r == 0:
            raise EvaluationError("division by zero")
        v = abs(l) // abs(r)
        if (l >= 0) != (r >= 0):
            v = -v
    return _range_check(v)


def _range_check(v):
    if not (INT64_MIN <= v <= INT64_MAX):
        raise EvaluationError(f"arithmetic overflow: {v} outside signed 64-bit range")
    return v


def _holds(c: Comparison, env) -> bool:
    l = _eval(c.lhs, env)
    r = _eval(c.rhs, env)
    if c.op == "=":
        return l == r
    if c.op == "!=":
        return l != r
    if isinstance(l, int) != isinstance(r, int):
        raise EvaluationError("ordered comparison between number and symbol")
    return {"<": l < r, "<=": l <= r, ">": l > r, ">=": l >= r}[c.op]


def _unify(atom: Atom, t: tuple, env: dict) -> dict | None:
    env = dict(env)
    for arg, v in zip(atom.args, t):
        if isinstance(arg, Wildcard):
            continue
        if isinstance(arg, Var):
            if arg.name in env:
                if env[arg.name] != v:
                    return None
            else:
                env[arg.name] = v
        elif arg != v:
            return None
    return env


def _matches(atom: Atom, t: tuple, env: dict) -> bool:
    for arg, v in zip(atom.args, t):
        if isinstance(arg, Wildcard):
            continue
        if isinstance(arg, Var):
            if env[arg.name] != v:
                return False
        elif arg != v:
            return False
    return True


def _consequences(rule: Rule, db: dict[str, set]) -> set[tuple]:
    positives = rule.positive_atoms()
    out = set()

    def rec(i, env):
        if i == len(positives):
            for c in rule.comparisons():
                if not _holds(c, env):
                    return
            for n in rule.negated_atoms():
                if any(_matches(n, t, env) for t in db.get(n.relation, ())):
                    return
            out.add(tuple(
                env[a.name] if isinstance(a, Var) else a for a in rule.head.args
            ))
            return
        atom = positives[i]
        for t in db.get(atom.relation, ()):
            env2 = _unify(atom, t, env)
            if env2 is not None:
                rec(i + 1, env2)

    rec(0, {})
    return out


def naive_evaluate(program: DatalogProgram, edb: FactDatabase) -> FactDatabase:
    """Least model by direct iteration to fixpoint, stratum by stratum."""
    _validate_edb(program, edb)
    db: dict[str, set] = {name: set(ts) for name, ts in edb.nonempty().items()}
    for name, t in program.facts:
        db.setdefault(name, set()).add(t)

    for stratum in stratify(program).strata:
        while True:
            changed = False
            for rule in stratum:
                derived = _consequences(rule, db)
                rel = db.setdefault(rule.head.relation, set())
                if not derived <= rel:
                    rel |= derived
                    changed = True
            if not changed:
                break

    relations = {name: db.get(name, set()) for name in program.declarations}
    return FactDatabase(relations)
