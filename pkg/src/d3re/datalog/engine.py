"""Stratified semi-naive fixpoint evaluation.

Two entry points:

* ``evaluate(program, edb)`` -- materialize the stratified least model
  from scratch.
* ``evaluate_from(program, snapshot, done)`` -- continue from a cached
  materialization.  ``snapshot`` must be the least model of the rules
  and facts named in ``done`` (canonical strings), a subset of
  ``program``.  Rules already in ``done`` only ever join against tuples
  added after the snapshot, so an unchanged prefix costs nothing.

Work accounting: ``EvalStats.join_work`` counts every candidate tuple
examined while extending a partial binding plus every completed body
instantiation.  It is a deterministic function of the (program, seed)
pair and is what the caching guarantees are measured against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import EvaluationError, ProgramError
from .ast import (
    NUMBER,
    SYMBOL,
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
    check_value,
    term_type,
)
from .canon import canonical_fact, canonical_rule
from .factdb import FactDatabase
from .stratify import stratify


@dataclass
class EvalStats:
    join_work: int = 0      # candidate tuples examined + instantiations
    derivations: int = 0    # complete body instantiations (pre-dedup)
    new_tuples: int = 0
    rounds: int = 0
    full_rule_evals: int = 0
    delta_rule_evals: int = 0

    def merge(self, other: "EvalStats"):
        self.join_work += other.join_work
        self.derivations += other.derivations
        self.new_tuples += other.new_tuples
        self.rounds += other.rounds
        self.full_rule_evals += other.full_rule_evals
        self.delta_rule_evals += other.delta_rule_evals


class _Store:
    """Mutable tuple store with lazily built hash indexes on the bound
    column sets each rule join demands."""

    def __init__(self):
        self.tuples: dict[str, set[tuple]] = {}
        self.indexes: dict[tuple[str, tuple[int, ...]], dict[tuple, list[tuple]]] = {}

    def rel(self, name: str) -> set[tuple]:
        return self.tuples.setdefault(name, set())

    def add(self, name: str, t: tuple) -> bool:
        s = self.rel(name)
        if t in s:
            return False
        s.add(t)
        for (rname, cols), idx in self.indexes.items():
            if rname == name:
                key = tuple(t[c] for c in cols)
                idx.setdefault(key, []).append(t)
        return True

    def _index(self, name: str, cols: tuple[int, ...]):
        key = (name, cols)
        idx = self.indexes.get(key)
        if idx is None:
            idx = {}
            for t in self.rel(name):
                k = tuple(t[c] for c in cols)
                idx.setdefault(k, []).append(t)
            self.indexes[key] = idx
        return idx

    def match(self, name: str, bound: dict[int, object]):
        """Tuples of `name` agreeing with `bound` column values."""
        if not bound:
            return self.rel(name)
        cols = tuple(sorted(bound))
        return self._index(name, cols).get(tuple(bound[c] for c in cols), ())

    def exists(self, name: str, bound: dict[int, object]) -> bool:
        return bool(self.match(name, bound))


# -- expression evaluation ---------------------------------------------------


def _trunc_div(a: int, b: int) -> int:
    if b == 0:
        raise EvaluationError("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _check64(v: int) -> int:
    if not (INT64_MIN <= v <= INT64_MAX):
        raise EvaluationError(f"arithmetic overflow: {v} outside signed 64-bit range")
    return v


def eval_expr(e, env: dict):
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, (int, str)):
        return e
    if isinstance(e, NegExpr):
        v = eval_expr(e.operand, env)
        if not isinstance(v, int):
            raise EvaluationError(f"arithmetic on non-integer term {v!r}")
        return _check64(-v)
    if isinstance(e, BinExpr):
        l = eval_expr(e.lhs, env)
        r = eval_expr(e.rhs, env)
        if not isinstance(l, int) or not isinstance(r, int):
            raise EvaluationError(f"arithmetic on non-integer terms {l!r}, {r!r}")
        if e.op == "+":
            return _check64(l + r)
        if e.op == "-":
            return _check64(l - r)
        if e.op == "*":
            return _check64(l * r)
        return _check64(_trunc_div(l, r))
    raise EvaluationError(f"cannot evaluate expression {e!r}")


def eval_comparison(c: Comparison, env: dict) -> bool:
    l = eval_expr(c.lhs, env)
    r = eval_expr(c.rhs, env)
    if c.op == "=":
        return l == r
    if c.op == "!=":
        return l != r
    if type(l) is not type(r):
        raise EvaluationError(
            f"ordered comparison between {term_type(l)} and {term_type(r)}"
        )
    if c.op == "<":
        return l < r
    if c.op == "<=":
        return l <= r
    if c.op == ">":
        return l > r
    return l >= r


# -- rule plans ---------------------------------------------------------------

_CONST, _BOUND, _CAPTURE, _IGNORE, _SAMECAP = range(5)


class _AtomPlan:
    __slots__ = ("relation", "cols", "index_cols")

    def __init__(self, atom: Atom, bound_before: set[str]):
        self.relation = atom.relation
        cols = []
        captured_here: dict[str, int] = {}
        for i, arg in enumerate(atom.args):
            if isinstance(arg, Wildcard):
                cols.append((_IGNORE, None))
            elif isinstance(arg, Var):
                if arg.name in bound_before:
                    cols.append((_BOUND, arg.name))
                elif arg.name in captured_here:
                    cols.append((_SAMECAP, captured_here[arg.name]))
                else:
                    captured_here[arg.name] = i
                    cols.append((_CAPTURE, arg.name))
            else:
                cols.append((_CONST, arg))
        self.cols = cols
        self.index_cols = tuple(
            i for i, (kind, _) in enumerate(cols) if kind in (_CONST, _BOUND)
        )

    def bound_values(self, env: dict) -> dict[int, object]:
        out = {}
        for i in self.index_cols:
            kind, payload = self.cols[i]
            out[i] = payload if kind == _CONST else env[payload]
        return out

    def bind(self, t: tuple, env: dict) -> list[str] | None:
        """Extend env from tuple t; returns captured names or None on
        mismatch (only _SAMECAP can mismatch once index columns agree)."""
        captured = []
        for i, (kind, payload) in enumerate(self.cols):
            if kind == _CAPTURE:
                env[payload] = t[i]
                captured.append(payload)
            elif kind == _SAMECAP:
                if t[i] != t[payload]:
                    for name in captured:
                        del env[name]
                    return None
        return captured


class _RulePlan:
    def __init__(self, rule: Rule):
        self.rule = rule
        self.canonical = canonical_rule(rule)
        self.head_relation = rule.head.relation
        atoms = rule.positive_atoms()
        self.atoms = []
        bound: set[str] = set()
        # checks ready after atom i has bound its variables; -1 = upfront
        self.checks_after: dict[int, list] = {i: [] for i in range(-1, len(atoms))}
        pending = [b for b in rule.body if isinstance(b, Comparison) or
                   (isinstance(b, Atom) and b.negated)]
        for check in list(pending):
            if not _check_vars(check):
                self.checks_after[-1].append(check)
                pending.remove(check)
        for i, atom in enumerate(atoms):
            self.atoms.append(_AtomPlan(atom, bound))
            bound |= atom.vars()
            for check in list(pending):
                if _check_vars(check) <= bound:
                    self.checks_after[i].append(check)
                    pending.remove(check)
        self.neg_plans = {}
        self.head_cols = [
            (arg.name if isinstance(arg, Var) else None, arg)
            for arg in rule.head.args
        ]

    def head_tuple(self, env: dict) -> tuple:
        return tuple(
            env[name] if name is not None else arg
            for name, arg in self.head_cols
        )


def _check_vars(check) -> set[str]:
    if isinstance(check, Comparison):
        return check.vars()
    return check.vars()


def _neg_bound(atom: Atom, env: dict) -> dict[int, object]:
    out = {}
    for i, arg in enumerate(atom.args):
        if isinstance(arg, Var):
            out[i] = env[arg.name]
        elif not isinstance(arg, Wildcard):
            out[i] = arg
    return out


class _RuleRunner:
    def __init__(self, plan: _RulePlan, store: _Store, stats: EvalStats):
        self.plan = plan
        self.store = store
        self.stats = stats

    def run(self, delta_at: int | None, delta: dict[str, set] | None, out: list):
        """Evaluate the body; atom `delta_at` (if given) enumerates only
        the delta set of its relation."""
        env: dict = {}
        if not self._checks_ok(-1, env):
            return
        self._rec(0, delta_at, delta, env, out)

    def _checks_ok(self, i: int, env: dict) -> bool:
        for check in self.plan.checks_after[i]:
            if isinstance(check, Comparison):
                if not eval_comparison(check, env):
                    return False
            else:
                if self.store.exists(check.relation, _neg_bound(check, env)):
                    return False
        return True

    def _rec(self, i: int, delta_at, delta, env: dict, out: list):
        plan = self.plan
        if i == len(plan.atoms):
            self.stats.derivations += 1
            self.stats.join_work += 1
            out.append((plan.head_relation, plan.head_tuple(env)))
            return
        ap = plan.atoms[i]
        bound = ap.bound_values(env)
        if i == delta_at:
            candidates = [
                t for t in delta.get(ap.relation, ())
                if all(t[c] == v for c, v in bound.items())
            ]
        else:
            candidates = self.store.match(ap.relation, bound)
        for t in candidates:
            self.stats.join_work += 1
            captured = ap.bind(t, env)
            if captured is None:
                continue
            if self._checks_ok(i, env):
                self._rec(i + 1, delta_at, delta, env, out)
            for name in captured:
                del env[name]


# -- static typing of rules ----------------------------------------------------


def _infer_var_types(program: DatalogProgram, rule: Rule) -> dict[str, str]:
    types: dict[str, str] = {}

    def note(name: str, t: str, where: str):
        prev = types.get(name)
        if prev is None:
            types[name] = t
        elif prev != t:
            raise EvaluationError(
                f"variable {name} used as both number and symbol in {where}"
            )

    for atom in [rule.head] + list(rule.body):
        if not isinstance(atom, Atom):
            continue
        decl = program.declaration(atom.relation)
        for arg, (_, ctype) in zip(atom.args, decl.columns):
            if isinstance(arg, Var):
                note(arg.name, ctype, f"rule for {rule.head.relation}")
    return types


def _expr_type(e, var_types: dict[str, str], head: str) -> str:
    if isinstance(e, Var):
        return var_types[e.name]
    if isinstance(e, int):
        return NUMBER
    if isinstance(e, str):
        return SYMBOL
    if isinstance(e, NegExpr):
        if _expr_type(e.operand, var_types, head) != NUMBER:
            raise EvaluationError(f"arithmetic on non-integer term in rule for {head}")
        return NUMBER
    if _expr_type(e.lhs, var_types, head) != NUMBER or \
            _expr_type(e.rhs, var_types, head) != NUMBER:
        raise EvaluationError(f"arithmetic on non-integer term in rule for {head}")
    return NUMBER


def _validate_types(program: DatalogProgram):
    for rule in program.rules:
        var_types = _infer_var_types(program, rule)
        for c in rule.comparisons():
            lt = _expr_type(c.lhs, var_types, rule.head.relation)
            rt = _expr_type(c.rhs, var_types, rule.head.relation)
            if lt != rt:
                raise EvaluationError(
                    f"comparison between {lt} and {rt} in rule for "
                    f"{rule.head.relation}"
                )


# -- driver --------------------------------------------------------------------


def _validate_edb(program: DatalogProgram, db: FactDatabase):
    for name, tuples in db.nonempty().items():
        if name not in program.declarations:
            raise EvaluationError(
                f"fact database supplies undeclared relation {name!r}"
            )
        decl = program.declarations[name]
        for t in tuples:
            try:
                check_value(name, decl, t)
            except ProgramError as e:
                raise EvaluationError(str(e)) from None


def _run(
    program: DatalogProgram,
    seed_db: FactDatabase,
    extra: list[tuple[str, tuple]],
    done: frozenset[str],
    stats: EvalStats,
) -> FactDatabase:
    _validate_types(program)
    strat = stratify(program)

    store = _Store()
    for name, tuples in seed_db.nonempty().items():
        for t in tuples:
            store.add(name, t)

    # growth: tuples added since the seed, pending for stratum-entry
    # delta passes of already-done rules
    growth: dict[str, set] = {}
    for name, t in extra:
        if store.add(name, t):
            growth.setdefault(name, set()).add(t)
            stats.new_tuples += 1

    plans = {id(r): _RulePlan(r) for r in program.rules}

    for stratum in strat.strata:
        runners = [_RuleRunner(plans[id(r)], store, stats) for r in stratum]
        derived: list[tuple[str, tuple]] = []
        for runner in runners:
            if runner.plan.canonical in done:
                for d, ap in enumerate(runner.plan.atoms):
                    if growth.get(ap.relation):
                        stats.delta_rule_evals += 1
                        runner.run(d, growth, derived)
            else:
                stats.full_rule_evals += 1
                runner.run(None, None, derived)
        while True:
            stats.rounds += 1
            delta: dict[str, set] = {}
            for name, t in derived:
                if store.add(name, t):
                    delta.setdefault(name, set()).add(t)
                    growth.setdefault(name, set()).add(t)
                    stats.new_tuples += 1
            if not delta:
                break
            derived = []
            for runner in runners:
                for d, ap in enumerate(runner.plan.atoms):
                    if delta.get(ap.relation):
                        stats.delta_rule_evals += 1
                        runner.run(d, delta, derived)

    relations = {name: store.rel(name) for name in program.declarations}
    return FactDatabase(relations)


def evaluate(
    program: DatalogProgram,
    edb: FactDatabase,
    stats: EvalStats | None = None,
) -> FactDatabase:
    """Materialize the stratified least model of `program` over `edb`."""
    stats = stats if stats is not None else EvalStats()
    _validate_edb(program, edb)
    extra = [(name, t) for name in sorted(edb.nonempty()) for t in edb.relation(name)]
    extra.extend(program.facts)
    return _run(program, FactDatabase(), extra, frozenset(), stats)


def evaluate_from(
    program: DatalogProgram,
    snapshot: FactDatabase,
    done: frozenset[str],
    stats: EvalStats | None = None,
) -> FactDatabase:
    """Extend a cached materialization.

    `snapshot` must be the least model of the `done` subset of
    `program`'s rules and facts (canonical strings) over the original
    base facts, which the snapshot includes.
    """
    stats = stats if stats is not None else EvalStats()
    _validate_edb(program, snapshot)
    extra = [
        (name, t)
        for name, t in program.facts
        if canonical_fact(name, t) not in done
    ]
    return _run(program, snapshot, extra, done, stats)
