"""Stratification: layer rules so negation only sees completed relations.

Each relation gets the lowest feasible stratum: a positive body atom
requires head stratum >= body stratum, a negated one requires strictly
greater.  Unsatisfiable constraints (a negation cycle) are reported
with one offending cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import StratificationError
from .ast import DatalogProgram, Rule


@dataclass
class Stratification:
    strata: list[list[Rule]]
    relation_stratum: dict[str, int]

    @property
    def depth(self) -> int:
        return len(self.strata)


def stratify(program: DatalogProgram) -> Stratification:
    relations = sorted(program.declarations)
    stratum = {r: 0 for r in relations}

    edges: list[tuple[str, str, int]] = []  # (from, to, weight)
    for rule in program.rules:
        head = rule.head.relation
        for b in rule.positive_atoms():
            edges.append((b.relation, head, 0))
        for b in rule.negated_atoms():
            edges.append((b.relation, head, 1))
    edges.sort()

    # Longest-path relaxation; strata can never legitimately exceed the
    # relation count, so growth beyond it proves a negation cycle.
    limit = len(relations) + 1
    pred: dict[str, str] = {}
    for _ in range(limit + 1):
        changed = False
        for src, dst, w in edges:
            cand = stratum[src] + w
            if cand > stratum[dst]:
                stratum[dst] = cand
                pred[dst] = src
                changed = True
                if cand > limit:
                    raise StratificationError(
                        "program is not stratifiable: negation cycle "
                        + " -> ".join(_extract_cycle(pred, dst))
                    )
        if not changed:
            break

    depth = max(stratum.values(), default=0) + 1
    strata: list[list[Rule]] = [[] for _ in range(depth)]
    for rule in program.rules:
        strata[stratum[rule.head.relation]].append(rule)
    return Stratification(strata=strata, relation_stratum=stratum)


def _extract_cycle(pred: dict[str, str], start: str) -> list[str]:
    seen: list[str] = []
    node = start
    while node not in seen:
        seen.append(node)
        node = pred.get(node)
        if node is None:
            return seen  # should not happen; best effort
    cycle = seen[seen.index(node):] + [node]
    return cycle
