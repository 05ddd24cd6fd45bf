"""Seeded random program generator for engine/oracle equivalence.

Programs stay small by construction: at most 4 relations, 6 rules and
8 distinct constants.  Negation, when enabled, only ever points at
relations with a smaller index, so every generated program stratifies.
Rules are emitted as source text so the parser is exercised too.
"""

from __future__ import annotations

import random

from d3re.datalog import DatalogProgram, FactDatabase, parse_program

NUM_CONSTANTS = list(range(8))
SYM_CONSTANTS = ["a", "b", "c", "d"]
VAR_NAMES = ["X", "Y", "Z", "W"]


class _Gen:
    def __init__(self, seed: int, allow_negation: bool, allow_compare: bool):
        self.rng = random.Random(seed)
        self.allow_negation = allow_negation
        self.allow_compare = allow_compare

    def constant(self, ctype: str) -> str:
        if ctype == "number":
            return str(self.rng.choice(NUM_CONSTANTS))
        return f'"{self.rng.choice(SYM_CONSTANTS)}"'

    def build(self) -> tuple[str, dict[str, list[tuple]]]:
        rng = self.rng
        n_rel = rng.randint(2, 4)
        arities = [rng.randint(1, 3) for _ in range(n_rel)]
        types = [
            [rng.choice(["number", "number", "symbol"]) for _ in range(arities[i])]
            for i in range(n_rel)
        ]
        lines = []
        for i in range(n_rel):
            cols = ", ".join(f"c{j}:{t}" for j, t in enumerate(types[i]))
            lines.append(f".decl r{i}({cols})")

        n_rules = rng.randint(1, 6)
        for _ in range(n_rules):
            head_idx = rng.randint(0, n_rel - 1)
            lines.append(self.rule(head_idx, n_rel, types))

        edb: dict[str, list[tuple]] = {}
        for i in range(n_rel):
            rows = set()
            for _ in range(rng.randint(0, 6)):
                rows.add(
                    tuple(
                        rng.choice(NUM_CONSTANTS)
                        if t == "number"
                        else rng.choice(SYM_CONSTANTS)
                        for t in types[i]
                    )
                )
            edb[f"r{i}"] = sorted(rows, key=lambda r: [str(x) for x in r])
        return "\n".join(lines) + "\n", edb

    def rule(self, head_idx: int, n_rel: int, types) -> str:
        rng = self.rng
        var_types: dict[str, str] = {}
        bound: list[str] = []
        body = []
        for _ in range(rng.randint(1, 3)):
            # positive deps never point above the head: with negation
            # always pointing strictly below, programs stay stratified
            rel = rng.randint(0, head_idx)
            args = []
            for ctype in types[rel]:
                choice = rng.random()
                if choice < 0.55:
                    # try to place a variable with a consistent type
                    candidates = [
                        v for v in VAR_NAMES if var_types.get(v, ctype) == ctype
                    ]
                    if candidates:
                        v = rng.choice(candidates)
                        var_types[v] = ctype
                        if v not in bound:
                            bound.append(v)
                        args.append(v)
                        continue
                args.append(self.constant(ctype))
            body.append(f"r{rel}({','.join(args)})")

        if self.allow_negation and head_idx > 0 and rng.random() < 0.4:
            rel = rng.randint(0, head_idx - 1)
            args = []
            for ctype in types[rel]:
                usable = [v for v in bound if var_types.get(v) == ctype]
                pick = rng.random()
                if pick < 0.4 and usable:
                    args.append(rng.choice(usable))
                elif pick < 0.7:
                    args.append("_")
                else:
                    args.append(self.constant(ctype))
            body.append(f"!r{rel}({','.join(args)})")

        if self.allow_compare and rng.random() < 0.35:
            nums = [v for v in bound if var_types.get(v) == "number"]
            if nums:
                lhs = rng.choice(nums)
                op = rng.choice(["<", "<=", ">", ">=", "=", "!="])
                if rng.random() < 0.5 and len(nums) > 1:
                    rhs = rng.choice(nums)
                else:
                    rhs = str(rng.choice(NUM_CONSTANTS))
                    if rng.random() < 0.3:
                        rhs = f"{rhs}+{rng.choice(NUM_CONSTANTS)}"
                body.append(f"{lhs} {op} {rhs}")

        head_args = []
        for ctype in types[head_idx]:
            usable = [v for v in bound if var_types.get(v) == ctype]
            if usable and rng.random() < 0.75:
                head_args.append(rng.choice(usable))
            else:
                head_args.append(self.constant(ctype))
        return f"r{head_idx}({','.join(head_args)}) :- {', '.join(body)}."


def random_case(
    seed: int, allow_negation: bool = True, allow_compare: bool = True
) -> tuple[DatalogProgram, FactDatabase, str]:
    gen = _Gen(seed, allow_negation, allow_compare)
    source, edb = gen.build()
    program = parse_program(source)
    return program, FactDatabase(edb), source
