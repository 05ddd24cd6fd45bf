"""Parser for the rule-file dialect (`.dl`).

Accepted surface: `.decl name(col:number|symbol, ...)`, `.input name`,
`.output name`, rules `head :- body.`, ground facts `head(...).`,
`!` negation, `_` wildcards, comparison constraints with integer
arithmetic, `//` line comments.  A dangling comma immediately before
the closing `.` of a rule is tolerated with a warning.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ParseError, ProgramError
from .ast import (
    NUMBER,
    SYMBOL,
    Atom,
    BinExpr,
    Comparison,
    Declaration,
    DatalogProgram,
    NegExpr,
    Rule,
    Var,
    Wildcard,
    check_value,
    expr_vars,
    is_ground,
)

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<comment>//[^\n]*)
    | (?P<directive>\.(?:decl|input|output)\b)
    | (?P<hex>0x[0-9a-fA-F]+)
    | (?P<int>\d+)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<string>"(?:\\.|[^"\\\n])*")
    | (?P<punct>:-|!=|<=|>=|[()\,\.!=<>+\-*/:])
    """,
    re.VERBOSE,
)

_STRING_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t"}


@dataclass
class Token:
    kind: str  # directive | int | ident | string | punct | eof
    value: object
    line: int
    col: int


def _tokenize(text: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        if kind == "ws" or kind == "comment":
            pass
        elif kind == "hex":
            tokens.append(Token("int", int(raw, 16), line, col))
        elif kind == "int":
            tokens.append(Token("int", int(raw), line, col))
        elif kind == "string":
            tokens.append(Token("string", _unescape(raw, line, col), line, col))
        else:
            tokens.append(Token(kind, raw, line, col))
        nl = raw.count("\n")
        if nl:
            line += nl
            col = len(raw) - raw.rfind("\n")
        else:
            col += len(raw)
        pos = m.end()
    tokens.append(Token("eof", None, line, col))
    return tokens


def _unescape(raw: str, line: int, col: int) -> str:
    body = raw[1:-1]
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\":
            i += 1
            esc = body[i]
            if esc not in _STRING_ESCAPES:
                raise ParseError(f"unknown escape \\{esc}", line, col)
            out.append(_STRING_ESCAPES[esc])
        else:
            out.append(c)
        i += 1
    return "".join(out)


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.program = DatalogProgram()
        # (name, line) pairs resolved against declarations at the end
        self._pending_io: list[tuple[str, str, int]] = []

    # -- token plumbing ----------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str, value=None) -> Token:
        t = self.next()
        if t.kind != kind or (value is not None and t.value != value):
            want = value if value is not None else kind
            raise ParseError(f"expected {want!r}, found {t.value!r}", t.line, t.col)
        return t

    def at_punct(self, value: str) -> bool:
        t = self.peek()
        return t.kind == "punct" and t.value == value

    # -- grammar -----------------------------------------------------------

    def parse(self) -> DatalogProgram:
        while self.peek().kind != "eof":
            t = self.peek()
            if t.kind == "directive":
                self.directive()
            elif t.kind == "ident":
                self.rule_or_fact()
            else:
                raise ParseError(
                    f"expected declaration or rule, found {t.value!r}", t.line, t.col
                )
        self.finish()
        return self.program

    def directive(self):
        t = self.next()
        if t.value == ".decl":
            self.declaration(t)
            return
        name = self.expect("ident")
        kind = "input" if t.value == ".input" else "output"
        self._pending_io.append((kind, name.value, name.line))

    def declaration(self, t: Token):
        name = self.expect("ident").value
        self.expect("punct", "(")
        columns = []
        while True:
            cname = self.expect("ident").value
            self.expect("punct", ":")
            ctype_tok = self.expect("ident")
            if ctype_tok.value not in (NUMBER, SYMBOL):
                raise ParseError(
                    f"unknown column type {ctype_tok.value!r} (expected number or symbol)",
                    ctype_tok.line,
                    ctype_tok.col,
                )
            columns.append((cname, ctype_tok.value))
            if self.at_punct(","):
                self.next()
                continue
            break
        self.expect("punct", ")")
        decl = Declaration(name, tuple(columns))
        prev = self.program.declarations.get(name)
        if prev is not None and prev.column_types() != decl.column_types():
            raise ParseError(f"conflicting redeclaration of {name}", t.line, t.col)
        self.program.declarations[name] = decl

    def rule_or_fact(self):
        head_tok = self.peek()
        head = self.atom(allow_negation=False)
        if self.at_punct("."):
            self.next()
            self.add_fact(head, head_tok)
            return
        self.expect("punct", ":-")
        body = []
        while True:
            body.append(self.body_item())
            if self.at_punct(","):
                comma = self.next()
                if self.at_punct("."):
                    # Dangling comma before the final period.
                    self.program.warnings.append(
                        f"line {comma.line}: dangling comma before '.'"
                    )
                    self.next()
                    break
                continue
            self.expect("punct", ".")
            break
        self.add_rule(Rule(head=head, body=tuple(body), line=head_tok.line), head_tok)

    def body_item(self):
        t = self.peek()
        if t.kind == "punct" and t.value == "!":
            self.next()
            return self.atom(allow_negation=False, negated=True)
        if t.kind == "ident" and self._lookahead_is_call():
            return self.atom(allow_negation=False)
        return self.comparison()

    def _lookahead_is_call(self) -> bool:
        nxt = self.tokens[self.pos + 1]
        return nxt.kind == "punct" and nxt.value == "("

    def atom(self, allow_negation: bool, negated: bool = False) -> Atom:
        name = self.expect("ident")
        self.expect("punct", "(")
        args = []
        if not self.at_punct(")"):
            while True:
                args.append(self.term())
                if self.at_punct(","):
                    self.next()
                    continue
                break
        self.expect("punct", ")")
        return Atom(relation=name.value, args=tuple(args), negated=negated)

    def term(self):
        t = self.next()
        if t.kind == "int":
            return t.value
        if t.kind == "string":
            return t.value
        if t.kind == "punct" and t.value == "-":
            n = self.expect("int")
            return -n.value
        if t.kind == "ident":
            if t.value == "_":
                return Wildcard()
            return Var(t.value)
        raise ParseError(f"expected term, found {t.value!r}", t.line, t.col)

    _CMP_OPS = ("<", "<=", ">", ">=", "=", "!=")

    def comparison(self) -> Comparison:
        t = self.peek()
        lhs = self.expr()
        op = self.next()
        if op.kind != "punct" or op.value not in self._CMP_OPS:
            raise ParseError(
                f"expected comparison operator, found {op.value!r}", op.line, op.col
            )
        rhs = self.expr()
        return Comparison(op=op.value, lhs=lhs, rhs=rhs)

    def expr(self):
        node = self.mul_expr()
        while self.peek().kind == "punct" and self.peek().value in ("+", "-"):
            op = self.next().value
            node = BinExpr(op, node, self.mul_expr())
        return node

    def mul_expr(self):
        node = self.unary_expr()
        while self.peek().kind == "punct" and self.peek().value in ("*", "/"):
            op = self.next().value
            node = BinExpr(op, node, self.unary_expr())
        return node

    def unary_expr(self):
        t = self.peek()
        if t.kind == "punct" and t.value == "-":
            self.next()
            return NegExpr(self.unary_expr())
        return self.primary()

    def primary(self):
        t = self.next()
        if t.kind == "int":
            return t.value
        if t.kind == "string":
            return t.value
        if t.kind == "ident":
            if t.value == "_":
                raise ParseError("wildcard not allowed in an expression", t.line, t.col)
            return Var(t.value)
        if t.kind == "punct" and t.value == "(":
            node = self.expr()
            self.expect("punct", ")")
            return node
        raise ParseError(f"expected expression, found {t.value!r}", t.line, t.col)

    # -- semantic checks ---------------------------------------------------

    def add_fact(self, atom: Atom, tok: Token):
        if not all(is_ground(a) for a in atom.args):
            raise ParseError(
                f"fact {atom.relation} must be ground", tok.line, tok.col
            )
        decl = self._decl(atom.relation, tok)
        try:
            check_value(atom.relation, decl, atom.args)
        except ProgramError as e:
            raise ParseError(str(e), tok.line, tok.col) from None
        self.program.facts.append((atom.relation, tuple(atom.args)))

    def add_rule(self, rule: Rule, tok: Token):
        if rule.head.negated:
            raise ParseError("rule head may not be negated", tok.line, tok.col)
        self._check_atom(rule.head, tok)
        for b in rule.body:
            if isinstance(b, Atom):
                self._check_atom(b, tok)
        bound = set()
        for a in rule.positive_atoms():
            bound |= a.vars()
        for v in rule.head.vars():
            if v not in bound:
                raise ParseError(
                    f"unsafe rule for {rule.head.relation}: head variable {v} "
                    "not bound by a positive body literal",
                    tok.line,
                    tok.col,
                )
        if any(isinstance(a, Wildcard) for a in rule.head.args):
            raise ParseError(
                f"unsafe rule for {rule.head.relation}: wildcard in head",
                tok.line,
                tok.col,
            )
        for a in rule.negated_atoms():
            for v in a.vars():
                if v not in bound:
                    raise ParseError(
                        f"unsafe rule for {rule.head.relation}: variable {v} in "
                        "negated literal not bound by a positive literal",
                        tok.line,
                        tok.col,
                    )
        for c in rule.comparisons():
            for v in c.vars():
                if v not in bound:
                    raise ParseError(
                        f"unsafe rule for {rule.head.relation}: variable {v} in "
                        "constraint not bound by a positive literal",
                        tok.line,
                        tok.col,
                    )
        self.program.rules.append(rule)

    def _decl(self, relation: str, tok: Token) -> Declaration:
        decl = self.program.declarations.get(relation)
        if decl is None:
            raise ParseError(f"relation {relation!r} is not declared", tok.line, tok.col)
        return decl

    def _check_atom(self, atom: Atom, tok: Token):
        decl = self._decl(atom.relation, tok)
        if atom.arity != decl.arity:
            raise ParseError(
                f"{atom.relation}: expected {decl.arity} arguments, got {atom.arity}",
                tok.line,
                tok.col,
            )
        for arg, (cname, ctype) in zip(atom.args, decl.columns):
            if is_ground(arg):
                want = int if ctype == NUMBER else str
                if not isinstance(arg, want):
                    raise ParseError(
                        f"{atom.relation}.{cname}: constant {arg!r} does not match "
                        f"declared type {ctype}",
                        tok.line,
                        tok.col,
                    )

    def finish(self):
        for kind, name, line in self._pending_io:
            if name not in self.program.declarations:
                raise ParseError(f"relation {name!r} is not declared", line, 1)
            if kind == "input":
                self.program.input_relations.add(name)
            else:
                self.program.output_relations.add(name)


def parse_program(text: str) -> DatalogProgram:
    """Parse rule source into a validated DatalogProgram."""
    return _Parser(text).parse()
