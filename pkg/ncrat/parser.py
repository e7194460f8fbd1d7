"""
Recursive-descent parser for rational expressions.

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := number | var | 'inv' '(' expr ')' | 'T' '(' expr ')' | '(' expr ')' | matrix | '-' factor
    var    := 'x' digits
    matrix := '[' row (';' row)* ']'
    row    := expr (',' expr)*

Whitespace is insignificant. Inverse nodes are checked for invertibility at 0
as they are built.
"""
import re

from ncrat.errors import ParseError
from ncrat.ncalg import (
    add, block_matrix, constant, inv, mul, scale, sub, transpose_node, variable,
)

TOKEN_RE = re.compile(r"""
    (?P<space>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<var>x\d+)
  | (?P<name>inv|T)
  | (?P<op>[-+*(),;\[\]])
""", re.VERBOSE)


class Token:
    def __init__(self, kind, value, pos):
        self.kind = kind
        self.value = value
        self.pos = pos

    def __repr__(self):
        return f"{self.kind}:{self.value!r}@{self.pos}"

    def is_op(self, value):
        return self.kind == "op" and self.value == value


def tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        match = TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = match.lastgroup
        if kind != "space":
            tokens.append(Token(kind, match.group(kind), pos))
        pos = match.end()
    tokens.append(Token("end", None, len(text)))
    return tokens


class Parser:
    def __init__(self, text, g):
        if g < 1:
            raise ValueError("number of variables must be at least 1")
        self.text = text
        self.g = g
        self.tokens = tokenize(text)
        self.pos = 0

    def __repr__(self):
        return f"Parser(g={self.g}, at={self.peek()!r})"

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, value):
        tok = self.advance()
        if not tok.is_op(value):
            found = "end of input" if tok.kind == "end" else repr(tok.value)
            raise ParseError(f"expected {value!r}, found {found}", tok.pos)
        return tok

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected {tok.value!r}", tok.pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek().is_op("+") or self.peek().is_op("-"):
            op = self.advance()
            rhs = self.term()
            e = add(e, rhs) if op.value == "+" else sub(e, rhs)
        return e

    def term(self):
        e = self.factor()
        while self.peek().is_op("*"):
            self.advance()
            e = mul(e, self.factor())
        return e

    def factor(self):
        tok = self.advance()
        if tok.kind == "number":
            return constant(float(tok.value), self.g)
        if tok.kind == "var":
            j = int(tok.value[1:])
            if not 1 <= j <= self.g:
                raise ParseError(f"variable {tok.value} outside x1..x{self.g}", tok.pos)
            return variable(j, self.g)
        if tok.kind == "name":
            self.expect_op("(")
            inner = self.expr()
            self.expect_op(")")
            return inv(inner) if tok.value == "inv" else transpose_node(inner)
        if tok.is_op("("):
            inner = self.expr()
            self.expect_op(")")
            return inner
        if tok.is_op("["):
            return self.matrix()
        if tok.is_op("-"):
            return scale(-1.0, self.factor())
        found = "end of input" if tok.kind == "end" else repr(tok.value)
        raise ParseError(f"unexpected {found}", tok.pos)

    def matrix(self):
        rows = [[self.expr()]]
        while True:
            tok = self.advance()
            if tok.is_op(","):
                rows[-1].append(self.expr())
            elif tok.is_op(";"):
                rows.append([self.expr()])
            elif tok.is_op("]"):
                return block_matrix(rows)
            else:
                found = "end of input" if tok.kind == "end" else repr(tok.value)
                raise ParseError(f"expected ',', ';' or ']', found {found}", tok.pos)


def parse_expression(text, g):
    """
    Args:
        text: expression text
        g: number of variables x1..xg

    Returns:
        RationalExpr

    Raises:
        ParseError: syntax errors, unknown variables, inconsistent shapes
        NotAnalyticAtZero: inv() of something singular at 0
    """
    return Parser(text, g).parse()
