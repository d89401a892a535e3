"""Nanosyntax lexer, recursive-descent parser and AST.

The tree has exactly three node kinds: primitives, references and
assignments. Infix expressions are lowered into assignments named after a
canonical operator (``time >= 100.0`` becomes ``geq { time; 100.0; }``), so
nothing downstream ever sees an operator node.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Union

from .errors import LexError, ParseError, SourceSpan

ROOT_IDENTIFIER = "__root__"

# token kinds
IDENT = "ident"
INTEGER = "integer"
DECIMAL = "decimal"
STRING = "string"
BOOLEAN = "boolean"
COLON = ":"
SEMI = ";"
LBRACE = "{"
RBRACE = "}"
LPAREN = "("
RPAREN = ")"

COMPARISON_OPS = {">=": "geq", "<=": "leq", ">": "gt", "<": "lt", "==": "eq", "!=": "neq"}
ARITHMETIC_OPS = {"+": "plus", "-": "minus", "*": "times", "/": "divide"}
OPERATOR_NAMES = {**COMPARISON_OPS, **ARITHMETIC_OPS}
OPERATOR_SYMBOLS = {name: sym for sym, name in OPERATOR_NAMES.items()}

# binding power; higher binds tighter
PRECEDENCE = {op: 1 for op in COMPARISON_OPS}
PRECEDENCE.update({"+": 2, "-": 2, "*": 3, "/": 3})

KEYWORDS = {"true": True, "false": False}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan
    value: object = None

    def __repr__(self) -> str:
        return f"Token({self.kind!r}, {self.text!r})"


# Spans never take part in equality, so two trees compare structurally.
@dataclass(frozen=True)
class PrimitiveNode:
    kind: str  # integer | decimal | string | boolean
    value: Union[int, float, str, bool]
    span: SourceSpan = field(default=SourceSpan(1, 1), compare=False, repr=False)


@dataclass(frozen=True)
class ReferenceNode:
    identifier: str
    span: SourceSpan = field(default=SourceSpan(1, 1), compare=False, repr=False)


@dataclass(frozen=True)
class AssignmentNode:
    identifier: str
    values: tuple["AstNode", ...] = ()
    span: SourceSpan = field(default=SourceSpan(1, 1), compare=False, repr=False)


AstNode = Union[PrimitiveNode, ReferenceNode, AssignmentNode]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<decimal>\d+\.\d+(?:[eE][+-]?\d+)?)
  | (?P<integer>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>")
  | (?P<op>>=|<=|==|!=|[<>+\-*/])
  | (?P<punct>[:;{}()])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens, dropping whitespace and ``//`` comments."""
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise LexError(f"unexpected character {source[pos]!r}", SourceSpan(line, col, 1))
        kind = m.lastgroup
        text = m.group()
        span = SourceSpan(line, col, len(text))
        if kind == "ws":
            newlines = text.count("\n")
            if newlines:
                line += newlines
                line_start = pos + text.rindex("\n") + 1
            pos = m.end()
            continue
        if kind == "comment":
            pos = m.end()
            continue
        if kind == "string":
            value, end = _scan_string(source, pos, span)
            tokens.append(Token(STRING, source[pos:end], SourceSpan(line, col, end - pos), value))
            pos = end
            continue
        if kind == "decimal":
            tokens.append(Token(DECIMAL, text, span, float(text)))
        elif kind == "integer":
            tokens.append(Token(INTEGER, text, span, int(text)))
        elif kind == "ident":
            if text in KEYWORDS:
                tokens.append(Token(BOOLEAN, text, span, KEYWORDS[text]))
            else:
                tokens.append(Token(IDENT, text, span, text))
        else:
            tokens.append(Token(text, text, span))
        pos = m.end()
    return tokens


def _scan_string(source: str, start: int, span: SourceSpan) -> tuple[str, int]:
    out = []
    i = start + 1
    while i < len(source):
        c = source[i]
        if c == '"':
            return "".join(out), i + 1
        if c == "\n":
            break
        if c == "\\":
            if i + 1 >= len(source) or source[i + 1] not in _ESCAPES:
                raise LexError("invalid escape in string literal", span)
            out.append(_ESCAPES[source[i + 1]])
            i += 2
            continue
        out.append(c)
        i += 1
    raise LexError("unterminated string literal", span)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # token helpers

    def peek(self, offset: int = 0) -> Token | None:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def at(self, kind: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok is not None and tok.kind == kind

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _end_span(self) -> SourceSpan:
        if not self.tokens:
            return SourceSpan(1, 1)
        last = self.tokens[-1].span
        return SourceSpan(last.line, last.column + last.length)

    def here(self) -> SourceSpan:
        tok = self.peek()
        return tok.span if tok is not None else self._end_span()

    def expect(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            found = "end of input" if tok is None else repr(tok.text)
            raise ParseError(f"expected {what}, found {found}", self.here())
        return self.advance()

    # grammar

    def document(self) -> AssignmentNode:
        children = []
        while self.peek() is not None:
            if self.at(RBRACE):
                raise ParseError("unbalanced '}'", self.here())
            children.append(self.statement())
        return AssignmentNode(ROOT_IDENTIFIER, tuple(children), SourceSpan(1, 1))

    def statement(self) -> AstNode:
        node = self.item()
        if self.at(SEMI):
            self.advance()
        elif not self.tokens[self.pos - 1].kind == RBRACE:
            raise ParseError("missing ';' after statement", self.here())
        return node

    def item(self) -> AstNode:
        tok = self.peek()
        if tok is not None and tok.kind == IDENT:
            nxt = self.peek(1)
            if nxt is not None and nxt.kind == COLON:
                self.pos += 2
                if self.peek() is None or self.peek().kind in (SEMI, RBRACE, COLON):
                    raise ParseError(f"missing value after '{tok.text}:'", self.here())
                value = self.item()
                return AssignmentNode(tok.text, (value,), tok.span)
            if nxt is not None and nxt.kind == LBRACE:
                self.pos += 2
                children = []
                while not self.at(RBRACE):
                    if self.peek() is None:
                        raise ParseError(f"unbalanced '{{' opened by '{tok.text}'", tok.span)
                    children.append(self.statement())
                self.advance()
                return AssignmentNode(tok.text, tuple(children), tok.span)
        if tok is None:
            raise ParseError("unexpected end of input", self.here())
        return self.expression(0)

    def expression(self, min_prec: int) -> AstNode:
        # precedence climbing, left-associative
        lhs = self.operand()
        while True:
            tok = self.peek()
            if tok is None or tok.kind not in PRECEDENCE or PRECEDENCE[tok.kind] < min_prec:
                return lhs
            self.advance()
            prec = PRECEDENCE[tok.kind]
            if self.peek() is None or self.peek().kind in (SEMI, RBRACE, RPAREN):
                raise ParseError(f"dangling operator {tok.text!r}", tok.span)
            rhs = self.expression(prec + 1)
            lhs = AssignmentNode(OPERATOR_NAMES[tok.kind], (lhs, rhs), tok.span)

    def operand(self) -> AstNode:
        tok = self.peek()
        if tok is None:
            raise ParseError("expected a value, found end of input", self.here())
        if tok.kind in (INTEGER, DECIMAL, STRING, BOOLEAN):
            self.advance()
            return PrimitiveNode(tok.kind, tok.value, tok.span)
        if tok.kind == IDENT:
            self.advance()
            return ReferenceNode(tok.text, tok.span)
        if tok.kind == "-":
            self.advance()
            nxt = self.peek()
            if nxt is not None and nxt.kind in (INTEGER, DECIMAL):
                self.advance()
                span = SourceSpan(tok.span.line, tok.span.column, tok.span.length + nxt.span.length)
                return PrimitiveNode(nxt.kind, -nxt.value, span)
            raise ParseError("unary '-' applies only to numeric literals", tok.span)
        if tok.kind == LPAREN:
            self.advance()
            inner = self.expression(0)
            self.expect(RPAREN, "')'")
            return inner
        if tok.kind in PRECEDENCE:
            raise ParseError(f"dangling operator {tok.text!r}", tok.span)
        raise ParseError(f"unexpected {tok.text!r}", tok.span)


def parse(tokens: list[Token]) -> AssignmentNode:
    """Parse a token stream into the hidden-root assignment."""
    return _Parser(tokens).document()


def parse_source(source: str) -> AssignmentNode:
    return parse(tokenize(source))


def lower_expression(tokens: list[Token]) -> AstNode:
    """Lower a complete infix expression into core nodes."""
    p = _Parser(tokens)
    if not tokens:
        raise ParseError("empty expression", SourceSpan(1, 1))
    node = p.expression(0)
    if p.peek() is not None:
        raise ParseError(f"unexpected {p.peek().text!r} in expression", p.here())
    return node


def is_operator(node: AstNode) -> bool:
    return isinstance(node, AssignmentNode) and node.identifier in OPERATOR_SYMBOLS and len(node.values) == 2


def walk(node: AstNode) -> Iterator[AstNode]:
    """Pre-order traversal."""
    yield node
    if isinstance(node, AssignmentNode):
        for child in node.values:
            yield from walk(child)


# pretty printer


def format_literal(node: PrimitiveNode) -> str:
    if node.kind == BOOLEAN:
        return "true" if node.value else "false"
    if node.kind == STRING:
        escaped = node.value.replace("\\", "\\\\").replace('"', '\\"')
        return '"' + escaped.replace("\n", "\\n").replace("\t", "\\t") + '"'
    if node.kind == DECIMAL:
        text = repr(float(node.value))
        mantissa, _, exponent = text.partition("e")
        if "." not in mantissa:
            mantissa += ".0"
        return mantissa + ("e" + exponent if exponent else "")
    return str(node.value)


def _is_expression(node: AstNode) -> bool:
    if isinstance(node, (PrimitiveNode, ReferenceNode)):
        return True
    return is_operator(node) and all(_is_expression(v) for v in node.values)


def format_expression(node: AstNode) -> str:
    if isinstance(node, PrimitiveNode):
        return format_literal(node)
    if isinstance(node, ReferenceNode):
        return node.identifier
    lhs, rhs = node.values
    parts = []
    for operand in (lhs, rhs):
        text = format_expression(operand)
        parts.append(f"({text})" if isinstance(operand, AssignmentNode) else text)
    return f"{parts[0]} {OPERATOR_SYMBOLS[node.identifier]} {parts[1]}"


def _format_item(node: AstNode, indent: int) -> str:
    if _is_expression(node):
        return format_expression(node)
    assert isinstance(node, AssignmentNode)
    if len(node.values) == 1:
        return f"{node.identifier}: {_format_item(node.values[0], indent)}"
    pad = "    " * (indent + 1)
    body = "".join(f"{pad}{_format_item(c, indent + 1)};\n" for c in node.values)
    return f"{node.identifier} {{\n{body}{'    ' * indent}}}" if body else f"{node.identifier} {{}}"


def format_ast(root: AssignmentNode) -> str:
    """Render a document root back to Nanosyntax; re-parsing gives an equal tree."""
    return "".join(f"{_format_item(child, 0)};\n" for child in root.values)
