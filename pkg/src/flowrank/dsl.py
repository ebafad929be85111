"""Textual pipeline expressions: parser, elaboration, and rendering.

Grammar (whitespace-insensitive between tokens)::

    pipeline := seq ;
    seq      := sum ( ">>" sum )* ;
    sum      := term ( "+" term )* ;
    term     := ( FLOAT "*" )? atom ;
    atom     := "rrf" "(" pipeline ( "," pipeline )+ ( "," "k" "=" FLOAT )? ")"
              | IDENT ( "(" kwargs? ")" )?
              | "(" pipeline ")" ;
    kwargs   := IDENT "=" value ( "," IDENT "=" value )* ;
    value    := FLOAT | INT | STRING ;

``+`` binds tighter than ``>>``: ``a >> b + c`` means ``a >> (b + c)``.
Both operators are left-associative; in a sum, a bare term gets weight 1.0.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Mapping

from .algebra import DEFAULT_RRF_K, Leaf, Linear, PipelineNode, RRF, Then, rr_fusion, then
from .errors import BadArgument, ParseError, UnknownTransformer


# --------------------------------------------------------------------------
# Expression AST
# --------------------------------------------------------------------------


class PipelineExpr:
    __slots__ = ()


@dataclass(frozen=True)
class ERef(PipelineExpr):
    name: str
    kwargs: tuple[tuple[str, object], ...] = ()


@dataclass(frozen=True)
class EThen(PipelineExpr):
    children: tuple[PipelineExpr, ...]


@dataclass(frozen=True)
class ELinear(PipelineExpr):
    children: tuple[PipelineExpr, ...]
    weights: tuple[float, ...]


@dataclass(frozen=True)
class ERRF(PipelineExpr):
    children: tuple[PipelineExpr, ...]
    k: float | None = None


# --------------------------------------------------------------------------
# Lexer
# --------------------------------------------------------------------------

_IDENT = re.compile(r"[a-z_][a-z0-9_]*")
_NUMBER = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")
_STRING = re.compile(r'"(\\.|[^"\\])*"')


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | NUMBER | STRING | OP | EOF
    text: str
    value: object
    line: int
    col: int


def _lex(src: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if src.startswith(">>", i):
            tokens.append(Token("OP", ">>", ">>", line, col))
            i += 2
            col += 2
            continue
        if ch in "+*(),=":
            tokens.append(Token("OP", ch, ch, line, col))
            i += 1
            col += 1
            continue
        m = _NUMBER.match(src, i)
        if m:
            text = m.group(0)
            value = float(text) if ("." in text or "e" in text or "E" in text) else int(text)
            tokens.append(Token("NUMBER", text, value, line, col))
            i = m.end()
            col += len(text)
            continue
        m = _IDENT.match(src, i)
        if m:
            text = m.group(0)
            tokens.append(Token("IDENT", text, text, line, col))
            i = m.end()
            col += len(text)
            continue
        m = _STRING.match(src, i)
        if m:
            text = m.group(0)
            tokens.append(Token("STRING", text, json.loads(text), line, col))
            i = m.end()
            col += len(text)
            continue
        raise ParseError(line, col, f"unexpected character {ch!r}")
    tokens.append(Token("EOF", "", None, line, col))
    return tokens


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


class _Parser:
    def __init__(self, src: str):
        self.tokens = _lex(src)
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, detail: str, expected=()) -> ParseError:
        tok = self.peek()
        return ParseError(tok.line, tok.col, detail, expected)

    def expect_op(self, op: str) -> Token:
        tok = self.peek()
        if tok.kind == "OP" and tok.text == op:
            return self.advance()
        raise self.error(f"got {tok.text or 'end of input'!r}", expected={repr(op)})

    def at_op(self, op: str, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok.kind == "OP" and tok.text == op

    def parse_pipeline(self) -> PipelineExpr:
        parts = [self.parse_sum()]
        while self.at_op(">>"):
            self.advance()
            parts.append(self.parse_sum())
        return parts[0] if len(parts) == 1 else EThen(tuple(parts))

    def parse_sum(self) -> PipelineExpr:
        terms = [self.parse_term()]
        while self.at_op("+"):
            self.advance()
            terms.append(self.parse_term())
        if len(terms) == 1:
            weight, expr = terms[0]
            if weight is None:
                return expr
            return ELinear((expr,), (weight,))
        return ELinear(
            tuple(expr for _, expr in terms),
            tuple(1.0 if weight is None else weight for weight, _ in terms),
        )

    def parse_term(self) -> tuple[float | None, PipelineExpr]:
        if self.peek().kind == "NUMBER":
            tok = self.advance()
            self.expect_op("*")
            return float(tok.value), self.parse_atom()
        return None, self.parse_atom()

    def parse_atom(self) -> PipelineExpr:
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "(":
            self.advance()
            inner = self.parse_pipeline()
            self.expect_op(")")
            return inner
        if tok.kind == "IDENT":
            self.advance()
            if tok.text == "rrf" and self.at_op("("):
                return self.parse_rrf()
            if self.at_op("("):
                self.advance()
                kwargs: tuple[tuple[str, object], ...] = ()
                if not self.at_op(")"):
                    kwargs = self.parse_kwargs()
                self.expect_op(")")
                return ERef(tok.text, kwargs)
            return ERef(tok.text)
        raise self.error(
            f"got {tok.text or 'end of input'!r}", expected={"IDENT", "FLOAT", "'('"}
        )

    def parse_rrf(self) -> ERRF:
        self.expect_op("(")
        children = [self.parse_pipeline()]
        k: float | None = None
        while self.at_op(","):
            self.advance()
            if self.peek().kind == "IDENT" and self.peek().text == "k" and self.at_op("=", 1):
                self.advance()
                self.advance()
                num = self.peek()
                if num.kind != "NUMBER":
                    raise self.error(f"got {num.text!r}", expected={"FLOAT"})
                self.advance()
                k = float(num.value)
                break
            children.append(self.parse_pipeline())
        if len(children) < 2:
            raise self.error("rrf needs at least two pipelines", expected={"','"})
        self.expect_op(")")
        return ERRF(tuple(children), k)

    def parse_kwargs(self) -> tuple[tuple[str, object], ...]:
        pairs = []
        while True:
            name = self.peek()
            if name.kind != "IDENT":
                raise self.error(f"got {name.text!r}", expected={"IDENT"})
            self.advance()
            self.expect_op("=")
            value = self.peek()
            if value.kind not in ("NUMBER", "STRING"):
                raise self.error(f"got {value.text!r}", expected={"FLOAT", "INT", "STRING"})
            self.advance()
            pairs.append((name.text, value.value))
            if not self.at_op(","):
                return tuple(pairs)
            self.advance()


def parse(src: str) -> PipelineExpr:
    """Parse a pipeline expression; raises :class:`ParseError` with position."""
    parser = _Parser(src)
    expr = parser.parse_pipeline()
    if parser.peek().kind != "EOF":
        raise parser.error(f"unexpected trailing input {parser.peek().text!r}")
    return expr


# --------------------------------------------------------------------------
# Elaboration and rendering
# --------------------------------------------------------------------------

Registry = Mapping[str, Callable[..., object]]


def elaborate(expr: PipelineExpr, registry: Registry) -> PipelineNode:
    """Resolve leaf names against *registry* and build the pipeline tree."""
    if isinstance(expr, ERef):
        factory = registry.get(expr.name)
        if factory is None:
            raise UnknownTransformer(expr.name)
        try:
            transformer = factory(**dict(expr.kwargs))
        except TypeError as exc:
            raise BadArgument(expr.name, str(exc)) from exc
        except ValueError as exc:
            raise BadArgument(expr.name, str(exc)) from exc
        return Leaf(transformer, ref=(expr.name, expr.kwargs))
    if isinstance(expr, EThen):
        return reduce(then, (elaborate(c, registry) for c in expr.children))
    if isinstance(expr, ELinear):
        return Linear(tuple(elaborate(c, registry) for c in expr.children), expr.weights)
    if isinstance(expr, ERRF):
        k = DEFAULT_RRF_K if expr.k is None else expr.k
        return rr_fusion((elaborate(c, registry) for c in expr.children), k)
    raise TypeError(f"unknown expression: {expr!r}")


def _format_kwarg(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    return str(value)


# rendering context: how tightly the surrounding production binds
_SEQ, _SUM, _ATOM = 0, 1, 2


def _render(node: PipelineNode, level: int) -> str:
    if isinstance(node, Leaf):
        if node.ref is not None:
            name, kwargs = node.ref
            if kwargs:
                args = ", ".join(f"{k}={_format_kwarg(v)}" for k, v in kwargs)
                return f"{name}({args})"
            return name
        return node.transformer.name
    if isinstance(node, RRF):
        args = ", ".join(_render(c, _SEQ) for c in node.children)
        return f"rrf({args}, k={node.k!r})"
    if isinstance(node, Linear):
        body = " + ".join(
            f"{w!r}*{_render(c, _ATOM)}" for w, c in zip(node.weights, node.children)
        )
        return f"({body})" if level >= _ATOM else body
    if isinstance(node, Then):
        body = " >> ".join(_render(c, _SUM) for c in node.children)
        return f"({body})" if level >= _SUM else body
    raise TypeError(f"unknown pipeline node: {node!r}")


def render(node: PipelineNode) -> str:
    """Canonical textual form; re-parsing and elaborating reproduces the tree."""
    return _render(node, _SEQ)
