"""Recursive-descent parser and pretty-printer for the subject language.

Grammar (comments run `#` to end of line):

    program := stmt*
    stmt    := IDENT '=' expr ';'
             | 'if' '(' expr ')' block ('else' block)?
             | 'while' '(' expr ')' block
             | 'output' expr ';'
             | 'skip' ';'
    block   := '{' stmt* '}'
    expr    := or ; or := and ('or' and)* ; and := not ('and' not)*
    not     := 'not' not | cmp
    cmp     := add (REL add)?          REL in < <= > >= == !=
    add     := mul (('+'|'-') mul)*
    mul     := unary (('*'|'/'|'%') unary)*
    unary   := '-' unary | INT | IDENT | '(' expr ')'

Integers only. `output` is the sole observable effect.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError
from .nodes import Binary, Const, Expr, Program, Statement, Unary, Var

KEYWORDS = {"if", "else", "while", "output", "skip", "and", "or", "not"}
MULTI_OPS = ("<=", ">=", "==", "!=")
SINGLE_OPS = "+-*/%<>=;(){},"


@dataclass(frozen=True)
class Token:
    kind: str  # int | ident | kw | op | eof
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    toks: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_col = col
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            toks.append(Token("int", source[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            toks.append(Token("kw" if word in KEYWORDS else "ident", word, line, start_col))
            col += j - i
            i = j
            continue
        two = source[i : i + 2]
        if two in MULTI_OPS:
            toks.append(Token("op", two, line, start_col))
            i += 2
            col += 2
            continue
        if c in SINGLE_OPS:
            toks.append(Token("op", c, line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0
        self.statements: list[Statement] = []

    # token plumbing -----------------------------------------------------

    def peek(self) -> Token:
        return self.toks[self.pos]

    def advance(self) -> Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text or tok.kind == "eof":
            got = tok.text if tok.kind != "eof" else "end of input"
            raise ParseError(f"expected {text!r}, got {got!r}", tok.line, tok.col)
        return self.advance()

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind != "eof"

    # statements ---------------------------------------------------------

    def parse_program(self) -> Program:
        top = self.parse_stmt_list(stop_at_brace=False)
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected {tok.text!r}", tok.line, tok.col)
        return Program(tuple(self.statements), tuple(top), total_tokens=len(self.toks) - 1)

    def parse_stmt_list(self, stop_at_brace: bool) -> list[int]:
        ids = []
        while True:
            tok = self.peek()
            if tok.kind == "eof" or (stop_at_brace and tok.text == "}"):
                return ids
            ids.append(self.parse_stmt())

    def _reserve(self) -> int:
        """Allocate the next statement id (textual order) before children."""
        sid = len(self.statements)
        self.statements.append(None)  # type: ignore[arg-type]
        return sid

    def parse_stmt(self) -> int:
        tok = self.peek()
        start = self.pos
        if tok.kind == "ident":
            sid = self._reserve()
            name = self.advance().text
            self.expect("=")
            expr = self.parse_expr()
            self.expect(";")
            self.statements[sid] = Statement(
                sid, "assign", tok.line, tok.col, target=name, expr=expr,
                token_len=self.pos - start,
            )
            return sid
        if tok.text == "output":
            sid = self._reserve()
            self.advance()
            expr = self.parse_expr()
            self.expect(";")
            self.statements[sid] = Statement(
                sid, "output", tok.line, tok.col, expr=expr, token_len=self.pos - start
            )
            return sid
        if tok.text == "skip":
            sid = self._reserve()
            self.advance()
            self.expect(";")
            self.statements[sid] = Statement(
                sid, "skip", tok.line, tok.col, token_len=self.pos - start
            )
            return sid
        if tok.text == "if":
            sid = self._reserve()
            self.advance()
            self.expect("(")
            pred = self.parse_expr()
            self.expect(")")
            header_len = self.pos - start
            then_ids = self.parse_block()
            else_ids: list[int] = []
            if self.at("else"):
                self.advance()
                header_len += 1
                else_ids = self.parse_block()
            self.statements[sid] = Statement(
                sid, "if", tok.line, tok.col, expr=pred,
                then_ids=tuple(then_ids), else_ids=tuple(else_ids),
                token_len=header_len,
            )
            return sid
        if tok.text == "while":
            sid = self._reserve()
            self.advance()
            self.expect("(")
            pred = self.parse_expr()
            self.expect(")")
            header_len = self.pos - start
            body_ids = self.parse_block()
            self.statements[sid] = Statement(
                sid, "while", tok.line, tok.col, expr=pred,
                body_ids=tuple(body_ids), token_len=header_len,
            )
            return sid
        got = tok.text if tok.kind != "eof" else "end of input"
        raise ParseError(f"expected a statement, got {got!r}", tok.line, tok.col)

    def parse_block(self) -> list[int]:
        self.expect("{")
        ids = self.parse_stmt_list(stop_at_brace=True)
        self.expect("}")
        return ids

    # expressions (precedence climbing) -----------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.at("or"):
            self.advance()
            left = Binary("or", left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while self.at("and"):
            self.advance()
            left = Binary("and", left, self.parse_not())
        return left

    def parse_not(self) -> Expr:
        if self.at("not"):
            self.advance()
            return Unary("not", self.parse_not())
        return self.parse_cmp()

    def parse_cmp(self) -> Expr:
        left = self.parse_add()
        tok = self.peek()
        if tok.kind == "op" and tok.text in ("<", "<=", ">", ">=", "==", "!="):
            self.advance()
            return Binary(tok.text, left, self.parse_add())
        return left

    def parse_add(self) -> Expr:
        left = self.parse_mul()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.advance().text
            left = Binary(op, left, self.parse_mul())
        return left

    def parse_mul(self) -> Expr:
        left = self.parse_unary()
        while self.peek().text in ("*", "/", "%") and self.peek().kind == "op":
            op = self.advance().text
            left = Binary(op, left, self.parse_unary())
        return left

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.text == "-" and tok.kind == "op":
            self.advance()
            return Unary("-", self.parse_unary())
        if tok.kind == "int":
            self.advance()
            return Const(int(tok.text))
        if tok.kind == "ident":
            self.advance()
            return Var(tok.text)
        if tok.text == "(":
            self.advance()
            expr = self.parse_expr()
            self.expect(")")
            return expr
        got = tok.text if tok.kind != "eof" else "end of input"
        raise ParseError(f"expected an expression, got {got!r}", tok.line, tok.col)


def parse(source: str) -> Program:
    """Parse program text; statement ids are assigned in textual order."""
    return _Parser(tokenize(source)).parse_program()


def parse_file(path) -> Program:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


# ------------------------------------------------------------ pretty-printing

_PREC = {
    "or": 1, "and": 2,
    "<": 4, "<=": 4, ">": 4, ">=": 4, "==": 4, "!=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}


def format_expr(expr: Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Const):
        return str(expr.value)
    if isinstance(expr, Unary):
        inner = format_expr(expr.operand, 7)
        return f"not {inner}" if expr.op == "not" else f"-{inner}"
    prec = _PREC[expr.op]
    left = format_expr(expr.left, prec)
    right = format_expr(expr.right, prec + 1)  # left-assoc: parenthesize right
    text = f"{left} {expr.op} {right}"
    return f"({text})" if prec < parent_prec else text


def pretty(program: Program) -> str:
    """Canonical source text; parsing it reproduces an equivalent AST."""
    lines: list[str] = []

    def emit(ids: tuple[int, ...], depth: int) -> None:
        pad = "    " * depth
        for sid in ids:
            st = program.stmt(sid)
            if st.kind == "assign":
                lines.append(f"{pad}{st.target} = {format_expr(st.expr)};")
            elif st.kind == "output":
                lines.append(f"{pad}output {format_expr(st.expr)};")
            elif st.kind == "skip":
                lines.append(f"{pad}skip;")
            elif st.kind == "if":
                lines.append(f"{pad}if ({format_expr(st.expr)}) {{")
                emit(st.then_ids, depth + 1)
                if st.else_ids:
                    lines.append(f"{pad}}} else {{")
                    emit(st.else_ids, depth + 1)
                lines.append(f"{pad}}}")
            else:
                lines.append(f"{pad}while ({format_expr(st.expr)}) {{")
                emit(st.body_ids, depth + 1)
                lines.append(f"{pad}}}")

    emit(program.top_level, 0)
    return "\n".join(lines) + "\n"
