"""AST for the subject-program language.

Programs are stored flat: every statement gets a 0-based id in textual
order, and structured statements (if/while) refer to their children by id.
The flat view is what the rest of the toolkit ranks, slices and mutates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "not"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / % < <= > >= == != and or
    left: "Expr"
    right: "Expr"


Expr = Union[Var, Const, Unary, Binary]


def expr_vars(expr: Expr) -> frozenset[str]:
    """All variable names occurring in the expression."""
    if isinstance(expr, Var):
        return frozenset((expr.name,))
    if isinstance(expr, Const):
        return frozenset()
    if isinstance(expr, Unary):
        return expr_vars(expr.operand)
    return expr_vars(expr.left) | expr_vars(expr.right)


# ----------------------------------------------------------------- statements

KINDS = ("assign", "if", "while", "output", "skip")


@dataclass(frozen=True)
class Statement:
    """One ranked unit. A predicate of if/while is itself one statement."""

    id: int
    kind: str
    line: int
    col: int
    target: str | None = None  # assign only
    expr: Expr | None = None  # assign rhs, predicate, or output value
    then_ids: tuple[int, ...] = ()
    else_ids: tuple[int, ...] = ()
    body_ids: tuple[int, ...] = ()  # while only
    token_len: int = 0  # tokens in the statement header (children excluded)

    @property
    def uses(self) -> frozenset[str]:
        return expr_vars(self.expr) if self.expr is not None else frozenset()

    @property
    def defines(self) -> str | None:
        return self.target if self.kind == "assign" else None

    @property
    def child_ids(self) -> tuple[int, ...]:
        return self.then_ids + self.else_ids + self.body_ids

    @property
    def is_predicate(self) -> bool:
        return self.kind in ("if", "while")


@dataclass(frozen=True)
class Program:
    statements: tuple[Statement, ...]
    top_level: tuple[int, ...]
    total_tokens: int = 0  # every token of the source, braces included

    def __post_init__(self):
        for i, st in enumerate(self.statements):
            if st.id != i:
                raise ValueError(f"statement ids not contiguous at {i}")

    def __len__(self) -> int:
        return len(self.statements)

    def stmt(self, sid: int) -> Statement:
        return self.statements[sid]

    @property
    def variables(self) -> frozenset[str]:
        names: set[str] = set()
        for st in self.statements:
            names |= st.uses
            if st.target:
                names.add(st.target)
        return frozenset(names)

    @property
    def output_ids(self) -> tuple[int, ...]:
        return tuple(s.id for s in self.statements if s.kind == "output")

    def parent_of(self, sid: int) -> int | None:
        """Id of the predicate directly enclosing `sid`, None at top level."""
        return self._parents().get(sid)

    def _parents(self) -> dict[int, int]:
        if not hasattr(self, "_parent_cache"):
            parents: dict[int, int] = {}
            for st in self.statements:
                for child in st.child_ids:
                    parents[child] = st.id
            object.__setattr__(self, "_parent_cache", parents)
        return self._parent_cache

    def ancestors(self, sid: int) -> tuple[int, ...]:
        """Enclosing predicate ids, innermost first."""
        chain = []
        cur = self.parent_of(sid)
        while cur is not None:
            chain.append(cur)
            cur = self.parent_of(cur)
        return tuple(chain)

    def replace_statement(self, sid: int, **changes) -> "Program":
        """New Program with one statement's fields replaced (ids untouched)."""
        new = replace(self.statements[sid], **changes)
        if new.id != sid:
            raise ValueError("statement id must not change")
        stmts = list(self.statements)
        stmts[sid] = new
        return Program(tuple(stmts), self.top_level, self.total_tokens)

    def input_variables(self) -> frozenset[str]:
        """Variables that may be read before any assignment on some path.

        Conservative (may-analysis): a variable counts as an input if any
        statement can use it without a definite prior assignment.
        """
        free: set[str] = set()

        def walk(ids: tuple[int, ...], assigned: frozenset[str]) -> frozenset[str]:
            for sid in ids:
                st = self.statements[sid]
                free.update(st.uses - assigned)
                if st.kind == "assign":
                    assigned = assigned | {st.target}
                elif st.kind == "if":
                    a_then = walk(st.then_ids, assigned)
                    a_else = walk(st.else_ids, assigned)
                    assigned = a_then & a_else
                elif st.kind == "while":
                    walk(st.body_ids, assigned)  # body may not run: no defs kept
            return assigned

        walk(self.top_level, frozenset())
        return frozenset(free)


def same_shape(a: Program, b: Program) -> bool:
    """Structural equality ignoring source spans and token counts."""
    if len(a) != len(b) or a.top_level != b.top_level:
        return False
    for sa, sb in zip(a.statements, b.statements):
        if (sa.kind, sa.target, sa.expr, sa.then_ids, sa.else_ids, sa.body_ids) != (
            sb.kind,
            sb.target,
            sb.expr,
            sb.then_ids,
            sb.else_ids,
            sb.body_ids,
        ):
            return False
    return True
