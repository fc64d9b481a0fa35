"""Per-statement static complexity metrics.

Five raw metrics feed the fault-proneness model: nesting depth, cyclomatic
complexity of the enclosing region, Halstead volume share, token length,
and loop membership. All are computed from the AST alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .nodes import Expr, Program, Statement, Var, Const, Unary, Binary


@dataclass(frozen=True)
class MetricRow:
    statement_id: int
    nesting_depth: int
    cyclomatic: int
    volume: float
    token_length: int
    in_loop: bool


def _region_ids(program: Program, root: Statement) -> list[int]:
    """The statement plus everything nested under it."""
    out = [root.id]
    for cid in root.child_ids:
        out.extend(_region_ids(program, program.stmt(cid)))
    return out


def _expr_operators_operands(expr: Expr, ops: list[str], operands: list[str]) -> None:
    if isinstance(expr, Var):
        operands.append(expr.name)
    elif isinstance(expr, Const):
        operands.append(str(expr.value))
    elif isinstance(expr, Unary):
        ops.append(expr.op)
        _expr_operators_operands(expr.operand, ops, operands)
    elif isinstance(expr, Binary):
        ops.append(expr.op)
        _expr_operators_operands(expr.left, ops, operands)
        _expr_operators_operands(expr.right, ops, operands)


def _halstead_volume(program: Program) -> float:
    """Program-level Halstead volume N * log2(eta)."""
    ops: list[str] = []
    operands: list[str] = []
    for st in program.statements:
        ops.append(st.kind)
        if st.target is not None:
            operands.append(st.target)
        if st.expr is not None:
            _expr_operators_operands(st.expr, ops, operands)
    length = len(ops) + len(operands)
    vocab = len(set(ops)) + len(set(operands))
    if length == 0 or vocab < 2:
        return 0.0
    return length * math.log2(vocab)


def compute_metrics(program: Program) -> tuple[MetricRow, ...]:
    volume_total = _halstead_volume(program)
    token_total = sum(st.token_len for st in program.statements)

    rows = []
    for st in program.statements:
        ancestors = program.ancestors(st.id)
        depth = len(ancestors)
        in_loop = st.kind == "while" or any(
            program.stmt(a).kind == "while" for a in ancestors
        )
        # cyclomatic complexity of the innermost enclosing region
        region_root = ancestors[-1] if ancestors else None
        if region_root is None:
            region = list(range(len(program)))
        else:
            region = _region_ids(program, program.stmt(region_root))
        preds = sum(1 for sid in region if program.stmt(sid).is_predicate)
        cyclomatic = preds + 1
        # volume attributed proportionally to the statement's token share
        if token_total > 0:
            volume = volume_total * st.token_len / token_total
        else:
            volume = 0.0
        rows.append(
            MetricRow(
                statement_id=st.id,
                nesting_depth=depth,
                cyclomatic=cyclomatic,
                volume=volume,
                token_length=st.token_len,
                in_loop=in_loop,
            )
        )
    return tuple(rows)
