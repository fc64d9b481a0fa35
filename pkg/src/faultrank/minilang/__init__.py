"""Toy structured language: parsing, printing, static analysis."""

from .nodes import (
    Binary,
    Const,
    Expr,
    Program,
    Statement,
    Unary,
    Var,
    expr_vars,
    same_shape,
)
from .parser import parse, parse_file, pretty, format_expr
from .pdg import StaticPdg, build_cfg, build_static_pdg, ENTRY, EXIT
from .metrics import MetricRow, compute_metrics

__all__ = [
    "Binary",
    "Const",
    "Expr",
    "Program",
    "Statement",
    "Unary",
    "Var",
    "expr_vars",
    "same_shape",
    "parse",
    "parse_file",
    "pretty",
    "format_expr",
    "StaticPdg",
    "build_cfg",
    "build_static_pdg",
    "ENTRY",
    "EXIT",
    "MetricRow",
    "compute_metrics",
]
