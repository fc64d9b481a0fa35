import itertools

import numpy as np
import pytest

from faultrank.errors import ParseError
from faultrank.minilang import (
    ENTRY,
    EXIT,
    build_cfg,
    build_static_pdg,
    compute_metrics,
    format_expr,
    parse,
    pretty,
    same_shape,
)

import genprog
import oracles


SAMPLE = """
a = x + 1;
b = 0;
if (a > 3) {
  b = a * 2;
} else {
  b = a - 1;
}
k = 2;
while (k > 0) {
  b = b + k;
  k = k - 1;
}
output b;
"""


# ---------------------------------------------------------------- parsing

def test_parse_assigns_preorder_ids():
    prog = parse(SAMPLE)
    kinds = [st.kind for st in prog.statements]
    assert kinds == [
        "assign", "assign", "if", "assign", "assign",
        "assign", "while", "assign", "assign", "output",
    ]
    assert [st.id for st in prog.statements] == list(range(10))
    assert prog.top_level == (0, 1, 2, 5, 6, 9)


def test_parse_pretty_round_trip_is_stable():
    once = pretty(parse(SAMPLE))
    twice = pretty(parse(once))
    assert once == twice


def test_round_trip_preserves_shape_on_random_programs():
    rng = np.random.default_rng(101)
    for _ in range(30):
        src = genprog.random_source(rng)
        prog = parse(src)
        again = parse(pretty(prog))
        assert same_shape(prog, again)
        assert pretty(again) == pretty(prog)


def test_operator_precedence_in_format():
    prog = parse("r = 1 + 2 * 3;\ns = (1 + 2) * 3;\n")
    assert format_expr(prog.stmt(0).expr) == "1 + 2 * 3"
    assert format_expr(prog.stmt(1).expr) == "(1 + 2) * 3"


def test_boolean_precedence():
    prog = parse("r = a < 1 or b > 2 and not c == 3;")
    # `or` binds loosest, then `and`, then `not`
    assert format_expr(prog.stmt(0).expr) == "a < 1 or b > 2 and not (c == 3)"
    top = prog.stmt(0).expr
    assert top.op == "or"
    assert top.right.op == "and"
    assert top.right.right.op == "not"


@pytest.mark.parametrize(
    "bad",
    [
        "a = 1",            # missing semicolon
        "if (a > 1) a = 2;",  # missing braces
        "a = $;",           # unknown character
        "while (x) { a = 1;",  # unbalanced brace
        "output;",          # missing expression
        "a = 1 + ;",        # dangling operator
    ],
)
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        parse(bad)


def test_parse_error_carries_position():
    try:
        parse("a = 1;\nb = $;\n")
    except ParseError as exc:
        assert exc.line == 2
    else:
        pytest.fail("expected ParseError")


def test_uses_and_defines():
    prog = parse(SAMPLE)
    assert prog.stmt(0).defines == "a"
    assert prog.stmt(0).uses == frozenset({"x"})
    assert prog.stmt(2).defines is None
    assert prog.stmt(2).uses == frozenset({"a"})
    assert prog.stmt(9).uses == frozenset({"b"})


def test_replace_statement_swaps_only_the_expression():
    prog = parse(SAMPLE)
    swapped = prog.replace_statement(0, expr=prog.stmt(1).expr)
    assert not same_shape(prog, swapped)  # the expression differs
    assert format_expr(swapped.stmt(0).expr) == "0"
    assert swapped.top_level == prog.top_level
    assert [st.kind for st in swapped.statements] == [st.kind for st in prog.statements]
    assert same_shape(prog, prog.replace_statement(0, expr=prog.stmt(0).expr))


def test_input_variables_are_reads_without_prior_writes():
    prog = parse(SAMPLE)
    assert prog.input_variables() == frozenset({"x"})


# -------------------------------------------------------------------- cfg

def test_cfg_straight_line():
    prog = parse("a = 1;\nb = a;\noutput b;\n")
    succ = build_cfg(prog)
    assert succ[ENTRY] == {0}
    assert succ[0] == {1}
    assert succ[1] == {2}
    assert succ[2] == {EXIT}


def test_cfg_if_with_empty_else_flows_through():
    prog = parse("a = 1;\nif (a > 0) {\n  a = 2;\n}\noutput a;\n")
    succ = build_cfg(prog)
    assert succ[1] == {2, 3}  # then branch and fall-through
    assert succ[2] == {3}


def test_cfg_while_back_edge():
    prog = parse("k = 2;\nwhile (k > 0) {\n  k = k - 1;\n}\noutput k;\n")
    succ = build_cfg(prog)
    assert succ[1] == {2, 3}  # body or exit
    assert succ[2] == {1}  # back edge


# -------------------------------------------------------------------- pdg

def test_pdg_control_edges_follow_nesting():
    prog = parse(SAMPLE)
    ctrl = build_static_pdg(prog).control_edges()
    assert (2, 3) in ctrl and (2, 4) in ctrl
    assert (6, 7) in ctrl and (6, 8) in ctrl
    assert (6, 6) in ctrl  # while predicate guards its own re-evaluation
    assert (2, 5) not in ctrl


def test_pdg_data_edges_on_sample():
    prog = parse(SAMPLE)
    data = build_static_pdg(prog).data_edges()
    assert (0, 2) in data  # a -> if predicate
    assert (0, 3) in data and (0, 4) in data
    # the zero-iteration loop path lets branch definitions of b reach the
    # output; the loop body definition reaches it too
    assert (3, 9) in data and (4, 9) in data
    assert (7, 9) in data
    assert (8, 6) in data  # loop counter feeds the predicate re-evaluation


def _enumerate_paths(prog, max_loop=2):
    """All (sid, defines, uses) paths with each loop unrolled 0..max_loop."""

    def seq(ids):
        parts = [stmt_paths(s) for s in ids]
        out = [[]]
        for alternatives in parts:
            out = [p + q for p in out for q in alternatives]
            if len(out) > 6000:
                raise OverflowError
        return out

    def stmt_paths(sid):
        st = prog.stmt(sid)
        node = (sid, st.defines, set(st.uses))
        if st.kind in ("assign", "output", "skip"):
            return [[node]]
        if st.kind == "if":
            thens = seq(st.then_ids) if st.then_ids else [[]]
            elses = seq(st.else_ids) if st.else_ids else [[]]
            return [[node] + p for p in thens + elses]
        body = seq(st.body_ids) if st.body_ids else [[]]
        paths = []
        for k in range(max_loop + 1):
            if k == 0:
                paths.append([node])
                continue
            for combo in itertools.product(body, repeat=k):
                path = [node]
                for b in combo:
                    path = path + b + [node]
                paths.append(path)
                if len(paths) > 6000:
                    raise OverflowError
        return paths

    return seq(prog.top_level)


def test_pdg_data_edges_match_path_enumeration():
    rng = np.random.default_rng(202)
    checked = 0
    while checked < 40:
        src = genprog.random_source(rng)
        prog = parse(src)
        try:
            paths = _enumerate_paths(prog)
        except OverflowError:
            continue
        expected = {
            (d, u)
            for (d, u, _var) in oracles.reaching_defs_bruteforce(
                [[(sid, dv, uses) for sid, dv, uses in p] for p in paths]
            )
        }
        got = set(build_static_pdg(prog).data_edges())
        assert got == expected, pretty(prog)
        checked += 1


# ---------------------------------------------------------------- metrics

def test_metrics_shape_and_ranges():
    prog = parse(SAMPLE)
    rows = compute_metrics(prog)
    assert len(rows) == len(prog)
    by_id = {r.statement_id: r for r in rows}
    assert by_id[0].nesting_depth == 0
    assert by_id[3].nesting_depth == 1  # inside the if
    assert by_id[7].in_loop and by_id[8].in_loop
    assert not by_id[0].in_loop
    # predicates carry the branching weight
    assert by_id[2].cyclomatic >= by_id[0].cyclomatic
    assert all(r.volume >= 0 for r in rows)
    assert all(r.token_length >= 1 for r in rows)
