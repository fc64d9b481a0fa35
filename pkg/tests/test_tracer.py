import numpy as np
import pytest

from faultrank.errors import SuiteFormatError
from faultrank.minilang import parse
from faultrank.tracer import execute, parse_suite, to_execution_vector
from faultrank.tracer import TestCase as Case

import genprog


def run(src, expected=(), **inputs):
    return execute(parse(src), Case("t", inputs, tuple(expected)))


# -------------------------------------------------------------- arithmetic

def test_division_truncates_toward_zero():
    src = "a = x / y;\nb = x % y;\noutput a;\noutput b;\n"
    cases = [
        (7, 2, 3, 1),
        (-7, 2, -3, -1),
        (7, -2, -3, 1),
        (-7, -2, 3, -1),
        (9, 3, 3, 0),
    ]
    for x, y, q, m in cases:
        trace = run(src, expected=(q, m), x=x, y=y)
        assert trace.outputs == (q, m)
        assert trace.outcome == "pass"


def test_arithmetic_matches_python_semantics():
    rng = np.random.default_rng(33)
    src = "a = x + y * 2;\nb = x - y;\nc = -x;\noutput a;\noutput b;\noutput c;\n"
    for _ in range(20):
        x, y = int(rng.integers(-50, 50)), int(rng.integers(-50, 50))
        trace = run(src, x=x, y=y)
        assert trace.outputs == (x + 2 * y, x - y, -x)


def test_boolean_operators_produce_zero_one():
    src = (
        "a = x > 0 and y > 0;\n"
        "b = x > 0 or y > 0;\n"
        "c = not x;\n"
        "output a;\noutput b;\noutput c;\n"
    )
    trace = run(src, x=3, y=-1)
    assert trace.outputs == (0, 1, 0)
    trace = run(src, x=0, y=5)
    assert trace.outputs == (0, 1, 1)


def test_and_short_circuits_past_division_by_zero():
    src = "a = x != 0 and 10 / x > 1;\noutput a;\n"
    trace = run(src, x=0)
    assert trace.error is None
    assert trace.outputs == (0,)


# ----------------------------------------------------------------- control

def test_while_loop_counts_and_instances():
    src = "k = 3;\ns = 0;\nwhile (k > 0) {\n  s = s + k;\n  k = k - 1;\n}\noutput s;\n"
    trace = run(src, expected=(6,))
    assert trace.outputs == (6,)
    assert trace.outcome == "pass"
    # predicate evaluated 4 times (3 true + 1 false), body 3 times
    assert trace.counts[2] == 4
    assert trace.counts[3] == 3
    assert trace.counts[4] == 3


def test_if_takes_exactly_one_branch():
    src = "if (x > 0) {\n  a = 1;\n} else {\n  a = 2;\n}\noutput a;\n"
    pos = run(src, x=5)
    neg = run(src, x=-5)
    assert 1 in pos.counts and 2 not in pos.counts
    assert 2 in neg.counts and 1 not in neg.counts


def test_control_deps_point_to_governing_instance():
    src = "k = 2;\nwhile (k > 0) {\n  k = k - 1;\n}\noutput k;\n"
    trace = run(src, expected=(0,))
    sids = trace.instances
    # layout: k=2, pred, body, pred, body, pred, output
    assert sids == (0, 1, 2, 1, 2, 1, 3)
    assert trace.ctrl_deps[2] == 1  # first body run governed by first eval
    assert trace.ctrl_deps[3] == 1  # re-evaluation governed by previous one
    assert trace.ctrl_deps[4] == 3
    assert trace.ctrl_deps[5] == 3
    assert trace.ctrl_deps[6] is None  # top level


def test_data_deps_reference_defining_instances():
    src = "a = x;\nb = a + 1;\na = b * 2;\noutput a;\n"
    trace = run(src, x=5)
    assert trace.data_deps[1] == frozenset({0})
    assert trace.data_deps[2] == frozenset({1})
    assert trace.data_deps[3] == frozenset({2})


def test_loop_carried_dependence():
    src = "k = 2;\ns = 0;\nwhile (k > 0) {\n  s = s + k;\n  k = k - 1;\n}\noutput s;\n"
    trace = run(src, expected=(3,))
    # second body execution of s = s + k reads the first one's definition
    s_instances = [i for i, sid in enumerate(trace.instances) if sid == 3]
    assert len(s_instances) == 2
    first, second = s_instances
    assert first in trace.data_deps[second]


# ---------------------------------------------------------------- failures

def test_division_by_zero_marks_failure():
    trace = run("a = 1 / x;\noutput a;\n", x=0)
    assert trace.outcome == "fail"
    assert trace.error == "div_by_zero"
    assert trace.outputs == ()


def test_unbound_variable_marks_failure():
    trace = run("a = nosuch + 1;\noutput a;\n")
    assert trace.outcome == "fail"
    assert trace.error == "unbound"


def test_step_limit_timeout():
    src = "k = 1;\nwhile (k > 0) {\n  k = k + 1;\n}\noutput k;\n"
    trace = execute(parse(src), Case("t", {}, (0,)), step_limit=50)
    assert trace.outcome == "fail"
    assert trace.error == "timeout"
    assert len(trace.instances) == 50


def test_output_mismatch_fails_without_error():
    trace = run("output 3;\n", expected=(4,))
    assert trace.outcome == "fail"
    assert trace.error is None


def test_extra_and_missing_outputs_fail():
    assert run("output 1;\noutput 2;\n", expected=(1,)).outcome == "fail"
    assert run("output 1;\n", expected=(1, 2)).outcome == "fail"


def test_matching_run_passes():
    trace = run("output x;\n", expected=(9,), x=9)
    assert trace.outcome == "pass"
    assert trace.output_instances == ((0, 9),)


# ------------------------------------------------------------ random runs

def test_random_programs_terminate_and_trace_consistently():
    rng = np.random.default_rng(44)
    for _ in range(25):
        prog = parse(genprog.random_source(rng))
        test = Case("t", genprog.random_inputs(rng), ())
        trace = execute(prog, test, step_limit=10_000)
        assert trace.error != "timeout"  # generated loops always count down
        n = len(trace.instances)
        assert len(trace.data_deps) == n and len(trace.ctrl_deps) == n
        for i in range(n):
            assert all(d < i for d in trace.data_deps[i])
            gov = trace.ctrl_deps[i]
            assert gov is None or gov < i
        total = sum(trace.counts.values())
        assert total == n


# ------------------------------------------------------------- suite files

def test_parse_suite_roundtrip():
    text = (
        "# comment line\n"
        "t1; x=3, y=4; 7 12\n"
        "\n"
        "t2; x=-1, y=0; -1\n"
    )
    tests = parse_suite(text)
    assert [t.id for t in tests] == ["t1", "t2"]
    assert tests[0].inputs == {"x": 3, "y": 4}
    assert tests[0].expected_output == (7, 12)
    assert tests[1].inputs == {"x": -1, "y": 0}
    assert tests[1].expected_output == (-1,)


def test_parse_suite_allows_empty_sections():
    tests = parse_suite("t1; ; 5\n")
    assert tests[0].inputs == {}
    assert tests[0].expected_output == (5,)


@pytest.mark.parametrize(
    "bad",
    [
        "t1; x=1; 2\nt1; x=2; 3\n",  # duplicate id
        "t1; x=1, x=2; 3\n",  # duplicate binding
        "t1; x=one; 2\n",  # non-integer value
        "t1; x=1\n",  # missing field
        "t1; x=1; 2; 3\n",  # too many fields
    ],
)
def test_parse_suite_rejects_malformed(bad):
    with pytest.raises(SuiteFormatError):
        parse_suite(bad)


def test_execution_vector_is_binary_over_all_statements():
    prog = parse("a = 1;\nb = 2;\noutput a;\n")
    trace = execute(prog, Case("t", {}, (1,)))
    vec = to_execution_vector(trace, frozenset({0, 2}), len(prog))
    assert vec == (1, 0, 1)
