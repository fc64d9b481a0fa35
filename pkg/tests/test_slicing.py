import numpy as np
import pytest

from faultrank.errors import DegenerateInputError, UnusableTestError
from faultrank.minilang import parse
from faultrank.slicing import (
    backward_dynamic_slice,
    candidate_set,
    expand_bds,
    failing_criterion,
    passing_criterion,
    slice_suite,
    SliceResult,
)
from faultrank.tracer import execute
from faultrank.tracer import TestCase as Case

import genprog
import oracles


PROG = parse(
    "a = x;\n"
    "b = 2;\n"
    "c = a * b;\n"
    "d = 99;\n"
    "output c;\n"
    "output d;\n"
)


def trace_of(src_or_prog, inputs, expected, test_id="t"):
    prog = parse(src_or_prog) if isinstance(src_or_prog, str) else src_or_prog
    return execute(prog, Case(test_id, inputs, tuple(expected)))


# ---------------------------------------------------------------- slicing

def test_slice_follows_data_chain_only():
    trace = trace_of(PROG, {"x": 3}, (6, 99))
    bds = backward_dynamic_slice(trace, (4,))  # output c
    assert bds == frozenset({0, 1, 2, 4})  # d's definition is irrelevant


def test_slice_includes_control_governors():
    src = "a = x;\nif (a > 0) {\n  b = 1;\n} else {\n  b = 2;\n}\noutput b;\n"
    trace = trace_of(src, {"x": 5}, (1,))
    bds = backward_dynamic_slice(trace, (4,))
    assert bds == frozenset({0, 1, 2, 4})


def test_slice_through_loop_iterations():
    src = (
        "k = x;\ns = 0;\n"
        "while (k > 0) {\n  s = s + k;\n  k = k - 1;\n}\n"
        "output s;\n"
    )
    trace = trace_of(src, {"x": 2}, (3,))
    bds = backward_dynamic_slice(trace, (5,))
    assert bds == frozenset({0, 1, 2, 3, 4, 5})


def test_slice_criterion_never_executed_raises():
    trace = trace_of(PROG, {"x": 1}, (2, 99))
    with pytest.raises(UnusableTestError):
        backward_dynamic_slice(trace, (77,))


def test_slice_matches_bruteforce_on_random_traces():
    rng = np.random.default_rng(55)
    checked = 0
    while checked < 100:
        prog = parse(genprog.random_source(rng))
        trace = execute(prog, Case("t", genprog.random_inputs(rng), ()),
                        step_limit=4000)
        if not trace.instances:
            continue
        executed = sorted(trace.executed_ids())
        crit_sid = executed[int(rng.integers(0, len(executed)))]
        got = backward_dynamic_slice(trace, (crit_sid,))
        crit_instances = [
            i for i, sid in enumerate(trace.instances) if sid == crit_sid
        ]
        expected = oracles.brute_force_slice(
            list(trace.instances),
            list(trace.data_deps),
            list(trace.ctrl_deps),
            crit_instances,
        )
        assert got == frozenset(expected)
        checked += 1


# --------------------------------------------------------------- criteria

def test_failing_criterion_picks_mismatched_outputs():
    trace = trace_of(PROG, {"x": 3}, (6, 100))  # second output wrong
    assert trace.failed
    assert failing_criterion(trace, Case("t", {"x": 3}, (6, 100))) == (5,)


def test_failing_criterion_multiple_mismatches():
    trace = trace_of(PROG, {"x": 3}, (7, 100))
    test = Case("t", {"x": 3}, (7, 100))
    assert failing_criterion(trace, test) == (4, 5)


def test_failing_criterion_extra_output_counts():
    trace = trace_of("output 1;\noutput 2;\n", {}, (1,))
    assert failing_criterion(trace, Case("t", {}, (1,))) == (1,)


def test_failing_criterion_crash_anchors_last_statement():
    trace = trace_of("a = 1;\nb = a / x;\noutput b;\n", {"x": 0}, (0,))
    assert trace.error == "div_by_zero"
    assert failing_criterion(trace, Case("t", {"x": 0}, (0,))) == (1,)


def test_passing_criterion_prefers_failing_statements():
    trace = trace_of(PROG, {"x": 3}, (6, 99))
    assert passing_criterion(trace, frozenset({5})) == (5,)
    # fall back to own outputs when the failing criterion was not executed
    assert passing_criterion(trace, frozenset({77})) == (4, 5)


# -------------------------------------------------------------- expansion

class SimpleTrace:
    """Minimal stand-in exposing the fields expand_bds reads."""

    def __init__(self, test_id, sids, failed):
        self.test_id = test_id
        self.counts = {s: 1 for s in sids}
        self.failed = failed
        self._sids = frozenset(sids)

    def executed_ids(self):
        return self._sids


def _mk_trace(test_id, sids, failed):
    return SimpleTrace(test_id, sids, failed)


def test_expand_adds_failure_correlated_statements():
    # s9 runs in both failing runs and one passing run: P1=2/3, P2=1
    corpus = {
        "f1": _mk_trace("f1", {1, 9}, True),
        "f2": _mk_trace("f2", {2, 9}, True),
        "p1": _mk_trace("p1", {1, 9}, False),
        "p2": _mk_trace("p2", {1}, False),
    }
    ebds = expand_bds(frozenset({1}), corpus["f1"], corpus)
    assert ebds == frozenset({1, 9})


def test_expand_respects_both_thresholds():
    # P1(9) = 2/4 = 0.5 but P2 fails at theta2 = 0.8
    corpus = {
        "f1": _mk_trace("f1", {1, 9}, True),
        "f2": _mk_trace("f2", {2, 9}, True),
        "f3": _mk_trace("f3", {2}, True),
        "p1": _mk_trace("p1", {9}, False),
        "p2": _mk_trace("p2", {9}, False),
    }
    assert expand_bds(frozenset({1}), corpus["f1"], corpus,
                      theta1=0.5, theta2=0.8) == frozenset({1})
    assert expand_bds(frozenset({1}), corpus["f1"], corpus,
                      theta1=0.5, theta2=0.5) == frozenset({1, 9})


def test_expand_only_considers_executed_statements():
    corpus = {
        "f1": _mk_trace("f1", {1, 9}, True),
        "p1": _mk_trace("p1", {1}, False),
    }
    me = _mk_trace("f2", {1}, True)
    corpus["f2"] = me
    # s9 is perfectly failing-correlated but this trace never ran it
    assert expand_bds(frozenset({1}), me, corpus) == frozenset({1})


# ------------------------------------------------------------- suite level

def test_candidate_set_union_ascending():
    slices = [
        SliceResult("f1", (5,), frozenset({3}), frozenset({3, 7})),
        SliceResult("f2", (5,), frozenset({2}), frozenset({2, 3})),
    ]
    cs = candidate_set(slices)
    assert cs.ids == (2, 3, 7)
    assert cs.column_of(3) == 2
    assert 7 in cs and 9 not in cs


def test_candidate_set_requires_failures():
    with pytest.raises(DegenerateInputError):
        candidate_set([])


def test_slice_suite_end_to_end():
    src = (
        "a = x;\n"
        "b = a + 1;\n"
        "c = 5;\n"
        "output b;\n"
    )
    prog = parse(src)
    tests = [
        Case("p1", {"x": 1}, (2,)),
        Case("p2", {"x": 0}, (1,)),
        Case("f1", {"x": 2}, (99,)),  # wrong expectation: fails
    ]
    pairs = [(t, execute(prog, t)) for t in tests]
    results, cs = slice_suite(pairs)
    assert results["f1"].criterion == (3,)
    assert results["f1"].bds == frozenset({0, 1, 3})
    assert results["p1"].criterion == (3,)  # failing criterion, executed
    # c = 5 runs everywhere, so P1 = 1/3 < theta1 keeps it out
    assert cs.ids == (0, 1, 3)
