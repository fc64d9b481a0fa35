"""Backward dynamic slicing, slice expansion, and the candidate set.

A backward dynamic slice is the transitive closure over a trace's dynamic
data and control edges from the instances of the slicing criterion. Slices
are then expanded with two suite-level conditional probabilities so that
statements that merely correlate with failure are kept as candidates, and
the union of failing-test expanded slices becomes the candidate set that
the model fits over.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DegenerateInputError, UnusableTestError
from .tracer import ExecutionTrace, TestCase


@dataclass(frozen=True)
class SliceResult:
    test_id: str
    criterion: tuple[int, ...]  # output (or anchor) statement ids
    bds: frozenset[int]
    ebds: frozenset[int]


@dataclass(frozen=True)
class CandidateSet:
    ids: tuple[int, ...]  # ascending statement ids

    def column_of(self, sid: int) -> int:
        """1-based column index in the spectrum matrix (0 is the intercept)."""
        return self.ids.index(sid) + 1

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, sid: int) -> bool:
        return sid in self.ids


def failing_criterion(trace: ExecutionTrace, test: TestCase) -> tuple[int, ...]:
    """Criterion statements for a failing run.

    Output statements whose produced value mismatched the expected sequence
    position-wise (including extra outputs). A run that failed without a
    mismatched produced value (crash, timeout, or truncated output) anchors
    at its last executed statement.
    """
    expected = test.expected_output
    mismatched: list[int] = []
    for k, (inst, value) in enumerate(trace.output_instances):
        if k >= len(expected) or value != expected[k]:
            sid = trace.instances[inst]
            if sid not in mismatched:
                mismatched.append(sid)
    if mismatched:
        return tuple(sorted(mismatched))
    if trace.instances:
        return (trace.instances[-1],)
    raise UnusableTestError(f"test {trace.test_id}: empty trace, no criterion")


def passing_criterion(trace: ExecutionTrace, failing_ids: frozenset[int]) -> tuple[int, ...]:
    """Criterion for a passing run: the failing runs' criterion statements
    that this run executed, falling back to its own executed output
    statements and finally to the last executed statement."""
    executed = trace.executed_ids()
    ids = sorted(failing_ids & executed)
    if ids:
        return tuple(ids)
    own = sorted({trace.instances[inst] for inst, _ in trace.output_instances})
    if own:
        return tuple(own)
    if trace.instances:
        return (trace.instances[-1],)
    raise UnusableTestError(f"test {trace.test_id}: empty trace, no criterion")


def backward_dynamic_slice(trace: ExecutionTrace, criterion: tuple[int, ...]) -> frozenset[int]:
    """Statement ids backward-reachable from every criterion instance."""
    criterion_set = set(criterion)
    stack = [i for i, sid in enumerate(trace.instances) if sid in criterion_set]
    if not stack:
        raise UnusableTestError(
            f"test {trace.test_id}: criterion {sorted(criterion_set)} never executed"
        )
    seen: set[int] = set(stack)
    while stack:
        inst = stack.pop()
        for dep in trace.data_deps[inst]:
            if dep not in seen:
                seen.add(dep)
                stack.append(dep)
        gov = trace.ctrl_deps[inst]
        if gov is not None and gov not in seen:
            seen.add(gov)
            stack.append(gov)
    return frozenset(trace.instances[i] for i in seen)


def expand_bds(
    bds: frozenset[int],
    trace: ExecutionTrace,
    corpus: dict[str, ExecutionTrace],
    theta1: float = 0.5,
    theta2: float = 0.5,
) -> frozenset[int]:
    """Add executed statements whose failure-correlation passes both thresholds.

    P1(s) = failing runs executing s / runs executing s;
    P2(s) = failing runs executing s / failing runs.
    """
    total_failing = sum(1 for t in corpus.values() if t.failed)
    extra: set[int] = set()
    for sid in trace.executed_ids():
        if sid in bds:
            continue
        exec_total = 0
        exec_fail = 0
        for other in corpus.values():
            if sid in other.counts:
                exec_total += 1
                if other.failed:
                    exec_fail += 1
        p1 = exec_fail / exec_total if exec_total else 0.0
        p2 = exec_fail / total_failing if total_failing else 0.0
        if p1 >= theta1 and p2 >= theta2:
            extra.add(sid)
    return bds | extra


def candidate_set(failing_slices: list[SliceResult]) -> CandidateSet:
    if not failing_slices:
        raise DegenerateInputError("no failing tests: nothing to localize")
    union: set[int] = set()
    for s in failing_slices:
        union |= s.ebds
    return CandidateSet(tuple(sorted(union)))


def slice_suite(
    pairs: list[tuple[TestCase, ExecutionTrace]],
    theta1: float = 0.5,
    theta2: float = 0.5,
) -> tuple[dict[str, SliceResult], CandidateSet]:
    """Slice every test of a suite and build the candidate set.

    Failing runs are sliced from their mismatched outputs; passing runs
    from the same statements where executed. Returns per-test results plus
    the union of failing expanded slices.
    """
    corpus = {trace.test_id: trace for _, trace in pairs}
    fail_ids: set[int] = set()
    fail_crit: dict[str, tuple[int, ...]] = {}
    for test, trace in pairs:
        if trace.failed:
            crit = failing_criterion(trace, test)
            fail_crit[test.id] = crit
            fail_ids.update(crit)

    results: dict[str, SliceResult] = {}
    failing_slices: list[SliceResult] = []
    for test, trace in pairs:
        if trace.failed:
            crit = fail_crit[test.id]
        else:
            crit = passing_criterion(trace, frozenset(fail_ids))
        bds = backward_dynamic_slice(trace, crit)
        ebds = expand_bds(bds, trace, corpus, theta1, theta2)
        res = SliceResult(test_id=test.id, criterion=crit, bds=bds, ebds=ebds)
        results[test.id] = res
        if trace.failed:
            failing_slices.append(res)

    return results, candidate_set(failing_slices)


def export_slices(results: dict[str, SliceResult], order: list[str]) -> str:
    """Debug export: one line per test, `test_id: s3 s7 s9`."""
    lines = []
    for test_id in order:
        ebds = " ".join(f"s{sid}" for sid in sorted(results[test_id].ebds))
        lines.append(f"{test_id}: {ebds}".rstrip())
    return "\n".join(lines) + "\n"
