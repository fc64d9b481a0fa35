"""Tracing interpreter: run a program on a test, record dependences.

Each executed statement becomes an *instance*. The instance is recorded
before its expression is evaluated, so a crashing statement anchors the
trace. Per instance we keep the dynamic data edges (to the most recent
defining instance of each used variable) and one control edge (to the
governing predicate instance). A while predicate's re-evaluations are
governed by the previous evaluation of the same predicate.

Semantics are deterministic integer arithmetic. Division and modulo
truncate toward zero (C style). Division by zero and reading an unbound
variable terminate the run as failures with an error marker; exceeding the
step limit records a timeout marker.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SuiteFormatError
from .minilang.nodes import Binary, Const, Expr, Program, Unary, Var


@dataclass(frozen=True)
class TestCase:
    id: str
    inputs: dict[str, int]
    expected_output: tuple[int, ...]


@dataclass(frozen=True)
class ExecutionTrace:
    test_id: str
    # parallel per-instance sequences
    instances: tuple[int, ...]  # statement id per instance
    data_deps: tuple[frozenset[int], ...]  # instance indices
    ctrl_deps: tuple[int | None, ...]  # governing instance index
    counts: dict[int, int] = field(compare=False)  # stmt id -> executions
    outputs: tuple[int, ...] = ()
    output_instances: tuple[tuple[int, int], ...] = ()  # (instance, value)
    outcome: str = "pass"  # "pass" | "fail"
    error: str | None = None  # None | "div_by_zero" | "unbound" | "timeout"

    @property
    def failed(self) -> bool:
        return self.outcome == "fail"

    def executed_ids(self) -> frozenset[int]:
        return frozenset(self.instances)


class _RunFailure(Exception):
    def __init__(self, marker: str):
        self.marker = marker


class _Env:
    """Variable store that remembers the defining instance of each value."""

    __slots__ = ("values", "def_instance")

    def __init__(self, inputs: dict[str, int]):
        self.values = dict(inputs)
        self.def_instance: dict[str, int] = {}

    def read(self, name: str, used: set[int]) -> int:
        try:
            value = self.values[name]
        except KeyError:
            raise _RunFailure("unbound") from None
        inst = self.def_instance.get(name)
        if inst is not None:
            used.add(inst)
        return value

    def write(self, name: str, value: int, instance: int) -> None:
        self.values[name] = value
        self.def_instance[name] = instance


def _truthy(value: int) -> bool:
    return value != 0


def _eval(expr: Expr, env: _Env, used: set[int]) -> int:
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        return env.read(expr.name, used)
    if isinstance(expr, Unary):
        if expr.op == "-":
            return -_eval(expr.operand, env, used)
        return 0 if _truthy(_eval(expr.operand, env, used)) else 1
    assert isinstance(expr, Binary)
    op = expr.op
    if op == "and":
        left = _eval(expr.left, env, used)
        if not _truthy(left):
            return 0
        return 1 if _truthy(_eval(expr.right, env, used)) else 0
    if op == "or":
        left = _eval(expr.left, env, used)
        if _truthy(left):
            return 1
        return 1 if _truthy(_eval(expr.right, env, used)) else 0
    a = _eval(expr.left, env, used)
    b = _eval(expr.right, env, used)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise _RunFailure("div_by_zero")
        q = abs(a) // abs(b)  # truncate toward zero
        return q if (a >= 0) == (b >= 0) else -q
    if op == "%":
        if b == 0:
            raise _RunFailure("div_by_zero")
        q = abs(a) // abs(b)
        q = q if (a >= 0) == (b >= 0) else -q
        return a - q * b
    if op == "<":
        return 1 if a < b else 0
    if op == "<=":
        return 1 if a <= b else 0
    if op == ">":
        return 1 if a > b else 0
    if op == ">=":
        return 1 if a >= b else 0
    if op == "==":
        return 1 if a == b else 0
    assert op == "!="
    return 1 if a != b else 0


def execute(program: Program, test: TestCase, step_limit: int = 100_000) -> ExecutionTrace:
    if step_limit <= 0:
        raise ValueError("step_limit must be positive")

    env = _Env(test.inputs)
    instances: list[int] = []
    data_deps: list[frozenset[int]] = []
    ctrl_deps: list[int | None] = []
    outputs: list[int] = []
    output_instances: list[tuple[int, int]] = []
    error: str | None = None

    def record(sid: int, governor: int | None) -> int:
        if len(instances) >= step_limit:
            raise _RunFailure("timeout")
        instances.append(sid)
        data_deps.append(frozenset())
        ctrl_deps.append(governor)
        return len(instances) - 1

    def run_block(ids: tuple[int, ...], governor: int | None) -> None:
        for sid in ids:
            run_stmt(sid, governor)

    def run_stmt(sid: int, governor: int | None) -> None:
        st = program.stmt(sid)
        inst = record(sid, governor)
        used: set[int] = set()
        try:
            if st.kind == "skip":
                pass
            elif st.kind == "assign":
                value = _eval(st.expr, env, used)
                env.write(st.target, value, inst)
            elif st.kind == "output":
                value = _eval(st.expr, env, used)
                outputs.append(value)
                output_instances.append((inst, value))
            elif st.kind == "if":
                cond = _eval(st.expr, env, used)
                data_deps[inst] = frozenset(used)
                run_block(st.then_ids if _truthy(cond) else st.else_ids, inst)
                return
            else:  # while
                pred_inst = inst
                cond = _eval(st.expr, env, used)
                data_deps[inst] = frozenset(used)
                while _truthy(cond):
                    run_block(st.body_ids, pred_inst)
                    # re-evaluation is governed by the previous evaluation
                    pred_inst = record(sid, pred_inst)
                    used = set()
                    cond = _eval(st.expr, env, used)
                    data_deps[pred_inst] = frozenset(used)
                return
        finally:
            if st.kind in ("assign", "output", "skip"):
                data_deps[inst] = frozenset(used)

    try:
        run_block(program.top_level, None)
    except _RunFailure as failure:
        error = failure.marker

    if error is not None:
        outcome = "fail"
    elif tuple(outputs) != test.expected_output:
        outcome = "fail"
    else:
        outcome = "pass"

    counts: dict[int, int] = {}
    for sid in instances:
        counts[sid] = counts.get(sid, 0) + 1

    return ExecutionTrace(
        test_id=test.id,
        instances=tuple(instances),
        data_deps=tuple(data_deps),
        ctrl_deps=tuple(ctrl_deps),
        counts=counts,
        outputs=tuple(outputs),
        output_instances=tuple(output_instances),
        outcome=outcome,
        error=error,
    )


def to_execution_vector(trace: ExecutionTrace, ebds: frozenset[int], n_statements: int) -> tuple[int, ...]:
    """Binary presence vector of the expanded slice over all statement ids."""
    return tuple(1 if sid in ebds else 0 for sid in range(n_statements))


def parse_suite(text: str) -> tuple[TestCase, ...]:
    """Parse a test-suite file.

    One record per non-blank, non-comment line:

        <id> ; <var=int, var=int, ...> ; <expected outputs, space-separated>

    The bindings field may be empty for input-free programs, as may the
    outputs field for programs expected to produce nothing.
    """
    tests: list[TestCase] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(";")
        if len(parts) != 3:
            raise SuiteFormatError(
                f"line {lineno}: expected 3 ';'-separated fields, got {len(parts)}"
            )
        test_id = parts[0].strip()
        if not test_id:
            raise SuiteFormatError(f"line {lineno}: empty test id")
        if test_id in seen:
            raise SuiteFormatError(f"line {lineno}: duplicate test id {test_id!r}")
        seen.add(test_id)
        inputs: dict[str, int] = {}
        bindings = parts[1].strip()
        if bindings:
            for item in bindings.split(","):
                item = item.strip()
                if "=" not in item:
                    raise SuiteFormatError(
                        f"line {lineno}: malformed binding {item!r}"
                    )
                name, _, val = item.partition("=")
                name = name.strip()
                if not name.isidentifier():
                    raise SuiteFormatError(
                        f"line {lineno}: bad variable name {name!r}"
                    )
                if name in inputs:
                    raise SuiteFormatError(
                        f"line {lineno}: variable {name!r} bound twice"
                    )
                try:
                    inputs[name] = int(val.strip())
                except ValueError:
                    raise SuiteFormatError(
                        f"line {lineno}: non-integer value {val.strip()!r}"
                    ) from None
        try:
            expected = tuple(int(tok) for tok in parts[2].split())
        except ValueError:
            raise SuiteFormatError(
                f"line {lineno}: non-integer expected output"
            ) from None
        tests.append(TestCase(id=test_id, inputs=inputs, expected_output=expected))
    if not tests:
        raise SuiteFormatError("suite contains no tests")
    return tuple(tests)


def parse_suite_file(path: str) -> tuple[TestCase, ...]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_suite(fh.read())
