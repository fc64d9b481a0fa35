"""Benchmark utilities: baseline scores, examination metrics, fault seeding.

The mutation harness produces single- and multi-fault program versions
with known faulty statement ids; the metrics quantify how far down a
ranking the first faulty statement sits (best/worst tie placement) and
compare examination effort between spectra.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .errors import FaultrankError
from .minilang.nodes import Binary, Const, Expr, Program, Statement, Unary, Var
from .tracer import ExecutionTrace, TestCase, execute

log = logging.getLogger(__name__)

_REL_OPS = ("<", "<=", ">", ">=", "==", "!=")
_ARITH_OPS = ("+", "-", "*", "/", "%")

MUTATION_OPERATORS = (
    "relational_flip",
    "off_by_one",
    "wrong_variable",
    "arithmetic_swap",
    "negate_predicate",
)


@dataclass(frozen=True)
class SpectrumCounts:
    a_ef: np.ndarray  # failing tests covering the statement
    a_ep: np.ndarray  # passing tests covering
    a_nf: np.ndarray  # failing not covering
    a_np: np.ndarray  # passing not covering

    @property
    def total_failing(self) -> int:
        return int(self.a_ef[0] + self.a_nf[0]) if len(self.a_ef) else 0

    @property
    def total_passing(self) -> int:
        return int(self.a_ep[0] + self.a_np[0]) if len(self.a_ep) else 0


def build_counts(traces: list[ExecutionTrace], n_statements: int) -> SpectrumCounts:
    a_ef = np.zeros(n_statements)
    a_ep = np.zeros(n_statements)
    n_fail = sum(1 for t in traces if t.failed)
    n_pass = len(traces) - n_fail
    for trace in traces:
        for sid in trace.executed_ids():
            if trace.failed:
                a_ef[sid] += 1
            else:
                a_ep[sid] += 1
    return SpectrumCounts(
        a_ef=a_ef, a_ep=a_ep, a_nf=n_fail - a_ef, a_np=n_pass - a_ep
    )


def baseline_scores(counts: SpectrumCounts, method: str) -> np.ndarray:
    """Suspiciousness per statement for a named baseline formula.

    Zero denominators: scores with a_ef = 0 fall to 0; otherwise the cell
    gets a surrogate of (largest finite score + 1) so the ranking stays
    total.
    """
    a_ef, a_ep = counts.a_ef, counts.a_ep
    a_nf, a_np = counts.a_nf, counts.a_np
    F = counts.total_failing
    P = counts.total_passing
    n = len(a_ef)
    scores = np.zeros(n)
    infinite = np.zeros(n, dtype=bool)

    if method == "ochiai":
        denom = np.sqrt((a_ef + a_nf) * (a_ef + a_ep))
        ok = denom > 0
        scores[ok] = a_ef[ok] / denom[ok]
        infinite = (denom == 0) & (a_ef > 0)
    elif method == "tarantula":
        ef_rate = a_ef / F if F else np.zeros(n)
        ep_rate = a_ep / P if P else np.zeros(n)
        denom = ef_rate + ep_rate
        ok = denom > 0
        scores[ok] = ef_rate[ok] / denom[ok]
        infinite = (denom == 0) & (a_ef > 0)
    elif method == "dstar2":
        denom = a_ep + a_nf
        ok = denom > 0
        scores[ok] = a_ef[ok] ** 2 / denom[ok]
        infinite = (denom == 0) & (a_ef > 0)
    elif method == "o":
        scores = np.where(a_nf > 0, -1.0, a_np.astype(float))
    elif method == "op":
        scores = a_ef - a_ep / (a_ep + a_np + 1.0)
    else:
        raise ValueError(f"unknown baseline {method!r}")

    if infinite.any():
        finite_max = scores[~infinite].max() if (~infinite).any() else 0.0
        scores[infinite] = finite_max + 1.0
    return scores


def exam_positions(scores: np.ndarray, faulty: frozenset[int]) -> tuple[int, int]:
    """(best, worst) 1-indexed examination position of the first faulty
    statement; ties share a block, examined faulty-first (best) or
    faulty-last (worst)."""
    if not faulty:
        raise ValueError("faulty set is empty")
    best = None
    worst = None
    for sid in faulty:
        if not 0 <= sid < len(scores):
            log.warning("faulty statement %d outside ranking; ranked last", sid)
            b = w = len(scores)
        else:
            s = scores[sid]
            strictly_better = int(np.sum(scores > s))
            block = int(np.sum(scores == s))
            b = strictly_better + 1
            w = strictly_better + block
        best = b if best is None else min(best, b)
        worst = w if worst is None else min(worst, w)
    return best, worst


def exam_score(scores: np.ndarray, faulty: frozenset[int], mode: str = "worst") -> float:
    """Percentage of statements examined before the first faulty one."""
    best, worst = exam_positions(scores, faulty)
    pos = best if mode == "best" else worst
    return 100.0 * pos / len(scores)


def imp(examined_with_ebds: float, examined_conventional: float) -> float:
    """Relative examination effort, as a percentage of the conventional
    spectrum's effort."""
    if examined_with_ebds <= 0 or examined_conventional <= 0:
        raise ValueError("examined totals must be positive")
    return 100.0 * examined_with_ebds / examined_conventional


@dataclass(frozen=True)
class Mutation:
    statement_id: int
    operator: str
    description: str
    mutated_expr: Expr


@dataclass(frozen=True)
class FaultyVersion:
    base: Program
    mutations: tuple[Mutation, ...]

    @property
    def faulty_ids(self) -> frozenset[int]:
        return frozenset(m.statement_id for m in self.mutations)

    def program(self) -> Program:
        prog = self.base
        for m in self.mutations:
            prog = prog.replace_statement(m.statement_id, expr=m.mutated_expr)
        return prog

    def fix(self, statement_id: int) -> "FaultyVersion":
        kept = tuple(m for m in self.mutations if m.statement_id != statement_id)
        if len(kept) == len(self.mutations):
            raise KeyError(f"no mutation at statement {statement_id}")
        return dc_replace(self, mutations=kept)


def _expr_sites(expr: Expr, path: tuple[str, ...] = ()) -> list[tuple[tuple[str, ...], Expr]]:
    sites = [(path, expr)]
    if isinstance(expr, Unary):
        sites += _expr_sites(expr.operand, path + ("operand",))
    elif isinstance(expr, Binary):
        sites += _expr_sites(expr.left, path + ("left",))
        sites += _expr_sites(expr.right, path + ("right",))
    return sites


def _rewrite(expr: Expr, path: tuple[str, ...], new: Expr) -> Expr:
    if not path:
        return new
    head, rest = path[0], path[1:]
    if isinstance(expr, Unary):
        return dc_replace(expr, operand=_rewrite(expr.operand, rest, new))
    assert isinstance(expr, Binary)
    if head == "left":
        return dc_replace(expr, left=_rewrite(expr.left, rest, new))
    return dc_replace(expr, right=_rewrite(expr.right, rest, new))


def _candidate_mutations(program: Program, operators: tuple[str, ...]) -> list[Mutation]:
    """Every single-site mutation the operators allow, in statement order."""
    variables = sorted(program.variables)
    out: list[Mutation] = []
    for st in program.statements:
        if st.expr is None:
            continue
        sites = _expr_sites(st.expr)
        if "relational_flip" in operators:
            for path, node in sites:
                if isinstance(node, Binary) and node.op in _REL_OPS:
                    for op in _REL_OPS:
                        if op != node.op:
                            mutated = _rewrite(
                                st.expr, path, dc_replace(node, op=op)
                            )
                            out.append(Mutation(
                                st.id, "relational_flip",
                                f"s{st.id}: {node.op} -> {op}", mutated,
                            ))
        if "off_by_one" in operators:
            for path, node in sites:
                if isinstance(node, Const):
                    for delta in (1, -1):
                        mutated = _rewrite(
                            st.expr, path, Const(node.value + delta)
                        )
                        out.append(Mutation(
                            st.id, "off_by_one",
                            f"s{st.id}: {node.value} -> {node.value + delta}",
                            mutated,
                        ))
        if "wrong_variable" in operators:
            for path, node in sites:
                if isinstance(node, Var):
                    for name in variables:
                        if name != node.name:
                            mutated = _rewrite(st.expr, path, Var(name))
                            out.append(Mutation(
                                st.id, "wrong_variable",
                                f"s{st.id}: {node.name} -> {name}", mutated,
                            ))
        if "arithmetic_swap" in operators:
            for path, node in sites:
                if isinstance(node, Binary) and node.op in _ARITH_OPS:
                    for op in _ARITH_OPS:
                        if op != node.op:
                            mutated = _rewrite(
                                st.expr, path, dc_replace(node, op=op)
                            )
                            out.append(Mutation(
                                st.id, "arithmetic_swap",
                                f"s{st.id}: {node.op} -> {op}", mutated,
                            ))
        if "negate_predicate" in operators and st.is_predicate:
            mutated = Unary("not", st.expr)
            out.append(Mutation(
                st.id, "negate_predicate", f"s{st.id}: negated", mutated,
            ))
    return out


def run_suite(
    program: Program, tests: list[TestCase], step_limit: int = 100_000
) -> list[ExecutionTrace]:
    return [execute(program, t, step_limit) for t in tests]


def seed_faults(
    program: Program,
    tests: list[TestCase],
    seed: int,
    count: int,
    operators: tuple[str, ...] = MUTATION_OPERATORS,
    allowed_ids: frozenset[int] | None = None,
    require_passing: bool = False,
    step_limit: int = 100_000,
    max_fail_rate: float = 1.0,
) -> list[FaultyVersion]:
    """Draw `count` viable single-fault versions, deterministically.

    A mutant is viable when at least one test fails on it (equivalent
    mutants carry no signal and are discarded). `require_passing`
    additionally demands at least one passing test, which spectrum-based
    fitting needs. `max_fail_rate` discards mutants failing more than
    that fraction of the suite; seeded-fault benchmarks conventionally
    keep faults that break a minority of tests. `allowed_ids` restricts
    where faults may be planted.
    """
    pool = _candidate_mutations(program, operators)
    if allowed_ids is not None:
        pool = [m for m in pool if m.statement_id in allowed_ids]
    if not pool:
        raise FaultrankError("no mutation sites available")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pool))

    versions: list[FaultyVersion] = []
    for idx in order:
        if len(versions) >= count:
            break
        version = FaultyVersion(base=program, mutations=(pool[idx],))
        traces = run_suite(version.program(), tests, step_limit)
        n_fail = sum(1 for t in traces if t.failed)
        if n_fail == 0:
            continue
        if require_passing and n_fail == len(traces):
            continue
        if n_fail > max_fail_rate * len(traces):
            continue
        versions.append(version)
    if len(versions) < count:
        log.warning(
            "only %d of %d requested viable mutants found", len(versions), count
        )
    if not versions:
        raise FaultrankError("no viable mutant found")
    return versions


def combine_faults(
    singles: list[FaultyVersion],
    seed: int,
    count: int,
    k: int = 2,
    tests: list[TestCase] | None = None,
    require_passing: bool = False,
    step_limit: int = 100_000,
) -> list[FaultyVersion]:
    """Multi-fault versions: compositions of k single mutations at
    distinct statements."""
    if len(singles) < k:
        raise FaultrankError(f"need at least {k} single-fault versions")
    rng = np.random.default_rng(seed)
    out: list[FaultyVersion] = []
    attempts = 0
    max_attempts = 200 * count
    while len(out) < count and attempts < max_attempts:
        attempts += 1
        picks = rng.choice(len(singles), size=k, replace=False)
        muts = tuple(singles[i].mutations[0] for i in picks)
        if len({m.statement_id for m in muts}) < k:
            continue
        version = FaultyVersion(base=singles[0].base, mutations=muts)
        if tests is not None:
            traces = run_suite(version.program(), tests, step_limit)
            n_fail = sum(1 for t in traces if t.failed)
            if n_fail == 0 or (require_passing and n_fail == len(traces)):
                continue
        out.append(version)
    if len(out) < count:
        log.warning("only %d of %d multi-fault versions built", len(out), count)
    return out


def one_bug_at_a_time(
    version: FaultyVersion,
    tests: list[TestCase],
    localize,
    mode: str = "worst",
    step_limit: int = 100_000,
) -> list[float]:
    """Locate-fix-rerun protocol for multi-fault versions.

    `localize` maps (program, tests) to a score array over all statements.
    Each iteration reports the examination percentage of the first fault
    reached, then reverts that fault. Failures remaining after every fault
    is fixed indicate an inconsistent oracle.
    """
    current = version
    expenses: list[float] = []
    while True:
        traces = run_suite(current.program(), tests, step_limit)
        if not any(t.failed for t in traces):
            return expenses
        if not current.mutations:
            raise FaultrankError(
                "failures remain with all faults fixed: oracle inconsistency"
            )
        scores = localize(current.program(), tests)
        faulty = current.faulty_ids
        best, worst = exam_positions(scores, faulty)
        pos = best if mode == "best" else worst
        expenses.append(100.0 * pos / len(scores))
        # the fault "found" is the one reached first in rank order
        found = min(
            faulty,
            key=lambda sid: (
                exam_positions(scores, frozenset([sid]))[0 if mode == "best" else 1],
                sid,
            ),
        )
        current = current.fix(found)
