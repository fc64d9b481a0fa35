"""Seeded-fault benchmark: compare the pipeline against baseline rankers.

For each viable mutant the harness runs the full localization pipeline
and every baseline on the same traces, collects examination positions,
relative-effort ratios between the slice-restricted and conventional
spectra, the uniform-shrinkage ablation, and the multi-fault protocol.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from . import evalkit, pipeline, proneness
from .config import RunConfig, component_seed
from .errors import DegenerateInputError, FaultrankError
from .minilang import Program, compute_metrics
from .tracer import TestCase

log = logging.getLogger(__name__)

BASELINES = ("ochiai", "tarantula", "dstar2", "o", "op")


@dataclass(frozen=True)
class VersionResult:
    program_name: str
    version: int
    faulty: tuple[int, ...]
    description: str
    positions: dict[str, tuple[int, int]]  # technique -> (best, worst)
    n_statements: int
    distinct_groups: bool | None = None  # multi-fault only


@dataclass(frozen=True)
class BenchReport:
    rows: list[VersionResult]
    imp_by_program: dict[str, dict[str, float]]  # program -> baseline -> Imp%
    ablation: list[tuple[float, float]]  # (weighted worst%, uniform worst%)
    expenses: list[list[float]]  # one sequence per multi-fault version

    def exam_values(self, technique: str, mode: str = "worst") -> list[float]:
        idx = 0 if mode == "best" else 1
        return [
            100.0 * r.positions[technique][idx] / r.n_statements
            for r in self.rows
            if technique in r.positions
        ]

    def mean_exam(self, technique: str, mode: str = "worst") -> float:
        values = self.exam_values(technique, mode)
        return float(np.mean(values)) if values else float("nan")


def _restricted_scores(
    result: pipeline.LocalizeResult, baseline: str, n: int
) -> np.ndarray:
    """Baseline scores over the fitted spectrum's candidate columns only.

    Statements outside the candidate set are demoted to a single unranked
    block after every candidate; a fault that escaped the slices costs the
    whole program in the worst case."""
    X, r = result.scm.X, result.scm.r
    failing = r == 0
    executed = X[:, 1:] > 0
    a_ef = executed[failing].sum(axis=0).astype(float)
    a_ep = executed[~failing].sum(axis=0).astype(float)
    counts = evalkit.SpectrumCounts(
        a_ef=a_ef,
        a_ep=a_ep,
        a_nf=failing.sum() - a_ef,
        a_np=(~failing).sum() - a_ep,
    )
    cand_scores = evalkit.baseline_scores(counts, baseline)
    scores = np.full(n, -np.inf)
    for j, sid in enumerate(result.scm.candidate_ids):
        scores[sid] = cand_scores[j]
    return scores


def _prone_target_ids(program: Program, cfg: RunConfig) -> frozenset[int]:
    metrics = compute_metrics(program)
    table = proneness.estimate_fpl(metrics, q=cfg.q, theta=cfg.theta)
    return frozenset(int(s) for s in np.flatnonzero(table.fault_prone))


def run_bench(
    subjects: list[tuple[str, Program, list[TestCase]]],
    cfg: RunConfig,
) -> BenchReport:
    rows: list[VersionResult] = []
    imp_by_program: dict[str, dict[str, float]] = {}
    ablation: list[tuple[float, float]] = []
    expenses: list[list[float]] = []

    for prog_idx, (name, program, tests) in enumerate(subjects):
        allowed = _prone_target_ids(program, cfg) if cfg.prone_only else None
        versions = evalkit.seed_faults(
            program,
            tests,
            seed=component_seed(cfg.seed, "mutation", prog_idx),
            count=cfg.versions,
            allowed_ids=allowed,
            require_passing=True,
            step_limit=cfg.step_limit,
            max_fail_rate=cfg.max_fail_rate,
        )
        n = len(program)
        examined_ebds = {b: 0 for b in BASELINES}
        examined_conv = {b: 0 for b in BASELINES}

        for v_idx, version in enumerate(versions):
            mutant = version.program()
            traces = evalkit.run_suite(mutant, tests, cfg.step_limit)
            conv_counts = evalkit.build_counts(traces, n)
            positions: dict[str, tuple[int, int]] = {}
            for baseline in BASELINES:
                scores = evalkit.baseline_scores(conv_counts, baseline)
                positions[baseline] = evalkit.exam_positions(
                    scores, version.faulty_ids
                )
            try:
                result = pipeline.localize(mutant, tests, cfg)
            except (DegenerateInputError, FaultrankError) as exc:
                log.warning("%s v%d: pipeline skipped (%s)", name, v_idx, exc)
                continue
            positions["ours"] = evalkit.exam_positions(
                result.ranking.exam_vector(n), version.faulty_ids
            )
            for baseline in BASELINES:
                scores = _restricted_scores(result, baseline, n)
                _, worst = evalkit.exam_positions(scores, version.faulty_ids)
                examined_ebds[baseline] += worst
                examined_conv[baseline] += positions[baseline][1]
            if cfg.ablation:
                uniform = pipeline.localize(
                    mutant, tests, replace(cfg, uniform_delta=True)
                )
                pos_u = evalkit.exam_positions(
                    uniform.ranking.exam_vector(n), version.faulty_ids
                )
                positions["ours_uniform"] = pos_u
                ablation.append(
                    (
                        100.0 * positions["ours"][1] / n,
                        100.0 * pos_u[1] / n,
                    )
                )
            rows.append(
                VersionResult(
                    program_name=name,
                    version=v_idx,
                    faulty=tuple(sorted(version.faulty_ids)),
                    description="; ".join(m.description for m in version.mutations),
                    positions=positions,
                    n_statements=n,
                )
            )

        imp_by_program[name] = {
            b: evalkit.imp(examined_ebds[b], examined_conv[b])
            for b in BASELINES
            if examined_conv[b] > 0 and examined_ebds[b] > 0
        }

        if cfg.multi_fault >= 2:
            multi = evalkit.combine_faults(
                versions,
                seed=component_seed(cfg.seed, "multifault", prog_idx),
                count=max(1, cfg.versions // 3),
                k=cfg.multi_fault,
                tests=tests,
                require_passing=True,
                step_limit=cfg.step_limit,
            )
            for m_idx, version in enumerate(multi):
                def _localize_scores(prog: Program, suite: list[TestCase]):
                    res = pipeline.localize(prog, suite, cfg)
                    return res.ranking.exam_vector(len(prog))

                seq = evalkit.one_bug_at_a_time(
                    version, tests, _localize_scores, step_limit=cfg.step_limit
                )
                expenses.append(seq)
                try:
                    first = pipeline.localize(version.program(), tests, cfg)
                except (DegenerateInputError, FaultrankError):
                    continue
                group_of: dict[int, int] = {}
                for g in first.groups:
                    for sid in g.members:
                        group_of[sid] = g.group_id
                fids = sorted(version.faulty_ids)
                in_groups = [sid in group_of for sid in fids]
                distinct = (
                    all(in_groups)
                    and len({group_of[sid] for sid in fids}) == len(fids)
                )
                rows.append(
                    VersionResult(
                        program_name=name,
                        version=len(versions) + m_idx,
                        faulty=tuple(fids),
                        description="; ".join(
                            m.description for m in version.mutations
                        ),
                        positions={},
                        n_statements=n,
                        distinct_groups=distinct,
                    )
                )

    return BenchReport(
        rows=rows,
        imp_by_program=imp_by_program,
        ablation=ablation,
        expenses=expenses,
    )
