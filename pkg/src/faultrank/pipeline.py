"""End-to-end runs: trace, slice, cleanse, weight, fit, fuse, rank.

This module owns the stage sequencing shared by the command-line paths
and the benchmark harness; each stage's intermediate product stays on the
result object so callers can export artifacts as soon as a stage ends.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import cleansing, enet, localizer, proneness, slicing
from .config import RunConfig, component_seed
from .errors import DegenerateInputError
from .evalkit import run_suite
from .minilang import Program, build_static_pdg, compute_metrics
from .tracer import ExecutionTrace, TestCase, to_execution_vector

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LocalizeResult:
    traces: list[ExecutionTrace]
    slices: dict[str, slicing.SliceResult]
    candidates: slicing.CandidateSet
    clustering: cleansing.Clustering
    cc: cleansing.CcReport
    fpl: proneness.FplTable
    delta: np.ndarray
    scm: enet.Scm
    model: enet.EnetModel
    groups: tuple[localizer.StatementGroup, ...]
    chains: tuple[localizer.CauseEffectChain, ...]
    ranking: localizer.Ranking
    scores: np.ndarray  # final score per statement id

    def stage_log(self) -> str:
        sizes = sorted(len(s.ebds) for s in self.slices.values())
        median = sizes[len(sizes) // 2] if sizes else 0
        lines = [
            f"tests: {len(self.traces)} "
            f"({sum(t.failed for t in self.traces)} failing)",
            f"median expanded slice size: {median}",
            f"candidate statements: {len(self.candidates)}",
            f"flagged coincidentally correct: {len(self.cc.likely_cc)}",
            f"fault-prone statements: {int(self.fpl.fault_prone.sum())}",
            f"chosen (alpha, s): ({self.model.alpha:g}, {self.model.s:g})",
            f"selected coefficients: {len(self.model.selected)}",
            f"groups: {len(self.groups)}",
            f"solver converged: {self.model.diagnostics.converged}",
        ]
        return "\n".join(lines) + "\n"


def ranking_scores(ranking: localizer.Ranking, n_statements: int) -> np.ndarray:
    scores = np.zeros(n_statements)
    for e in ranking.entries:
        scores[e.statement_id] = e.final
    return scores


def localize(
    program: Program,
    tests: list[TestCase],
    cfg: RunConfig,
    fpl_override: proneness.FplTable | None = None,
) -> LocalizeResult:
    """Run the full localization pipeline on a program and test suite."""
    traces = run_suite(program, tests, cfg.step_limit)
    n_fail = sum(1 for t in traces if t.failed)
    if n_fail == 0:
        raise DegenerateInputError("nothing to localize: no failing tests")
    if n_fail == len(traces):
        raise DegenerateInputError("degenerate suite: every test fails")

    pairs = list(zip(tests, traces))
    slices, candidates = slicing.slice_suite(pairs, cfg.theta1, cfg.theta2)

    vectors = [
        to_execution_vector(trace, slices[trace.test_id].ebds, len(program))
        for trace in traces
    ]
    k = cleansing.choose_k(len(tests), cfg.p)
    clustering = cleansing.kmeans(
        vectors, k, seed=component_seed(cfg.seed, "kmeans"),
        test_ids=[t.id for t in tests],
    )
    outcomes = {t.test_id: t.outcome for t in traces}
    cc = cleansing.identify_cc(clustering, outcomes)

    if fpl_override is not None:
        fpl = fpl_override
    else:
        metrics = compute_metrics(program)
        fpl = proneness.estimate_fpl(metrics, q=cfg.q, theta=cfg.theta)
    clean_ebds = [
        slices[tid].ebds for tid in sorted(cc.clean_passing)
    ]
    fpl = proneness.refine_fpl(fpl, clean_ebds, theta=cfg.theta)
    delta_by_stmt = proneness.penalty_weights(fpl, cfg.theta_low, cfg.theta_high)

    if cfg.uniform_delta:
        delta = np.ones(len(candidates) + 1)
        delta[0] = 0.0
    else:
        delta = np.concatenate(
            [[0.0], [delta_by_stmt[sid] for sid in candidates.ids]]
        )

    included = frozenset(outcomes) - cc.likely_cc
    if not any(outcomes[tid] == "pass" for tid in included):
        # cleansing flagged every passing test; dropping them all would
        # leave a single-class regression, so keep the suspects
        log.warning("cleansing flagged all passing tests; keeping them")
        included = frozenset(outcomes)
    scm = enet.build_scm(candidates, traces, included)
    enet_cfg = enet.EnetConfig(
        alpha_grid=cfg.alpha_grid,
        s_grid=cfg.s_grid,
        delta=delta,
        cv_folds=cfg.cv_folds,
        irls_tol=cfg.irls_tol,
        solver_tol=cfg.solver_tol,
        max_irls=cfg.max_irls,
        max_sweeps=cfg.max_sweeps,
        seed=component_seed(cfg.seed, "cv"),
    )
    model = enet.fit(scm, enet_cfg)

    fused = localizer.fuse_scores(model, fpl, cfg.tau_d)
    groups = localizer.group_statements(model, scm, cfg.rho_min, cfg.eps)
    pdg = build_static_pdg(program)
    chains = tuple(localizer.cause_effect_chain(g, pdg) for g in groups)
    ranking = localizer.rank(fused, groups, len(program))
    scores = ranking_scores(ranking, len(program))

    return LocalizeResult(
        traces=traces,
        slices=slices,
        candidates=candidates,
        clustering=clustering,
        cc=cc,
        fpl=fpl,
        delta=delta,
        scm=scm,
        model=model,
        groups=groups,
        chains=chains,
        ranking=ranking,
        scores=scores,
    )


def localize_spectrum(
    scm: enet.Scm,
    cfg: RunConfig,
    fpl_table: proneness.FplTable | None = None,
) -> tuple[enet.EnetModel, localizer.Ranking, tuple[localizer.StatementGroup, ...]]:
    """Reduced pipeline for externally supplied spectra: fit and rank only.

    Without a program there is no slicing, cleansing, or metric model;
    an imported likelihood table (ids matching the spectrum columns) still
    participates in penalties and fusion.
    """
    n_cols = scm.X.shape[1]
    max_sid = max(scm.candidate_ids) if scm.candidate_ids else 0
    if fpl_table is None:
        delta = None
        fpl_table = proneness.FplTable(
            static_fpl=np.zeros(max_sid + 1),
            refined_fpl=np.zeros(max_sid + 1),
            fault_prone=np.zeros(max_sid + 1, dtype=bool),
            theta=cfg.theta,
        )
    else:
        by_stmt = proneness.penalty_weights(fpl_table, cfg.theta_low, cfg.theta_high)
        delta = np.concatenate([[0.0], [by_stmt[sid] for sid in scm.candidate_ids]])
    if cfg.uniform_delta or delta is None:
        delta = np.ones(n_cols)
        delta[0] = 0.0

    enet_cfg = enet.EnetConfig(
        alpha_grid=cfg.alpha_grid,
        s_grid=cfg.s_grid,
        delta=delta,
        cv_folds=cfg.cv_folds,
        irls_tol=cfg.irls_tol,
        solver_tol=cfg.solver_tol,
        max_irls=cfg.max_irls,
        max_sweeps=cfg.max_sweeps,
        seed=component_seed(cfg.seed, "cv"),
    )
    model = enet.fit(scm, enet_cfg)
    fused = localizer.fuse_scores(model, fpl_table, cfg.tau_d)
    groups = localizer.group_statements(model, scm, cfg.rho_min, cfg.eps)
    ranking = localizer.rank(fused, groups, max_sid + 1)
    return model, ranking, groups
