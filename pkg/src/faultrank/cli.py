"""Command-line entry points.

Subcommands:
  localize         full pipeline on a program + test suite
  bench            seeded-fault benchmark against baseline rankers
  slice            expanded backward slices per test (debug aid)
  metrics          static complexity metrics and likelihood estimates
  spectrum-import  fit and rank an externally produced spectrum

Exit codes: 0 success, 2 configuration error, 3 degenerate input,
4 solver non-convergence.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import cleansing, enet, pipeline, proneness, report, slicing
from .config import RunConfig, load_config, serialize_config
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateInputError,
    ParseError,
    SuiteFormatError,
    UnusableTestError,
)
from .localizer import export_ranking
from .minilang import compute_metrics, parse_file
from .tracer import parse_suite_file

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_SOLVER = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--theta", type=float, help="refinement exponent, (1,2]")
    p.add_argument("--theta-low", type=float, dest="theta_low")
    p.add_argument("--theta-high", type=float, dest="theta_high")
    p.add_argument("--p", type=float, help="cluster-count fraction")
    p.add_argument("--q", type=float, help="fault-prone fraction")
    p.add_argument("--tau-d", type=float, dest="tau_d", help="fusion threshold")
    p.add_argument("--theta1", type=float, help="expansion threshold 1")
    p.add_argument("--theta2", type=float, help="expansion threshold 2")
    p.add_argument("--rho-min", type=float, dest="rho_min")
    p.add_argument("--eps", type=float)
    p.add_argument("--cv-folds", type=int, dest="cv_folds")
    p.add_argument("--step-limit", type=int, dest="step_limit")
    p.add_argument("--uniform-delta", action="store_const", const=True,
                   dest="uniform_delta", default=None)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faultrank",
        description="statement-level fault localization for a small "
        "imperative language",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_loc = sub.add_parser("localize", help="rank statements by suspiciousness")
    p_loc.add_argument("--program", help="program source file")
    p_loc.add_argument("--suite", help="test suite file")
    p_loc.add_argument("--fpl-import", dest="fpl_import",
                       help="per-statement likelihood file, id<TAB>fpl")
    _add_common(p_loc)

    p_bench = sub.add_parser("bench", help="seeded-fault comparison harness")
    p_bench.add_argument("--program", action="append",
                         help="program source file (repeatable)")
    p_bench.add_argument("--suite", action="append",
                         help="suite file, one per program (repeatable)")
    p_bench.add_argument("--versions", type=int, help="mutants per program")
    p_bench.add_argument("--multi-fault", type=int, dest="multi_fault",
                         help="faults per multi-fault version (0 = off)")
    p_bench.add_argument("--max-fail-rate", type=float, dest="max_fail_rate",
                         help="discard mutants failing more than this fraction")
    p_bench.add_argument("--prone-only", action="store_const", const=True,
                         dest="prone_only", default=None,
                         help="seed faults only in fault-prone statements")
    p_bench.add_argument("--ablation", action="store_const", const=True,
                         default=None, help="also run with uniform shrinkage")
    _add_common(p_bench)

    p_slice = sub.add_parser("slice", help="export expanded slices per test")
    p_slice.add_argument("--program", help="program source file")
    p_slice.add_argument("--suite", help="test suite file")
    _add_common(p_slice)

    p_met = sub.add_parser("metrics", help="static metrics and likelihoods")
    p_met.add_argument("--program", help="program source file")
    _add_common(p_met)

    p_spec = sub.add_parser("spectrum-import", help="rank an external spectrum")
    p_spec.add_argument("--spectrum", help="tab-separated spectrum file")
    p_spec.add_argument("--fpl-import", dest="fpl_import",
                        help="per-statement likelihood file, id<TAB>fpl")
    _add_common(p_spec)

    return parser


_CONFIG_KEYS = (
    "program", "suite", "spectrum", "fpl_import", "out", "seed", "theta",
    "theta_low", "theta_high", "p", "q", "tau_d", "rho_min", "eps",
    "theta1", "theta2", "cv_folds", "step_limit", "uniform_delta",
    "versions", "multi_fault", "max_fail_rate", "prone_only", "ablation",
)


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return load_config(args.config, overrides).validate()


def _outdir(cfg: RunConfig) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def _write(cfg: RunConfig, name: str, content: str) -> None:
    report.write_text(os.path.join(_outdir(cfg), name), content)


def _cmd_localize(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args).require_single_input()
    _write(cfg, "config.txt", serialize_config(cfg))

    if cfg.spectrum is not None:
        return _rank_spectrum(cfg)

    program = parse_file(cfg.program)
    tests = list(parse_suite_file(cfg.suite))
    fpl_override = None
    if cfg.fpl_import:
        with open(cfg.fpl_import, "r", encoding="utf-8") as fh:
            fpl_override = proneness.import_fpl(
                fh.read(), len(program), theta=cfg.theta
            )

    result = pipeline.localize(program, tests, cfg, fpl_override=fpl_override)

    order = [t.id for t in tests]
    _write(cfg, "slices.txt", slicing.export_slices(result.slices, order))
    _write(cfg, "candidates.txt",
           " ".join(f"s{sid}" for sid in result.candidates.ids) + "\n")
    _write(cfg, "cc.txt", cleansing.export_cc_report(result.cc))
    _write(cfg, "fpl.tsv", proneness.export_fpl(result.fpl))
    _write(cfg, "spectrum.tsv", enet.export_spectrum(result.scm))
    _write(cfg, "ranking.tsv",
           export_ranking(result.ranking, result.chains, program))
    report.render_score_profile(
        os.path.join(_outdir(cfg), "scores.png"), result.scores,
        os.path.basename(cfg.program),
    )
    _write(cfg, "summary.txt", result.stage_log())
    print(result.stage_log(), end="")

    if not result.model.diagnostics.converged:
        print("warning: solver did not converge", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _rank_spectrum(cfg: RunConfig) -> int:
    with open(cfg.spectrum, "r", encoding="utf-8") as fh:
        scm = enet.parse_spectrum(fh.read())
    fpl_table = None
    if cfg.fpl_import:
        n = max(scm.candidate_ids) + 1
        with open(cfg.fpl_import, "r", encoding="utf-8") as fh:
            fpl_table = proneness.import_fpl(fh.read(), n, theta=cfg.theta)
    model, ranking, groups = pipeline.localize_spectrum(scm, cfg, fpl_table)
    _write(cfg, "ranking.tsv", export_ranking(ranking, ()))
    n = max(scm.candidate_ids) + 1
    report.render_score_profile(
        os.path.join(_outdir(cfg), "scores.png"),
        pipeline.ranking_scores(ranking, n),
        os.path.basename(cfg.spectrum),
    )
    summary = (
        f"spectrum rows: {len(scm.test_ids)}\n"
        f"columns: {len(scm.candidate_ids)}\n"
        f"chosen (alpha, s): ({model.alpha:g}, {model.s:g})\n"
        f"selected coefficients: {len(model.selected)}\n"
        f"groups: {len(groups)}\n"
        f"solver converged: {model.diagnostics.converged}\n"
    )
    _write(cfg, "summary.txt", summary)
    print(summary, end="")
    if not model.diagnostics.converged:
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_spectrum_import(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    if cfg.spectrum is None:
        raise ConfigError("spectrum-import needs --spectrum")
    _write(cfg, "config.txt", serialize_config(cfg))
    return _rank_spectrum(cfg)


def _cmd_slice(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args).require_program_suite()
    _write(cfg, "config.txt", serialize_config(cfg))
    program = parse_file(cfg.program)
    tests = list(parse_suite_file(cfg.suite))
    from .evalkit import run_suite

    traces = run_suite(program, tests, cfg.step_limit)
    if not any(t.failed for t in traces):
        raise DegenerateInputError("nothing to slice from: no failing tests")
    slices, candidates = slicing.slice_suite(
        list(zip(tests, traces)), cfg.theta1, cfg.theta2
    )
    order = [t.id for t in tests]
    _write(cfg, "slices.txt", slicing.export_slices(slices, order))
    _write(cfg, "candidates.txt",
           " ".join(f"s{sid}" for sid in candidates.ids) + "\n")
    print(f"candidate statements: {len(candidates)}")
    return EXIT_OK


def _cmd_metrics(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    if cfg.program is None:
        raise ConfigError("metrics needs --program")
    _write(cfg, "config.txt", serialize_config(cfg))
    program = parse_file(cfg.program)
    metrics = compute_metrics(program)
    rows = [
        [m.statement_id, m.nesting_depth, m.cyclomatic, m.volume,
         m.token_length, int(m.in_loop)]
        for m in metrics
    ]
    _write(cfg, "metrics.tsv", report.tsv(
        rows,
        header=["statement", "nesting", "cyclomatic", "volume", "tokens", "loop"],
    ))
    table = proneness.estimate_fpl(metrics, q=cfg.q, theta=cfg.theta)
    _write(cfg, "fpl.tsv", proneness.export_fpl(table, refined=False))
    print(f"statements: {len(metrics)}")
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    programs = args.program or ([cfg.program] if cfg.program else [])
    suites = args.suite or ([cfg.suite] if cfg.suite else [])
    if not programs or len(programs) != len(suites):
        raise ConfigError("bench needs matching --program/--suite pairs")
    _write(cfg, "config.txt", serialize_config(cfg))

    subjects = []
    for prog_path, suite_path in zip(programs, suites):
        program = parse_file(prog_path)
        tests = list(parse_suite_file(suite_path))
        subjects.append((os.path.basename(prog_path), program, tests))

    rep = bench_mod.run_bench(subjects, cfg)

    techniques = ["ours"] + list(bench_mod.BASELINES)
    if cfg.ablation:
        techniques.append("ours_uniform")
    detail_rows = []
    for r in rep.rows:
        for tech in techniques:
            if tech not in r.positions:
                continue
            best, worst = r.positions[tech]
            detail_rows.append([
                r.program_name, r.version,
                ",".join(f"s{f}" for f in r.faulty), tech,
                best, worst,
                100.0 * best / r.n_statements,
                100.0 * worst / r.n_statements,
            ])
    _write(cfg, "bench.tsv", report.tsv(
        detail_rows,
        header=["program", "version", "faulty", "technique",
                "pos_best", "pos_worst", "exam_best", "exam_worst"],
    ))

    summary_rows = []
    for tech in techniques:
        summary_rows.append([
            tech,
            rep.mean_exam(tech, "best"),
            rep.mean_exam(tech, "worst"),
            float(np.mean([r.positions[tech][0] for r in rep.rows
                           if tech in r.positions] or [float("nan")])),
            float(np.mean([r.positions[tech][1] for r in rep.rows
                           if tech in r.positions] or [float("nan")])),
        ])
    header = ["technique", "mean_exam_best", "mean_exam_worst",
              "mean_pos_best", "mean_pos_worst"]
    _write(cfg, "summary.tsv", report.tsv(summary_rows, header=header))
    text = report.aligned_table(summary_rows, header)
    _write(cfg, "summary.txt", text)
    print(text, end="")

    imp_rows = [
        [name, baseline, value]
        for name, by_baseline in sorted(rep.imp_by_program.items())
        for baseline, value in sorted(by_baseline.items())
    ]
    _write(cfg, "imp.tsv", report.tsv(
        imp_rows, header=["program", "baseline", "imp_percent"]
    ))

    report.render_exam_curve(
        os.path.join(_outdir(cfg), "exam_curve.png"),
        {tech: rep.exam_values(tech, "worst") for tech in techniques},
    )
    if cfg.ablation and rep.ablation:
        weighted = float(np.mean([a for a, _ in rep.ablation]))
        uniform = float(np.mean([b for _, b in rep.ablation]))
        report.render_ablation_bars(
            os.path.join(_outdir(cfg), "ablation.png"), weighted, uniform
        )
    if rep.expenses:
        _write(cfg, "expense.tsv", report.tsv(
            [[i] + seq for i, seq in enumerate(rep.expenses)],
        ))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "localize": _cmd_localize,
        "bench": _cmd_bench,
        "slice": _cmd_slice,
        "metrics": _cmd_metrics,
        "spectrum-import": _cmd_spectrum_import,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, ParseError, SuiteFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateInputError, UnusableTestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
