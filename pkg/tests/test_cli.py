"""End-to-end command line checks: exit codes and artifact files."""

import pytest

from faultrank import cli, proneness, tracer
from faultrank.minilang import compute_metrics, parse

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

# predicate should read `a > 2`; the suite below encodes that expectation,
# so x = 3 is the single failing input
BUGGY_SRC = """\
a = x;
if (a > 3) {
    b = a + 1;
} else {
    b = 0;
}
output b;
"""

CLEAN_SRC = """\
a = x;
b = x + 2;
if (a > 3) {
    c = b * 2;
} else {
    c = b - 1;
}
s = 0;
i = 0;
while (i < a) {
    s = s + i;
    i = i + 1;
}
output c;
output s;
"""


def _suite_text(expected_of, xs=range(8)):
    lines = ["# generated fixture"]
    for x in xs:
        lines.append(f"t{x} ; x={x} ; {expected_of(x)}")
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="module")
def buggy_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("buggy")
    prog = root / "buggy.src"
    prog.write_text(BUGGY_SRC)
    suite = root / "suite.txt"
    suite.write_text(_suite_text(lambda x: x + 1 if x > 2 else 0))
    return str(prog), str(suite)


@pytest.fixture(scope="module")
def clean_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("clean")
    prog = root / "clean.src"
    prog.write_text(CLEAN_SRC)
    program = parse(CLEAN_SRC)

    def run(x):
        trace = tracer.execute(program, tracer.TestCase(f"t{x}", {"x": x}, ()))
        return " ".join(str(v) for v in trace.outputs)

    suite = root / "suite.txt"
    suite.write_text(_suite_text(run, xs=range(10)))
    return str(prog), str(suite)


LOCALIZE_ARTIFACTS = (
    "config.txt", "slices.txt", "candidates.txt", "cc.txt", "fpl.tsv",
    "spectrum.tsv", "ranking.tsv", "scores.png", "summary.txt",
)


def test_localize_success_writes_artifacts(buggy_files, tmp_path, capsys):
    prog, suite = buggy_files
    out = tmp_path / "out"
    rc = cli.main(["localize", "--program", prog, "--suite", suite,
                   "--out", str(out)])
    assert rc == 0
    for name in LOCALIZE_ARTIFACTS:
        assert (out / name).is_file(), name
    assert (out / "ranking.tsv").read_text().startswith("rank\t")
    assert (out / "scores.png").read_bytes().startswith(PNG_MAGIC)
    # the uncovered then-branch stays out of the candidate set
    assert (out / "candidates.txt").read_text() == "s0 s1 s3 s4\n"
    stdout = capsys.readouterr().out
    assert "tests: 8 (1 failing)" in stdout
    assert "solver converged: True" in stdout


def test_localize_with_imported_likelihoods(buggy_files, tmp_path):
    prog, suite = buggy_files
    table = proneness.estimate_fpl(compute_metrics(parse(BUGGY_SRC)), q=0.25)
    fpl_file = tmp_path / "fpl.tsv"
    fpl_file.write_text(proneness.export_fpl(table, refined=False))
    out = tmp_path / "out"
    rc = cli.main(["localize", "--program", prog, "--suite", suite,
                   "--fpl-import", str(fpl_file), "--out", str(out)])
    assert rc == 0
    assert (out / "fpl.tsv").is_file()


def test_localize_repeat_runs_byte_identical(buggy_files, tmp_path):
    prog, suite = buggy_files
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert cli.main(["localize", "--program", prog, "--suite", suite,
                         "--out", str(out), "--seed", "7"]) == 0
        outs.append(out)
    for name in LOCALIZE_ARTIFACTS:
        if name == "config.txt":
            continue  # records the differing output paths
        a = (outs[0] / name).read_bytes()
        b = (outs[1] / name).read_bytes()
        assert a == b, name


def test_localize_missing_program_exits_2(buggy_files, tmp_path):
    _, suite = buggy_files
    rc = cli.main(["localize", "--program", str(tmp_path / "nope.src"),
                   "--suite", suite, "--out", str(tmp_path / "out")])
    assert rc == 2


def test_localize_invalid_flag_exits_2(buggy_files, tmp_path):
    prog, suite = buggy_files
    rc = cli.main(["localize", "--program", prog, "--suite", suite,
                   "--theta", "3.0", "--out", str(tmp_path / "out")])
    assert rc == 2


def test_localize_without_inputs_exits_2(tmp_path):
    assert cli.main(["localize", "--out", str(tmp_path / "out")]) == 2


def test_localize_all_passing_exits_3(tmp_path):
    prog = tmp_path / "prog.src"
    prog.write_text(BUGGY_SRC)
    suite = tmp_path / "suite.txt"
    suite.write_text(_suite_text(lambda x: x + 1 if x > 3 else 0))
    rc = cli.main(["localize", "--program", str(prog), "--suite", str(suite),
                   "--out", str(tmp_path / "out")])
    assert rc == 3


def test_localize_unconverged_exits_4(buggy_files, tmp_path, capsys):
    prog, suite = buggy_files
    cfg_file = tmp_path / "starved.cfg"
    cfg_file.write_text(
        "max_sweeps = 1\nmax_irls = 1\nsolver_tol = 1e-300\n"
    )
    out = tmp_path / "out"
    rc = cli.main(["localize", "--program", prog, "--suite", suite,
                   "--config", str(cfg_file), "--out", str(out)])
    assert rc == 4
    # ranking is still produced, just flagged as unconverged
    assert (out / "ranking.tsv").is_file()
    assert "did not converge" in capsys.readouterr().err


def test_malformed_suite_exits_2(buggy_files, tmp_path):
    prog, _ = buggy_files
    suite = tmp_path / "bad.txt"
    suite.write_text("t0 ; x=0\n")
    rc = cli.main(["localize", "--program", prog, "--suite", str(suite),
                   "--out", str(tmp_path / "out")])
    assert rc == 2


def test_unknown_config_key_exits_2(buggy_files, tmp_path):
    prog, suite = buggy_files
    cfg_file = tmp_path / "bad.cfg"
    cfg_file.write_text("bogus = 1\n")
    rc = cli.main(["localize", "--program", prog, "--suite", suite,
                   "--config", str(cfg_file), "--out", str(tmp_path / "out")])
    assert rc == 2


def test_missing_config_file_exits_2(buggy_files, tmp_path):
    prog, suite = buggy_files
    rc = cli.main(["localize", "--program", prog, "--suite", suite,
                   "--config", str(tmp_path / "nope.cfg"),
                   "--out", str(tmp_path / "out")])
    assert rc == 2


def test_slice_writes_slices_and_candidates(buggy_files, tmp_path, capsys):
    prog, suite = buggy_files
    out = tmp_path / "out"
    rc = cli.main(["slice", "--program", prog, "--suite", suite,
                   "--out", str(out)])
    assert rc == 0
    assert (out / "slices.txt").is_file()
    assert (out / "candidates.txt").read_text() == "s0 s1 s3 s4\n"
    assert "candidate statements: 4" in capsys.readouterr().out


def test_slice_without_failures_exits_3(tmp_path):
    prog = tmp_path / "prog.src"
    prog.write_text(BUGGY_SRC)
    suite = tmp_path / "suite.txt"
    suite.write_text(_suite_text(lambda x: x + 1 if x > 3 else 0))
    rc = cli.main(["slice", "--program", str(prog), "--suite", str(suite),
                   "--out", str(tmp_path / "out")])
    assert rc == 3


def test_metrics_writes_tables(clean_files, tmp_path):
    prog, _ = clean_files
    out = tmp_path / "out"
    rc = cli.main(["metrics", "--program", prog, "--out", str(out)])
    assert rc == 0
    metrics = (out / "metrics.tsv").read_text().splitlines()
    assert metrics[0] == "statement\tnesting\tcyclomatic\tvolume\ttokens\tloop"
    assert len(metrics) == 1 + 12
    fpl = (out / "fpl.tsv").read_text().splitlines()
    assert len(fpl) == 12
    for line in fpl:
        sid, value = line.split("\t")
        assert 0.0 <= float(value) <= 1.0
        assert 0 <= int(sid) < 12


def test_metrics_without_program_exits_2(tmp_path):
    assert cli.main(["metrics", "--out", str(tmp_path / "out")]) == 2


def test_spectrum_import_ranks_exported_spectrum(buggy_files, tmp_path, capsys):
    prog, suite = buggy_files
    first = tmp_path / "first"
    assert cli.main(["localize", "--program", prog, "--suite", suite,
                     "--out", str(first)]) == 0
    capsys.readouterr()
    out = tmp_path / "imported"
    rc = cli.main(["spectrum-import", "--spectrum", str(first / "spectrum.tsv"),
                   "--out", str(out)])
    assert rc == 0
    for name in ("ranking.tsv", "scores.png", "summary.txt"):
        assert (out / name).is_file(), name
    assert (out / "scores.png").read_bytes().startswith(PNG_MAGIC)
    assert "solver converged: True" in capsys.readouterr().out


def test_spectrum_import_without_spectrum_exits_2(tmp_path):
    assert cli.main(["spectrum-import", "--out", str(tmp_path / "out")]) == 2


def test_bench_writes_reports(clean_files, tmp_path):
    prog, suite = clean_files
    out = tmp_path / "out"
    rc = cli.main(["bench", "--program", prog, "--suite", suite,
                   "--versions", "2", "--out", str(out), "--seed", "3"])
    assert rc == 0
    for name in ("bench.tsv", "summary.tsv", "summary.txt", "imp.tsv",
                 "exam_curve.png"):
        assert (out / name).is_file(), name
    bench = (out / "bench.tsv").read_text()
    assert "ochiai" in bench and "ours" in bench
    # single-fault run without the ablation flag skips the optional outputs
    assert not (out / "expense.tsv").exists()
    assert not (out / "ablation.png").exists()


def test_bench_without_subjects_exits_2(tmp_path):
    assert cli.main(["bench", "--out", str(tmp_path / "out")]) == 2


def test_bench_mismatched_pairs_exits_2(clean_files, tmp_path):
    prog, suite = clean_files
    rc = cli.main(["bench", "--program", prog, "--suite", suite,
                   "--suite", suite, "--out", str(tmp_path / "out")])
    assert rc == 2
