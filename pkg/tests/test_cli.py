import json
from unittest.mock import patch

import pytest
from click.testing import CliRunner

from chewspec._version import __version__
from chewspec.cli import cli
from chewspec.corpus import BFD, bfd_code_spec, bfd_doc_spec
from chewspec.diff import diff_specs
from tests.conftest import SPEC_DIR

CODE = str(BFD.spec_path("bfd_code"))
DOC = str(BFD.spec_path("bfd_doc"))
CONFIG = str(BFD.root / "chewspec.toml")


@pytest.fixture
def runner():
    return CliRunner()


def python_config(tmp_path):
    """The bundled corpus config with absolute paths and the python build profile."""
    path = tmp_path / "chewspec.toml"
    path.write_text(
        f"""
name = "bfd"
repo = "{BFD.repo.as_posix()}"
entry = "bfd_recv_cb"
document = "{BFD.rfc.as_posix()}"
catalog = "{BFD.catalog.as_posix()}"

[backend]
transcripts = "{BFD.transcripts.as_posix()}"

[generation]
positives = 16
negatives_per_constraint = 2

[harness]
profile = "python"
"""
    )
    return path


def test_cli_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_diff_reports_discrepancies(runner):
    result = runner.invoke(cli, ["diff", CODE, DOC, "--catalog", str(BFD.catalog)])
    assert result.exit_code == 2
    assert "# Validation report: bfd_code (code) vs bfd_doc (doc)" in result.output
    assert "Catalog coverage: 9/9" in result.output


def test_diff_identical_specs(runner):
    result = runner.invoke(cli, ["diff", CODE, CODE])
    assert result.exit_code == 0
    assert "No discrepancies." in result.output


def test_diff_writes_report_files(runner, tmp_path):
    args = ["diff", CODE, DOC, "--format", "json", "--out", str(tmp_path)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 2
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["summary"]["total"] == 10
    assert (tmp_path / "report.txt").read_text().startswith("# Validation report")


def test_diff_rejects_invalid_spec(runner):
    result = runner.invoke(cli, ["diff", str(SPEC_DIR / "bad_operator.pfs"), DOC])
    assert result.exit_code == 1
    assert "unknown-operator" in result.output


def test_report_rerenders(runner, tmp_path):
    runner.invoke(cli, ["diff", CODE, DOC, "--out", str(tmp_path)])
    args = ["report", str(tmp_path / "report.json"), "--catalog", str(BFD.catalog)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0
    assert "## R1 (rfc, new): Detect Mult should not be 0 [covered]" in result.output


def test_report_rejects_garbage(runner, tmp_path):
    bad = tmp_path / "report.json"
    bad.write_text('{"schema_version": 1}')
    result = runner.invoke(cli, ["report", str(bad)])
    assert result.exit_code == 1
    assert "Invalid report" in result.output


def test_score(runner):
    result = runner.invoke(cli, ["score", CODE, DOC])
    assert result.exit_code == 0
    assert result.output.startswith("# Extraction score: bfd_code vs bfd_doc")


def test_gen_tests_and_run_harness(runner, tmp_path):
    spec = str(SPEC_DIR / "tagged.pfs")
    result = runner.invoke(
        cli,
        [
            "gen-tests",
            spec,
            "--seed",
            "4",
            "--positives",
            "8",
            "--out",
            str(tmp_path),
            "--emit-module",
        ],
    )
    assert result.exit_code == 0
    assert "8 positives" in result.output
    corpus = tmp_path / "corpus" / "tagged.jsonl"
    assert len(corpus.read_text().splitlines()) > 8
    module = tmp_path / "module" / "tagged_module.py"
    assert module.is_file()

    args = ["run-harness", spec, "--module", str(module), "--positives", "8", "--trace"]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0
    assert "✅ tagged" in result.output


def test_run_harness_reports_mismatches(runner, tmp_path):
    pair = str(SPEC_DIR / "pair.pfs")
    runner.invoke(cli, ["gen-tests", pair, "--out", str(tmp_path), "--emit-module"])
    module = tmp_path / "module" / "pair_module.py"
    tagged = str(SPEC_DIR / "tagged.pfs")
    args = ["run-harness", tagged, "--module", str(module), "--positives", "8"]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0
    assert "❌ tagged" in result.output


def test_index_with_entry(runner, tmp_path):
    args = ["index", str(BFD.repo), "--entry", "bfd_recv_cb", "--out", str(tmp_path)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0
    assert "bfd_recv_cb" in result.output
    assert "definitions in 5 files" in result.output
    bundle = json.loads((tmp_path / "bundle.json").read_text())
    assert bundle["entry"] == "bfd_recv_cb"


def test_index_unknown_entry(runner):
    result = runner.invoke(cli, ["index", str(BFD.repo), "--entry", "nope"])
    assert result.exit_code == 1
    assert "Entry function 'nope' not found" in result.output


def test_spec_from_doc(runner, tmp_path):
    args = ["spec-from-doc", "--config", CONFIG, "--out", str(tmp_path)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.output
    assert "DocSpec 'bfd_doc': 36 fields from 4 of 7 chunks" in result.output
    assert (tmp_path / "specs" / "bfd_doc.pfs").is_file()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["stages"]["spec-from-doc"]["status"] == "done"


def test_spec_from_code_with_python_module(runner, tmp_path):
    module = tmp_path / "bfd_code_module.py"
    gen = tmp_path / "gen"
    runner.invoke(cli, ["gen-tests", CODE, "--out", str(gen), "--emit-module"])
    module.write_text((gen / "module" / "bfd_code_module.py").read_text())
    out = tmp_path / "out"
    args = [
        "spec-from-code",
        "--config",
        str(python_config(tmp_path)),
        "--module",
        str(module),
        "--out",
        str(out),
    ]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.output
    assert "CodeSpec 'bfd_code': 11 fields" in result.output
    assert (out / "corpus" / "bfd_code.jsonl").is_file()
    assert (out / "transcripts" / "codespec.jsonl").is_file()


def test_validate_exit_code_follows_report(runner, tmp_path):
    report = diff_specs(bfd_code_spec(), bfd_doc_spec())
    with patch("chewspec.cli.run_pipeline", return_value=report) as mock_run:
        args = ["validate", "--config", CONFIG, "--out", str(tmp_path), "--seed", "3"]
        result = runner.invoke(cli, args)
    assert result.exit_code == 2
    config = mock_run.call_args.args[0]
    assert config.generation.seed == 3
    assert config.output_dir == tmp_path
    assert "Catalog coverage: 9/9" in result.output


def test_validate_without_entry(runner, tmp_path):
    config = tmp_path / "chewspec.toml"
    text = python_config(tmp_path).read_text()
    config.write_text(text.replace('entry = "bfd_recv_cb"\n', ""))
    args = ["validate", "--config", str(config), "--out", str(tmp_path / "out")]
    result = runner.invoke(cli, args)
    assert result.exit_code == 1
    assert "Stage 'isolate' failed" in result.output
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["stages"]["isolate"]["status"] == "failed"


def test_missing_arguments(runner):
    result = runner.invoke(cli, ["diff", CODE])
    assert result.exit_code != 0
    assert "Missing argument 'DOC_SPEC'" in result.output


@pytest.mark.needs_cc
def test_validate_end_to_end(runner, tmp_path):
    args = ["validate", "--config", CONFIG, "--out", str(tmp_path)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 2, result.output
    assert "Catalog coverage: 9/9" in result.output
    for relative in (
        "module/src/bfd_module.c",
        "specs/bfd_code.pfs",
        "specs/bfd_doc.pfs",
        "report.json",
        "audit.jsonl",
    ):
        assert (tmp_path / relative).is_file(), relative
