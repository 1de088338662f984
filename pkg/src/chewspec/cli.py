import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import click
from tabulate import tabulate

from chewspec._version import __version__
from chewspec.config import PipelineConfig, load_config
from chewspec.constants import (
    CLI_HELP,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_RETRIEVAL_BUDGET,
    SOURCE_SUFFIXES,
)
from chewspec.diff.catalog import load_catalog
from chewspec.diff.differ import ValidationReport, diff_specs
from chewspec.diff.report import read_report, render_report, render_score, write_report
from chewspec.diff.scoring import score_extraction
from chewspec.errors import ChewspecError, PipelineError, SpecParseError
from chewspec.harness.build import build_module
from chewspec.harness.codegen import emit_python_module
from chewspec.harness.semantic import semantic_check
from chewspec.harness.workspace import Workspace
from chewspec.packets.corpus import write_corpus
from chewspec.packets.generator import generate_corpus
from chewspec.pfs.model import FormatSpec
from chewspec.pfs.parser import parse_spec
from chewspec.pipeline import (
    PipelineRun,
    codespec_stage,
    docspec_stage,
    isolate_stage,
    run_pipeline,
)
from chewspec.retrieval.index import closure_from_entry, index_repo
from chewspec.types import Verdict
from chewspec.utils import canonical_json, safe_write

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
EXIT_DISCREPANCIES = 2

INPUT_FILE = click.Path(exists=True, dir_okay=False, path_type=Path)
SEED_RANGE = click.IntRange(0, (1 << 64) - 1)

FORMAT_OPTION = click.option(
    "--format",
    "fmt",
    type=click.Choice(["json", "text"]),
    default="text",
    help=CLI_HELP["format"],
)
CONFIG_OPTION = click.option(
    "--config", "config_path", type=INPUT_FILE, required=True, help=CLI_HELP["config"]
)
REPLAY_OPTION = click.option(
    "--replay",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    help=CLI_HELP["replay"],
)
OUT_OPTION = click.option(
    "--out", type=click.Path(file_okay=False, path_type=Path), help=CLI_HELP["out"]
)
SEED_OPTION = click.option("--seed", type=SEED_RANGE, help=CLI_HELP["seed"])
FIXED_SEED_OPTION = click.option(
    "--seed", type=SEED_RANGE, default=0, show_default=True, help=CLI_HELP["seed"]
)
MODULES_OPTION = click.option(
    "--module", "modules", type=INPUT_FILE, multiple=True, required=True
)
CATALOG_OPTION = click.option(
    "--catalog", "catalog_path", type=INPUT_FILE, help=CLI_HELP["catalog"]
)


def _configure_logging(verbose: int) -> None:
    if verbose == 0:
        level = logging.WARNING
    else:
        level = logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def _fail(exc: Exception) -> click.ClickException:
    logger.error(f"❌ Error: {exc}")
    if isinstance(exc, SpecParseError):
        details = "\n".join(str(d) for d in exc.diagnostics)
        return click.ClickException(f"{exc}\n{details}")
    if isinstance(exc, PipelineError) and exc.manifest_path is not None:
        return click.ClickException(f"{exc}\nPartial artifacts: {exc.manifest_path}")
    return click.ClickException(str(exc))


def _load_spec(path: Path) -> FormatSpec:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


def _load_config(
    config_path: Path,
    replay: Optional[Path] = None,
    seed: Optional[int] = None,
    out: Optional[Path] = None,
) -> PipelineConfig:
    return load_config(config_path).with_overrides(replay=replay, seed=seed, out=out)


def _build(modules: Sequence[Path], options: Dict[str, Any]) -> Tuple[Workspace, Path]:
    """Stage and build module sources in a fresh workspace; the caller cleans it up."""
    ws = Workspace.create(**options)
    result = build_module(ws, list(modules))
    if not result.ok:
        ws.cleanup()
        raise click.ClickException(
            f"Module build failed:\n{result.diagnostics.strip()}"
        )
    return ws, result.executable  # type: ignore[return-value]


def _profile_for(modules: Sequence[Path]) -> str:
    suffixes = {m.suffix for m in modules}
    return "python" if suffixes <= set(SOURCE_SUFFIXES["python"]) else "c"


@click.group()
@click.version_option(__version__)
@click.option(
    "--verbose", "-v", count=True, help="Enable verbose output (-vv for debug)"
)
def cli(verbose: int):
    """Validate protocol parsers against the documents that specify them."""
    _configure_logging(verbose)


@cli.command(name="index")
@click.argument("repo", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option(
    "--language", type=click.Choice(["c", "python"]), default="c", show_default=True
)
@click.option("--entry", help="Also print the dependency closure of this function")
@click.option(
    "--budget",
    type=click.IntRange(1),
    default=DEFAULT_RETRIEVAL_BUDGET,
    show_default=True,
)
@OUT_OPTION
@FORMAT_OPTION
def index_cmd(
    repo: Path,
    language: str,
    entry: Optional[str],
    budget: int,
    out: Optional[Path],
    fmt: str,
):
    """Index the definitions of a source repository."""
    try:
        index = index_repo(repo, language)
        if entry:
            data = closure_from_entry(index, entry, budget).to_dict()
        else:
            data = index.to_dict()
        if out is not None:
            name = "bundle.json" if entry else "index.json"
            safe_write(out / name, canonical_json(data), overwrite=True)
        if fmt == "json":
            click.echo(canonical_json(data), nl=False)
            return
        if entry:
            rows = [
                [d["name"], d["kind"], f"{d['file']}:{d['line']}"]
                for d in data["entries"]
            ]
            headers = ["Definition", "Kind", "Location"]
            click.echo(tabulate(rows, headers=headers, tablefmt="github"))
            click.echo(f"\nExternal: {', '.join(data['external']) or '-'}")
        else:
            rows = [
                [name, len(defs), ", ".join(sorted({d.kind for d in defs}))]
                for name, defs in sorted(index.symbols.items())
            ]
            headers = ["Symbol", "Definitions", "Kinds"]
            click.echo(tabulate(rows, headers=headers, tablefmt="github"))
        click.echo(
            f"🔍 {index.definition_count} definitions in {len(index.files)} files"
        )
    except ChewspecError as e:
        raise _fail(e)


@cli.command()
@CONFIG_OPTION
@REPLAY_OPTION
@OUT_OPTION
def isolate(config_path: Path, replay: Optional[Path], out: Optional[Path]):
    """Isolate the entry function's parsing logic into a standalone module."""
    try:
        config = _load_config(config_path, replay=replay, out=out)
        run = PipelineRun.open(config)
        with Workspace.create(**config.harness.workspace_options()) as ws:
            result = isolate_stage(run, ws)
        sources = ", ".join(sorted(result.sources))
        click.echo(
            f"✅ Isolated {config.entry} in {result.attempts} attempt(s): {sources}"
        )
        click.echo(f"📦 Artifacts in {config.output_dir}/")
    except ChewspecError as e:
        raise _fail(e)


@cli.command(name="spec-from-code")
@CONFIG_OPTION
@MODULES_OPTION
@REPLAY_OPTION
@OUT_OPTION
def spec_from_code(
    config_path: Path,
    modules: Tuple[Path, ...],
    replay: Optional[Path],
    out: Optional[Path],
):
    """Extract a CodeSpec from isolated module sources, checked against the module."""
    try:
        config = _load_config(config_path, replay=replay, out=out)
        sources: Dict[str, str] = {
            f"src/{m.name}": m.read_text(encoding="utf-8") for m in modules
        }
        ws, executable = _build(modules, config.harness.workspace_options())
        try:
            run = PipelineRun.open(config)
            result = codespec_stage(run, sources, executable)
        finally:
            ws.cleanup()
        spec = result.spec
        click.echo(
            f"✅ CodeSpec '{spec.name}': {spec.field_count} fields "
            f"({result.report.summary()})"
        )
    except ChewspecError as e:
        raise _fail(e)


@cli.command(name="spec-from-doc")
@CONFIG_OPTION
@click.option("--document", type=INPUT_FILE)
@REPLAY_OPTION
@OUT_OPTION
def spec_from_doc(
    config_path: Path,
    document: Optional[Path],
    replay: Optional[Path],
    out: Optional[Path],
):
    """Extract a DocSpec from a standards document."""
    try:
        config = _load_config(config_path, replay=replay, out=out)
        run = PipelineRun.open(config)
        result = docspec_stage(run, document)
        found = sum(1 for f in result.fragments if f is not None)
        spec = result.spec
        click.echo(
            f"✅ DocSpec '{spec.name}': {spec.field_count} fields "
            f"from {found} of {len(result.chunks)} chunks"
        )
    except ChewspecError as e:
        raise _fail(e)


@cli.command(name="gen-tests")
@click.argument("spec_path", metavar="SPEC", type=INPUT_FILE)
@FIXED_SEED_OPTION
@click.option("--positives", type=click.IntRange(1), default=64, show_default=True)
@click.option(
    "--negatives-per-constraint", type=click.IntRange(0), default=1, show_default=True
)
@click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    default=DEFAULT_OUTPUT_DIR,
    help=CLI_HELP["out"],
)
@click.option(
    "--emit-module",
    is_flag=True,
    help="Also write a Python reference module for the spec",
)
def gen_tests(
    spec_path: Path,
    seed: int,
    positives: int,
    negatives_per_constraint: int,
    out: Path,
    emit_module: bool,
):
    """Generate positive and negative test packets for a spec."""
    try:
        spec = _load_spec(spec_path)
        packets = generate_corpus(spec, seed, positives, negatives_per_constraint)
        path = write_corpus(out / "corpus" / f"{spec.name}.jsonl", packets)
        negatives = sum(1 for p in packets if p.expectation == Verdict.REJECT)
        click.echo(
            f"✅ {len(packets) - negatives} positives and {negatives} negatives "
            f"in {path}"
        )
        if emit_module:
            module = safe_write(
                out / "module" / f"{spec.name}_module.py",
                emit_python_module(spec),
                overwrite=True,
            )
            click.echo(f"📦 Reference module: {module}")
    except ChewspecError as e:
        raise _fail(e)


@cli.command(name="run-harness")
@click.argument("spec_path", metavar="SPEC", type=INPUT_FILE)
@MODULES_OPTION
@click.option(
    "--profile",
    type=click.Choice(["c", "python"]),
    help="Build profile (default: from the source suffixes)",
)
@FIXED_SEED_OPTION
@click.option("--positives", type=click.IntRange(1), default=64, show_default=True)
@OUT_OPTION
@click.option("--trace", is_flag=True, help="Ask the module for CHECK trace lines")
def run_harness(
    spec_path: Path,
    modules: Tuple[Path, ...],
    profile: Optional[str],
    seed: int,
    positives: int,
    out: Optional[Path],
    trace: bool,
):
    """Run generated packets through a module and compare its verdicts with the spec."""
    try:
        spec = _load_spec(spec_path)
        options = {"profile": profile or _profile_for(modules)}
        ws, executable = _build(modules, options)
        try:
            report = semantic_check(
                spec, executable, seed=seed, n=positives, tracing=trace
            )
        finally:
            ws.cleanup()
        if out is not None:
            safe_write(
                out / "harness" / f"{spec.name}.json",
                canonical_json(report.to_dict()),
                overwrite=True,
            )
        mark = "✅" if report.clean else "❌"
        click.echo(f"{mark} {spec.name}: {report.summary()}")
        if not report.clean:
            click.echo(report.feedback(spec))
    except ChewspecError as e:
        raise _fail(e)


def _emit_report(
    report: ValidationReport,
    fmt: str,
    catalog_path: Optional[Path],
    out: Optional[Path],
) -> None:
    catalog = load_catalog(catalog_path) if catalog_path else None
    text = render_report(report, fmt, catalog)
    if out is not None:
        write_report(report, out / "report.json")
        text_report = render_report(report, "text", catalog)
        safe_write(out / "report.txt", text_report, overwrite=True)
    click.echo(text, nl=not text.endswith("\n"))


@cli.command(name="diff")
@click.argument("code_path", metavar="CODE_SPEC", type=INPUT_FILE)
@click.argument("doc_path", metavar="DOC_SPEC", type=INPUT_FILE)
@CATALOG_OPTION
@FIXED_SEED_OPTION
@OUT_OPTION
@FORMAT_OPTION
@click.pass_context
def diff_cmd(
    ctx: click.Context,
    code_path: Path,
    doc_path: Path,
    catalog_path: Optional[Path],
    seed: int,
    out: Optional[Path],
    fmt: str,
):
    """Report the discrepancies between a CodeSpec and a DocSpec."""
    try:
        report = diff_specs(_load_spec(code_path), _load_spec(doc_path), seed=seed)
        _emit_report(report, fmt, catalog_path, out)
    except ChewspecError as e:
        raise _fail(e)
    if not report.clean:
        ctx.exit(EXIT_DISCREPANCIES)


@cli.command()
@CONFIG_OPTION
@REPLAY_OPTION
@SEED_OPTION
@OUT_OPTION
@FORMAT_OPTION
@click.pass_context
def validate(
    ctx: click.Context,
    config_path: Path,
    replay: Optional[Path],
    seed: Optional[int],
    out: Optional[Path],
    fmt: str,
):
    """Run the whole pipeline: isolate, both specs, diff."""
    try:
        config = _load_config(config_path, replay=replay, seed=seed, out=out)
        report = run_pipeline(config)
        _emit_report(report, fmt, config.catalog, None)
    except ChewspecError as e:
        raise _fail(e)
    logger.info(f"Artifacts in {config.output_dir}")
    if not report.clean:
        ctx.exit(EXIT_DISCREPANCIES)


@cli.command()
@click.argument("report_path", metavar="REPORT_JSON", type=INPUT_FILE)
@CATALOG_OPTION
@FORMAT_OPTION
def report(report_path: Path, catalog_path: Optional[Path], fmt: str):
    """Re-render a JSON validation report."""
    try:
        loaded = read_report(report_path)
    except (ValueError, KeyError) as e:
        raise _fail(ValueError(f"Invalid report {report_path}: {e}"))
    try:
        _emit_report(loaded, fmt, catalog_path, None)
    except ChewspecError as e:
        raise _fail(e)


@cli.command()
@click.argument("extracted_path", metavar="EXTRACTED", type=INPUT_FILE)
@click.argument("truth_path", metavar="TRUTH", type=INPUT_FILE)
@FORMAT_OPTION
def score(extracted_path: Path, truth_path: Path, fmt: str):
    """Score an extracted spec against a ground-truth spec."""
    try:
        result = score_extraction(_load_spec(extracted_path), _load_spec(truth_path))
        text = render_score(result, fmt)
    except ChewspecError as e:
        raise _fail(e)
    click.echo(text, nl=not text.endswith("\n"))


if __name__ == "__main__":
    cli()
