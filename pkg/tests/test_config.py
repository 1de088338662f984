from pathlib import Path

import pytest
from pydantic import ValidationError

from chewspec.config import BackendConfig, HarnessConfig, PipelineConfig, load_config
from chewspec.corpus import BFD
from chewspec.errors import ConfigError


def test_config_defaults():
    config = PipelineConfig()
    assert config.name == "protocol"
    assert config.language == "c"
    assert config.output_dir == Path("chewspec-out")
    assert config.backend is None
    assert config.budgets.isolation == 8
    assert config.generation.positives == 64
    assert config.harness.command()[0] == "cc"


def test_config_validation():
    """Invalid values are rejected by the models"""
    with pytest.raises(ValueError):
        PipelineConfig(name="not a name")

    with pytest.raises(ValueError):
        PipelineConfig(language="rust")

    with pytest.raises(ValueError):
        PipelineConfig(entry="   ")

    with pytest.raises(ValueError):
        PipelineConfig(unknown_key=1)


def test_harness_build_command():
    command = "gcc -O2 -o {output} {sources}"
    harness = HarnessConfig(profile="custom", build_command=command)
    assert harness.command() == ["gcc", "-O2", "-o", "{output}", "{sources}"]
    assert harness.workspace_options()["build_command"] == harness.command()

    with pytest.raises(ValidationError, match="must contain"):
        HarnessConfig(build_command="gcc main.c")

    with pytest.raises(ValidationError, match="requires harness.build_command"):
        HarnessConfig(profile="custom")


def test_replay_backend_needs_transcripts():
    with pytest.raises(ValidationError, match="backend.transcripts"):
        BackendConfig(mode="replay")


def test_live_backend_reads_credentials(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("CHEWSPEC_API_KEY", raising=False)
    with pytest.raises(ValidationError, match="CHEWSPEC_API_KEY"):
        BackendConfig(mode="live", endpoint="https://llm.example/v1/chat/completions")

    monkeypatch.setenv("CHEWSPEC_API_KEY", "sk-test")
    endpoint = "https://llm.example/v1/chat/completions"
    backend = BackendConfig(mode="live", endpoint=endpoint, model="m")
    assert backend.mode == "live"


def test_load_standalone_config_resolves_inputs(tmp_path):
    config_file = tmp_path / "proto" / "chewspec.toml"
    config_file.parent.mkdir()
    config_file.write_text(
        """
        name = "demo"
        repo = "src"
        entry = "parse"
        document = "rfc/demo.txt"
        output_dir = "out"

        [backend]
        transcripts = "transcripts"

        [generation]
        seed = 9
        """
    )
    config = load_config(config_file)
    base = config_file.parent.resolve()
    assert config.repo == base / "src"
    assert config.document == base / "rfc" / "demo.txt"
    assert config.backend.transcripts == base / "transcripts"
    assert config.output_dir == Path("out")
    assert config.generation.seed == 9


def test_load_pyproject_table(tmp_path):
    pyproject = tmp_path / "pyproject.toml"
    pyproject.write_text('[tool.chewspec]\nname = "demo"\nentry = "parse"\n')
    config = load_config(pyproject)
    assert config.entry == "parse"


def test_pyproject_without_table(tmp_path):
    pyproject = tmp_path / "pyproject.toml"
    pyproject.write_text('[project]\nname = "x"\n')
    with pytest.raises(ConfigError, match="No \\[tool.chewspec\\] table"):
        load_config(pyproject)


def test_load_invalid_config(tmp_path):
    bad_config = tmp_path / "chewspec.toml"
    bad_config.write_text("invalid_key = 42\n")
    with pytest.raises(ConfigError, match="Invalid configuration"):
        load_config(bad_config)

    bad_config.write_text("name = [\n")
    with pytest.raises(ConfigError, match="Invalid TOML"):
        load_config(bad_config)

    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.toml")


def test_bundled_corpus_config():
    config = load_config(BFD.root / "chewspec.toml")
    assert config.repo == BFD.repo.resolve()
    assert config.entry == "bfd_recv_cb"
    assert config.backend.mode == "replay"
    assert config.catalog.is_file()


def test_with_overrides(tmp_path):
    config = PipelineConfig(name="demo")
    changed = config.with_overrides(replay=tmp_path, seed=5, out=tmp_path / "out")
    assert changed.backend.mode == "replay"
    assert changed.backend.transcripts == tmp_path
    assert changed.generation.seed == 5
    assert changed.output_dir == tmp_path / "out"
    assert config.generation.seed == 0


def test_require():
    config = PipelineConfig(entry="parse")
    config.require("entry")
    with pytest.raises(ConfigError, match="repo, document"):
        config.require("repo", "entry", "document")
