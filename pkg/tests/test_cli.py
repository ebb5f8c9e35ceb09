"""Command-line surface: wiring, config resolution, and guard rails."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from leaklens.cli import main
from leaklens.config import ENV_VAR, ConfigError, load_config


@pytest.fixture
def runner():
    return CliRunner()


def _summary(output, stage):
    """Parse the `[stage] {...}` line out of possibly log-interleaved output."""
    for line in output.splitlines():
        if line.startswith(f"[{stage}] "):
            return json.loads(line.split("] ", 1)[1])
    raise AssertionError(f"no [{stage}] summary line in output:\n{output}")


def _write_config(tmp_path, **overrides):
    corpus = tmp_path / "messages.jsonl"
    if not corpus.exists():
        corpus.write_text(json.dumps({
            "gateway": "gw-1", "phone_number": "+15550001111",
            "received_at": "2026-01-05T08:00:00Z",
            "body": "Quote: https://svc.test/q/650124",
        }) + "\n")
    config = {"workspace": str(tmp_path / "ws"), "corpus": str(corpus)}
    config.update(overrides)
    path = tmp_path / "audit.json"
    path.write_text(json.dumps(config))
    return path


def test_help_lists_all_commands(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for command in ("ingest", "bundles", "extract", "screen", "triage",
                    "analyze", "report", "mock", "demo"):
        assert command in result.output


def test_missing_config_is_a_usage_error(runner, monkeypatch):
    monkeypatch.delenv(ENV_VAR, raising=False)
    result = runner.invoke(main, ["ingest"])
    assert result.exit_code == 2
    assert ENV_VAR in result.output


def test_nonexistent_config_path(runner, tmp_path):
    result = runner.invoke(main, ["--config", str(tmp_path / "nope.json"), "ingest"])
    assert result.exit_code == 2
    assert "not found" in result.output


def test_ingest_via_flag_and_env(runner, tmp_path, monkeypatch):
    config = _write_config(tmp_path)
    result = runner.invoke(main, ["--config", str(config), "ingest"])
    assert result.exit_code == 0, result.output
    summary = _summary(result.output, "ingest")
    assert summary["messages"] == 1
    assert summary["unique_urls"] == 1

    monkeypatch.setenv(ENV_VAR, str(config))
    via_env = runner.invoke(main, ["ingest"])
    assert via_env.exit_code == 0, via_env.output
    assert _summary(via_env.output, "ingest") == summary


def test_bundles_group_runs_stage_without_subcommand(runner, tmp_path):
    config = _write_config(tmp_path, bundle_dirs=[])
    result = runner.invoke(main, ["--config", str(config), "bundles"])
    assert result.exit_code == 0, result.output
    assert _summary(result.output, "bundles")["ingested"] == 0


def test_bundles_dedup_subcommand(runner, tmp_path):
    config = _write_config(tmp_path)
    result = runner.invoke(main, ["--config", str(config), "bundles", "dedup"])
    assert result.exit_code == 0, result.output
    assert _summary(result.output, "dedup") == {
        "retained": 0, "ui_duplicates": 0, "warnings": []}


def test_analyze_requires_a_validated_set(runner, tmp_path):
    config = _write_config(tmp_path)
    result = runner.invoke(main, ["--config", str(config), "analyze"])
    assert result.exit_code == 1
    assert "no validated set" in result.output


@pytest.mark.parametrize("command", [["triage", "serve"], ["mock", "serve"]])
def test_serve_refuses_non_loopback_hosts(runner, tmp_path, command):
    config = _write_config(tmp_path, mock={"space_size": 10})
    result = runner.invoke(
        main, ["--config", str(config), *command, "--host", "0.0.0.0"])
    assert result.exit_code == 2
    assert "loopback-only" in result.output


def test_mock_serve_requires_a_space(runner, tmp_path):
    config = _write_config(tmp_path)
    result = runner.invoke(
        main, ["--config", str(config), "mock", "serve", "--host", "10.0.0.8"])
    # The host guard fires before anything binds, even with no space configured.
    assert result.exit_code == 2
    assert "loopback-only" in result.output
    no_space = runner.invoke(main, ["--config", str(config), "mock", "serve",
                                    "--port", "0"])
    assert no_space.exit_code == 2
    assert "mock.space_size" in no_space.output


# ------------------------------------------------------------
# Config loading
# ------------------------------------------------------------


def test_load_config_defaults(tmp_path):
    path = _write_config(tmp_path)
    config = load_config(path)
    assert config.workspace == tmp_path / "ws"
    assert config.fuzzy_accept == 0.82
    assert config.chunk_size == 50_000
    assert config.enumeration_seed == 1337
    assert config.adapter == {"type": "rule_based"}


def test_load_config_relative_paths_resolve_against_config_dir(tmp_path):
    path = tmp_path / "audit.json"
    path.write_text(json.dumps({"workspace": "ws", "corpus": "messages.jsonl"}))
    config = load_config(path)
    assert config.workspace == tmp_path / "ws"
    assert config.corpus_path == tmp_path / "messages.jsonl"


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "audit.json"
    path.write_text(json.dumps({"workspace": "ws", "wrokspace": "typo"}))
    with pytest.raises(ConfigError, match="unknown config keys: wrokspace"):
        load_config(path)


def test_load_config_requires_workspace(tmp_path):
    path = tmp_path / "audit.json"
    path.write_text(json.dumps({"corpus": "messages.jsonl"}))
    with pytest.raises(ConfigError, match="workspace"):
        load_config(path)


def test_load_config_rejects_invalid_json(tmp_path):
    path = tmp_path / "audit.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(path)
