"""Tests for the typer command line."""

import json
import sys

import pytest
from loguru import logger
from typer.testing import CliRunner

from qres import __version__
from qres.cli.commands import app

runner = CliRunner()


@pytest.fixture(autouse=True)
def restore_logging():
    yield
    # the callback binds loguru to the runner's captured stderr
    logger.remove()
    logger.add(sys.stderr, level="WARNING")


def _error(result) -> dict:
    return json.loads(result.stdout.strip().splitlines()[-1])


def test_version():
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert f"qres v{__version__}" in result.stdout


def test_capacity_sweep_writes_files(tmp_path):
    result = runner.invoke(
        app,
        ["capacity-sweep", "--family", "bsc:0.4", "--sweep-step", "0.25", "--output", str(tmp_path)],
    )
    assert result.exit_code == 0
    assert (tmp_path / "capacity-sweep.csv").exists()
    assert (tmp_path / "maximizers.csv").exists()
    assert (tmp_path / "spec.json").exists()


def test_spec_file_with_flag_override(tmp_path):
    spec = tmp_path / "gain.json"
    spec.write_text(json.dumps({"command": "gain", "family": "bsc:0.2", "n": [100], "epsGrid": [0.1]}))
    out = tmp_path / "out"
    result = runner.invoke(app, ["run", "--spec", str(spec), "--output", str(out)])
    assert result.exit_code == 0
    saved = json.loads((out / "spec.json").read_text())
    assert saved["output"] == str(out)
    assert saved["epsGrid"] == [0.1]


def test_spec_without_family_is_rejected(tmp_path):
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps({"command": "gain"}))
    result = runner.invoke(app, ["run", "--spec", str(spec), "--output", str(tmp_path)])
    assert result.exit_code == 2
    error = _error(result)
    assert error["error"] == "validation_error"
    assert any(d["loc"] == "family" for d in error["details"])


def test_bad_range_is_rejected(tmp_path):
    result = runner.invoke(app, ["gain", "--family", "bsc:0.4", "--n", "a:b", "--output", str(tmp_path)])
    assert result.exit_code == 2
    assert _error(result)["error"] == "invalid_parameter"


def test_unknown_family_is_rejected(tmp_path):
    result = runner.invoke(app, ["gain", "--family", "awgn:1", "--n", "10", "--output", str(tmp_path)])
    assert result.exit_code == 2
    assert _error(result)["error"] == "invalid_parameter"


def test_berry_esseen_succeeds(tmp_path):
    result = runner.invoke(
        app, ["berry-esseen", "--family", "bsc:0.4", "--n", "10", "--output", str(tmp_path)]
    )
    assert result.exit_code == 0
