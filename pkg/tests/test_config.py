"""Tests for experiment specs, settings and spec files."""

import json
import os

import pytest
from pydantic import ValidationError

from qres.asymptotics import ThirdOrder
from qres.config import Command, ExperimentSpec, Settings, Units, load_spec, resolve_spec, save_spec
from qres.config.loader import camel_to_snake, snake_to_camel
from qres.errors import InvalidParameterError


@pytest.fixture
def clean_env(monkeypatch):
    for key in list(os.environ):
        if key.startswith("QRES_"):
            monkeypatch.delenv(key)
    return monkeypatch


class TestExperimentSpec:
    """Validation and command-dependent defaults."""

    def test_third_order_defaults(self):
        assert ExperimentSpec(command="bounds", family="bsc:0.4").third_order is ThirdOrder.MINUS_HALF_LOG
        assert ExperimentSpec(command="sim-multitarget", family="bsc:0.4").third_order is ThirdOrder.MINUS_HALF_LOG
        assert ExperimentSpec(command="rate-compare", family="bsc:0.4").third_order is ThirdOrder.NONE

    def test_explicit_third_order_wins(self):
        spec = ExperimentSpec(command="bounds", family="bsc:0.4", third_order="plusLog")
        assert spec.third_order is ThirdOrder.PLUS_LOG

    def test_defaults(self):
        spec = ExperimentSpec(command="gain", family="bec:0.3")
        assert spec.command is Command.GAIN
        assert spec.units is Units.NATS
        assert spec.eps == 0.1
        assert spec.d == 1

    def test_unknown_field(self):
        with pytest.raises(ValidationError):
            ExperimentSpec(command="gain", family="bsc:0.4", colour="red")

    def test_unknown_command(self):
        with pytest.raises(ValidationError):
            ExperimentSpec(command="plot", family="bsc:0.4")

    def test_ranges(self):
        with pytest.raises(ValidationError):
            ExperimentSpec(command="gain", family="bsc:0.4", eps=1.0)
        with pytest.raises(ValidationError):
            ExperimentSpec(command="gain", family="bsc:0.4", grid_step=0.01)
        with pytest.raises(ValidationError):
            ExperimentSpec(command="gain", family="bsc:0.4", eps_grid=[0.0, 0.5])
        with pytest.raises(ValidationError):
            ExperimentSpec(command="gain", family="bsc:0.4", n=[10, 0])
        with pytest.raises(ValidationError):
            ExperimentSpec(command="gain", family="bsc:0.4", m=1)


class TestSpecFiles:
    """JSON spec files with camelCase keys."""

    def test_case_conversion(self):
        assert camel_to_snake("thirdOrder") == "third_order"
        assert camel_to_snake("M") == "m"
        assert snake_to_camel("eps_grid") == "epsGrid"
        assert snake_to_camel("exact_c1") == "exactC1"

    def test_load_camel_case(self, tmp_path, clean_env):
        path = tmp_path / "spec.json"
        path.write_text(
            json.dumps(
                {
                    "command": "rate-compare",
                    "family": "bsc:0.4",
                    "epsGrid": [0.1, 0.2],
                    "thirdOrder": "plusLog",
                    "M": 16,
                }
            )
        )
        data = load_spec(path)
        assert data["eps_grid"] == [0.1, 0.2]
        spec = resolve_spec(data, settings=Settings())
        assert spec.third_order is ThirdOrder.PLUS_LOG
        assert spec.m == 16

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidParameterError):
            load_spec(tmp_path / "absent.json")

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{command: gain")
        with pytest.raises(InvalidParameterError):
            load_spec(path)

    def test_json_must_be_an_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(InvalidParameterError):
            load_spec(path)

    def test_save_and_reload(self, tmp_path, clean_env):
        spec = resolve_spec({"command": "sim-adaptive", "family": "z:0.3", "n": [20, 40]})
        path = tmp_path / "out" / "spec.json"
        save_spec(spec, path)
        raw = json.loads(path.read_text())
        assert raw["thirdOrder"] == "none"
        assert raw["maxSteps"] == spec.max_steps
        assert resolve_spec(load_spec(path)) == spec


class TestPrecedence:
    """CLI flags > file > environment > defaults."""

    def test_seed_precedence(self, clean_env):
        clean_env.setenv("QRES_SEED", "5")
        base = {"command": "gain", "family": "bsc:0.4"}
        assert resolve_spec(dict(base)).seed == 5
        assert resolve_spec(dict(base, seed=7)).seed == 7
        assert resolve_spec(dict(base, seed=7), {"seed": 9}).seed == 9

    def test_seed_defaults_to_zero(self, clean_env):
        assert resolve_spec({"command": "gain", "family": "bsc:0.4"}).seed == 0

    def test_none_overrides_are_ignored(self, clean_env):
        spec = resolve_spec({"command": "gain", "family": "bsc:0.4", "eps": 0.2}, {"eps": None})
        assert spec.eps == 0.2

    def test_threads_from_environment(self, clean_env):
        clean_env.setenv("QRES_THREADS", "3")
        assert resolve_spec({"command": "gain", "family": "bsc:0.4"}).threads == 3

    def test_default_output_directory(self, tmp_path, clean_env):
        settings = Settings(output_dir=str(tmp_path))
        spec = resolve_spec({"command": "gain", "family": "bsc:0.4"}, settings=settings)
        assert spec.output == str(tmp_path / "gain")

    def test_explicit_output_is_kept(self, tmp_path, clean_env):
        spec = resolve_spec({"command": "gain", "family": "bsc:0.4"}, {"output": str(tmp_path)})
        assert spec.output == str(tmp_path)
