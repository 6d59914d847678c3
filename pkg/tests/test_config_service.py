import json

import pytest

from back_end.services.config_service.config_service import ConfigService
from back_end.vlc_core.shared.common import REFERENCE_DEFAULTS
from back_end.vlc_core.shared.errors import ConfigError


@pytest.fixture
def config_service():
    return ConfigService()


def test_load_toml(config_service, tiny_config_path):
    raw = config_service.load_config(tiny_config_path)
    assert raw["scene"]["led_grid"] == [2, 1]
    assert raw["experiment"]["random_seeds"] == 2


def test_load_json(config_service, tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"signal": {"n_streams": 2}}))
    assert config_service.load_config(str(path)) == {"signal": {"n_streams": 2}}


def test_unsupported_format(config_service, tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("signal: {}")
    with pytest.raises(ConfigError, match="Unsupported config format"):
        config_service.load_config(str(path))


def test_resolve_fills_defaults(config_service):
    resolved = config_service.resolve_config({"signal": {"n_streams": 2}})
    assert resolved["signal"]["n_streams"] == 2
    assert resolved["signal"]["sigma_w2"] == REFERENCE_DEFAULTS["signal"]["sigma_w2"]
    assert resolved["budget"] == REFERENCE_DEFAULTS["budget"]
    assert REFERENCE_DEFAULTS["signal"]["n_streams"] == 4


def test_resolve_applies_overrides(config_service):
    resolved = config_service.resolve_config({}, {("experiment", "seed"): 42, ("solver", "tolerance"): None})
    assert resolved["experiment"]["seed"] == 42
    assert resolved["solver"]["tolerance"] == REFERENCE_DEFAULTS["solver"]["tolerance"]


def test_resolve_keeps_new_sections(config_service):
    resolved = config_service.resolve_config({"sweep": {"axis": "snr", "values": [0, 10]}})
    assert resolved["sweep"] == {"axis": "snr", "values": [0, 10]}


def test_config_hash(config_service):
    first = config_service.resolve_config({"signal": {"n_streams": 2}})
    again = config_service.resolve_config({"signal": {"n_streams": 2}})
    other = config_service.resolve_config({"signal": {"n_streams": 2}}, {("experiment", "seed"): 1})
    assert config_service.config_hash(first) == config_service.config_hash(again)
    assert config_service.config_hash(first) != config_service.config_hash(other)
    assert len(config_service.config_hash(first)) == 64
