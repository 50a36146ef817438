"""Config file parsing and validation."""

from __future__ import annotations

import pytest

from sdgcn.config import RunConfig, config_hash, config_lines, load_config, parse_config
from sdgcn.errors import ConfigError


def test_defaults_match_training_regime():
    c = RunConfig()
    assert c.batch_size == 32
    assert c.learning_rate == pytest.approx(0.001)
    assert c.d_emb == 300 and c.d_hid == 300
    assert c.num_layers == 2
    assert c.dropout == 0.5
    assert c.lam == 0.01
    assert c.topology == "global"


def test_parse_overrides_and_comments():
    c = parse_config(
        """
        # model size
        d_hid = 16
        topology=adjacent
        use_gcn = false
        epochs=3
        learning_rate=0.01
        """
    )
    assert c.d_hid == 16
    assert c.topology == "adjacent"
    assert c.use_gcn is False
    assert c.epochs == 3
    assert c.learning_rate == pytest.approx(0.01)


@pytest.mark.parametrize("raw,value", [("true", True), ("1", True), ("ON", True), ("false", False), ("no", False)])
def test_bool_spellings(raw, value):
    assert parse_config(f"use_position={raw}").use_position is value


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config("hidden_size=300")
    assert "unknown key" in str(err.value)


def test_bad_values_rejected():
    with pytest.raises(ConfigError):
        parse_config("epochs=three")
    with pytest.raises(ConfigError):
        parse_config("use_gcn=maybe")
    with pytest.raises(ConfigError):
        parse_config("just a line")


@pytest.mark.parametrize(
    "line",
    [
        "topology=ring",
        "num_layers=0",
        "num_layers=9",
        "dropout=1.0",
        "lam=-0.5",
        "batch_size=0",
        "learning_rate=-1",
        "d_hid=0",
    ],
)
def test_invariant_violations_rejected(line):
    with pytest.raises(ConfigError):
        parse_config(line)


def test_overrides_win():
    c = parse_config("epochs=10", overrides={"epochs": 2, "seed": "7"})
    assert c.epochs == 2 and c.seed == 7
    with pytest.raises(ConfigError):
        parse_config("", overrides={"bogus": 1})


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


def test_config_hash_tracks_content(tmp_path):
    a = RunConfig()
    b = RunConfig(seed=2)
    assert config_hash(a) == config_hash(RunConfig())
    assert config_hash(a) != config_hash(b)
    assert len(config_hash(a)) == 16
    assert "seed=1" in config_lines(a)
