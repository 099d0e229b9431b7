import pytest

from asal.config import ConfigError, resolve_config


def test_presets_fill_substrate_constants():
    cfg = resolve_config({"substrate": "lifelike_ca"}, preset="desk")
    assert cfg.substrate_params["grid_size"] == 32
    assert cfg.total_steps == 128
    assert cfg.embedder == "pixel"

    cfg = resolve_config({"substrate": "lifelike_ca"}, preset="paper")
    assert cfg.substrate_params["grid_size"] == 64
    assert cfg.total_steps == 2048
    assert cfg.enumeration.seeds == 256
    assert cfg.embedder == "fm"


def test_file_overrides_preset_and_cli_overrides_file():
    data = {"substrate": "lenia", "total_steps": 48, "seed": 5}
    cfg = resolve_config(data, preset="desk", overrides={"seed": 9})
    assert cfg.total_steps == 48
    assert cfg.seed == 9


def test_unknown_fields_are_rejected_with_paths():
    with pytest.raises(ConfigError) as err:
        resolve_config({"optimizer": {"popsize": 3}})
    assert "optimizer.popsize" in str(err.value)

    with pytest.raises(ConfigError) as err:
        resolve_config({"banana": 1})
    assert "banana" in str(err.value)


def test_target_requires_prompt_or_image():
    with pytest.raises(ConfigError) as err:
        resolve_config({"substrate": "lenia"}, command="target")
    assert "prompts" in str(err.value)


def test_target_with_prompt_needs_text_backend():
    with pytest.raises(ConfigError) as err:
        resolve_config(
            {"substrate": "lenia", "prompts": ["a cell"], "embedder": "pixel"},
            command="target",
        )
    assert "embedder" in str(err.value)


def test_enumerate_requires_ca_substrate():
    with pytest.raises(ConfigError) as err:
        resolve_config({"substrate": "boids"}, command="enumerate")
    assert "substrate" in str(err.value)


def test_quantify_validation():
    with pytest.raises(ConfigError) as err:
        resolve_config(
            {"substrate": "lenia", "quantify": {"analysis": "interpolate"}},
            command="quantify",
        )
    assert "theta_a" in str(err.value)

    with pytest.raises(ConfigError):
        resolve_config(
            {"substrate": "lenia", "quantify": {"analysis": "nonsense"}},
            command="quantify",
        )

    with pytest.raises(ConfigError) as err:
        resolve_config(
            {"substrate": "boids", "quantify": {"analysis": "population", "counts": [10]}},
            command="quantify",
        )
    assert "population" in str(err.value)


def test_atlas_requires_archive():
    with pytest.raises(ConfigError) as err:
        resolve_config({"substrate": "boids"}, command="atlas")
    assert "atlas.archive_file" in str(err.value)


def test_bad_numbers_flagged():
    with pytest.raises(ConfigError) as err:
        resolve_config({"optimizer": {"sigma0": -1.0}})
    assert "optimizer.sigma0" in str(err.value)
    with pytest.raises(ConfigError):
        resolve_config({"workers": 0})
    with pytest.raises(ConfigError):
        resolve_config({"embedder": "resnet"})


def test_config_round_trips_to_json():
    import json

    cfg = resolve_config({"substrate": "boids"}, preset="desk")
    data = json.loads(cfg.to_json())
    cfg2 = resolve_config(data)
    assert cfg2.to_json() == cfg.to_json()
