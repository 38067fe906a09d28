import json

import pytest

from rftagid.config import RunConfig
from rftagid.errors import ValidationError
from rftagid.io import dumps_json, save_device_model
from rftagid.nonlin import DIODE_COEFFICIENTS, DeviceModel


def test_defaults_are_explicit_and_valid():
    cfg = RunConfig()
    assert cfg.master_seed == 0 and cfg.device_seeds == (1, 2)
    assert cfg.sim.snr_db == 30.0
    assert len(cfg.classifiers) == 7


def test_hash_ignores_output_dir_but_not_settings():
    a = RunConfig()
    assert a.config_hash() == RunConfig(out_dir="elsewhere").config_hash()
    assert a.config_hash() != a.override(master_seed=1).config_hash()
    assert a.config_hash() != a.override(snr_db=20.0).config_hash()


def test_override_routes_sim_keys():
    cfg = RunConfig().override(snr_db=12.0, perturb_fraction=0.1)
    assert cfg.sim.snr_db == 12.0 and cfg.perturb_fraction == 0.1


def test_yaml_and_json_load(tmp_path):
    (tmp_path / "c.yaml").write_text(
        "samples_per_position: 7\nclassifiers: [svm, rf]\nsim:\n  snr_db: 25\npositions:\n  large: [[30, 20], [40, 40]]\n"
    )
    cfg = RunConfig.load(tmp_path / "c.yaml")
    assert cfg.samples_per_position == 7
    assert cfg.classifiers == ("svm_linear", "random_forest")
    assert cfg.sim.snr_db == 25
    assert cfg.study_config().scenario_config("large").positions == ((30.0, 20.0), (40.0, 40.0))
    (tmp_path / "c.json").write_text(json.dumps({"master_seed": 3, "sim": {"tone_jitter_db": 0.0}}))
    cfg = RunConfig.load(tmp_path / "c.json")
    assert cfg.master_seed == 3 and cfg.sim.tone_jitter_db == 0.0


def test_roundtrip_through_dict():
    cfg = RunConfig(samples_per_position=9, positions={"small": [(30, 20)] * 5})
    again = RunConfig.from_dict(json.loads(dumps_json(cfg.to_dict())))
    assert again.config_hash() == cfg.config_hash()


@pytest.mark.parametrize(
    "data,match",
    [
        ({"colour": "red"}, "unknown config keys"),
        ({"sim": {"volume": 3}}, "unknown sim keys"),
        ({"sim": {"tone_freqs": [600000.0, 20500.0]}}, "Nyquist"),
        ({"n_averages": 0}, "n_averages"),
        ({"scenarios": ["static", "wobbly"]}, "unknown scenario"),
        ({"classifiers": ["deep_net"]}, "deep_net"),
        ({"positions": {"large": [[70, 20]]}}, "outside"),
        ({"device_files": ["missing.json"]}, "not found"),
        ({"data_dir": "nowhere"}, "not found"),
        ({"perturb_fraction": 1.5}, "perturb_fraction"),
    ],
)
def test_invalid_configs(tmp_path, data, match):
    with pytest.raises(ValidationError, match=match):
        RunConfig.from_dict(data, tmp_path)


def test_unparsable_file(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("a: [1, 2\n")
    with pytest.raises(ValidationError, match="cannot parse"):
        RunConfig.load(p)
    with pytest.raises(ValidationError, match="not found"):
        RunConfig.load(tmp_path / "absent.yaml")


def test_device_files_resolve_relative_to_config(tmp_path):
    save_device_model(DeviceModel(DIODE_COEFFICIENTS, "a"), tmp_path / "a.json")
    save_device_model(DeviceModel((0.0, 1.0, 0.0, -0.3), "b"), tmp_path / "b.json")
    (tmp_path / "c.yaml").write_text("device_files: [a.json, b.json]\n")
    cfg = RunConfig.load(tmp_path / "c.yaml")
    assert [d.device_id for d in cfg.study_config().device_models()] == ["a", "b"]
