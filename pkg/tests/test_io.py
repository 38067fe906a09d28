import json

import numpy as np
import pytest

from conftest import make_dataset
from rftagid.errors import ValidationError
from rftagid.io import (
    csv_text,
    dataset_csv,
    dataset_header,
    dumps_json,
    load_device_model,
    read_dataset_csv,
    save_device_model,
    sha256_file,
    spectrum_csv,
    write_atomic,
)
from rftagid.nonlin import DIODE_COEFFICIENTS, DeviceModel
from rftagid.synth import Spectrum


def test_write_atomic_creates_parents_and_leaves_no_temp(tmp_path):
    p = write_atomic(tmp_path / "a" / "b.txt", "hello\n")
    assert p.read_text() == "hello\n"
    assert sorted(x.name for x in p.parent.iterdir()) == ["b.txt"]
    assert len(sha256_file(p)) == 64


def test_csv_uses_lf_and_round_trip_floats():
    text = csv_text(("x", "y"), [(0.1, 1), (1 / 3, True)])
    assert "\r" not in text
    lines = text.splitlines()
    assert float(lines[2].split(",")[0]) == 1 / 3


def test_json_is_canonical():
    assert dumps_json({"b": 1, "a": [1, 2]}) == dumps_json({"a": [1, 2], "b": 1})


def test_device_model_file_roundtrip(tmp_path):
    m = DeviceModel(DIODE_COEFFICIENTS, "tag7")
    save_device_model(m, tmp_path / "d.json")
    assert load_device_model(tmp_path / "d.json") == m
    doc = json.loads((tmp_path / "d.json").read_text())
    assert set(doc) == {"device_id", "coefficients"}


def test_dataset_csv_roundtrip(tmp_path):
    X = np.random.default_rng(0).normal(size=(6, 4))
    ds = make_dataset(X, [0, 0, 0, 1, 1, 1], scenario="large")
    text = dataset_csv(ds)
    assert text.splitlines()[0].split(",") == dataset_header(4)
    (tmp_path / "d.csv").write_text(text)
    back = read_dataset_csv(tmp_path / "d.csv", ["tag0", "tag1"])
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.truth, ds.truth)
    assert list(back.scenario) == ["large"] * 6


def test_dataset_csv_rejects_unknown_device(tmp_path):
    ds = make_dataset(np.zeros((2, 4)), [0, 1])
    (tmp_path / "d.csv").write_text(dataset_csv(ds))
    with pytest.raises(ValidationError, match="unknown device"):
        read_dataset_csv(tmp_path / "d.csv", ["tag0"])


def test_spectrum_csv_schema():
    spec = Spectrum(np.array([-10.0, -20.0, -30.0]), np.array([0.0, 1.0, 2.0]), 4)
    assert spectrum_csv(spec).splitlines() == ["freq_hz,mag_db", "0.0,-10.0", "1.0,-20.0", "2.0,-30.0"]
