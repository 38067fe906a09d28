"""File formats: device models, spectra, datasets, study reports.

All writers are deterministic (shortest round-trip float repr, no timestamps) and
write atomically through a temporary file in the destination directory.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import yaml

from .dataset import Dataset
from .errors import ValidationError
from .nonlin import DeviceModel
from .synth import Spectrum

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_atomic(path, data: str | bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": "", "encoding": "utf-8"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def load_structured(path) -> dict:
    """Parse a JSON or YAML document into a dict."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ValidationError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path} must contain a mapping at top level")
    return data


def save_device_model(model: DeviceModel, path) -> Path:
    return write_atomic(path, dumps_json(model.to_dict()))


def load_device_model(path) -> DeviceModel:
    return DeviceModel.from_dict(load_structured(path))


def spectrum_csv(spec: Spectrum) -> str:
    return csv_text(("freq_hz", "mag_db"), zip(spec.bin_freqs, spec.magnitudes_db))


def dataset_header(k: int) -> list[str]:
    return [f"peak{i + 1}_db" for i in range(k)] + ["label", "scenario", "position", "device_id", "is_synthetic"]


def dataset_csv(ds: Dataset) -> str:
    rows = (
        [*ds.features[i], ds.labels[i], ds.scenario[i], ds.position[i], ds.device_id[i], ds.synthetic[i]]
        for i in range(len(ds))
    )
    return csv_text(dataset_header(ds.k), rows)


def read_dataset_csv(path, device_ids: Sequence[str] | None = None) -> Dataset:
    """Read a dataset CSV; ground truth is the device's index in ``device_ids``.

    Without ``device_ids`` the devices are indexed in sorted id order.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValidationError(f"{path} has no rows")
    peak_cols = [c for c in rows[0] if c.startswith("peak") and c.endswith("_db")]
    ids = list(device_ids) if device_ids is not None else sorted({r["device_id"] for r in rows})
    index = {d: i for i, d in enumerate(ids)}
    try:
        truth = [index[r["device_id"]] for r in rows]
    except KeyError as exc:
        raise ValidationError(f"unknown device id {exc.args[0]!r} in {path}") from None
    return Dataset(
        np.array([[float(r[c]) for c in peak_cols] for r in rows]),
        np.array([int(r["label"]) for r in rows]),
        np.array(truth),
        np.array([r["device_id"] for r in rows], dtype=object),
        np.array([r["scenario"] for r in rows], dtype=object),
        np.array([int(r["position"]) for r in rows]),
        np.zeros(len(rows), dtype=np.int64),
        np.array([r["is_synthetic"] in ("1", "True", "true") for r in rows]),
    )


def report_csv(report) -> str:
    from .ml.study import REPORT_COLUMNS

    return csv_text(REPORT_COLUMNS, ([r[c] for c in REPORT_COLUMNS] for r in report.rows()))
