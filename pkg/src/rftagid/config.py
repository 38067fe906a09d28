"""Run configuration shared by the command-line tools.

A config file is a JSON or YAML mapping whose keys mirror :class:`RunConfig`.
Simulation settings live under ``sim`` and mirror
:class:`~rftagid.dataset.SimulationConfig`. Every seed has a fixed default,
so no run depends on the clock.

Example (YAML)::

    master_seed: 0
    samples_per_position: 200
    classifiers: [perceptron, svm_linear]
    sim:
      snr_db: 30
      nfft: 16384
    positions:
      large: [[30, 20], [43, 45]]
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import SimulationConfig
from .errors import ValidationError
from .features import SCENARIOS
from .io import dumps_json, load_device_model, load_structured
from .ml.core import ALGORITHMS, canonical_algorithm
from .ml.study import REGIMES, StudyConfig
from .nonlin import AMPLIFIER_COEFFICIENTS, DIODE_COEFFICIENTS

_TUPLE_SIM_FIELDS = ("tone_freqs", "tone_amplitudes", "band")


def _sim_from_dict(d: dict) -> SimulationConfig:
    names = {f.name for f in dataclasses.fields(SimulationConfig)}
    unknown = sorted(set(d) - names)
    if unknown:
        raise ValidationError(f"unknown sim keys: {', '.join(unknown)}")
    kw = dict(d)
    for key in _TUPLE_SIM_FIELDS:
        if kw.get(key) is not None:
            kw[key] = tuple(float(v) for v in kw[key])
    try:
        sim = SimulationConfig(**kw)
        sim.excitation()
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"invalid sim settings: {exc}") from None
    return sim


@dataclass(frozen=True)
class RunConfig:
    out_dir: str = "out"
    data_dir: str | None = None
    device_files: tuple[str, ...] = ()
    scenarios: tuple[str, ...] = SCENARIOS
    classifiers: tuple[str, ...] = ALGORITHMS
    regimes: tuple[str, ...] = REGIMES
    master_seed: int = 0
    device_seeds: tuple[int, ...] = (1, 2)
    base_coefficients: tuple[float, ...] = DIODE_COEFFICIENTS
    perturb_fraction: float = 0.05
    perturb_all: bool = False
    samples_per_position: int = 1001
    placements: int = 5
    jitter_cm: float = 1.0
    positions: dict = field(default_factory=dict)
    static_test_fraction: float = 0.10
    perturbed_test_per_class: int = 220
    increased_per_class: int = 907
    hyper: dict = field(default_factory=dict)
    n_averages: int = 250  # captures; 4 FFT frames each at the default band plan
    amplifier_coefficients: tuple[float, ...] = AMPLIFIER_COEFFICIENTS
    constellation_rms: float = 0.6
    pca_standardize: bool = False
    sim: SimulationConfig = field(default_factory=SimulationConfig)

    def __post_init__(self):
        for s in self.scenarios:
            if s not in SCENARIOS:
                raise ValidationError(f"unknown scenario {s!r}; choose from {', '.join(SCENARIOS)}")
        for r in self.regimes:
            if r not in REGIMES:
                raise ValidationError(f"unknown regime {r!r}; choose from {', '.join(REGIMES)}")
        object.__setattr__(self, "classifiers", tuple(canonical_algorithm(c) for c in self.classifiers))
        if not self.classifiers:
            raise ValidationError("at least one classifier is required")
        if len(self.device_seeds) < 2 and not self.device_files:
            raise ValidationError("two device seeds are needed to build a device pair")
        if not 0 <= self.perturb_fraction < 1:
            raise ValidationError("perturb_fraction must lie in [0, 1)")
        if self.n_averages < 1:
            raise ValidationError("n_averages must be >= 1")
        if self.samples_per_position < 1:
            raise ValidationError("samples_per_position must be >= 1")
        for s in self.positions:
            if s not in SCENARIOS:
                raise ValidationError(f"positions given for unknown scenario {s!r}")
        try:
            positions = {s: [tuple(float(c) for c in p) for p in ps] for s, ps in self.positions.items()}
        except (TypeError, ValueError):
            raise ValidationError("positions must be lists of (x, y) pairs") from None
        object.__setattr__(self, "positions", positions)
        for p in self.device_files:
            if not Path(p).is_file():
                raise ValidationError(f"device file not found: {p}")
        if self.data_dir is not None and not Path(self.data_dir).is_dir():
            raise ValidationError(f"data directory not found: {self.data_dir}")
        # building the scenario configs checks grid bounds and position counts
        for s in SCENARIOS:
            self.study_config().scenario_config(s)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        kw = dict(data)
        if "sim" in kw:
            if not isinstance(kw["sim"], dict):
                raise ValidationError("sim must be a mapping")
            kw["sim"] = _sim_from_dict(kw["sim"])
        for key in ("scenarios", "classifiers", "regimes", "device_files"):
            if key in kw:
                v = kw[key]
                kw[key] = tuple(v.split(",")) if isinstance(v, str) else tuple(v)
        for key in ("device_seeds",):
            if key in kw:
                kw[key] = tuple(int(v) for v in kw[key])
        for key in ("base_coefficients", "amplifier_coefficients"):
            if key in kw:
                kw[key] = tuple(float(v) for v in kw[key])
        if base_dir is not None:
            # relative paths in a config file resolve against the file's folder
            if "device_files" in kw:
                kw["device_files"] = tuple(str(base_dir / p) for p in kw["device_files"])
            if kw.get("data_dir") is not None:
                kw["data_dir"] = str(base_dir / kw["data_dir"])
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ValidationError(f"invalid config: {exc}") from None

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        return cls.from_dict(load_structured(path), path.parent)

    def override(self, **changes) -> "RunConfig":
        sim_changes = {k: changes.pop(k) for k in list(changes) if k in ("snr_db",)}
        sim = dataclasses.replace(self.sim, **sim_changes) if sim_changes else self.sim
        return dataclasses.replace(self, sim=sim, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "sim":
                v = {k: (list(x) if isinstance(x, tuple) else x) for k, x in dataclasses.asdict(v).items()}
            elif f.name == "positions":
                v = {s: [list(p) for p in ps] for s, ps in sorted(v.items())}
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        # output location does not change results
        out.pop("out_dir")
        return out

    def config_hash(self) -> str:
        return hashlib.sha256(dumps_json(self.to_dict()).encode()).hexdigest()

    def study_config(self) -> StudyConfig:
        devices = tuple(load_device_model(p) for p in self.device_files) or None
        return StudyConfig(
            sim=self.sim,
            base_coefficients=self.base_coefficients,
            perturb_fraction=self.perturb_fraction,
            device_seeds=self.device_seeds,
            devices=devices,
            perturb_all=self.perturb_all,
            samples_per_position=self.samples_per_position,
            placements=self.placements,
            jitter_cm=self.jitter_cm,
            master_seed=self.master_seed,
            static_test_fraction=self.static_test_fraction,
            perturbed_test_per_class=self.perturbed_test_per_class,
            increased_per_class=self.increased_per_class,
            classifiers=self.classifiers,
            regimes=self.regimes,
            hyper=self.hyper,
            positions=self.positions,
        )
