"""End-to-end classification study over training regimes and test scenarios.

Regimes:

``static``
    static training split only;
``increased``
    static training split plus ``increased_per_class`` rows per device from
    each of the small and large training pools;
``combined``
    static training split plus the full small and large training pools.

Every regime is standardized with the scaler fitted on the static training
split, labelled by 2-means clustering, balanced with SMOTE, then scored on
the held-out static, small and large test sets against ground truth.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..dataset import (
    Dataset,
    ScenarioConfig,
    SimulationConfig,
    align_labels,
    derive_seed,
    generate_scenario,
    kmeans,
    label_agreement,
    smote_balance,
    split,
    subsample_per_class,
)
from ..features import SCENARIOS, Standardizer, fit_standardizer
from ..nonlin import DIODE_COEFFICIENTS, DeviceModel, device_pair
from .core import ALGORITHMS, canonical_algorithm, evaluate, train

log = logging.getLogger(__name__)

REGIMES = ("static", "increased", "combined")
REPORT_COLUMNS = ("regime", "classifier", "test_scenario", "accuracy", "cm_00", "cm_01", "cm_10", "cm_11")


@dataclass(frozen=True)
class StudyConfig:
    sim: SimulationConfig = field(default_factory=SimulationConfig)
    base_coefficients: tuple[float, ...] = DIODE_COEFFICIENTS
    perturb_fraction: float = 0.05
    device_seeds: tuple[int, ...] = (1, 2)
    devices: tuple[DeviceModel, ...] | None = None
    perturb_all: bool = False
    samples_per_position: int = 1001
    placements: int = 5
    jitter_cm: float = 1.0
    master_seed: int = 0
    static_test_fraction: float = 0.10
    perturbed_test_per_class: int = 220
    increased_per_class: int = 907
    classifiers: tuple[str, ...] = ALGORITHMS
    regimes: tuple[str, ...] = REGIMES
    hyper: dict = field(default_factory=dict)
    positions: dict = field(default_factory=dict)  # scenario -> [(x, y), ...] overrides

    def device_models(self) -> tuple[DeviceModel, ...]:
        if self.devices is not None:
            return tuple(self.devices)
        base = DeviceModel(self.base_coefficients, "base")
        return tuple(device_pair(base, self.perturb_fraction, self.device_seeds, self.perturb_all))

    def scenario_config(self, scenario: str) -> ScenarioConfig:
        kw = dict(
            samples_per_position=self.samples_per_position,
            jitter_cm=self.jitter_cm,
            master_seed=self.master_seed,
        )
        if scenario in self.positions:
            return ScenarioConfig(scenario, tuple(map(tuple, self.positions[scenario])), self.device_models(), **kw)
        return ScenarioConfig.default(scenario, self.device_models(), placements=self.placements, **kw)


def simulate_all(cfg: StudyConfig, scenarios=SCENARIOS) -> dict[str, Dataset]:
    return {s: generate_scenario(cfg.scenario_config(s), cfg.sim) for s in scenarios}


@dataclass
class Splits:
    train: dict[str, Dataset]
    test: dict[str, Dataset]


def make_splits(cfg: StudyConfig, data: dict[str, Dataset]) -> Splits:
    train_parts, test_parts = {}, {}
    for s in SCENARIOS:
        ds = data[s]
        if s == "static":
            frac = cfg.static_test_fraction
        else:
            per_class = min(np.bincount(ds.truth))
            frac = cfg.perturbed_test_per_class / per_class
        train_parts[s], test_parts[s] = split(ds, frac, derive_seed(cfg.master_seed, "split", s))
    return Splits(train_parts, test_parts)


def regime_training_set(cfg: StudyConfig, regime: str, splits: Splits) -> Dataset:
    tr = splits.train
    if regime == "static":
        return tr["static"]
    if regime == "increased":
        extra = [
            subsample_per_class(tr[s], cfg.increased_per_class, derive_seed(cfg.master_seed, "increase", s))
            for s in ("small", "large")
        ]
        return Dataset.concat([tr["static"], *extra])
    if regime == "combined":
        return Dataset.concat([tr["static"], tr["small"], tr["large"]])
    raise ValueError(f"unknown regime {regime!r}")


@dataclass
class Cell:
    regime: str
    classifier: str
    test_scenario: str
    accuracy: float
    confusion: np.ndarray

    def row(self) -> dict:
        c = self.confusion
        return {
            "regime": self.regime,
            "classifier": self.classifier,
            "test_scenario": self.test_scenario,
            "accuracy": round(float(self.accuracy), 6),
            "cm_00": int(c[0, 0]),
            "cm_01": int(c[0, 1]),
            "cm_10": int(c[1, 0]),
            "cm_11": int(c[1, 1]),
        }


@dataclass
class Report:
    cells: list[Cell]
    standardizer: Standardizer
    kmeans_agreement: dict[str, float]
    training_sizes: dict[str, int]
    test_sizes: dict[str, int]
    training_sets: dict[str, Dataset] = field(default_factory=dict, repr=False)

    def accuracy(self, regime: str, classifier: str, scenario: str) -> float:
        for c in self.cells:
            if (c.regime, c.classifier, c.test_scenario) == (regime, classifier, scenario):
                return c.accuracy
        raise KeyError((regime, classifier, scenario))

    def table(self, regime: str) -> dict[str, dict[str, float]]:
        """``{scenario: {classifier: accuracy}}`` for one regime."""
        out: dict[str, dict[str, float]] = {}
        for c in self.cells:
            if c.regime == regime:
                out.setdefault(c.test_scenario, {})[c.classifier] = c.accuracy
        return out

    def rows(self) -> list[dict]:
        return [c.row() for c in self.cells]

    def to_json(self) -> dict:
        return {
            "columns": list(REPORT_COLUMNS),
            "cells": [
                {**c.row(), "confusion": c.confusion.astype(int).tolist()} for c in self.cells
            ],
            "kmeans_agreement": {k: round(v, 6) for k, v in self.kmeans_agreement.items()},
            "training_sizes": self.training_sizes,
            "test_sizes": self.test_sizes,
        }


def prepare_training(cfg: StudyConfig, raw: Dataset, standardizer: Standardizer, regime: str):
    """Standardize, cluster-label and balance one regime's training set."""
    z = raw.with_features(standardizer.transform(raw.features))
    seed = derive_seed(cfg.master_seed, "kmeans", regime)
    res = kmeans(z.features, 2, seed)
    labeled = align_labels(z.with_labels(res.labels))
    agreement = label_agreement(res.labels, z.truth)
    balanced = smote_balance(labeled, derive_seed(cfg.master_seed, "smote", regime))
    return balanced, agreement


def run_study(cfg: StudyConfig | None = None, data: dict[str, Dataset] | None = None) -> Report:
    cfg = cfg or StudyConfig()
    classifiers = [canonical_algorithm(c) for c in cfg.classifiers]
    if data is None:
        data = simulate_all(cfg)
    splits = make_splits(cfg, data)
    standardizer = fit_standardizer(splits.train["static"].features)
    tests = {s: d.with_features(standardizer.transform(d.features)) for s, d in splits.test.items()}

    cells, agreement, sizes, training_sets = [], {}, {}, {}
    for regime in cfg.regimes:
        raw = regime_training_set(cfg, regime, splits)
        prepared, agreement[regime] = prepare_training(cfg, raw, standardizer, regime)
        sizes[regime] = len(prepared)
        training_sets[regime] = prepared
        log.info("regime %s: %d training rows, k-means agreement %.4f", regime, len(prepared), agreement[regime])
        for alg in classifiers:
            seed = derive_seed(cfg.master_seed, "train", regime, alg)
            model = train(alg, prepared, cfg.hyper.get(alg), seed, standardizer)
            for s in SCENARIOS:
                m = evaluate(model, tests[s])
                cells.append(Cell(regime, alg, s, m.accuracy, m.confusion))
            log.info("  %s: %s", alg, ", ".join(f"{c.test_scenario}={c.accuracy:.4f}" for c in cells[-3:]))
    return Report(cells, standardizer, agreement, sizes, {s: len(t) for s, t in tests.items()}, training_sets)
