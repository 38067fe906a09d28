import time

import numpy as np
import pytest

from rftagid.dataset import Dataset
from rftagid.ml.study import StudyConfig, make_splits, run_study, simulate_all

ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def record():
    """Register one acceptance criterion outcome for the terminal summary."""

    def _record(number: int, name: str, passed: bool, detail: str = ""):
        ACCEPTANCE_RESULTS.append((number, name, bool(passed), detail))
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:2d} {name}: {detail}")


class DefaultStudy:
    def __init__(self):
        self.cfg = StudyConfig()
        t0 = time.perf_counter()
        self.data = simulate_all(self.cfg)
        self.simulate_seconds = time.perf_counter() - t0
        self.splits = make_splits(self.cfg, self.data)
        t1 = time.perf_counter()
        self.report = run_study(self.cfg, self.data)
        self.study_seconds = time.perf_counter() - t1
        self.total_seconds = time.perf_counter() - t0


@pytest.fixture(scope="session")
def default_study() -> DefaultStudy:
    """The full default study, computed once per test session."""
    return DefaultStudy()


def make_dataset(features, truth, scenario="static") -> Dataset:
    features = np.asarray(features, dtype=float)
    truth = np.asarray(truth, dtype=int)
    n = len(features)
    return Dataset(
        features,
        truth.copy(),
        truth,
        np.array([f"tag{t}" for t in truth], dtype=object),
        np.array([scenario] * n, dtype=object),
        np.zeros(n, dtype=int),
        np.arange(n),
    )


def blobs(n_per_class=50, sep=6.0, d=4, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, 1.0, size=(n_per_class, d))
    b = rng.normal(0.0, 1.0, size=(n_per_class, d)) + sep / np.sqrt(d)
    X = np.vstack([a, b])
    y = np.r_[np.zeros(n_per_class, int), np.ones(n_per_class, int)]
    return X, y
