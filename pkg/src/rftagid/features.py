"""Peak features from spectra, standardization and PCA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError, PeakDetectionError, ValidationError
from .synth import Spectrum

SCENARIOS = ("static", "small", "large")


@dataclass(frozen=True)
class FeatureVector:
    """The ``k`` strongest spectral peaks, in ascending frequency order."""

    peak_mags_db: np.ndarray
    peak_freqs: np.ndarray
    source_id: str = ""
    scenario: str = "static"
    position: int = 0

    @property
    def k(self) -> int:
        return len(self.peak_mags_db)


def detect_peaks(
    spec: Spectrum,
    k: int = 4,
    min_separation_bins: int = 8,
    band: tuple[float, float] | None = None,
    **provenance,
) -> FeatureVector:
    """Select the ``k`` largest local maxima of a spectrum.

    A local maximum is strictly greater than both neighbours. Candidates are
    accepted greedily from the largest down, skipping any closer than
    ``min_separation_bins`` to one already accepted. ``band`` restricts the
    search to ``[f_lo, f_hi]`` Hz. The result is re-sorted by frequency so
    each coordinate keeps a fixed physical meaning across captures.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    m = np.asarray(spec.magnitudes_db)
    inner = np.arange(1, len(m) - 1)
    is_max = (m[1:-1] > m[:-2]) & (m[1:-1] > m[2:])
    if band is not None:
        f = spec.bin_freqs[1:-1]
        is_max &= (f >= band[0]) & (f <= band[1])
    cand = inner[is_max]

    # stable sort keeps equal-height candidates in frequency order
    cand = cand[np.argsort(-m[cand], kind="stable")]
    chosen: list[int] = []
    for i in cand:
        if all(abs(int(i) - j) >= min_separation_bins for j in chosen):
            chosen.append(int(i))
            if len(chosen) == k:
                break
    if len(chosen) < k:
        raise PeakDetectionError(
            f"need {k} peaks but found {len(cand)} local maxima "
            f"({len(chosen)} after enforcing {min_separation_bins}-bin separation)"
        )
    chosen.sort()
    idx = np.array(chosen)
    return FeatureVector(m[idx].copy(), spec.bin_freqs[idx].copy(), **provenance)


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    stds: np.ndarray

    def transform(self, features) -> np.ndarray:
        return transform(self, features)

    def inverse_transform(self, z) -> np.ndarray:
        z = _check_dims(self, z)
        return z * self.stds + self.means

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stds": self.stds.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.asarray(d["means"], float), np.asarray(d["stds"], float))


def fit_standardizer(features, eps: float = 0.0) -> Standardizer:
    """Per-column mean and population standard deviation.

    A constant column raises :class:`FitError` unless ``eps > 0``, in which
    case its deviation is clamped to ``eps``.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise FitError("standardizer needs a 2-D matrix with at least 2 rows")
    means = x.mean(axis=0)
    stds = x.std(axis=0)
    bad = np.flatnonzero(stds <= 0)
    if bad.size:
        if eps <= 0:
            raise FitError(f"constant feature column(s) {bad.tolist()} cannot be standardized")
        stds = np.where(stds <= 0, eps, stds)
    return Standardizer(means, stds)


def _check_dims(std: Standardizer, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != len(std.means):
        raise ValidationError(
            f"feature dimension {x.shape[-1]} does not match standardizer ({len(std.means)})"
        )
    return x


def transform(std: Standardizer, features) -> np.ndarray:
    x = _check_dims(std, features)
    return (x - std.means) / std.stds


@dataclass(frozen=True)
class PcaModel:
    components: np.ndarray
    explained_variance: np.ndarray
    mean: np.ndarray
    total_variance: float

    def project(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        return (x - self.mean) @ self.components.T

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        return self.explained_variance / self.total_variance


def fit_pca(features, n_components: int = 2) -> PcaModel:
    """Principal axes from the eigendecomposition of the sample covariance.

    Each component's sign is fixed so that its largest-magnitude entry is
    positive.
    """
    x = np.asarray(features, dtype=float)
    n, d = x.shape
    if not 1 <= n_components <= d:
        raise ValidationError(f"n_components must be in [1, {d}]")
    if n < n_components + 1:
        raise FitError(f"PCA with {n_components} components needs at least {n_components + 1} samples")
    mean = x.mean(axis=0)
    cov = np.cov(x - mean, rowvar=False).reshape(d, d)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]

    scale = max(evals[0], 0.0)
    rank = int(np.sum(evals > 1e-12 * scale)) if scale > 0 else 0
    if rank < n_components:
        raise FitError(f"data has rank {rank}, below the requested {n_components} components")

    comps = evecs[:, :n_components].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    return PcaModel(comps, evals[:n_components].copy(), mean, float(np.sum(evals)))
