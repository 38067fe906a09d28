"""Simulated measurement campaigns and training-set preparation.

Three placement scenarios are simulated on a 60 x 60 cm grid:

* ``static`` -- each tag sits at P1 for the whole capture run;
* ``small``  -- each tag is repeatedly lifted and replaced at P1 with a
  few millimetres of placement error;
* ``large``  -- each tag is moved between the five designated positions.
"""

from __future__ import annotations

import itertools
import logging
import zlib
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import FitError, PeakDetectionError, ValidationError
from .features import detect_peaks
from .nonlin import DeviceModel
from .synth import (
    DB_FLOOR,
    REFERENCE_POSITION_CM,
    ChannelState,
    Excitation,
    add_noise,
    apply_channel,
    compute_spectrum,
    distance_scale,
    Spectrum,
    multipath_taps,
    synthesize_excitation,
    tag_response,
)

log = logging.getLogger(__name__)

GRID_CM = 60.0
GRID_POSITIONS = ((30.0, 20.0), (43.0, 45.0), (17.0, 45.0), (30.0, 55.0), (53.0, 53.0))
SCENARIO_CODES = {"static": 0, "small": 1, "large": 2}


def derive_seed(*parts) -> int:
    """Stable 32-bit seed from a tuple of ints and strings."""
    entropy = []
    for p in parts:
        if isinstance(p, str):
            entropy.append(zlib.crc32(p.encode()))
        else:
            entropy.append(int(p) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


@dataclass(frozen=True)
class SimulationConfig:
    """Band plan, receiver and feature-extraction settings shared by all scenarios.

    The default band plan is the 1.95 / 2.05 GHz two-tone test scaled down by
    1e5, which keeps every frequency ratio.
    """

    tone_freqs: tuple[float, ...] = (19_500.0, 20_500.0)
    tone_amplitudes: tuple[float, ...] = (0.5, 0.5)
    sample_rate: float = 1.024e6
    num_samples: int = 2**16
    nfft: int = 16384
    window: str = "hann"
    snr_db: float = 30.0
    full_scale: float | str = "rms"
    k: int = 4
    min_separation_bins: int = 8
    band: tuple[float, float] | None = None
    n_taps: int = 3
    tap_spread: float = 0.3
    tone_jitter_db: float = 0.05  # per-capture source level instability, std in dB

    def __post_init__(self):
        if len(self.tone_freqs) != len(self.tone_amplitudes):
            raise ValidationError("tone_freqs and tone_amplitudes differ in length")
        if self.nfft > self.num_samples:
            raise ValidationError("nfft cannot exceed num_samples")
        if self.n_taps < 1:
            raise ValidationError("n_taps must be >= 1")
        if self.tone_jitter_db < 0:
            raise ValidationError("tone_jitter_db must be >= 0")

    def excitation(self) -> Excitation:
        ex = Excitation(tuple(zip(self.tone_freqs, self.tone_amplitudes)), self.sample_rate, self.num_samples)
        return ex.coherent(self.nfft)

    def analysis_band(self) -> tuple[float, float]:
        """Peak-search band; defaults to the first zone around the tones."""
        if self.band is not None:
            return tuple(self.band)
        return (0.5 * min(self.tone_freqs), 1.5 * max(self.tone_freqs))


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    positions: tuple[tuple[float, float], ...]
    devices: tuple[DeviceModel, ...]
    samples_per_position: int = 1001
    jitter_cm: float = 1.0
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple((float(x), float(y)) for x, y in self.positions))
        object.__setattr__(self, "devices", tuple(self.devices))
        if self.scenario not in SCENARIO_CODES:
            raise ValidationError(f"unknown scenario {self.scenario!r}")
        if self.scenario == "static" and len(self.positions) != 1:
            raise ValidationError("the static scenario uses exactly one position")
        if not self.positions:
            raise ValidationError("at least one position is required")
        for x, y in self.positions:
            if not (0 <= x <= GRID_CM and 0 <= y <= GRID_CM):
                raise ValidationError(f"position ({x}, {y}) cm lies outside the 60x60 cm grid")
        if self.samples_per_position < 1:
            raise ValidationError("samples_per_position must be >= 1")
        if self.jitter_cm < 0:
            raise ValidationError("jitter_cm must be non-negative")
        if not self.devices:
            raise ValidationError("at least one device is required")
        ids = [d.device_id for d in self.devices]
        if len(set(ids)) != len(ids):
            raise ValidationError("device ids must be unique")

    @classmethod
    def default(cls, scenario: str, devices, placements: int = 5, **kw) -> "ScenarioConfig":
        if scenario == "static":
            positions = (REFERENCE_POSITION_CM,)
        elif scenario == "small":
            positions = (REFERENCE_POSITION_CM,) * placements
        elif scenario == "large":
            positions = GRID_POSITIONS
        else:
            raise ValidationError(f"unknown scenario {scenario!r}")
        return cls(scenario, positions, tuple(devices), **kw)


@dataclass
class Dataset:
    """Feature rows with labels and per-row provenance.

    ``labels`` are the labels used for training (ground truth until replaced
    by clustering); ``truth`` always holds the index of the device that
    produced the row.
    """

    features: np.ndarray
    labels: np.ndarray
    truth: np.ndarray
    device_id: np.ndarray
    scenario: np.ndarray
    position: np.ndarray
    seed: np.ndarray
    synthetic: np.ndarray = field(default=None)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            self.features = self.features.reshape(len(self.features), -1)
        n = len(self.features)
        self.labels = np.asarray(self.labels, dtype=int)
        self.truth = np.asarray(self.truth, dtype=int)
        self.device_id = np.asarray(self.device_id, dtype=object)
        self.scenario = np.asarray(self.scenario, dtype=object)
        self.position = np.asarray(self.position, dtype=int)
        self.seed = np.asarray(self.seed, dtype=np.int64)
        if self.synthetic is None:
            self.synthetic = np.zeros(n, dtype=bool)
        self.synthetic = np.asarray(self.synthetic, dtype=bool)
        for name in ("labels", "truth", "device_id", "scenario", "position", "seed", "synthetic"):
            if len(getattr(self, name)) != n:
                raise ValidationError(f"dataset column {name!r} has {len(getattr(self, name))} rows, expected {n}")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def k(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.features[idx],
            self.labels[idx],
            self.truth[idx],
            self.device_id[idx],
            self.scenario[idx],
            self.position[idx],
            self.seed[idx],
            self.synthetic[idx],
        )

    def with_features(self, features) -> "Dataset":
        return replace(self, features=np.asarray(features, dtype=float))

    def with_labels(self, labels) -> "Dataset":
        return replace(self, labels=np.asarray(labels, dtype=int))

    @staticmethod
    def concat(parts: Sequence["Dataset"]) -> "Dataset":
        if not parts:
            raise ValidationError("nothing to concatenate")
        cols = {}
        for name in ("features", "labels", "truth", "device_id", "scenario", "position", "seed", "synthetic"):
            cols[name] = np.concatenate([getattr(p, name) for p in parts])
        return Dataset(**cols)

    def class_counts(self, which: str = "labels") -> dict[int, int]:
        values, counts = np.unique(getattr(self, which), return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}


def calibrate_noise_std(sim: SimulationConfig, devices: Sequence[DeviceModel], master_seed: int) -> float:
    """Noise deviation giving ``sim.snr_db`` for the mean received power at P1."""
    x = synthesize_excitation(sim.excitation())
    taps = multipath_taps(_taps_seed(master_seed, REFERENCE_POSITION_CM), sim.n_taps, sim.tap_spread)
    ch = ChannelState(REFERENCE_POSITION_CM, distance_scale(REFERENCE_POSITION_CM), taps)
    rms = np.mean([np.sqrt(np.mean(apply_channel(tag_response(x, d), ch) ** 2)) for d in devices])
    return float(rms * 10 ** (-sim.snr_db / 20))


def _taps_seed(master_seed: int, position) -> int:
    # keyed by the nominal location so every scenario sees the same room
    return derive_seed(master_seed, "taps", round(position[0] * 100), round(position[1] * 100))


def placement(cfg: ScenarioConfig, device: DeviceModel, pos_idx: int) -> tuple[float, float]:
    """Actual tag location for one placement; jittered only in the small scenario."""
    x, y = cfg.positions[pos_idx]
    if cfg.scenario != "small" or cfg.jitter_cm == 0:
        return (x, y)
    rng = np.random.default_rng(derive_seed(cfg.master_seed, "jitter", device.device_id, pos_idx))
    dx, dy = rng.uniform(-cfg.jitter_cm, cfg.jitter_cm, size=2)
    return (x + dx, y + dy)


def sample_seed(cfg: ScenarioConfig, device: DeviceModel, pos_idx: int, sample_idx: int) -> int:
    return derive_seed(cfg.master_seed, SCENARIO_CODES[cfg.scenario], device.device_id, pos_idx, sample_idx)


class _CaptureChain:
    """Excitation -> tag -> channel -> spectrum for one simulation config."""

    def __init__(self, sim: SimulationConfig, noise_std: float):
        self.sim = sim
        self.noise_std = noise_std
        ex = sim.excitation()
        self.drive = synthesize_excitation(ex)
        # unit-amplitude tones, recombined per capture when the source level jitters
        self.unit_tones = [synthesize_excitation(replace(ex, tones=((f, 1.0),))) for f in ex.frequencies]
        self.amps = np.array([a for _, a in ex.tones])

    def channel(self, master_seed: int, nominal, where) -> ChannelState:
        taps = multipath_taps(_taps_seed(master_seed, nominal), self.sim.n_taps, self.sim.tap_spread)
        return ChannelState(where, distance_scale(where), taps, self.noise_std)

    def clean(self, device: DeviceModel, ch: ChannelState, seed: int | None = None) -> np.ndarray:
        """Noiseless received waveform; ``seed`` draws the source levels."""
        drive = self.drive
        if seed is not None and self.sim.tone_jitter_db > 0:
            rng = np.random.default_rng(derive_seed(seed, "source"))
            level = self.amps * 10 ** (rng.normal(0.0, self.sim.tone_jitter_db, size=len(self.amps)) / 20)
            drive = sum(a * u for a, u in zip(level, self.unit_tones))
        return apply_channel(tag_response(drive, device), replace(ch, noise_std=0.0))

    def spectrum(self, clean: np.ndarray, seed: int):
        y = add_noise(clean, self.noise_std, seed)
        sim = self.sim
        return compute_spectrum(y, sim.nfft, sim.window, sample_rate=sim.sample_rate, full_scale=sim.full_scale)


def generate_scenario(
    cfg: ScenarioConfig,
    sim: SimulationConfig | None = None,
    noise_std: float | None = None,
) -> Dataset:
    """Simulate every device x position x sample capture of a scenario.

    Each capture runs excitation -> tag -> channel -> spectrum -> peaks.
    With ``sim.tone_jitter_db > 0`` each capture draws its own tone levels
    (log-normal around the nominal amplitudes), so the tag response is
    recomputed per sample. Without jitter the noiseless chain is computed
    once per placement and only the noise is redrawn.
    """
    sim = sim or SimulationConfig()
    if noise_std is None:
        noise_std = calibrate_noise_std(sim, cfg.devices, cfg.master_seed)
    chain = _CaptureChain(sim, noise_std)
    band = sim.analysis_band()
    jitter = sim.tone_jitter_db > 0

    feats, truth, dev_ids, positions, seeds = [], [], [], [], []
    for d_idx, dev in enumerate(cfg.devices):
        for p_idx, nominal in enumerate(cfg.positions):
            ch = chain.channel(cfg.master_seed, nominal, placement(cfg, dev, p_idx))
            clean = None if jitter else chain.clean(dev, ch)
            for s_idx in range(cfg.samples_per_position):
                seed = sample_seed(cfg, dev, p_idx, s_idx)
                spec = chain.spectrum(chain.clean(dev, ch, seed) if jitter else clean, seed)
                try:
                    fv = detect_peaks(spec, sim.k, sim.min_separation_bins, band)
                except PeakDetectionError as exc:
                    raise PeakDetectionError(
                        f"{exc} [scenario={cfg.scenario} device={dev.device_id} "
                        f"position={p_idx} sample={s_idx} seed={seed}]"
                    ) from None
                feats.append(fv.peak_mags_db)
                truth.append(d_idx)
                dev_ids.append(dev.device_id)
                positions.append(p_idx)
                seeds.append(seed)
        log.debug("%s: device %s done", cfg.scenario, dev.device_id)

    n = len(feats)
    return Dataset(
        np.array(feats),
        np.array(truth),
        np.array(truth),
        np.array(dev_ids, dtype=object),
        np.array([cfg.scenario] * n, dtype=object),
        np.array(positions),
        np.array(seeds, dtype=np.int64),
    )


def averaged_spectrum(
    device: DeviceModel,
    n_averages: int,
    sim: SimulationConfig | None = None,
    noise_std: float = 0.0,
    master_seed: int = 0,
    position=REFERENCE_POSITION_CM,
) -> Spectrum:
    """Mean of ``n_averages`` static captures, averaged in linear magnitude."""
    if n_averages < 1:
        raise ValidationError("n_averages must be >= 1")
    sim = sim or SimulationConfig()
    chain = _CaptureChain(sim, noise_std)
    ch = chain.channel(master_seed, position, position)
    acc = None
    for j in range(n_averages):
        seed = derive_seed(master_seed, "average", device.device_id, j)
        spec = chain.spectrum(chain.clean(device, ch, seed), seed)
        lin = 10 ** (spec.magnitudes_db / 20)
        acc = lin if acc is None else acc + lin
    db = np.maximum(20 * np.log10(acc / n_averages), DB_FLOOR)
    return Spectrum(db, spec.bin_freqs, spec.nfft, 0.0, spec.n_averages * n_averages)


def split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified train/test split on the ground-truth device.

    Each class contributes ``round(n_class * test_fraction)`` test rows
    (halves round up). Row order within each part follows the input.
    """
    if not 0 < test_fraction < 1:
        raise ValidationError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    test_idx = []
    for cls in np.unique(ds.truth):
        idx = np.flatnonzero(ds.truth == cls)
        if len(idx) < 2:
            raise ValidationError(f"class {cls} has {len(idx)} sample(s); need at least 2 to split")
        n_test = int(np.floor(len(idx) * test_fraction + 0.5))
        test_idx.append(rng.permutation(idx)[:n_test])
    test = np.sort(np.concatenate(test_idx))
    mask = np.ones(len(ds), dtype=bool)
    mask[test] = False
    return ds.subset(np.flatnonzero(mask)), ds.subset(test)


def subsample_per_class(ds: Dataset, per_class: int, seed: int) -> Dataset:
    """Draw ``per_class`` rows of each ground-truth class without replacement."""
    rng = np.random.default_rng(seed)
    keep = []
    for cls in np.unique(ds.truth):
        idx = np.flatnonzero(ds.truth == cls)
        if per_class > len(idx):
            raise ValidationError(f"class {cls} has only {len(idx)} rows, {per_class} requested")
        keep.append(rng.permutation(idx)[:per_class])
    return ds.subset(np.sort(np.concatenate(keep)))


@dataclass
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    wcss_history: list[float]
    n_iter: int


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    return ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.integers(len(x))]]
    d2 = _sq_dists(x, np.array(centers))[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(len(x)))
        else:
            idx = int(rng.choice(len(x), p=d2 / total))
        centers.append(x[idx])
        d2 = np.minimum(d2, _sq_dists(x, x[idx : idx + 1])[:, 0])
    return np.array(centers)


def kmeans(x, k: int, seed: int, max_iter: int = 300, tol: float = 1e-6) -> KMeansResult:
    """Lloyd's algorithm from a k-means++ start.

    Stops when no centroid moves more than ``tol``. Clusters are renumbered
    by ascending first coordinate of their centroid.
    """
    x = np.asarray(x, dtype=float)
    if k < 1 or k > len(x):
        raise ValidationError(f"k must be in [1, {len(x)}]")
    rng = np.random.default_rng(seed)

    for attempt in range(2):
        centroids = _kmeans_pp(x, k, rng)
        labels = np.argmin(_sq_dists(x, centroids), axis=1)
        if len(np.unique(labels)) == k:
            break
        log.info("k-means init produced an empty cluster (attempt %d)", attempt + 1)
    else:
        raise FitError("k-means produced an empty cluster after re-seeding")

    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = _sq_dists(x, centroids)
        labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(x)), labels].sum()))
        new = centroids.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new[j] = x[members].mean(axis=0)
        shift = np.max(np.linalg.norm(new - centroids, axis=1))
        centroids = new
        if shift <= tol:
            break

    d2 = _sq_dists(x, centroids)
    labels = np.argmin(d2, axis=1)
    final = float(d2[np.arange(len(x)), labels].sum())
    if final < history[-1]:
        history.append(final)

    order = np.argsort(centroids[:, 0], kind="stable")
    remap = np.empty(k, dtype=int)
    remap[order] = np.arange(k)
    return KMeansResult(centroids[order], remap[labels], history, n_iter)


def kmeans_label(train: Dataset, k: int = 2, seed: int = 0) -> Dataset:
    """Replace training labels with k-means cluster assignments."""
    res = kmeans(train.features, k, seed)
    return train.with_labels(res.labels)


def align_labels(ds: Dataset) -> Dataset:
    """Renumber cluster labels to agree best with the ground-truth devices.

    Clusters carry no identity of their own; this mapping plays the role of
    the operator knowing which physical tag was present at enrollment.
    """
    clusters = np.unique(ds.labels)
    classes = np.unique(ds.truth)
    if len(clusters) > 8:
        raise ValidationError("label alignment is limited to 8 clusters")
    best, best_map = -1, None
    targets = list(classes) + [c for c in range(max(len(clusters), len(classes))) if c not in classes]
    for perm in itertools.permutations(targets, len(clusters)):
        mapping = dict(zip(clusters, perm))
        agree = int(np.sum(np.vectorize(mapping.get)(ds.labels) == ds.truth))
        if agree > best:
            best, best_map = agree, mapping
    return ds.with_labels(np.vectorize(best_map.get)(ds.labels))


def label_agreement(labels, truth) -> float:
    """Fraction of agreement between two binary labelings, up to permutation."""
    labels, truth = np.asarray(labels), np.asarray(truth)
    same = float(np.mean(labels == truth))
    return max(same, 1.0 - same) if set(np.unique(labels)) <= {0, 1} else same


@dataclass
class SmoteDraw:
    samples: np.ndarray
    base: np.ndarray
    neighbor: np.ndarray
    gap: np.ndarray


def smote_samples(x_min: np.ndarray, n_new: int, k: int, rng: np.random.Generator) -> SmoteDraw:
    """Synthetic points ``x_i + u (x_nn - x_i)`` between minority neighbours.

    Base points cycle through a random permutation of the minority class, so
    every minority point is used before any is reused.
    """
    n = len(x_min)
    k = min(k, n - 1)
    tree = cKDTree(x_min)
    _, nn = tree.query(x_min, k=k + 1)
    nn = np.asarray(nn).reshape(n, k + 1)
    neighbors = np.empty((n, k), dtype=int)
    for i in range(n):
        row = [j for j in nn[i] if j != i][:k]
        neighbors[i] = row

    order = rng.permutation(n)
    base = order[np.arange(n_new) % n]
    pick = rng.integers(0, k, size=n_new)
    nbr = neighbors[base, pick]
    gap = rng.uniform(0.0, 1.0, size=n_new)
    samples = x_min[base] + gap[:, None] * (x_min[nbr] - x_min[base])
    return SmoteDraw(samples, base, nbr, gap)


def smote_balance(train: Dataset, seed: int = 0, k: int = 5, return_draw: bool = False):
    """Oversample the minority label until both classes are the same size.

    Synthetic rows copy the provenance of their base sample and are flagged
    ``synthetic``.
    """
    counts = train.class_counts()
    if len(counts) != 2:
        raise FitError(f"SMOTE needs exactly two classes, got {sorted(counts)}")
    (c_a, n_a), (c_b, n_b) = sorted(counts.items(), key=lambda kv: (kv[1], kv[0]))
    minority, n_min, n_maj = c_a, n_a, n_b
    if n_min == n_maj:
        return (train, None) if return_draw else train
    if n_min < 2:
        raise FitError("SMOTE needs at least 2 minority samples")

    idx_min = np.flatnonzero(train.labels == minority)
    rng = np.random.default_rng(seed)
    draw = smote_samples(train.features[idx_min], n_maj - n_min, k, rng)
    src = train.subset(idx_min[draw.base])
    synth = Dataset(
        draw.samples,
        np.full(len(draw.samples), minority),
        src.truth,
        src.device_id,
        src.scenario,
        src.position,
        src.seed,
        np.ones(len(draw.samples), dtype=bool),
    )
    out = Dataset.concat([train, synth])
    if return_draw:
        draw.base = idx_min[draw.base]
        draw.neighbor = idx_min[draw.neighbor]
        return out, draw
    return out

