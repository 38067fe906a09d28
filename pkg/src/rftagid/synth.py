"""Multi-tone excitation, tag response, position-dependent channel, spectra."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, ValidationError
from .nonlin import DeviceModel, eval_polynomial

DB_FLOOR = -160.0

# Transceiver location on the measurement grid (cm). The reference distance
# for amplitude scaling is that of position P1.
TRANSCEIVER_CM = (30.0, -50.0)
REFERENCE_POSITION_CM = (30.0, 20.0)


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Excitation:
    """Sum of cosine tones sampled at ``sample_rate``.

    ``tones`` holds ``(frequency_hz, amplitude)`` pairs.
    """

    tones: tuple[tuple[float, float], ...]
    sample_rate: float
    num_samples: int

    def __post_init__(self):
        tones = tuple((float(f), float(a)) for f, a in self.tones)
        object.__setattr__(self, "tones", tones)
        if not tones:
            raise ValidationError("excitation needs at least one tone")
        nyquist = self.sample_rate / 2
        for f, a in tones:
            if not (0 < f < nyquist):
                raise ValidationError(
                    f"tone at {f} Hz violates 0 < f < Nyquist ({nyquist} Hz)"
                )
            if not np.isfinite(a):
                raise DomainError("tone amplitude must be finite")
        if self.num_samples < 2 or not _is_pow2(self.num_samples):
            raise ValidationError(f"num_samples must be a power of two >= 2, got {self.num_samples}")

    @property
    def frequencies(self) -> tuple[float, ...]:
        return tuple(f for f, _ in self.tones)

    def coherent(self, nfft: int) -> "Excitation":
        """Copy with every tone snapped to the nearest bin centre of an ``nfft`` FFT."""
        df = self.sample_rate / nfft
        snapped = tuple((round(f / df) * df, a) for f, a in self.tones)
        return replace(self, tones=snapped)


@dataclass(frozen=True)
class ChannelState:
    position: tuple[float, float]
    amplitude_scale: float = 1.0
    multipath_gains: tuple[float, ...] = (1.0,)
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.amplitude_scale > 0:
            raise ValidationError("amplitude_scale must be positive")
        if not self.noise_std >= 0:
            raise ValidationError("noise_std must be non-negative")
        if len(self.multipath_gains) < 1:
            raise ValidationError("multipath needs at least one tap")
        object.__setattr__(self, "multipath_gains", tuple(float(g) for g in self.multipath_gains))


@dataclass(frozen=True)
class Spectrum:
    """One-sided magnitude spectrum.

    ``magnitudes_db`` is ``20 log10`` of the per-bin sinusoid amplitude
    relative to full scale; ``reference_level`` is full scale in dB re 1.
    """

    magnitudes_db: np.ndarray
    bin_freqs: np.ndarray
    nfft: int
    reference_level: float = 0.0
    n_averages: int = 1

    def __post_init__(self):
        n = self.nfft // 2 + 1
        if len(self.magnitudes_db) != n or len(self.bin_freqs) != n:
            raise ValidationError("spectrum arrays must have nfft/2 + 1 bins")

    @property
    def df(self) -> float:
        return float(self.bin_freqs[1] - self.bin_freqs[0])

    def bin_of(self, freq: float) -> int:
        return int(round(freq / self.df))

    def amplitudes(self) -> np.ndarray:
        """Linear amplitudes in absolute units (full scale removed)."""
        return 10 ** ((self.magnitudes_db + self.reference_level) / 20)


def synthesize_excitation(ex: Excitation) -> np.ndarray:
    """Sampled sum of zero-phase cosines."""
    i = np.arange(ex.num_samples)
    out = np.zeros(ex.num_samples)
    for f, a in ex.tones:
        # phase accumulated in cycles modulo 1 keeps precision for long captures
        cycles = np.mod(i * (f / ex.sample_rate), 1.0)
        out += a * np.cos(2 * np.pi * cycles)
    return out


def tag_response(waveform: np.ndarray, model: DeviceModel) -> np.ndarray:
    """Map each sample through the device's power series."""
    return np.asarray(eval_polynomial(model, np.asarray(waveform, dtype=float)))


def distance_scale(position: tuple[float, float]) -> float:
    """Free-space spreading gain ``d_ref / d`` relative to position P1."""
    d = np.hypot(position[0] - TRANSCEIVER_CM[0], position[1] - TRANSCEIVER_CM[1])
    d_ref = np.hypot(
        REFERENCE_POSITION_CM[0] - TRANSCEIVER_CM[0], REFERENCE_POSITION_CM[1] - TRANSCEIVER_CM[1]
    )
    return float(d_ref / d)


def multipath_taps(seed: int, n_taps: int = 3, spread: float = 0.3) -> tuple[float, ...]:
    """Direct path plus ``n_taps - 1`` weaker real echoes drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    echoes = rng.uniform(-spread, spread, size=n_taps - 1)
    return (1.0, *map(float, echoes))


def _circular_fir(waveform: np.ndarray, taps) -> np.ndarray:
    # captures are periodic, so wrap-around gives the steady-state response
    out = taps[0] * waveform
    for k, h in enumerate(taps[1:], start=1):
        out = out + h * np.roll(waveform, k)
    return out


def add_noise(waveform: np.ndarray, noise_std: float, seed: int) -> np.ndarray:
    if noise_std == 0:
        return np.array(waveform, dtype=float)
    rng = np.random.default_rng(seed)
    return waveform + noise_std * rng.standard_normal(len(waveform))


def apply_channel(waveform: np.ndarray, ch: ChannelState) -> np.ndarray:
    """Scale, multipath-filter and add white Gaussian noise."""
    clean = ch.amplitude_scale * _circular_fir(np.asarray(waveform, dtype=float), ch.multipath_gains)
    return add_noise(clean, ch.noise_std, ch.seed)


def _window(name: str, n: int) -> np.ndarray:
    if name == "rectangular":
        return np.ones(n)
    if name == "hann":
        # periodic Hann: exact coherent gain of 0.5 for tones on bin centres
        return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    raise ValidationError(f"unknown window {name!r}; use 'rectangular' or 'hann'")


def compute_spectrum(
    waveform: np.ndarray,
    nfft: int,
    window: str = "hann",
    *,
    sample_rate: float = 1.0,
    full_scale: float | str = 1.0,
    average: bool = True,
) -> Spectrum:
    """Segment-averaged one-sided amplitude spectrum in dB.

    The capture is cut into ``len // nfft`` non-overlapping segments whose
    linear magnitudes are averaged (only the first segment is used when
    ``average`` is false). Bins are scaled so that a coherent tone of
    amplitude ``A`` reads ``20 log10(A / full_scale)``.

    ``full_scale="rms"`` auto-ranges the receiver on each capture: full scale
    becomes ``sqrt(2) * rms(waveform)``, the amplitude of a sinusoid with the
    capture's power.
    """
    x = np.asarray(waveform, dtype=float)
    if not _is_pow2(nfft) or nfft < 2:
        raise ValidationError(f"nfft must be a power of two >= 2, got {nfft}")
    if nfft > len(x):
        raise ValidationError(f"nfft={nfft} exceeds waveform length {len(x)}")

    n_seg = len(x) // nfft if average else 1
    segs = x[: n_seg * nfft].reshape(n_seg, nfft)
    w = _window(window, nfft)
    mags = np.abs(np.fft.rfft(segs * w, axis=1)).mean(axis=0)
    mags *= 2.0 / w.sum()
    mags[0] /= 2.0
    mags[-1] /= 2.0

    if full_scale == "rms":
        fs_amp = float(np.sqrt(2.0 * np.mean(x**2)))
        if fs_amp == 0.0:
            fs_amp = 1.0
    else:
        fs_amp = float(full_scale)
        if not fs_amp > 0:
            raise ValidationError("full_scale must be positive")

    with np.errstate(divide="ignore"):
        db = 20 * np.log10(mags / fs_amp)
    db = np.maximum(db, DB_FLOOR)
    freqs = np.arange(nfft // 2 + 1) * (sample_rate / nfft)
    return Spectrum(db, freqs, nfft, 20 * np.log10(fs_amp), n_seg)


def spectrum_energy(spec: Spectrum, num_samples: int) -> float:
    """Time-domain energy implied by a single-segment amplitude spectrum.

    Inverts the amplitude scaling of :func:`compute_spectrum`: interior bins
    hold sinusoids (mean square ``A^2/2``), DC and Nyquist hold constants.
    """
    a = spec.amplitudes()
    ms = a[0] ** 2 + a[-1] ** 2 + 0.5 * np.sum(a[1:-1] ** 2)
    return float(num_samples * ms)
