"""Memoryless power-series models of nonlinear devices.

A device is described by the coefficients of ``v_o = sum_n a_n v_i**n``.
Manufacturing spread between nominally identical parts is modelled by
small random perturbations of those coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DomainError, ValidationError

# Odd-order amplifier series used to illustrate compression and constellation
# warping: v_o = v - 0.333 v^3 + 0.133 v^5 - 0.05 v^7 + 0.022 v^9.
AMPLIFIER_COEFFICIENTS = (0.0, 1.0, 0.0, -0.333, 0.0, 0.133, 0.0, -0.05, 0.0, 0.022)

# Default tag diode: the amplifier's odd series plus weak even-order terms.
# Even terms stay small enough that the second-order products sit below the
# third-order intermodulation products at the default drive level.
DIODE_COEFFICIENTS = (0.0, 1.0, 0.02, -0.333, 0.005, 0.133, 0.0, -0.05, 0.0, 0.022)


@dataclass(frozen=True)
class DeviceModel:
    """Power-series coefficients ``a_0..a_N`` of one physical device."""

    coefficients: tuple[float, ...]
    device_id: str = "device"

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) < 2:
            raise ValidationError("a device model needs at least a_0 and a_1")
        if not all(np.isfinite(coeffs)):
            raise DomainError(f"non-finite coefficient in {self.device_id!r}")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "device_id", str(self.device_id))

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def coefficient(self, n: int) -> float:
        """Return ``a_n``, treating coefficients beyond the order as zero."""
        if n < 0:
            raise ValueError("coefficient index must be non-negative")
        return self.coefficients[n] if n < len(self.coefficients) else 0.0

    def to_dict(self) -> dict:
        return {"device_id": self.device_id, "coefficients": list(self.coefficients)}

    @classmethod
    def from_dict(cls, data: dict) -> "DeviceModel":
        try:
            return cls(tuple(data["coefficients"]), str(data["device_id"]))
        except KeyError as exc:
            raise ValidationError(f"device model missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class PerturbationSpec:
    """Relative uniform perturbation applied to selected coefficients.

    ``perturb_indices=None`` selects every index ``n >= 2`` (the higher-order
    terms); ``perturb_all=True`` selects every coefficient including
    ``a_0`` and ``a_1``.
    """

    fraction: float
    seed: int
    perturb_indices: frozenset[int] | None = None
    perturb_all: bool = False

    def __post_init__(self):
        if not (0.0 <= self.fraction < 1.0):
            raise ValidationError(f"perturbation fraction must be in [0, 1), got {self.fraction}")
        if self.perturb_indices is not None:
            object.__setattr__(self, "perturb_indices", frozenset(int(i) for i in self.perturb_indices))

    def selected(self, n_coefficients: int) -> list[int]:
        if self.perturb_all:
            return list(range(n_coefficients))
        if self.perturb_indices is None:
            return list(range(2, n_coefficients))
        return sorted(i for i in self.perturb_indices if 0 <= i < n_coefficients)


class ConstellationSymbol(NamedTuple):
    i: float
    q: float


class IntermodProduct(NamedTuple):
    """A mixing product at ``frequency = |m*f1 + n*f2|``."""

    frequency: float
    m: int
    n: int
    order: int


def eval_polynomial(model: DeviceModel, v):
    """Evaluate the device series at ``v`` (scalar or array) in Horner form."""
    arr = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("eval_polynomial input must be finite")
    out = np.full_like(arr, model.coefficients[-1])
    for a in reversed(model.coefficients[:-1]):
        out = out * arr + a
    return float(out) if out.ndim == 0 else out


def fundamental_amplitude(model: DeviceModel, amplitude: float) -> float:
    """Output amplitude at the drive frequency, truncated at third order."""
    a1, a3 = model.coefficient(1), model.coefficient(3)
    if not np.isfinite(amplitude):
        raise DomainError("amplitude must be finite")
    return a1 * amplitude + 0.75 * a3 * amplitude**3


def fundamental_gain(model: DeviceModel, amplitude: float) -> float:
    """Third-order fundamental gain; equals ``a_1`` at zero drive."""
    a1, a3 = model.coefficient(1), model.coefficient(3)
    if not np.isfinite(amplitude):
        raise DomainError("amplitude must be finite")
    return a1 + 0.75 * a3 * amplitude**2


def perturb_coefficients(
    model: DeviceModel, spec: PerturbationSpec, device_id: str | None = None
) -> DeviceModel:
    """Return a copy of ``model`` with selected coefficients scaled by ``1 + u``.

    ``u`` is uniform on ``[-fraction, fraction]``. One draw is made per
    coefficient index regardless of selection, so a given index always sees
    the same draw for a fixed seed.
    """
    rng = np.random.default_rng(spec.seed)
    draws = rng.uniform(-spec.fraction, spec.fraction, size=len(model.coefficients))
    coeffs = list(model.coefficients)
    for n in spec.selected(len(coeffs)):
        coeffs[n] = coeffs[n] * (1.0 + draws[n])
    return DeviceModel(tuple(coeffs), device_id or f"{model.device_id}-s{spec.seed}")


def envelope_response(model: DeviceModel, r):
    """Bandpass amplitude response ``G(r) * r`` using odd-order terms only.

    ``cos^n`` contributes ``C(n, (n-1)/2) / 2^(n-1)`` of its amplitude to the
    fundamental zone for odd ``n``; even orders land out of band.
    """
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    for n in range(1, len(model.coefficients), 2):
        out = out + model.coefficients[n] * comb(n, (n - 1) // 2) / 2 ** (n - 1) * r**n
    return out


def qam16(rms: float = 1.0) -> np.ndarray:
    """Sixteen-point square QAM constellation scaled to the given RMS amplitude."""
    levels = np.array([-3.0, -1.0, 1.0, 3.0])
    pts = (levels[:, None] + 1j * levels[None, :]).ravel()
    return pts * rms / np.sqrt(np.mean(np.abs(pts) ** 2))


def distort_constellation(model: DeviceModel, symbols):
    """Pass symbols through the device's AM/AM characteristic.

    Phase is preserved. The output is rescaled to the input's mean symbol
    power. Accepts a complex array (returned as a complex array) or an
    iterable of :class:`ConstellationSymbol` (returned as a list).
    """
    as_array = isinstance(symbols, np.ndarray)
    if as_array:
        z = symbols.astype(complex)
    else:
        z = np.array([complex(s.i, s.q) for s in symbols], dtype=complex)
    if not np.all(np.isfinite(z)):
        raise DomainError("constellation symbols must be finite")

    r = np.abs(z)
    out = envelope_response(model, r) * np.exp(1j * np.angle(z))
    p_in = np.mean(r**2) if len(z) else 0.0
    p_out = np.mean(np.abs(out) ** 2) if len(z) else 0.0
    if p_out > 0 and p_in > 0:
        out = out * np.sqrt(p_in / p_out)

    if as_array:
        return out
    return [ConstellationSymbol(float(c.real), float(c.imag)) for c in out]


def intermod_frequencies(
    f1: float, f2: float, max_order: int, include_dc: bool = False
) -> list[IntermodProduct]:
    """Enumerate mixing products ``|m f1 + n f2|`` with ``|m| + |n| <= max_order``.

    Each frequency is reported once, annotated with its lowest-order
    ``(m, n)``; the sign convention makes ``m*f1 + n*f2`` non-negative with
    ``m >= 0`` wherever possible. DC appears only with ``include_dc``.
    """
    if not (0 < f1 < f2):
        raise ValidationError("intermod_frequencies needs 0 < f1 < f2")
    if max_order < 0:
        raise ValidationError("max_order must be non-negative")

    found: dict[float, IntermodProduct] = {}
    scale = max(abs(f1), abs(f2))
    for order in range(1, max_order + 1):
        for m in range(0, order + 1):
            n_abs = order - m
            for n in {n_abs, -n_abs}:
                freq = m * f1 + n * f2
                mm, nn = m, n
                if freq < 0:
                    freq, mm, nn = -freq, -m, -n
                if freq <= 1e-12 * scale:
                    continue
                key = round(freq / scale, 9)
                if key not in found:
                    found[key] = IntermodProduct(float(freq), mm, nn, order)
    products = sorted(found.values(), key=lambda p: p.frequency)
    if include_dc:
        products.insert(0, IntermodProduct(0.0, 0, 0, 0))
    return products


def device_pair(
    base: DeviceModel,
    fraction: float,
    seeds: Iterable[int],
    perturb_all: bool = False,
) -> list[DeviceModel]:
    """Perturbed copies of ``base``, one per seed, ids ``tag<i>``."""
    return [
        perturb_coefficients(base, PerturbationSpec(fraction, s, perturb_all=perturb_all), f"tag{i}")
        for i, s in enumerate(seeds)
    ]
