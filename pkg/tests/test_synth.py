import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cubic_im3, cubic_single_tone, time_energy, tone_amplitude
from rftagid.errors import ValidationError
from rftagid.nonlin import DIODE_COEFFICIENTS, DeviceModel
from rftagid.synth import (
    DB_FLOOR,
    ChannelState,
    Excitation,
    add_noise,
    apply_channel,
    compute_spectrum,
    distance_scale,
    multipath_taps,
    spectrum_energy,
    synthesize_excitation,
    tag_response,
)

FS, N = 1.024e6, 2**16
F1, F2 = 19_500.0, 20_500.0


def two_tone(a=0.5, b=0.5, nfft=16384):
    return Excitation(((F1, a), (F2, b)), FS, N).coherent(nfft)


def test_single_tone_peak_is_amplitude():
    x = synthesize_excitation(Excitation(((1000.0, 1.0),), 64000.0, 2**12))
    assert np.max(np.abs(x)) == pytest.approx(1.0, abs=1e-6)


def test_two_tone_bounded_by_triangle_inequality():
    x = synthesize_excitation(Excitation(((F1, 1.0), (F2, 1.0)), FS, N))
    assert np.max(np.abs(x)) <= 2.0 + 1e-12


def test_samples_follow_cosine_formula():
    ex = Excitation(((123.0, 0.7), (410.0, 0.2)), 4096.0, 4096)
    i = np.arange(4096)
    ref = 0.7 * np.cos(2 * np.pi * 123.0 * i / 4096.0) + 0.2 * np.cos(2 * np.pi * 410.0 * i / 4096.0)
    np.testing.assert_allclose(synthesize_excitation(ex), ref, atol=1e-11)


def test_excitation_energy_parseval():
    ex = two_tone(0.5, 0.3)
    x = synthesize_excitation(ex)
    expected = N * (0.5**2 + 0.3**2) / 2
    assert time_energy(x) == pytest.approx(expected, rel=1e-3)


@pytest.mark.parametrize("f", [0.0, 512_000.0, 600_000.0, -5.0])
def test_nyquist_violations_rejected(f):
    with pytest.raises(ValidationError):
        Excitation(((f, 1.0),), FS, N)


def test_sample_count_must_be_power_of_two():
    with pytest.raises(ValidationError):
        Excitation(((F1, 1.0),), FS, 1000)


def test_coherent_snaps_to_bins():
    ex = Excitation(((19_501.3, 1.0),), FS, N).coherent(4096)
    df = FS / 4096
    assert ex.frequencies[0] / df == pytest.approx(round(ex.frequencies[0] / df))


def test_identity_model_is_passthrough_and_zero_gives_constant():
    x = synthesize_excitation(two_tone())
    np.testing.assert_array_equal(tag_response(x, DeviceModel((0.0, 1.0))), x)
    np.testing.assert_array_equal(tag_response(np.zeros(16), DeviceModel((0.25, 1.0, 3.0))), np.full(16, 0.25))


def test_pure_cubic_single_tone_harmonics():
    a3, amp, f, fs = -0.4, 0.9, 100.0, 4096.0
    y = tag_response(synthesize_excitation(Excitation(((f, amp),), fs, 4096)), DeviceModel((0, 0, 0, a3)))
    at_f, at_3f = cubic_single_tone(a3, amp)
    assert tone_amplitude(y, f, fs) == pytest.approx(abs(at_f), rel=1e-9)
    assert tone_amplitude(y, 3 * f, fs) == pytest.approx(abs(at_3f), rel=1e-9)


def test_channel_identity_and_scaling():
    x = np.random.default_rng(0).normal(size=1024)
    np.testing.assert_array_equal(apply_channel(x, ChannelState((30, 20))), x)
    np.testing.assert_array_equal(apply_channel(x, ChannelState((30, 20), amplitude_scale=0.5)), 0.5 * x)


def test_channel_noise_variance():
    x = synthesize_excitation(two_tone())
    sigma = 0.03
    y = apply_channel(x, ChannelState((30, 20), noise_std=sigma, seed=11))
    assert np.var(y - x) == pytest.approx(sigma**2, rel=0.05)


def test_channel_multipath_is_circular_fir():
    x = np.arange(8, dtype=float)
    y = apply_channel(x, ChannelState((0, 0), multipath_gains=(1.0, 0.5)))
    np.testing.assert_allclose(y, x + 0.5 * np.roll(x, 1))


def test_channel_state_validation():
    with pytest.raises(ValidationError):
        ChannelState((0, 0), amplitude_scale=0.0)
    with pytest.raises(ValidationError):
        ChannelState((0, 0), noise_std=-1.0)
    with pytest.raises(ValidationError):
        ChannelState((0, 0), multipath_gains=())


def test_noise_is_seeded():
    x = np.zeros(256)
    np.testing.assert_array_equal(add_noise(x, 1.0, 5), add_noise(x, 1.0, 5))
    assert not np.array_equal(add_noise(x, 1.0, 5), add_noise(x, 1.0, 6))


def test_distance_scale_reference_and_falloff():
    assert distance_scale((30.0, 20.0)) == pytest.approx(1.0)
    assert distance_scale((30.0, 55.0)) == pytest.approx(70.0 / 105.0)
    assert distance_scale((30.0, 0.0)) > 1.0


def test_multipath_taps_shape_and_bounds():
    taps = multipath_taps(3, 3, 0.3)
    assert taps[0] == 1.0 and len(taps) == 3
    assert all(abs(t) <= 0.3 for t in taps[1:])
    assert multipath_taps(3) == multipath_taps(3)


def test_pure_tone_stands_above_floor():
    nfft = 4096
    k = 300
    x = np.cos(2 * np.pi * k * np.arange(nfft) / nfft)
    spec = compute_spectrum(x, nfft, "rectangular")
    assert int(np.argmax(spec.magnitudes_db)) == k
    assert spec.magnitudes_db[k] - np.median(spec.magnitudes_db) >= 60.0
    assert spec.magnitudes_db[k] == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("window", ["rectangular", "hann"])
def test_coherent_tone_level_independent_of_window(window):
    ex = Excitation(((F1, 0.25),), FS, N).coherent(16384)
    spec = compute_spectrum(synthesize_excitation(ex), 16384, window, sample_rate=FS)
    assert spec.magnitudes_db[spec.bin_of(ex.frequencies[0])] == pytest.approx(20 * np.log10(0.25), abs=1e-6)


@pytest.mark.parametrize("window", ["rectangular", "hann"])
def test_pure_cubic_im3_level(window):
    a3, a, b = -0.333, 0.5, 0.3
    ex = two_tone(a, b)
    y = tag_response(synthesize_excitation(ex), DeviceModel((0, 0, 0, a3)))
    spec = compute_spectrum(y, 16384, window, sample_rate=FS)
    f1, f2 = ex.frequencies
    low = spec.magnitudes_db[spec.bin_of(2 * f1 - f2)]
    high = spec.magnitudes_db[spec.bin_of(2 * f2 - f1)]
    assert abs(low - 20 * np.log10(cubic_im3(a3, a, b))) <= 0.5
    assert abs(high - 20 * np.log10(cubic_im3(a3, b, a))) <= 0.5


def test_zero_waveform_is_clamped_to_floor():
    spec = compute_spectrum(np.zeros(1024), 256)
    assert np.all(spec.magnitudes_db == DB_FLOOR)
    spec = compute_spectrum(np.zeros(1024), 256, full_scale="rms")
    assert np.all(spec.magnitudes_db == DB_FLOOR)


def test_spectrum_validation():
    with pytest.raises(ValidationError):
        compute_spectrum(np.zeros(100), 128)
    with pytest.raises(ValidationError):
        compute_spectrum(np.zeros(256), 100)
    with pytest.raises(ValidationError):
        compute_spectrum(np.zeros(256), 64, "blackman")
    with pytest.raises(ValidationError):
        compute_spectrum(np.zeros(256), 64, full_scale=-1.0)


def test_segment_averaging_counts_segments():
    x = np.random.default_rng(1).normal(size=4096)
    assert compute_spectrum(x, 1024).n_averages == 4
    assert compute_spectrum(x, 1024, average=False).n_averages == 1


def test_rms_full_scale_reference():
    ex = Excitation(((F1, 0.5),), FS, N).coherent(16384)
    spec = compute_spectrum(synthesize_excitation(ex) * 3.0, 16384, sample_rate=FS, full_scale="rms")
    # a lone sinusoid is its own full scale
    assert spec.magnitudes_db[spec.bin_of(ex.frequencies[0])] == pytest.approx(0.0, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([64, 256, 1024]))
def test_parseval_rectangular_single_segment(seed, n):
    x = np.random.default_rng(seed).normal(size=n)
    spec = compute_spectrum(x, n, "rectangular")
    assert spectrum_energy(spec, n) == pytest.approx(time_energy(x), rel=1e-3)


def test_parseval_on_device_output():
    ex = Excitation(((F1, 0.5), (F2, 0.5)), FS, 16384).coherent(16384)
    y = tag_response(synthesize_excitation(ex), DeviceModel(DIODE_COEFFICIENTS))
    spec = compute_spectrum(y, 16384, "rectangular", sample_rate=FS)
    assert spectrum_energy(spec, 16384) == pytest.approx(time_energy(y), rel=1e-3)


def test_identity_device_has_no_spurious_peaks():
    ex = two_tone()
    spec = compute_spectrum(synthesize_excitation(ex), 16384, "hann", sample_rate=FS)
    m = spec.magnitudes_db
    tone_bins = {spec.bin_of(f) for f in ex.frequencies}
    # Hann main lobe spans one bin either side of a coherent tone
    lobe = {b + d for b in tone_bins for d in (-1, 0, 1)}
    weakest_tone = min(m[b] for b in tone_bins)
    others = np.delete(m, sorted(lobe))
    assert others.max() < weakest_tone - 40.0


def test_spectrum_is_bit_deterministic():
    ex = two_tone()
    ch = ChannelState((30, 20), 1.0, (1.0, 0.1, -0.05), noise_std=0.01, seed=9)
    dev = DeviceModel(DIODE_COEFFICIENTS)

    def run():
        y = apply_channel(tag_response(synthesize_excitation(ex), dev), ch)
        return compute_spectrum(y, 16384, sample_rate=FS).magnitudes_db

    np.testing.assert_array_equal(run(), run())
