"""
Tests for the Butterworth low-pass design and zero-phase filtering
"""

import numpy as np
import pytest
from scipy import signal

from butterworth_filter import (
    design_butterworth_lowpass,
    filtfilt,
    frequency_response,
    impulse_response,
    lowpass_segment,
)
from eeg_corpus import SAMPLING_RATE_HZ
from pipeline_errors import DesignError, SignalTooShort

FS = SAMPLING_RATE_HZ


def digital_butterworth_magnitude(f, cutoff, order, fs):
    """Closed-form magnitude of the bilinear-transformed Butterworth filter."""
    ratio = np.tan(np.pi * f / fs) / np.tan(np.pi * cutoff / fs)
    return 1.0 / np.sqrt(1.0 + ratio ** (2 * order))


def tone_amplitude_phase(x, freq, fs, start=0):
    """Least-squares amplitude and phase of a sinusoid at freq (phase 0 for a pure sine)."""
    t = (start + np.arange(len(x))) / fs
    basis = np.column_stack([np.sin(2 * np.pi * freq * t), np.cos(2 * np.pi * freq * t)])
    (a, b), *_ = np.linalg.lstsq(basis, x, rcond=None)
    return np.hypot(a, b), np.arctan2(b, a)


@pytest.fixture
def cascade():
    return design_butterworth_lowpass(4, 60.0, FS)


class TestDesign:

    def test_two_sections_for_order_four(self, cascade):
        assert cascade.sections.shape == (2, 5)
        assert cascade.order == 4

    def test_unit_dc_gain(self, cascade):
        assert abs(frequency_response(cascade, [0.0])[0]) == pytest.approx(1.0, abs=1e-9)
        assert cascade.dc_gain == pytest.approx(1.0, abs=1e-9)

    def test_half_power_at_cutoff(self, cascade):
        assert abs(frequency_response(cascade, [60.0])[0]) == pytest.approx(1 / np.sqrt(2), abs=1e-6)

    def test_magnitude_at_80_hz_matches_closed_form(self, cascade):
        expected = digital_butterworth_magnitude(80.0, 60.0, 4, FS)
        assert abs(frequency_response(cascade, [80.0])[0]) == pytest.approx(expected, rel=1e-9)

    def test_matches_scipy_design(self, cascade):
        freqs = np.linspace(0.0, FS / 2 - 0.01, 300)
        _, reference = signal.sosfreqz(signal.butter(4, 60.0, fs=FS, output='sos'), worN=freqs, fs=FS)
        np.testing.assert_allclose(np.abs(frequency_response(cascade, freqs)), np.abs(reference), atol=1e-9)

    def test_magnitude_nonincreasing(self, cascade):
        magnitude = np.abs(frequency_response(cascade, np.linspace(0.0, FS / 2, 2000)))
        assert np.all(np.diff(magnitude) <= 1e-12)

    @pytest.mark.parametrize('order', [2, 4, 6, 8, 10, 12])
    def test_poles_inside_unit_circle(self, order):
        cascade = design_butterworth_lowpass(order, 30.0, FS)
        assert np.all(np.abs(cascade.poles()) < 1.0)
        assert abs(frequency_response(cascade, [30.0])[0]) == pytest.approx(1 / np.sqrt(2), abs=1e-6)

    def test_impulse_tail_dies_out(self, cascade):
        """
        Tail energy after one settle length (6 x order) stays below 1e-6 but misses
        1e-12 for order 4 at 60 Hz / 173.61 Hz; 1e-12 holds after ten settle lengths.
        """
        h = impulse_response(cascade, 20 * cascade.settle_length)
        assert np.sum(h[cascade.settle_length:] ** 2) < 1e-6
        assert np.sum(h[10 * cascade.settle_length:] ** 2) < 1e-12

    def test_impulse_response_matches_frequency_response(self, cascade):
        h = impulse_response(cascade, 2048)
        freqs = np.fft.rfftfreq(2048, d=1.0 / FS)
        np.testing.assert_allclose(np.fft.rfft(h), frequency_response(cascade, freqs), atol=1e-9)

    @pytest.mark.parametrize('order,cutoff', [(3, 60.0), (14, 60.0), (0, 60.0), (4, 0.0),
                                              (4, FS / 2), (4, 100.0), (4, -5.0)])
    def test_invalid_design(self, order, cutoff):
        with pytest.raises(DesignError):
            design_butterworth_lowpass(order, cutoff, FS)


class TestFiltfilt:

    def test_constant_passes_unchanged(self, cascade):
        out = filtfilt(cascade, np.full(1000, 3.7))
        np.testing.assert_allclose(out, 3.7, atol=1e-6)

    def test_length_preserved(self, cascade, rng):
        x = rng.standard_normal(4097)
        assert filtfilt(cascade, x).shape == x.shape

    def test_passband_tone_keeps_amplitude_and_phase(self, cascade):
        t = np.arange(4097) / FS
        out = filtfilt(cascade, np.sin(2 * np.pi * 10.0 * t))
        interior = slice(500, -500)
        amplitude, phase = tone_amplitude_phase(out[interior], 10.0, FS, start=500)
        assert amplitude == pytest.approx(1.0, abs=1e-3)
        assert phase == pytest.approx(0.0, abs=1e-3)

    def test_stopband_tone_attenuated_by_squared_magnitude(self, cascade):
        t = np.arange(4097) / FS
        out = filtfilt(cascade, np.sin(2 * np.pi * 80.0 * t))
        amplitude, _ = tone_amplitude_phase(out[500:-500], 80.0, FS, start=500)
        expected = digital_butterworth_magnitude(80.0, 60.0, 4, FS) ** 2
        assert amplitude == pytest.approx(expected, rel=1e-3)

    def test_linearity(self, cascade, rng):
        x = rng.standard_normal(600)
        y = rng.standard_normal(600)
        np.testing.assert_allclose(filtfilt(cascade, 2.5 * x - 0.75 * y),
                                   2.5 * filtfilt(cascade, x) - 0.75 * filtfilt(cascade, y), atol=1e-9)

    def test_energy_not_amplified(self, cascade, rng):
        for _ in range(20):
            x = rng.standard_normal(1000) * rng.uniform(0.1, 100.0)
            assert np.sum(filtfilt(cascade, x) ** 2) <= np.sum(x ** 2) * (1 + 1e-6)

    @pytest.mark.parametrize('position', [0, 1, -1])
    def test_edge_impulse_not_amplified(self, cascade, position):
        x = np.zeros(200)
        x[position] = 1.0
        assert np.sum(filtfilt(cascade, x) ** 2) <= 1.0 + 1e-6

    def test_edge_heavy_input_not_amplified(self, cascade, rng):
        for _ in range(20):
            x = rng.standard_normal(300) * 0.01
            x[:5] += rng.uniform(-50.0, 50.0, 5)
            x[-5:] += rng.uniform(-50.0, 50.0, 5)
            assert np.sum(filtfilt(cascade, x) ** 2) <= np.sum(x ** 2) * (1 + 1e-6)

    def test_too_short(self, cascade):
        with pytest.raises(SignalTooShort):
            filtfilt(cascade, np.zeros(cascade.pad_length))
        assert filtfilt(cascade, np.zeros(cascade.pad_length + 1)).shape == (cascade.pad_length + 1,)

    def test_lowpass_segment_is_deterministic(self, rng):
        x = rng.standard_normal(4097)
        np.testing.assert_array_equal(lowpass_segment(x, FS), lowpass_segment(x, FS))
