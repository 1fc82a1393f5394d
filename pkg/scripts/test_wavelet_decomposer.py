"""
Tests for the db4 filter bank, multilevel decomposition and band reconstruction
"""

import numpy as np
import pytest

from eeg_corpus import SAMPLING_RATE_HZ
from pipeline_errors import LevelError, SignalTooShort
from wavelet_decomposer import (
    BandId,
    band_frequency_map,
    db4_filters,
    decompose,
    dwt_step,
    reconstruct_band,
    waverec,
)

# Published minimum-phase db4 scaling coefficients
DB4_REFERENCE = [0.23037781330885523, 0.7148465705525415, 0.6308807679295904, -0.02798376941698385,
                 -0.18703481171888114, 0.030841381835986965, 0.032883011666982945, -0.010597401784997278]


def relative_error(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestFilters:

    def test_scaling_filter_sum(self):
        assert db4_filters().lowpass.sum() == pytest.approx(np.sqrt(2), abs=1e-12)

    def test_wavelet_filter_sum(self):
        assert db4_filters().highpass.sum() == pytest.approx(0.0, abs=1e-12)

    def test_orthonormal(self):
        h = db4_filters().lowpass
        assert np.dot(h, h) == pytest.approx(1.0, abs=1e-12)

    def test_double_shift_orthogonality(self):
        h = db4_filters().lowpass
        for m in (1, 2, 3):
            assert np.dot(h[:-2 * m], h[2 * m:]) == pytest.approx(0.0, abs=1e-12)

    def test_quadrature_mirror(self):
        pair = db4_filters()
        h, g = pair.lowpass, pair.highpass
        for k in range(8):
            assert g[k] == (-1) ** k * h[7 - k]

    @pytest.mark.parametrize('p', [0, 1, 2, 3])
    def test_vanishing_moments(self, p):
        g = db4_filters().highpass
        assert np.sum(g * np.arange(8) ** p) == pytest.approx(0.0, abs=1e-9)

    def test_matches_published_taps(self):
        np.testing.assert_allclose(db4_filters().lowpass, DB4_REFERENCE, atol=1e-9)

    def test_eight_taps_read_only(self):
        pair = db4_filters()
        assert pair.length == 8
        with pytest.raises(ValueError):
            pair.lowpass[0] = 0.0


class TestDwtStep:

    def test_constant_periodic(self):
        approx, detail = dwt_step(np.full(64, 2.5), mode='periodic')
        np.testing.assert_allclose(approx, 2.5 * np.sqrt(2), atol=1e-10)
        np.testing.assert_allclose(detail, 0.0, atol=1e-10)

    def test_ramp_interior_details_vanish(self):
        x = np.arange(64, dtype=float)
        _, detail = dwt_step(x, mode='periodic')
        np.testing.assert_allclose(detail[3:31], 0.0, atol=1e-9)

    def test_cubic_interior_details_vanish(self):
        t = np.linspace(-1.0, 1.0, 128)
        _, detail = dwt_step(1.0 - 2.0 * t + 0.5 * t ** 2 + 3.0 * t ** 3, mode='periodic')
        np.testing.assert_allclose(detail[3:63], 0.0, atol=1e-9)

    def test_centred_impulse_picks_even_taps(self):
        pair = db4_filters()
        x = np.zeros(64)
        x[32] = 1.0
        approx, detail = dwt_step(x, mode='periodic')
        expected_a = np.zeros(32)
        expected_d = np.zeros(32)
        for i in range(32):
            k = 32 - (2 * i - 6)
            if 0 <= k < 8:
                expected_a[i] = pair.lowpass[k]
                expected_d[i] = pair.highpass[k]
        np.testing.assert_array_equal(approx, expected_a)
        np.testing.assert_array_equal(detail, expected_d)
        assert set(np.flatnonzero(approx)) == {16, 17, 18, 19}

    @pytest.mark.parametrize('n', [8, 9, 64, 101, 4097])
    def test_lengths(self, n):
        x = np.ones(n)
        assert len(dwt_step(x, mode='periodic')[0]) == -(-n // 2)
        assert len(dwt_step(x, mode='symmetric')[0]) == (n + 7) // 2

    def test_too_short(self):
        with pytest.raises(SignalTooShort):
            dwt_step(np.ones(7))


class TestDecompose:

    def test_corpus_length_periodic(self, rng):
        tree = decompose(rng.standard_normal(4097), 4, 'periodic')
        assert [len(tree.band(b)) for b in BandId] == [2049, 1025, 513, 257, 257]
        assert tree.original_length == 4097
        assert tree.extension_mode == 'periodic'

    def test_corpus_length_symmetric(self, rng):
        tree = decompose(rng.standard_normal(4097), 4, 'symmetric')
        assert [len(d) for d in tree.details] == [2052, 1029, 518, 262]
        assert len(tree.approx) == 262

    @pytest.mark.parametrize('mode', ['periodic', 'symmetric'])
    def test_constant_signal(self, mode):
        tree = decompose(np.full(512, 3.0), 4, mode)
        for detail in tree.details:
            np.testing.assert_allclose(detail, 0.0, atol=1e-9)
        np.testing.assert_allclose(tree.approx, 12.0, atol=1e-9)

    def test_parseval_periodic(self):
        generator = np.random.default_rng(0)
        for _ in range(1000):
            n = int(generator.integers(128, 4098))
            x = generator.standard_normal(n) * generator.uniform(0.01, 100.0)
            tree = decompose(x, 4, 'periodic')
            assert abs(tree.energy() - np.dot(x, x)) / np.dot(x, x) < 1e-8

    @pytest.mark.parametrize('n', [4096, 4097])
    def test_parseval_seed_zero_corpus_length(self, n):
        x = np.random.default_rng(0).standard_normal(n)
        assert decompose(x, 4, 'periodic').energy() == pytest.approx(np.dot(x, x), rel=1e-8)

    def test_odd_length_padded_with_zero(self):
        x = np.arange(1.0, 10.0)
        np.testing.assert_array_equal(dwt_step(x, mode='periodic')[0],
                                      dwt_step(np.append(x, 0.0), mode='periodic')[0])

    def test_shift_by_two_shifts_d1_by_one(self, rng):
        x = rng.standard_normal(256)
        d1 = decompose(x, 4, 'periodic').details[0]
        shifted = decompose(np.roll(x, 2), 4, 'periodic').details[0]
        np.testing.assert_allclose(shifted, np.roll(d1, 1), rtol=0, atol=1e-15)

    @pytest.mark.parametrize('levels', [0, 11, 2.5])
    def test_bad_levels(self, levels, rng):
        with pytest.raises(LevelError):
            decompose(rng.standard_normal(4097), levels)

    def test_too_short(self):
        with pytest.raises(SignalTooShort):
            decompose(np.ones(127), 4)

    def test_coefficients_are_read_only(self, rng):
        tree = decompose(rng.standard_normal(256), 4)
        with pytest.raises(ValueError):
            tree.details[0][0] = 1.0


class TestReconstruction:

    def test_perfect_reconstruction_random_signals(self):
        generator = np.random.default_rng(1)
        for trial in range(1000):
            n = int(generator.integers(64, 4098))
            mode = 'periodic' if trial % 2 else 'symmetric'
            levels = 4 if n >= 128 else 3
            x = generator.standard_normal(n)
            tree = decompose(x, levels, mode)
            total = sum(reconstruct_band(tree, band) for band in tree.band_names())
            assert len(total) == n
            assert relative_error(total, x) < 1e-8

    @pytest.mark.parametrize('mode', ['periodic', 'symmetric'])
    def test_waverec_inverts(self, mode, rng):
        x = rng.standard_normal(4097)
        np.testing.assert_allclose(waverec(decompose(x, 4, mode)), x, atol=1e-9)

    def test_zero_signal(self):
        tree = decompose(np.zeros(512), 4)
        for band in BandId:
            np.testing.assert_array_equal(reconstruct_band(tree, band), np.zeros(512))

    def test_tone_energy_lands_in_alpha_band(self):
        # At fs = 120 Hz the D3 band spans 7.5-15 Hz
        fs = 120.0
        x = np.sin(2 * np.pi * 10.0 * np.arange(4096) / fs)
        tree = decompose(x, 4)
        energies = {b: np.sum(reconstruct_band(tree, b) ** 2) for b in tree.band_names()}
        assert energies['D3'] / sum(energies.values()) > 0.7

    def test_unknown_band(self, rng):
        tree = decompose(rng.standard_normal(256), 3)
        with pytest.raises(ValueError):
            reconstruct_band(tree, 'D4')


class TestBandMap:

    def test_nominal_ranges(self):
        bands = {entry.band: entry for entry in band_frequency_map(SAMPLING_RATE_HZ, 4)}
        assert bands['D1'].nominal == (30.0, 60.0)
        assert bands['D2'].nominal == (15.0, 30.0)
        assert bands['D3'].nominal == (8.0, 15.0)
        assert bands['D4'].nominal == (4.0, 8.0)
        assert bands['A4'].nominal == (0.0, 4.0)
        assert bands['A4'].rhythm == 'delta'

    def test_exact_d1(self):
        low, high = band_frequency_map(SAMPLING_RATE_HZ, 4)[0].exact
        assert low == pytest.approx(43.40, abs=0.01)
        assert high == pytest.approx(86.81, abs=0.01)

    def test_exact_ranges_tile_the_spectrum(self):
        entries = band_frequency_map(SAMPLING_RATE_HZ, 4)
        assert entries[-1].exact[0] == 0.0
        for finer, coarser in zip(entries[:-2], entries[1:-1]):
            assert finer.exact[0] == coarser.exact[1]

    def test_no_nominal_map_for_other_depths(self):
        assert all(entry.nominal is None for entry in band_frequency_map(SAMPLING_RATE_HZ, 3))

    def test_band_rhythms(self):
        assert [b.rhythm for b in BandId] == ['gamma', 'beta', 'alpha', 'theta', 'delta']
