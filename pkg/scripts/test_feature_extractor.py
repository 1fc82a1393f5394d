"""
Tests for band statistics, relative wave energy, feature vectors and feature CSVs
"""

import math

import numpy as np
import pandas as pd
import pytest

from eeg_corpus import SAMPLING_RATE_HZ, EegSegment, SegmentCollection, synth_segment
from feature_extractor import (
    FEATURE_NAMES,
    LABEL_COLUMN,
    RWE_POSITIONS,
    FeatureSettings,
    FeatureVector,
    band_stats,
    extract_collection,
    extract_segment_features,
    feature_summary,
    feature_vector,
    features_to_frame,
    read_feature_csv,
    relative_wave_energy,
    write_feature_csv,
)
from pipeline_errors import DegenerateBand, SchemaError, ZeroEnergy
from wavelet_decomposer import decompose


def direct_stats(values):
    """The ten band statistics evaluated term by term with plain floats."""
    n = len(values)
    mean = sum(values) / n
    std = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))
    ordered = sorted(values)
    median = ordered[n // 2] if n % 2 else (ordered[n // 2 - 1] + ordered[n // 2]) / 2
    return {
        'min': min(values),
        'max': max(values),
        'mean': mean,
        'median': median,
        'std': std,
        'variance': std ** 2,
        'skewness_stat': sum(((v - mean) / std) ** 4 for v in values) / n - 3,
        'energy': sum(v * v for v in values),
        'entropy': sum(v * v * math.log(v * v) for v in values if v != 0),
    }


class TestBandStats:

    def test_hand_example(self):
        stats = band_stats([1.0, 2.0, 3.0, 4.0])
        assert stats.mean == 2.5
        assert stats.median == 2.5
        assert stats.std == pytest.approx(1.29099, abs=1e-5)
        assert stats.variance == pytest.approx(5 / 3, rel=1e-12)
        assert stats.energy == 30.0
        assert stats.rwe is None

    def test_unit_magnitudes_have_zero_entropy(self):
        assert band_stats([1.0, -1.0, 1.0, 1.0, -1.0]).entropy == 0.0

    def test_zero_coefficients_contribute_nothing_to_entropy(self):
        assert band_stats([0.0, 2.0, 0.0, -3.0]).entropy == pytest.approx(4 * math.log(4) + 9 * math.log(9))

    def test_gaussian_statistic_near_zero(self):
        draws = np.random.default_rng(0).standard_normal(10000)
        assert abs(band_stats(draws).skewness_stat) < 0.1

    def test_conventional_skewness(self):
        values = np.array([1.0, 2.0, 2.0, 3.0, 9.0])
        z = (values - values.mean()) / values.std(ddof=1)
        assert band_stats(values, 'conventional').skewness_stat == pytest.approx(np.mean(z ** 3), rel=1e-12)

    def test_constant_band_raises(self):
        with pytest.raises(DegenerateBand):
            band_stats([5.0, 5.0, 5.0])

    def test_constant_band_zero_policy(self):
        stats = band_stats([5.0, 5.0, 5.0], degenerate_policy='zero')
        assert stats.skewness_stat == 0.0
        assert stats.std == 0.0

    def test_against_direct_formulas(self, rng):
        for _ in range(200):
            values = rng.normal(0, rng.uniform(0.1, 10), size=int(rng.integers(2, 17))).tolist()
            stats = band_stats(values)
            for name, expected in direct_stats(values).items():
                assert getattr(stats, name) == pytest.approx(expected, rel=1e-12, abs=1e-12), name

    def test_order_invariants(self, rng):
        for _ in range(50):
            stats = band_stats(rng.standard_normal(33))
            assert stats.min <= stats.median <= stats.max
            assert stats.min <= stats.mean <= stats.max
            assert stats.variance == pytest.approx(stats.std ** 2, rel=1e-12)

    def test_shuffle_invariance(self, rng):
        values = rng.standard_normal(64)
        a = band_stats(values)
        b = band_stats(rng.permutation(values))
        for name in ('min', 'max', 'median', 'energy'):
            assert getattr(a, name) == getattr(b, name)
        for name in ('mean', 'std', 'variance', 'skewness_stat', 'entropy'):
            assert getattr(a, name) == pytest.approx(getattr(b, name), rel=1e-12, abs=1e-12)

    def test_scaling(self, rng):
        values = rng.standard_normal(100)
        c = 3.5
        a = band_stats(values)
        b = band_stats(c * values)
        for name in ('min', 'max', 'mean', 'median', 'std'):
            assert getattr(b, name) == pytest.approx(c * getattr(a, name), rel=1e-9)
        for name in ('variance', 'energy'):
            assert getattr(b, name) == pytest.approx(c ** 2 * getattr(a, name), rel=1e-9)
        assert b.skewness_stat == pytest.approx(a.skewness_stat, rel=1e-9, abs=1e-12)
        expected_entropy = c ** 2 * a.entropy + c ** 2 * math.log(c ** 2) * a.energy
        assert b.entropy == pytest.approx(expected_entropy, rel=1e-9)

    def test_bad_modes(self):
        with pytest.raises(ValueError):
            band_stats([1.0, 2.0], skewness_mode='cubic')
        with pytest.raises(ValueError):
            band_stats([1.0, 2.0], degenerate_policy='ignore')


class TestRelativeWaveEnergy:

    def test_sums_to_one(self, rng):
        for _ in range(20):
            rwe = relative_wave_energy(decompose(rng.standard_normal(1024), 4))
            assert rwe.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all((rwe >= 0) & (rwe <= 1))

    def test_constant_signal_only_approximation(self):
        rwe = relative_wave_energy(decompose(np.full(512, 2.0), 4, 'periodic'))
        np.testing.assert_allclose(rwe, [0, 0, 0, 0, 1], atol=1e-12)

    def test_zero_tree(self):
        with pytest.raises(ZeroEnergy):
            relative_wave_energy(decompose(np.zeros(512), 4))

    def test_tone_dominates_alpha_band(self):
        # 10 Hz sits inside the 7.5-15 Hz D3 band at fs = 120 Hz
        segment = synth_segment([(10.0, 1.0)], 0.0, 4096, fs=120.0)
        assert relative_wave_energy(decompose(segment.samples, 4))[2] > 0.7


class TestFeatureVector:

    def test_fifty_finite_values(self, tone_segment):
        vector = extract_segment_features(tone_segment)
        assert vector.values.shape == (50,)
        assert np.all(np.isfinite(vector.values))
        assert vector.label == 'A'
        assert vector.source == 'A001'
        assert vector.names == FEATURE_NAMES

    def test_canonical_order(self):
        assert FEATURE_NAMES[:3] == ['D1_min', 'D1_max', 'D1_mean']
        assert FEATURE_NAMES[-1] == 'A4_entropy'
        assert RWE_POSITIONS == (8, 18, 28, 38, 48)

    def test_rwe_entries_sum_to_one(self, tone_segment):
        vector = extract_segment_features(tone_segment)
        assert vector.values[list(RWE_POSITIONS)].sum() == pytest.approx(1.0, abs=1e-12)

    def test_deterministic(self, rng):
        x = rng.standard_normal(4097)
        a = feature_vector(decompose(x, 4), 'E')
        b = feature_vector(decompose(x.copy(), 4), 'E')
        np.testing.assert_array_equal(a.values, b.values)

    def test_zero_signal(self):
        with pytest.raises(ZeroEnergy):
            feature_vector(decompose(np.zeros(4097), 4), 'A')

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            FeatureVector(np.ones(49), 'A')

    def test_error_names_segment(self):
        segment = EegSegment(np.zeros(4097), SAMPLING_RATE_HZ, 'C', 42)
        with pytest.raises(ZeroEnergy) as excinfo:
            extract_segment_features(segment)
        assert 'C042' in excinfo.value.diagnostic()

    def test_without_prefilter(self, tone_segment):
        settings = FeatureSettings(prefilter=False, extension_mode='periodic')
        assert extract_segment_features(tone_segment, settings).values.shape == (50,)

    def test_workers_do_not_change_results(self):
        segments = tuple(synth_segment([(12.0, 1.0)], 0.5, 1024, seed=i, set_id='B', segment_index=i)
                         for i in range(1, 9))
        collection = SegmentCollection('B', segments)
        serial = extract_collection(collection)
        threaded = extract_collection(collection, workers=4)
        for a, b in zip(serial, threaded):
            np.testing.assert_array_equal(a.values, b.values)


class TestFeatureCsv:

    @pytest.fixture
    def vectors(self):
        return [extract_segment_features(synth_segment([(8.0, 1.0)], 0.3, 1024, seed=i, set_id='D',
                                                       segment_index=i)) for i in range(1, 6)]

    def test_write_then_read(self, vectors, tmp_path):
        path = write_feature_csv(tmp_path / 'features_D.csv', vectors)
        matrix, labels = read_feature_csv(path)
        np.testing.assert_array_equal(matrix, np.vstack([v.values for v in vectors]))
        assert list(labels) == ['D'] * 5

    def test_header(self, vectors, tmp_path):
        path = write_feature_csv(tmp_path / 'features_D.csv', vectors)
        assert path.read_text().splitlines()[0].split(',') == FEATURE_NAMES + [LABEL_COLUMN]

    def test_byte_identical_rewrites(self, vectors, tmp_path):
        a = write_feature_csv(tmp_path / 'a.csv', vectors).read_bytes()
        b = write_feature_csv(tmp_path / 'b.csv', vectors).read_bytes()
        assert a == b

    def test_renamed_column(self, vectors, tmp_path):
        path = write_feature_csv(tmp_path / 'features_D.csv', vectors)
        frame = pd.read_csv(path).rename(columns={'D2_energy': 'D2_power'})
        frame.to_csv(path, index=False)
        with pytest.raises(SchemaError) as excinfo:
            read_feature_csv(path)
        assert excinfo.value.column == 'D2_energy'
        assert 'features_D.csv' in str(excinfo.value)

    def test_non_numeric_value(self, vectors, tmp_path):
        path = write_feature_csv(tmp_path / 'features_D.csv', vectors)
        frame = pd.read_csv(path)
        frame['A4_mean'] = frame['A4_mean'].astype(object)
        frame.loc[2, 'A4_mean'] = 'oops'
        frame.to_csv(path, index=False)
        with pytest.raises(SchemaError) as excinfo:
            read_feature_csv(path)
        assert excinfo.value.column == 'A4_mean'
        assert 'row 3' in str(excinfo.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError):
            read_feature_csv(tmp_path / 'absent.csv')

    def test_summary_has_one_row_per_set(self, vectors):
        summary = feature_summary({'D': features_to_frame(vectors)})
        assert list(summary.index) == ['D']
        assert summary.loc['D', 'D1_energy'] == pytest.approx(np.mean([v.as_dict()['D1_energy'] for v in vectors]))
