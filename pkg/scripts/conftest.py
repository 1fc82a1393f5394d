"""
Shared pytest fixtures for the pipeline test suite
"""

import os
import sys

# Add parent directory to path
parent_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if parent_dir not in sys.path:
    sys.path.insert(0, parent_dir)

import numpy as np
import pytest

from eeg_corpus import SAMPLING_RATE_HZ, SEGMENT_LENGTH, EegSegment, segment_filename, write_segment


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tone_segment():
    """Pure 10 Hz tone at the corpus sampling rate."""
    t = np.arange(SEGMENT_LENGTH) / SAMPLING_RATE_HZ
    return EegSegment(np.sin(2 * np.pi * 10.0 * t), SAMPLING_RATE_HZ, 'A', 1)


@pytest.fixture
def make_set_dir(tmp_path):
    """Write a complete (or partial) set of random segments and return its directory."""
    def _make(set_id='A', indices=range(1, 101), n=SEGMENT_LENGTH, directory=None, seed=0):
        directory = directory or tmp_path / set_id
        generator = np.random.default_rng(seed)
        for index in indices:
            samples = np.round(generator.normal(0, 50, n))
            write_segment(EegSegment(samples, SAMPLING_RATE_HZ, set_id, index),
                          directory / segment_filename(set_id, index))
        return directory
    return _make


@pytest.fixture
def blobs():
    """Two well separated Gaussian classes in 2-D, labels +1/-1."""
    generator = np.random.default_rng(7)
    positive = generator.normal([2.0, 2.0], 0.5, size=(20, 2))
    negative = generator.normal([-2.0, -2.0], 0.5, size=(20, 2))
    X = np.vstack([positive, negative])
    y = np.array([1] * 20 + [-1] * 20)
    return X, y
