"""
Feature Extractor
Ten statistics per wavelet sub-band (min, max, mean, median, std, variance,
fourth-moment "skewness" statistic, energy, relative wave energy, entropy)
assembled into the 50-column feature vector, plus feature CSV reading and
writing.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import xlogy

from butterworth_filter import design_butterworth_lowpass, filtfilt
from eeg_corpus import EegSegment, SegmentCollection
from pipeline_errors import DegenerateBand, PipelineError, SchemaError, ZeroEnergy
from wavelet_decomposer import DecompositionTree, band_labels, decompose

logger = logging.getLogger(__name__)

BAND_ORDER = ('D1', 'D2', 'D3', 'D4', 'A4')
STAT_ORDER = ('min', 'max', 'mean', 'median', 'std', 'variance',
              'skewness_stat', 'energy', 'rwe', 'entropy')
SKEWNESS_MODES = ('printed', 'conventional')
DEGENERATE_POLICIES = ('raise', 'zero')
LABEL_COLUMN = 'label'


def feature_names(bands: Sequence[str] = BAND_ORDER) -> List[str]:
    """Column names '<band>_<stat>' in canonical order."""
    return [f"{band}_{stat}" for band in bands for stat in STAT_ORDER]


FEATURE_NAMES = feature_names()
RWE_POSITIONS = tuple(i for i, name in enumerate(FEATURE_NAMES) if name.endswith('_rwe'))


@dataclass
class BandFeatures:
    min: float
    max: float
    mean: float
    median: float
    std: float
    variance: float
    skewness_stat: float
    energy: float
    rwe: Optional[float]
    entropy: float

    def as_row(self) -> List[float]:
        return [getattr(self, stat) for stat in STAT_ORDER]


def band_stats(coeffs, skewness_mode: str = 'printed',
               degenerate_policy: str = 'raise') -> BandFeatures:
    """
    Statistics of one band's coefficients (rwe is left unset).

    std uses the N-1 denominator and variance = std^2. skewness_stat is
    (1/N) sum(((D - mean)/std)^4) - 3 in 'printed' mode and
    (1/N) sum(((D - mean)/std)^3) in 'conventional' mode. entropy is
    sum(D^2 log D^2) with 0 log 0 = 0.

    Args:
        coeffs: Non-empty finite coefficient array
        skewness_mode: 'printed' or 'conventional'
        degenerate_policy: 'raise' DegenerateBand on zero spread, or 'zero'
            to report skewness_stat as 0

    Returns:
        BandFeatures with rwe=None
    """
    if skewness_mode not in SKEWNESS_MODES:
        raise ValueError(f"skewness mode must be one of {SKEWNESS_MODES}")
    if degenerate_policy not in DEGENERATE_POLICIES:
        raise ValueError(f"degenerate policy must be one of {DEGENERATE_POLICIES}")
    d = np.asarray(coeffs, dtype=float).ravel()
    if d.size == 0:
        raise ValueError("band has no coefficients")
    if not np.all(np.isfinite(d)):
        raise ValueError("band has non-finite coefficients")

    n = d.size
    mean = float(np.mean(d))
    std = float(np.std(d, ddof=1)) if n > 1 else 0.0

    if std == 0.0:
        if degenerate_policy == 'raise':
            raise DegenerateBand(f"band of {n} coefficient(s) has zero spread; skewness statistic undefined")
        skew = 0.0
    else:
        z = (d - mean) / std
        skew = float(np.mean(z ** 4) - 3.0) if skewness_mode == 'printed' else float(np.mean(z ** 3))

    squared = d * d
    return BandFeatures(
        min=float(d.min()),
        max=float(d.max()),
        mean=mean,
        median=float(np.median(d)),
        std=std,
        variance=std * std,
        skewness_stat=skew,
        energy=float(squared.sum()),
        rwe=None,
        entropy=float(xlogy(squared, squared).sum()),
    )


def relative_wave_energy(tree: DecompositionTree) -> np.ndarray:
    """Band energy over total energy, ordered D1..DL, AL."""
    energies = np.array([float(np.dot(c, c)) for c in tree.bands().values()])
    total = energies.sum()
    if total == 0.0:
        raise ZeroEnergy("all wavelet coefficients are zero")
    return energies / total


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    label: str
    bands: Tuple[str, ...] = BAND_ORDER
    source: Optional[str] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (len(STAT_ORDER) * len(self.bands),):
            raise ValueError(f"feature vector must hold {len(STAT_ORDER) * len(self.bands)} values")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature vector has non-finite values")
        rwe = values[STAT_ORDER.index('rwe')::len(STAT_ORDER)]
        if abs(rwe.sum() - 1.0) > 1e-9:
            raise ValueError(f"relative wave energies sum to {rwe.sum()!r}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def names(self) -> List[str]:
        return feature_names(self.bands)

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))


def feature_vector(tree: DecompositionTree, label: str, skewness_mode: str = 'printed',
                   degenerate_policy: str = 'raise', source: Optional[str] = None) -> FeatureVector:
    """Ten features for every band of the tree in canonical order."""
    rwe = relative_wave_energy(tree)
    rows = []
    for share, coeffs in zip(rwe, tree.bands().values()):
        stats = band_stats(coeffs, skewness_mode, degenerate_policy)
        stats.rwe = float(share)
        rows.extend(stats.as_row())
    return FeatureVector(np.array(rows), label, tuple(tree.band_names()), source)


@dataclass(frozen=True)
class FeatureSettings:
    """Everything between raw samples and the feature vector."""
    filter_order: int = 4
    cutoff_hz: float = 60.0
    levels: int = 4
    extension_mode: str = 'symmetric'
    skewness_mode: str = 'printed'
    degenerate_policy: str = 'raise'
    prefilter: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def feature_columns(self) -> List[str]:
        """Feature CSV columns for this decomposition depth."""
        return feature_names(band_labels(self.levels))


def decompose_segment(segment: EegSegment, settings: FeatureSettings = FeatureSettings()) -> DecompositionTree:
    """Band-limit (optionally) and decompose one segment."""
    samples = segment.samples
    if settings.prefilter:
        cascade = design_butterworth_lowpass(settings.filter_order, settings.cutoff_hz, segment.fs)
        samples = filtfilt(cascade, samples)
    return decompose(samples, settings.levels, settings.extension_mode)


def extract_segment_features(segment: EegSegment,
                             settings: FeatureSettings = FeatureSettings()) -> FeatureVector:
    try:
        tree = decompose_segment(segment, settings)
        return feature_vector(tree, segment.set_id, settings.skewness_mode,
                              settings.degenerate_policy, source=segment.label)
    except PipelineError as e:
        e.context = e.context or f"segment {segment.label}"
        raise


def extract_collection(collection: SegmentCollection, settings: FeatureSettings = FeatureSettings(),
                       workers: int = 1) -> List[FeatureVector]:
    """Feature vectors of a whole set, in segment order whatever the worker count."""
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vectors = list(pool.map(lambda s: extract_segment_features(s, settings), collection))
    else:
        vectors = [extract_segment_features(s, settings) for s in collection]
    logger.info("Extracted %d feature vectors for set %s", len(vectors), collection.set_id)
    return vectors


def features_to_frame(vectors: Iterable[FeatureVector]) -> pd.DataFrame:
    vectors = list(vectors)
    if not vectors:
        return pd.DataFrame(columns=FEATURE_NAMES + [LABEL_COLUMN])
    frame = pd.DataFrame(np.vstack([v.values for v in vectors]), columns=vectors[0].names)
    frame[LABEL_COLUMN] = [v.label for v in vectors]
    return frame


def write_feature_csv(path, vectors: Iterable[FeatureVector]) -> Path:
    """One row per segment, 50 feature columns then the label column."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    features_to_frame(vectors).to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
    return path


def feature_csv_path(directory, set_id: str) -> Path:
    return Path(directory) / f"features_{set_id}.csv"


def read_feature_csv(path, expected_columns: Sequence[str] = FEATURE_NAMES) -> Tuple[np.ndarray, np.ndarray]:
    """
    Read and validate a feature CSV.

    Returns:
        (feature matrix, label array)
    """
    path = Path(path)
    if not path.exists():
        raise SchemaError(path, '*', "file does not exist")
    try:
        frame = pd.read_csv(path, dtype={LABEL_COLUMN: str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise SchemaError(path, '*', f"unreadable CSV ({e})") from None

    expected = list(expected_columns) + [LABEL_COLUMN]
    columns = list(frame.columns)
    for position, name in enumerate(expected):
        if position >= len(columns):
            raise SchemaError(path, name, "column missing")
        if columns[position] != name:
            raise SchemaError(path, name, f"found {columns[position]!r} at position {position + 1}")
    if len(columns) > len(expected):
        raise SchemaError(path, columns[len(expected)], "unexpected extra column")

    for name in expected_columns:
        numeric = pd.to_numeric(frame[name], errors='coerce').to_numpy(dtype=float)
        bad = ~np.isfinite(numeric)
        if bad.any():
            row = int(np.flatnonzero(bad)[0]) + 1
            raise SchemaError(path, name, f"non-numeric or non-finite value in data row {row}")
    if frame[LABEL_COLUMN].isna().any():
        raise SchemaError(path, LABEL_COLUMN, "missing label")

    matrix = frame[list(expected_columns)].to_numpy(dtype=float)
    return matrix, frame[LABEL_COLUMN].to_numpy(dtype=str)


def feature_summary(frames: Dict[str, pd.DataFrame]) -> pd.DataFrame:
    """Mean of every feature per set, one row per set."""
    rows = {set_id: frame.drop(columns=[LABEL_COLUMN]).mean() for set_id, frame in frames.items()}
    summary = pd.DataFrame(rows).T
    summary.index.name = 'set'
    return summary
