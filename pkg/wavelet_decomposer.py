"""
Wavelet Decomposer
Orthogonal Daubechies (db4) filter bank: multilevel decomposition of a segment
into detail bands D1..D4 and the approximation A4, per-band reconstruction,
and the band-to-frequency map.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from math import comb
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from pipeline_errors import LevelError, SignalTooShort

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = 4
EXTENSION_MODES = ('symmetric', 'periodic')


class BandId(str, Enum):
    """Sub-bands of the 4-level decomposition with their rhythm names."""
    D1 = 'D1'
    D2 = 'D2'
    D3 = 'D3'
    D4 = 'D4'
    A4 = 'A4'

    @property
    def rhythm(self) -> str:
        return BAND_RHYTHMS[self.value]


BAND_RHYTHMS = {'D1': 'gamma', 'D2': 'beta', 'D3': 'alpha', 'D4': 'theta', 'A4': 'delta'}

# Nominal ranges (Hz) once the signal is band-limited to 60 Hz
NOMINAL_BANDS = {'D1': (30.0, 60.0), 'D2': (15.0, 30.0), 'D3': (8.0, 15.0),
                 'D4': (4.0, 8.0), 'A4': (0.0, 4.0)}


@dataclass(frozen=True)
class WaveletFilterPair:
    """Orthonormal scaling filter h and its quadrature-mirror wavelet filter g."""
    lowpass: np.ndarray
    highpass: np.ndarray

    @property
    def length(self) -> int:
        return len(self.lowpass)


def daubechies_scaling_filter(vanishing_moments: int) -> np.ndarray:
    """
    Minimum-phase Daubechies scaling filter by spectral factorization.

    |H(w)|^2 = 2 cos^2N(w/2) P(sin^2(w/2)) with P(y) = sum C(N-1+k, k) y^k.
    Each root y of P gives a reciprocal pair of z-plane zeros through
    z + 1/z = 2 - 4y; the one inside the unit circle is kept, and N zeros
    sit at z = -1.
    """
    n = vanishing_moments
    if n < 1:
        raise ValueError("a Daubechies filter needs at least one vanishing moment")
    p_ascending = [comb(n - 1 + k, k) for k in range(n)]
    zeros = [-1.0] * n
    if n > 1:
        for y in np.roots(p_ascending[::-1]):
            pair = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
            zeros.append(pair[np.argmin(np.abs(pair))])
    h = np.real(np.poly(np.asarray(zeros, dtype=complex)))
    return h * (np.sqrt(2.0) / h.sum())


def quadrature_mirror(lowpass: np.ndarray) -> np.ndarray:
    """g[k] = (-1)^k h[L-1-k]"""
    signs = np.where(np.arange(len(lowpass)) % 2 == 0, 1.0, -1.0)
    return signs * lowpass[::-1]


_DB4: Optional[WaveletFilterPair] = None


def db4_filters() -> WaveletFilterPair:
    """The 8-tap db4 pair (4 vanishing moments)."""
    global _DB4
    if _DB4 is None:
        h = daubechies_scaling_filter(4)
        h.setflags(write=False)
        g = quadrature_mirror(h)
        g.setflags(write=False)
        _DB4 = WaveletFilterPair(h, g)
    return _DB4


def band_labels(levels: int) -> List[str]:
    """D1 .. D<levels> then A<levels>."""
    return [f"D{k}" for k in range(1, levels + 1)] + [f"A{levels}"]


@dataclass(frozen=True)
class DecompositionTree:
    """
    Coefficients of a multilevel decomposition.

    details[0] is D1 (finest); lengths[k] is the input length at level k+1,
    so lengths[0] is the original signal length.
    """
    approx: np.ndarray
    details: Tuple[np.ndarray, ...]
    extension_mode: str
    original_length: int
    lengths: Tuple[int, ...]
    filters: WaveletFilterPair

    @property
    def levels(self) -> int:
        return len(self.details)

    def band_names(self) -> List[str]:
        return band_labels(self.levels)

    def bands(self) -> Dict[str, np.ndarray]:
        """Coefficient arrays keyed by band name, ordered D1..DL, AL."""
        named = {f"D{k}": d for k, d in enumerate(self.details, start=1)}
        named[f"A{self.levels}"] = self.approx
        return named

    def band(self, band: Union[str, BandId]) -> np.ndarray:
        name = _band_name(band)
        try:
            return self.bands()[name]
        except KeyError:
            raise ValueError(f"band {name!r} not in a {self.levels}-level tree") from None

    def energy(self) -> float:
        return float(sum(np.dot(c, c) for c in self.bands().values()))


def _band_name(band) -> str:
    return band.value if isinstance(band, BandId) else str(band).upper()


def _check_mode(mode: str) -> str:
    if mode not in EXTENSION_MODES:
        raise ValueError(f"extension mode must be one of {EXTENSION_MODES}, got {mode!r}")
    return mode


def dwt_step(x, filters: WaveletFilterPair = None, mode: str = 'symmetric') -> Tuple[np.ndarray, np.ndarray]:
    """
    One analysis level: filter with h and g, keep every second output.

    Coefficient i correlates the taps with samples 2i-(L-2) .. 2i+1 of the
    extended signal. Periodic mode appends one zero to an odd-length input
    (energy unchanged) and yields ceil(n/2) coefficients; symmetric (half-point) mode
    yields floor((n+L-1)/2).

    Returns:
        (approx, detail)
    """
    filters = filters or db4_filters()
    mode = _check_mode(mode)
    x = np.asarray(x, dtype=float)
    taps = filters.length
    if x.ndim != 1 or len(x) < taps:
        raise SignalTooShort(f"a decomposition step needs at least {taps} samples, got {len(x)}")

    offset = -(taps - 2)
    if mode == 'periodic':
        if len(x) % 2:
            x = np.append(x, 0.0)
        n = len(x)
        base = 2 * np.arange(n // 2) + offset
        positions = [(base + k) % n for k in range(taps)]
        source = x
    else:
        source = np.pad(x, taps - 1, mode='symmetric')
        count = (len(x) + taps - 1) // 2
        base = 2 * np.arange(count) + offset + (taps - 1)
        positions = [base + k for k in range(taps)]

    approx = np.zeros(len(base))
    detail = np.zeros(len(base))
    for k, index in enumerate(positions):
        approx += filters.lowpass[k] * source[index]
        detail += filters.highpass[k] * source[index]
    return approx, detail


def idwt_step(approx, detail, filters: WaveletFilterPair = None, mode: str = 'symmetric',
              output_length: Optional[int] = None) -> np.ndarray:
    """Inverse of dwt_step; output_length selects the original input length."""
    filters = filters or db4_filters()
    mode = _check_mode(mode)
    approx = np.asarray(approx, dtype=float)
    detail = np.asarray(detail, dtype=float)
    if approx.shape != detail.shape:
        raise ValueError("approximation and detail coefficients differ in length")
    taps = filters.length
    offset = -(taps - 2)
    count = len(approx)
    base = 2 * np.arange(count) + offset

    if mode == 'periodic':
        n = 2 * count
        out = np.zeros(n)
        for k in range(taps):
            out[(base + k) % n] += filters.lowpass[k] * approx + filters.highpass[k] * detail
        length = n if output_length is None else output_length
        return out[:length]

    out = np.zeros(2 * count + taps - 2)
    for k in range(taps):
        out[base + k - offset] += filters.lowpass[k] * approx + filters.highpass[k] * detail
    length = 2 * count - taps + 2 if output_length is None else output_length
    return out[-offset:-offset + length]


def decompose(x, levels: int = DEFAULT_LEVELS, mode: str = 'symmetric',
              filters: WaveletFilterPair = None) -> DecompositionTree:
    """
    Multilevel decomposition by iterating dwt_step on successive approximations.

    Args:
        x: Signal samples
        levels: Number of levels, 1..10
        mode: 'symmetric' or 'periodic' boundary extension
        filters: Filter pair, db4 by default

    Returns:
        DecompositionTree holding D1..D_levels and A_levels
    """
    filters = filters or db4_filters()
    mode = _check_mode(mode)
    if not isinstance(levels, (int, np.integer)) or not 1 <= levels <= 10:
        raise LevelError(f"levels must be in 1..10, got {levels!r}")
    x = np.asarray(x, dtype=float)
    minimum = 2 ** levels * filters.length
    if x.ndim != 1 or len(x) < minimum:
        raise SignalTooShort(f"{levels}-level decomposition needs at least {minimum} samples, got {len(x)}")

    details = []
    lengths = []
    approx = x
    for _ in range(levels):
        lengths.append(len(approx))
        approx, detail = dwt_step(approx, filters, mode)
        details.append(detail)

    for array in details + [approx]:
        array.setflags(write=False)
    return DecompositionTree(approx, tuple(details), mode, len(x), tuple(lengths), filters)


def _synthesize(tree: DecompositionTree, approx: np.ndarray, details: List[np.ndarray]) -> np.ndarray:
    for level in range(tree.levels, 0, -1):
        approx = idwt_step(approx, details[level - 1], tree.filters, tree.extension_mode,
                           tree.lengths[level - 1])
    return approx


def waverec(tree: DecompositionTree) -> np.ndarray:
    """Full inverse transform."""
    return _synthesize(tree, tree.approx, list(tree.details))


def reconstruct_band(tree: DecompositionTree, band: Union[str, BandId]) -> np.ndarray:
    """
    Inverse transform with every other band zeroed.

    Output has the original length; the reconstructions of all bands sum
    to the input signal.
    """
    name = _band_name(band)
    if name not in tree.band_names():
        raise ValueError(f"band {name!r} not in a {tree.levels}-level tree")

    details = [np.zeros_like(d) for d in tree.details]
    approx = np.zeros_like(tree.approx)
    if name.startswith('A'):
        approx = np.array(tree.approx)
    else:
        level = int(name[1:])
        details[level - 1] = np.array(tree.details[level - 1])
    return _synthesize(tree, approx, details)


@dataclass(frozen=True)
class BandRange:
    band: str
    rhythm: Optional[str]
    nominal: Optional[Tuple[float, float]]
    exact: Tuple[float, float]


def band_frequency_map(fs: float, levels: int = DEFAULT_LEVELS) -> List[BandRange]:
    """
    Frequency ranges of each band, D1 first.

    The exact dyadic range of Dk is fs/2^(k+1) .. fs/2^k and of AL is
    0 .. fs/2^(L+1). For a 4-level tree the nominal physiological ranges
    (valid once content is limited to 60 Hz) are attached too.
    """
    if not 1 <= levels <= 10:
        raise LevelError(f"levels must be in 1..10, got {levels!r}")
    ranges = []
    for k in range(1, levels + 1):
        name = f"D{k}"
        nominal = NOMINAL_BANDS.get(name) if levels == DEFAULT_LEVELS else None
        ranges.append(BandRange(name, BAND_RHYTHMS.get(name) if nominal else None, nominal,
                                (fs / 2 ** (k + 1), fs / 2 ** k)))
    name = f"A{levels}"
    nominal = NOMINAL_BANDS.get(name) if levels == DEFAULT_LEVELS else None
    ranges.append(BandRange(name, BAND_RHYTHMS.get(name) if nominal else None, nominal,
                            (0.0, fs / 2 ** (levels + 1))))
    return ranges
