"""
Butterworth Filter
Low-pass Butterworth design as a cascade of second-order sections and
zero-phase (forward-backward) application.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal

from pipeline_errors import DesignError, SignalTooShort

logger = logging.getLogger(__name__)

SETTLE_FACTOR = 6


@dataclass(frozen=True)
class BiquadCascade:
    """
    Second-order sections normalized to a0 = 1.

    Each row of ``sections`` is (b0, b1, b2, a1, a2).
    """
    sections: np.ndarray
    dc_gain: float
    order: int
    cutoff_hz: float
    fs: float

    def __post_init__(self):
        sections = np.array(self.sections, dtype=float).reshape(-1, 5)
        sections.setflags(write=False)
        object.__setattr__(self, 'sections', sections)

    @property
    def settle_length(self) -> int:
        """Samples allowed for the impulse response to die out (6 x order)."""
        return SETTLE_FACTOR * self.order

    @property
    def pad_length(self) -> int:
        return 3 * self.settle_length

    def as_sos(self) -> np.ndarray:
        """Rows in the (b0, b1, b2, 1, a1, a2) layout used by scipy.signal."""
        sos = np.empty((len(self.sections), 6))
        sos[:, :3] = self.sections[:, :3]
        sos[:, 3] = 1.0
        sos[:, 4:] = self.sections[:, 3:]
        return sos

    def poles(self) -> np.ndarray:
        """Both poles of every section."""
        return np.concatenate([np.roots([1.0, a1, a2]) for a1, a2 in self.sections[:, 3:]])


def design_butterworth_lowpass(order: int, cutoff_hz: float, fs: float) -> BiquadCascade:
    """
    Design a digital Butterworth low-pass filter.

    Bilinear transform of the analog prototype with the cutoff pre-warped, so
    the magnitude at cutoff_hz is exactly 1/sqrt(2). Every conjugate pole pair
    becomes one section with a double zero at z = -1, scaled to unit DC gain.

    Args:
        order: Even filter order, 2..12
        cutoff_hz: -3 dB frequency in Hz
        fs: Sampling rate in Hz

    Returns:
        BiquadCascade with order/2 sections
    """
    if not isinstance(order, (int, np.integer)) or order < 2 or order > 12 or order % 2:
        raise DesignError(f"order must be an even integer in 2..12, got {order!r}")
    if not 0.0 < cutoff_hz < fs / 2.0:
        raise DesignError(f"cutoff {cutoff_hz} Hz outside (0, {fs / 2.0:.3f}) Hz")

    k2 = 2.0 * fs
    warped = k2 * np.tan(np.pi * cutoff_hz / fs)
    k = np.arange(1, order // 2 + 1)
    # Left half-plane prototype poles in the upper half plane, one per conjugate pair
    analog = warped * np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))
    digital = (k2 + analog) / (k2 - analog)

    a1 = -2.0 * digital.real
    a2 = np.abs(digital) ** 2
    gain = (1.0 + a1 + a2) / 4.0
    sections = np.column_stack([gain, 2.0 * gain, gain, a1, a2])

    dc = np.prod(sections[:, :3].sum(axis=1) / (1.0 + sections[:, 3] + sections[:, 4]))
    cascade = BiquadCascade(sections, float(dc), int(order), float(cutoff_hz), float(fs))
    logger.debug("Butterworth order %d, cutoff %.2f Hz, pole radii %s",
                 order, cutoff_hz, np.round(np.abs(digital), 4))
    return cascade


def frequency_response(cascade: BiquadCascade, freqs_hz, fs: float = None) -> np.ndarray:
    """Complex response H(e^jw) of the cascade evaluated directly at freqs_hz."""
    fs = cascade.fs if fs is None else fs
    z1 = np.exp(-2j * np.pi * np.asarray(freqs_hz, dtype=float) / fs)
    z2 = z1 * z1
    response = np.ones_like(z1)
    for b0, b1, b2, a1, a2 in cascade.sections:
        response = response * (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2)
    return response


def impulse_response(cascade: BiquadCascade, n: int) -> np.ndarray:
    impulse = np.zeros(n)
    impulse[0] = 1.0
    return signal.sosfilt(cascade.as_sos(), impulse)


def _even_extend(x: np.ndarray, n: int) -> np.ndarray:
    # Half-sample mirror: x[n-1] .. x[0] | x | x[-1] .. x[-n]
    return np.concatenate([x[n - 1::-1], x, x[:-n - 1:-1]])


def filtfilt(cascade: BiquadCascade, x: Sequence[float]) -> np.ndarray:
    """
    Zero-phase filtering: forward pass, then a pass over the reversed output.

    The signal is mirrored at both ends (3 settle lengths, edge sample
    repeated) and each pass starts from the cascade's steady state for the edge
    value, so constants pass unchanged. The net magnitude response is |H|^2
    and the output energy never exceeds the input energy, edges included.
    """
    x = np.asarray(x, dtype=float)
    pad = cascade.pad_length
    if x.ndim != 1 or len(x) <= pad:
        raise SignalTooShort(
            f"filtfilt needs more than {pad} samples, got {len(x)}", stage='preprocess')

    sos = cascade.as_sos()
    zi = signal.sosfilt_zi(sos)
    extended = _even_extend(x, pad)

    forward, _ = signal.sosfilt(sos, extended, zi=zi * extended[0])
    backward, _ = signal.sosfilt(sos, forward[::-1], zi=zi * forward[-1])
    return backward[::-1][pad:-pad].copy()


def lowpass_segment(samples, fs: float, order: int = 4, cutoff_hz: float = 60.0) -> np.ndarray:
    """Design the band-limiting filter for fs and apply it without phase shift."""
    return filtfilt(design_butterworth_lowpass(order, cutoff_hz, fs), samples)
