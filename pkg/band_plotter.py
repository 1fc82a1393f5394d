"""
Band Plotter
Six-panel SVG figure of one segment: the band-limited signal followed by the
reconstructions of D1, D2, D3, D4 and A4 on a shared time axis.
"""

import logging
from pathlib import Path
from typing import Dict

import matplotlib
matplotlib.use('Agg')  # files only, no display
import matplotlib.pyplot as plt
import numpy as np

from eeg_corpus import EegSegment
from feature_extractor import FeatureSettings, decompose_segment
from wavelet_decomposer import BAND_RHYTHMS, NOMINAL_BANDS, DecompositionTree, reconstruct_band, waverec

logger = logging.getLogger(__name__)

SVG_HASH_SALT = 'eeg-seizure-bands'


def band_reconstructions(tree: DecompositionTree) -> Dict[str, np.ndarray]:
    """Original-length reconstruction of every band, D1 first."""
    return {name: reconstruct_band(tree, name) for name in tree.band_names()}


def band_energy_ratios(tree: DecompositionTree) -> Dict[str, float]:
    """Share of the summed reconstruction energy carried by each band's panel."""
    energies = {name: float(np.dot(r, r)) for name, r in band_reconstructions(tree).items()}
    total = sum(energies.values())
    return {name: e / total for name, e in energies.items()} if total else energies


def _panel_title(name: str, levels: int) -> str:
    rhythm = BAND_RHYTHMS.get(name)
    if levels != 4 or rhythm is None:
        return name
    low, high = NOMINAL_BANDS[name]
    return f"{name}: {rhythm} ({low:g}-{high:g} Hz)"


def plot_segment_bands(segment: EegSegment, path, settings: FeatureSettings = FeatureSettings()) -> Path:
    """
    Write the band figure of one segment as SVG.

    Args:
        segment: Segment to draw
        path: Output .svg file
        settings: Filter and decomposition settings

    Returns:
        Path of the written file
    """
    tree = decompose_segment(segment, settings)
    samples = waverec(tree)
    panels = [('Band-limited signal' if settings.prefilter else 'Signal', samples)]
    panels += [(_panel_title(name, tree.levels), values)
               for name, values in band_reconstructions(tree).items()]

    t = np.arange(len(samples)) / segment.fs
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({'svg.hashsalt': SVG_HASH_SALT, 'svg.fonttype': 'path'}):
        fig, axes = plt.subplots(len(panels), 1, figsize=(10, 1.8 * len(panels)), sharex=True)
        try:
            for ax, (title, values) in zip(axes, panels):
                ax.plot(t, values, linewidth=0.6)
                ax.set_title(title, fontsize=9, loc='left')
                ax.set_ylabel('uV', fontsize=8)
            axes[-1].set_xlabel('Time (s)')
            fig.suptitle(f"Set {segment.set_id}, segment {segment.segment_index} ({segment.label})")
            fig.tight_layout()
            fig.savefig(path, format='svg', metadata={'Date': None})
        finally:
            plt.close(fig)
    logger.info("Wrote band figure %s", path)
    return path
