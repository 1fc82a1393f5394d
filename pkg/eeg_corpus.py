"""
EEG Corpus
Loads the five-set Bonn EEG corpus (one ASCII amplitude per line per segment),
validates and labels it, and synthesizes surrogate segments when the corpus
is not available.
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from pipeline_errors import (
    AliasError,
    LengthError,
    MissingFiles,
    ParseError,
    SignalTooShort,
)

logger = logging.getLogger(__name__)

SAMPLING_RATE_HZ = 173.61
SEGMENT_LENGTH = 4097
SEGMENTS_PER_SET = 100
SET_IDS = ('A', 'B', 'C', 'D', 'E')

# Filename prefix used by the public distribution for each set
SET_PREFIX = {'A': 'Z', 'B': 'O', 'C': 'N', 'D': 'F', 'E': 'S'}
PREFIX_SET = {prefix: set_id for set_id, prefix in SET_PREFIX.items()}

_FILENAME = re.compile(r'^([ZONFS])(\d{3})\.txt$', re.IGNORECASE)


@dataclass(frozen=True)
class SetInfo:
    """Provenance of one corpus set."""
    set_id: str
    prefix: str
    subjects: str
    recording: str
    state: str


SET_CATALOGUE: Dict[str, SetInfo] = {
    'A': SetInfo('A', 'Z', 'healthy volunteers', 'surface, standard electrode placement', 'awake, eyes open'),
    'B': SetInfo('B', 'O', 'healthy volunteers', 'surface, standard electrode placement', 'awake, eyes closed'),
    'C': SetInfo('C', 'N', 'epileptic patients', 'intracranial, hippocampal formation of the opposite hemisphere', 'seizure-free interval'),
    'D': SetInfo('D', 'F', 'epileptic patients', 'intracranial, epileptogenic zone', 'seizure-free interval'),
    'E': SetInfo('E', 'S', 'epileptic patients', 'intracranial, epileptogenic zone', 'seizure activity'),
}


@dataclass(frozen=True)
class EegSegment:
    """One channel of raw samples with its sampling rate and provenance."""
    samples: np.ndarray
    fs: float
    set_id: str
    segment_index: int

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError("EEG segment samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise ValueError(f"set {self.set_id} segment {self.segment_index}: non-finite samples")
        if self.set_id not in SET_IDS:
            raise ValueError(f"unknown set id {self.set_id!r}")
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)

    def __len__(self):
        return len(self.samples)

    @property
    def label(self) -> str:
        return f"{self.set_id}{self.segment_index:03d}"


@dataclass(frozen=True)
class SegmentCollection:
    """All segments of one set, ordered by segment index."""
    set_id: str
    segments: Tuple[EegSegment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ordered = tuple(sorted(self.segments, key=lambda s: s.segment_index))
        indices = [s.segment_index for s in ordered]
        if len(set(indices)) != len(indices):
            raise ValueError(f"set {self.set_id}: duplicate segment indices")
        if indices and indices != list(range(indices[0], indices[0] + len(indices))):
            raise ValueError(f"set {self.set_id}: segment indices are not contiguous")
        if any(s.set_id != self.set_id for s in ordered):
            raise ValueError(f"set {self.set_id}: collection mixes sets")
        object.__setattr__(self, 'segments', ordered)

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def __getitem__(self, position):
        return self.segments[position]

    def by_index(self, segment_index: int) -> EegSegment:
        for segment in self.segments:
            if segment.segment_index == segment_index:
                return segment
        raise KeyError(f"set {self.set_id} has no segment {segment_index}")


@dataclass(frozen=True)
class CaseSpec:
    """One binary test case: a non-seizure set against the seizure set E."""
    case_id: int
    positive_set: str
    negative_set: str
    title: str

    def __post_init__(self):
        if self.negative_set != 'E':
            raise ValueError("the negative set of every case is E")
        if self.positive_set not in ('A', 'B', 'C', 'D'):
            raise ValueError(f"positive set must be one of A-D, got {self.positive_set!r}")

    @property
    def name(self) -> str:
        return f"Case{self.case_id}"

    @property
    def sets_label(self) -> str:
        return f"Set {self.positive_set} vs Set {self.negative_set}"


CASES: Dict[int, CaseSpec] = {
    1: CaseSpec(1, 'A', 'E', 'Healthy, eyes open vs epileptic during seizure activity'),
    2: CaseSpec(2, 'B', 'E', 'Healthy, eyes closed vs epileptic during seizure activity'),
    3: CaseSpec(3, 'C', 'E', 'Hippocampal seizure-free vs epileptic during seizure activity'),
    4: CaseSpec(4, 'D', 'E', 'Epileptogenic-zone seizure-free vs epileptic during seizure activity'),
}


def get_case(case) -> CaseSpec:
    """Look up a case by number or by name such as 'Case2'."""
    text = str(case).strip().lower()
    if text.startswith('case'):
        text = text[4:]
    try:
        return CASES[int(text)]
    except (ValueError, KeyError):
        raise ValueError(f"unknown case {case!r}; expected 1-4 or Case1-Case4") from None


def parse_segment_filename(path) -> Tuple[str, int]:
    """Return (set_id, segment_index) for a name such as 'Z001.txt'."""
    match = _FILENAME.match(Path(path).name)
    if not match:
        raise ParseError(path, 0, Path(path).name)
    return PREFIX_SET[match.group(1).upper()], int(match.group(2))


def load_segment(path, strict: bool = True, fs: float = SAMPLING_RATE_HZ,
                 set_id: Optional[str] = None, segment_index: Optional[int] = None) -> EegSegment:
    """
    Load one corpus segment file.

    Args:
        path: File with one integer or real amplitude per line
        strict: Require exactly 4097 samples and no blank lines
        fs: Sampling rate to attach to the segment
        set_id: Set label; inferred from the filename prefix when omitted
        segment_index: Index; inferred from the filename when omitted

    Returns:
        The loaded EegSegment
    """
    path = Path(path)
    if set_id is None or segment_index is None:
        parsed_set, parsed_index = parse_segment_filename(path)
        set_id = set_id or parsed_set
        segment_index = segment_index or parsed_index

    lines = path.read_text().splitlines()
    if not strict:
        while lines and not lines[-1].strip():
            lines.pop()

    values = np.empty(len(lines), dtype=float)
    for number, line in enumerate(lines, start=1):
        try:
            values[number - 1] = float(line)
        except ValueError:
            raise ParseError(path, number, line) from None
        if not np.isfinite(values[number - 1]):
            raise ParseError(path, number, line)

    if strict and len(values) != SEGMENT_LENGTH:
        raise LengthError(path, len(values), SEGMENT_LENGTH)

    return EegSegment(values, fs, set_id, segment_index)


def write_segment(segment: EegSegment, path) -> Path:
    """Write a segment in corpus text format; reloading yields identical samples."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(''.join(f"{value!r}\n" for value in segment.samples.tolist()))
    return path


def segment_filename(set_id: str, segment_index: int) -> str:
    return f"{SET_PREFIX[set_id]}{segment_index:03d}.txt"


def load_set(directory, set_id: str, strict: bool = True,
             fs: float = SAMPLING_RATE_HZ) -> SegmentCollection:
    """
    Load the 100 segments of one set from a directory.

    Args:
        directory: Directory holding files such as Z001.txt .. Z100.txt
        set_id: Which set to load (A-E)
        strict: Passed through to load_segment

    Returns:
        SegmentCollection sorted by segment index
    """
    if set_id not in SET_IDS:
        raise ValueError(f"unknown set id {set_id!r}")
    directory = Path(directory)
    found = list_segment_files(directory, set_id)
    missing = set(range(1, SEGMENTS_PER_SET + 1)) - set(found)
    if missing:
        raise MissingFiles(set_id, missing, directory)

    segments = [load_segment(found[index], strict=strict, fs=fs, set_id=set_id, segment_index=index)
                for index in sorted(found)]
    logger.debug("Loaded set %s: %d segments from %s", set_id, len(segments), directory)
    return SegmentCollection(set_id, tuple(segments))


def list_segment_files(directory, set_id: str) -> Dict[int, Path]:
    """Segment files of one set in a directory, keyed by segment index 1..100."""
    found: Dict[int, Path] = {}
    directory = Path(directory)
    if directory.is_dir():
        for candidate in sorted(directory.iterdir()):
            match = _FILENAME.match(candidate.name)
            if not match or PREFIX_SET[match.group(1).upper()] != set_id:
                continue
            index = int(match.group(2))
            if 1 <= index <= SEGMENTS_PER_SET:
                found[index] = candidate
    return found


def find_set_directory(corpus_dir, set_id: str) -> Path:
    """
    Locate the directory of a set inside a corpus root.

    The public archives unpack either flat (all files in one folder) or one
    folder per set named after the set letter or its prefix.
    """
    root = Path(corpus_dir)
    prefix = SET_PREFIX[set_id]
    for name in (set_id, set_id.lower(), prefix, prefix.lower(), f"set_{set_id}", f"set{set_id}"):
        candidate = root / name
        if candidate.is_dir():
            return candidate
    return root


def load_corpus(corpus_dir, strict: bool = True, fs: float = SAMPLING_RATE_HZ,
                set_ids: Iterable[str] = SET_IDS) -> Dict[str, SegmentCollection]:
    """Load every requested set, collecting all missing files before failing."""
    collections = {}
    problems: List[MissingFiles] = []
    for set_id in set_ids:
        try:
            collections[set_id] = load_set(find_set_directory(corpus_dir, set_id), set_id, strict, fs)
        except MissingFiles as e:
            problems.append(e)
    if problems:
        if len(problems) == 1:
            raise problems[0]
        raise MissingFiles(
            ','.join(p.set_id for p in problems),
            sorted({i for p in problems for i in p.indices}),
            corpus_dir,
        )
    return collections


def synth_segment(components: Sequence[Tuple[float, float]], noise_std: float, n: int,
                  fs: float = SAMPLING_RATE_HZ, seed: int = 0, set_id: str = 'A',
                  segment_index: int = 1) -> EegSegment:
    """
    Sum of sinusoids plus Gaussian noise.

    Sample i is sum(a_k * sin(2*pi*f_k*i/fs)) + noise; identical for a fixed seed.
    """
    if n < 64:
        raise SignalTooShort(f"synthetic segment needs at least 64 samples, got {n}", stage='ingest')
    nyquist = fs / 2.0
    for freq, _ in components:
        if freq >= nyquist:
            raise AliasError(f"{freq} Hz is at or above the Nyquist frequency {nyquist:.3f} Hz")

    t = np.arange(n) / fs
    x = np.zeros(n)
    for freq, amplitude in components:
        x += amplitude * np.sin(2.0 * np.pi * freq * t)
    if noise_std:
        x += noise_std * np.random.default_rng(seed).standard_normal(n)
    return EegSegment(x, fs, set_id, segment_index)


# Tone recipes (Hz, amplitude) and noise level for the surrogate corpus
SYNTHETIC_RECIPES: Dict[str, Tuple[Tuple[Tuple[float, float], ...], float]] = {
    'A': (((10.0, 0.6), (20.0, 0.7), (38.0, 0.4)), 0.8),
    'B': (((10.0, 1.6), (20.0, 0.4)), 0.6),
    'C': (((2.0, 0.8), (6.0, 1.0), (12.0, 0.3)), 0.7),
    'D': (((2.0, 1.0), (6.0, 1.2), (12.0, 0.3)), 0.9),
    'E': (((3.0, 4.0), (6.0, 2.0), (9.0, 1.0)), 1.0),
}


def synthesize_set(set_id: str, seed: int = 0, n: int = SEGMENT_LENGTH,
                   fs: float = SAMPLING_RATE_HZ, count: int = SEGMENTS_PER_SET) -> SegmentCollection:
    """Deterministic surrogate for one set; tone frequencies and amplitudes jitter per segment."""
    components, noise_std = SYNTHETIC_RECIPES[set_id]
    segments = []
    for index in range(1, count + 1):
        seq = np.random.SeedSequence([seed, SET_IDS.index(set_id), index])
        rng = np.random.default_rng(seq)
        jittered = [
            (min(freq * rng.uniform(0.9, 1.1), 0.45 * fs), amp * rng.uniform(0.8, 1.2))
            for freq, amp in components
        ]
        noise_seed = int(seq.generate_state(1)[0])
        segments.append(synth_segment(jittered, noise_std, n, fs, noise_seed, set_id, index))
    return SegmentCollection(set_id, tuple(segments))


def synthesize_corpus(seed: int = 0, n: int = SEGMENT_LENGTH, fs: float = SAMPLING_RATE_HZ,
                      set_ids: Iterable[str] = SET_IDS) -> Dict[str, SegmentCollection]:
    return {set_id: synthesize_set(set_id, seed, n, fs) for set_id in set_ids}
