"""
Configuration helper for the EEG seizure detection pipeline
Provides the pipeline configuration (defaults, JSON file, environment,
command-line overrides) and utilities for checking the corpus setup
"""

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Mapping, Optional

from classifiers import CLASSIFIERS
from cross_validation import AGGREGATIONS
from eeg_corpus import (
    CASES,
    SAMPLING_RATE_HZ,
    SEGMENTS_PER_SET,
    SET_CATALOGUE,
    SET_IDS,
    find_set_directory,
    list_segment_files,
)
from feature_extractor import DEGENERATE_POLICIES, SKEWNESS_MODES, FeatureSettings
from pipeline_errors import ConfigError
from wavelet_decomposer import EXTENSION_MODES

# Environment variables read after the config file; command-line flags still win
ENV_VARIABLES = {
    'SEIZURE_CORPUS_DIR': 'corpus_dir',
    'SEIZURE_OUTPUT_DIR': 'output_dir',
    'SEIZURE_BASE_SEED': 'base_seed',
    'SEIZURE_WORKERS': 'workers',
}


@dataclass
class PipelineConfig:
    """Every setting of a pipeline run."""
    corpus_dir: Optional[str] = None
    output_dir: str = 'output'
    strict_length: bool = True
    synthetic: bool = False
    filter_order: int = 4
    cutoff_hz: float = 60.0
    sampling_rate: float = SAMPLING_RATE_HZ
    levels: int = 4
    extension_mode: str = 'symmetric'
    skewness_mode: str = 'printed'
    degenerate_policy: str = 'raise'
    classifiers: List[str] = field(default_factory=lambda: ['svm', 'knn', 'nb'])
    cases: List[int] = field(default_factory=lambda: [1, 2, 3, 4])
    svm_c: float = 1.0
    svm_sigma: Optional[float] = None
    svm_tol: float = 1e-3
    svm_max_iter: int = 10000
    grid_search: bool = True
    knn_k: int = 5
    nb_epsilon: Optional[float] = None
    folds: int = 10
    inner_folds: int = 5
    repetitions: int = 10
    base_seed: int = 0
    aggregation: str = 'micro'
    workers: int = 1

    def validate(self) -> 'PipelineConfig':
        """
        Reject invalid settings before any computation.

        Raises:
            ConfigError naming the offending field
        """
        def fail(name, message):
            raise ConfigError(f"{name}: {message} (got {getattr(self, name)!r})")

        def whole(name, minimum):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
                fail(name, f"must be an integer >= {minimum}")

        def positive(name, allow_none=False):
            value = getattr(self, name)
            if value is None and allow_none:
                return
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                fail(name, "must be a positive number")

        def choice(name, options):
            if getattr(self, name) not in options:
                fail(name, f"must be one of {', '.join(options)}")

        for name in ('strict_length', 'synthetic', 'grid_search'):
            if not isinstance(getattr(self, name), bool):
                fail(name, "must be true or false")
        if not self.synthetic and not self.corpus_dir:
            raise ConfigError("corpus_dir: required unless synthetic data is requested")

        whole('filter_order', 2)
        if self.filter_order > 12 or self.filter_order % 2:
            fail('filter_order', "must be even and at most 12")
        positive('sampling_rate')
        positive('cutoff_hz')
        if self.cutoff_hz >= self.sampling_rate / 2:
            fail('cutoff_hz', f"must be below the Nyquist frequency {self.sampling_rate / 2:g} Hz")
        whole('levels', 1)
        if self.levels > 10:
            fail('levels', "must be at most 10")
        choice('extension_mode', EXTENSION_MODES)
        choice('skewness_mode', SKEWNESS_MODES)
        choice('degenerate_policy', DEGENERATE_POLICIES)

        if not self.classifiers or any(c not in CLASSIFIERS for c in self.classifiers):
            fail('classifiers', f"must list some of {', '.join(CLASSIFIERS)}")
        if not self.cases or any(isinstance(c, bool) or c not in CASES for c in self.cases):
            fail('cases', "must list some of 1, 2, 3, 4")

        positive('svm_c')
        positive('svm_sigma', allow_none=True)
        positive('svm_tol')
        whole('svm_max_iter', 1)
        whole('knn_k', 1)
        if self.knn_k % 2 == 0:
            fail('knn_k', "must be odd")
        if self.nb_epsilon is not None and (isinstance(self.nb_epsilon, bool) or
                                            not isinstance(self.nb_epsilon, (int, float)) or
                                            self.nb_epsilon < 0):
            fail('nb_epsilon', "must be a non-negative number")

        whole('folds', 2)
        whole('inner_folds', 2)
        whole('repetitions', 1)
        whole('base_seed', 0)
        whole('workers', 1)
        choice('aggregation', AGGREGATIONS)
        return self

    def feature_settings(self) -> FeatureSettings:
        return FeatureSettings(
            filter_order=self.filter_order,
            cutoff_hz=float(self.cutoff_hz),
            levels=self.levels,
            extension_mode=self.extension_mode,
            skewness_mode=self.skewness_mode,
            degenerate_policy=self.degenerate_policy,
        )

    def classifier_params(self, name: str) -> dict:
        """Constructor arguments for one classifier."""
        if name == 'svm':
            return {'C': float(self.svm_c),
                    'sigma': None if self.svm_sigma is None else float(self.svm_sigma),
                    'tol': float(self.svm_tol), 'max_iter': self.svm_max_iter,
                    'grid_search': self.grid_search, 'inner_folds': self.inner_folds}
        if name == 'knn':
            return {'k': self.knn_k}
        if name == 'nb':
            return {'epsilon': None if self.nb_epsilon is None else float(self.nb_epsilon)}
        raise ConfigError(f"unknown classifier {name!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def _coerce(name: str, text: str):
    """Convert an environment string to the type of a config field."""
    try:
        return int(text) if name in ('base_seed', 'workers') else text
    except ValueError:
        raise ConfigError(f"{name}: expected an integer, got {text!r}") from None


def load_config(config_path=None, overrides: Optional[Mapping] = None,
                environ: Optional[Mapping[str, str]] = None) -> PipelineConfig:
    """
    Build and validate the configuration.

    Layers, later wins: defaults, the JSON config file, environment
    variables (a .env file is loaded by the caller), then overrides from
    the command line. None-valued overrides are ignored.

    Args:
        config_path: Optional JSON file of PipelineConfig fields
        overrides: Field values from command-line flags
        environ: Environment mapping (os.environ by default)

    Returns:
        Validated PipelineConfig
    """
    known = {f.name for f in fields(PipelineConfig)}
    values = {}

    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            document = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None
        if not isinstance(document, dict):
            raise ConfigError(f"{path}: expected a JSON object of settings")
        unknown = sorted(set(document) - known)
        if unknown:
            raise ConfigError(f"{path}: unknown setting(s): {', '.join(unknown)}")
        values.update(document)

    environ = os.environ if environ is None else environ
    for variable, name in ENV_VARIABLES.items():
        if environ.get(variable):
            values[name] = _coerce(name, environ[variable])

    for name, value in (overrides or {}).items():
        if name not in known:
            raise ConfigError(f"unknown setting: {name}")
        if value is not None:
            values[name] = value

    return PipelineConfig(**values).validate()


class ConfigHelper:
    """Helper class for checking the corpus setup."""

    @staticmethod
    def check_corpus_dir(corpus_dir: str) -> bool:
        """
        Check if a corpus directory holds all 500 segment files.

        Args:
            corpus_dir: Corpus root directory

        Returns:
            True if every set is complete, False otherwise
        """
        if not corpus_dir or not os.path.isdir(corpus_dir):
            return False
        info = ConfigHelper.get_corpus_info(corpus_dir)
        return all(entry['found'] == SEGMENTS_PER_SET for entry in info['sets'].values())

    @staticmethod
    def get_corpus_info(corpus_dir: str) -> dict:
        """
        Get information about a corpus directory.

        Args:
            corpus_dir: Corpus root directory

        Returns:
            Dictionary with per-set file counts and directories
        """
        if not corpus_dir or not os.path.isdir(corpus_dir):
            return {
                'exists': False,
                'sets': {},
                'message': f'Corpus directory not found at {corpus_dir}'
            }

        sets = {}
        for set_id in SET_IDS:
            directory = find_set_directory(corpus_dir, set_id)
            found = list_segment_files(directory, set_id)
            sets[set_id] = {
                'directory': str(directory),
                'prefix': SET_CATALOGUE[set_id].prefix,
                'found': len(found),
                'missing': SEGMENTS_PER_SET - len(found),
            }
        return {'exists': True, 'sets': sets}

    @staticmethod
    def print_setup_instructions():
        """Print corpus setup instructions for the user."""
        print("\n" + "=" * 70)
        print("EEG Seizure Detection - Setup Instructions")
        print("=" * 70)
        print("\n1. Download the five EEG sets (A-E) of the public Bonn University")
        print("   epilepsy corpus (archives Z.zip, O.zip, N.zip, F.zip, S.zip)")
        print("\n2. Unpack them under one corpus directory, either flat or one")
        print("   folder per set (A/, B/, ... or Z/, O/, N/, F/, S/)")
        print("\n3. Each set must hold 100 text files (e.g. Z001.txt .. Z100.txt)")
        print("   with 4097 samples, one number per line")
        print("\n4. Point the pipeline at it:")
        print("   - set SEIZURE_CORPUS_DIR in .env, or")
        print("   - pass --corpus /path/to/corpus")
        print("\n5. No corpus at hand? Every command accepts --synthetic")
        print("\n" + "=" * 70 + "\n")

    @staticmethod
    def validate_setup(corpus_dir: Optional[str] = None) -> bool:
        """
        Validate that the corpus setup is complete.

        Returns:
            True if setup is valid, False otherwise
        """
        corpus_dir = corpus_dir or os.getenv('SEIZURE_CORPUS_DIR')
        if not ConfigHelper.check_corpus_dir(corpus_dir):
            print(f"\n❌ Setup incomplete: corpus at {corpus_dir} not found or incomplete")
            ConfigHelper.print_setup_instructions()
            return False

        print("\n✅ Corpus found and complete")
        return True


if __name__ == '__main__':
    try:
        from dotenv import load_dotenv
        load_dotenv()
    except ImportError:
        pass

    print("Checking EEG corpus setup...")
    corpus = os.getenv('SEIZURE_CORPUS_DIR')
    if ConfigHelper.validate_setup(corpus):
        info = ConfigHelper.get_corpus_info(corpus)
        print("\nCorpus Information:")
        for set_id, entry in info['sets'].items():
            print(f"  Set {set_id} ({entry['prefix']}): {entry['found']} files in {entry['directory']}")
        print("\n✅ Setup is complete! You can now run the pipeline.")
    else:
        print("\n⚠️  Please complete the setup, or use --synthetic.")
