"""
Command-line application for EEG epileptic seizure detection
ingest -> band-limit -> wavelet decomposition -> features -> cross-validated
classification -> reports, plus band figures and trained model files
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from band_plotter import plot_segment_bands
from butterworth_filter import design_butterworth_lowpass, frequency_response
from classifiers import CLASSIFIERS, CLASSIFIER_TITLES, build_classifier, save_model, standardize_fit
from config_helper import PipelineConfig, load_config
from cross_validation import AGGREGATIONS, CaseReport, case_dataset, load_case_features, run_case
from eeg_corpus import (
    CASES,
    SEGMENTS_PER_SET,
    SET_CATALOGUE,
    SET_IDS,
    EegSegment,
    SegmentCollection,
    find_set_directory,
    get_case,
    list_segment_files,
    load_corpus,
    load_segment,
    synthesize_corpus,
    synthesize_set,
)
from feature_extractor import (
    DEGENERATE_POLICIES,
    SKEWNESS_MODES,
    decompose_segment,
    extract_collection,
    feature_csv_path,
    feature_summary,
    features_to_frame,
    write_feature_csv,
)
from pipeline_errors import EXIT_DATA, EXIT_OK, EXIT_USAGE, ConfigError, MissingFiles, PipelineError
from report_writer import write_report, write_summary
from wavelet_decomposer import EXTENSION_MODES, band_frequency_map

# Load environment variables from .env file if it exists
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    # python-dotenv not installed, skip loading .env file
    pass

logger = logging.getLogger('app')

MANIFEST_NAME = 'extract_manifest.json'
SUMMARY_NAME = 'feature_summary.csv'


def configure_logging(verbose: bool = False):
    """Level from LOG_LEVEL (default info); --verbose forces debug."""
    level_name = 'DEBUG' if verbose else os.getenv('LOG_LEVEL', 'info').upper()
    level = getattr(logging, level_name, logging.INFO)
    logging.basicConfig(level=level if isinstance(level, int) else logging.INFO,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def banner(title: str):
    print("\n" + "=" * 70)
    print(title)
    print("=" * 70)


# ---- data access -----------------------------------------------------------

def load_collections(config: PipelineConfig, set_ids=SET_IDS) -> Dict[str, SegmentCollection]:
    if config.synthetic:
        logger.info("Using synthetic segments (base seed %d)", config.base_seed)
        return synthesize_corpus(config.base_seed, fs=config.sampling_rate, set_ids=set_ids)
    return load_corpus(config.corpus_dir, config.strict_length, config.sampling_rate, set_ids)


def load_one_segment(config: PipelineConfig, set_id: str, segment_index: int) -> EegSegment:
    if config.synthetic:
        return synthesize_set(set_id, config.base_seed, fs=config.sampling_rate).by_index(segment_index)
    directory = find_set_directory(config.corpus_dir, set_id)
    path = list_segment_files(directory, set_id).get(segment_index)
    if path is None:
        raise MissingFiles(set_id, [segment_index], directory)
    return load_segment(path, config.strict_length, config.sampling_rate, set_id, segment_index)


# ---- commands --------------------------------------------------------------

def cmd_extract(config: PipelineConfig) -> Dict[str, Path]:
    """
    Write one feature CSV per set, the per-set feature summary and a manifest.

    Returns:
        Feature CSV path per set id
    """
    output = Path(config.output_dir)
    settings = config.feature_settings()
    collections = load_collections(config)

    paths, frames, rows = {}, {}, {}
    for set_id, collection in collections.items():
        vectors = extract_collection(collection, settings, config.workers)
        paths[set_id] = write_feature_csv(feature_csv_path(output, set_id), vectors)
        frames[set_id] = features_to_frame(vectors)
        rows[set_id] = len(vectors)
        print(f"✅ Set {set_id}: {len(vectors)} feature vectors -> {paths[set_id]}")

    feature_summary(frames).to_csv(output / SUMMARY_NAME, float_format='%.17g', lineterminator='\n')
    manifest = {
        'base_seed': config.base_seed,
        'synthetic': config.synthetic,
        'corpus_dir': None if config.synthetic else str(config.corpus_dir),
        'sampling_rate': config.sampling_rate,
        'strict_length': config.strict_length,
        'feature_settings': settings.to_dict(),
        'rows': rows,
        'files': {set_id: path.name for set_id, path in paths.items()},
    }
    (output / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + '\n')
    return paths


def extraction_key(config: PipelineConfig) -> dict:
    """Settings the feature CSVs depend on; the seed only matters for synthetic data."""
    key = {
        'synthetic': config.synthetic,
        'corpus_dir': None if config.synthetic else str(config.corpus_dir),
        'sampling_rate': config.sampling_rate,
        'strict_length': config.strict_length,
        'feature_settings': config.feature_settings().to_dict(),
    }
    if config.synthetic:
        key['base_seed'] = config.base_seed
    return key


def read_manifest(output: Path) -> dict:
    try:
        return json.loads((output / MANIFEST_NAME).read_text())
    except (OSError, ValueError):
        return {}


def stale_settings(config: PipelineConfig, manifest: dict) -> List[str]:
    """Names of the extraction settings that differ from the manifest."""
    return sorted(name for name, value in extraction_key(config).items() if manifest.get(name) != value)


def ensure_features(config: PipelineConfig) -> Path:
    """Run extraction when a feature CSV is missing or was extracted with other settings."""
    output = Path(config.output_dir)
    if not all(feature_csv_path(output, set_id).exists() for set_id in SET_IDS):
        print("⚠️  Feature files not found, extracting first...")
        cmd_extract(config)
        return output
    changed = stale_settings(config, read_manifest(output))
    if changed:
        print(f"⚠️  Feature files were extracted with different {', '.join(changed)}, extracting again...")
        cmd_extract(config)
    return output


def cmd_evaluate(config: PipelineConfig) -> Tuple[List[CaseReport], List[PipelineError]]:
    """
    One report per requested (case, classifier) and one summary table per classifier.

    A failing case is reported and skipped; the failures are returned.
    """
    feature_dir = ensure_features(config)
    columns = config.feature_settings().feature_columns
    output = Path(config.output_dir)
    reports, failures = [], []
    for classifier in config.classifiers:
        done = []
        for case_id in config.cases:
            case = CASES[case_id]
            try:
                positive, negative = load_case_features(feature_dir, case, columns)
                report = run_case(case, positive, negative, classifier,
                                  config.classifier_params(classifier), config.repetitions,
                                  config.base_seed, config.folds, config.aggregation, config.workers)
            except PipelineError as e:
                e.context = e.context or f"{case.name} {classifier}"
                print(f"❌ {e.diagnostic()}", file=sys.stderr)
                failures.append(e)
                continue
            report.settings['feature_settings'] = config.feature_settings().to_dict()
            path = write_report(report, output)
            print(f"✅ {case.name} ({case.sets_label}) {CLASSIFIER_TITLES[classifier]}: "
                  f"accuracy {report.metrics.accuracy:.2f}% -> {path.name}")
            done.append(report)
        if done:
            print(f"📄 Summary: {write_summary(done, output, classifier)}")
        reports.extend(done)
    return reports, failures


def cmd_plot(config: PipelineConfig, set_id: str, segment_index: int, out: Optional[str] = None) -> Path:
    segment = load_one_segment(config, set_id, segment_index)
    path = Path(out) if out else Path(config.output_dir) / f"bands_{segment.label}.svg"
    return plot_segment_bands(segment, path, config.feature_settings())


def cmd_decompose(config: PipelineConfig, set_id: str, segment_index: int, out: Optional[str] = None) -> Path:
    """Long-format CSV (band, index, coefficient) of one segment's decomposition."""
    segment = load_one_segment(config, set_id, segment_index)
    tree = decompose_segment(segment, config.feature_settings())
    frame = pd.concat(
        [pd.DataFrame({'band': name, 'index': range(len(values)), 'coefficient': values})
         for name, values in tree.bands().items()],
        ignore_index=True,
    )
    path = Path(out) if out else Path(config.output_dir) / f"coefficients_{segment.label}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
    return path


def cmd_train(config: PipelineConfig, out: Optional[str] = None) -> Path:
    """Fit one classifier on all rows of one case and save it with its standardizer."""
    if len(config.cases) != 1 or len(config.classifiers) != 1:
        raise ConfigError("train needs exactly one --case and one --classifier")
    case = CASES[config.cases[0]]
    classifier = config.classifiers[0]
    positive, negative = load_case_features(ensure_features(config), case,
                                            config.feature_settings().feature_columns)
    X, y = case_dataset(positive, negative)

    scaler = standardize_fit(X)
    params = config.classifier_params(classifier)
    if classifier == 'svm':
        params['random_state'] = config.base_seed
    estimator = build_classifier(classifier, **params).fit(scaler.transform(X), y)
    metadata = {
        'case': case.case_id,
        'sets': case.sets_label,
        'base_seed': config.base_seed,
        'rows': int(len(y)),
        'feature_settings': config.feature_settings().to_dict(),
        'hyperparameters': estimator.hyperparameters(),
        'training_accuracy': float(estimator.score(scaler.transform(X), y)),
    }
    path = Path(out) if out else Path(config.output_dir) / f"model_case{case.case_id}_{classifier}.json"
    return save_model(path, estimator, scaler, metadata)


def cmd_info(config: PipelineConfig):
    banner("EEG Seizure Detection - Corpus and Band Reference")
    print("\nSets:")
    for info in SET_CATALOGUE.values():
        print(f"  {info.set_id} ({info.prefix}***.txt): {info.subjects}; {info.recording}; {info.state}")
    print("\nCases (positive set vs seizure set E):")
    for case in CASES.values():
        print(f"  {case.name}: {case.sets_label} - {case.title}")

    print(f"\nSub-bands at fs = {config.sampling_rate:g} Hz, {config.levels} level(s):")
    for entry in band_frequency_map(config.sampling_rate, config.levels):
        nominal = f"{entry.nominal[0]:g}-{entry.nominal[1]:g} Hz" if entry.nominal else "-"
        print(f"  {entry.band:<3} {entry.rhythm or '':<6} nominal {nominal:<12} "
              f"exact {entry.exact[0]:.2f}-{entry.exact[1]:.2f} Hz")

    cascade = design_butterworth_lowpass(config.filter_order, config.cutoff_hz, config.sampling_rate)
    gain = abs(frequency_response(cascade, [config.cutoff_hz])[0])
    radius = max(abs(p) for p in cascade.poles())
    print(f"\nBand-limiting filter: Butterworth order {cascade.order}, cutoff {cascade.cutoff_hz:g} Hz, "
          f"|H(cutoff)| = {gain:.4f}, largest pole radius {radius:.4f}")
    print("=" * 70 + "\n")


# ---- argument parsing ------------------------------------------------------

class PipelineArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _segment_index(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"segment index must be an integer, got {text!r}") from None
    if not 1 <= value <= SEGMENTS_PER_SET:
        raise argparse.ArgumentTypeError(f"segment index must be in 1..{SEGMENTS_PER_SET}, got {value}")
    return value


def _case_id(text: str) -> int:
    try:
        return get_case(text).case_id
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _on_off(text: str) -> bool:
    if text.lower() in ('on', 'true', 'yes', '1'):
        return True
    if text.lower() in ('off', 'false', 'no', '0'):
        return False
    raise argparse.ArgumentTypeError(f"expected on or off, got {text!r}")


def _set_id(text: str) -> str:
    if text.upper() not in SET_IDS:
        raise argparse.ArgumentTypeError(f"set must be one of {', '.join(SET_IDS)}")
    return text.upper()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON file of pipeline settings')
    common.add_argument('--corpus', dest='corpus_dir', help='Corpus root directory')
    common.add_argument('--output', dest='output_dir', help='Output directory')
    common.add_argument('--synthetic', action='store_const', const=True, default=None,
                        help='Use deterministic synthetic segments instead of the corpus')
    common.add_argument('--seed', dest='base_seed', type=int, help='Base seed for all randomness')
    common.add_argument('--lenient', dest='strict_length', action='store_const', const=False, default=None,
                        help='Accept segment files of any length and trailing blank lines')
    common.add_argument('--fs', dest='sampling_rate', type=float, help='Sampling rate in Hz')
    common.add_argument('--filter-order', type=int)
    common.add_argument('--cutoff-hz', type=float, help='Low-pass cutoff in Hz')
    common.add_argument('--levels', type=int, help='Wavelet decomposition levels')
    common.add_argument('--mode', dest='extension_mode', choices=EXTENSION_MODES)
    common.add_argument('--skewness-mode', choices=SKEWNESS_MODES)
    common.add_argument('--degenerate-policy', choices=DEGENERATE_POLICIES)
    common.add_argument('--workers', type=int)
    common.add_argument('-v', '--verbose', action='store_true', help='Debug logging')

    learning = argparse.ArgumentParser(add_help=False)
    learning.add_argument('--case', dest='cases', action='append', type=_case_id,
                          help='Case 1-4 (repeatable; default all)')
    learning.add_argument('--classifier', dest='classifiers', action='append', choices=sorted(CLASSIFIERS),
                          help='Classifier (repeatable; default all)')
    learning.add_argument('--svm-c', type=float)
    learning.add_argument('--svm-sigma', type=float)
    learning.add_argument('--svm-tol', type=float)
    learning.add_argument('--svm-max-iter', type=int)
    learning.add_argument('--grid-search', type=_on_off, metavar='on|off')
    learning.add_argument('--knn-k', type=int)
    learning.add_argument('--nb-epsilon', type=float)
    learning.add_argument('--inner-folds', type=int)

    segment = argparse.ArgumentParser(add_help=False)
    segment.add_argument('--set', dest='set_id', type=_set_id, required=True)
    segment.add_argument('--segment', dest='segment_index', type=_segment_index, required=True)
    segment.add_argument('--out', help='Output file')

    parser = PipelineArgumentParser(prog='app.py', description='EEG epileptic seizure detection pipeline')
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    commands.add_parser('extract', parents=[common], help='Write feature CSVs for sets A-E')
    evaluate = commands.add_parser('evaluate', parents=[common, learning],
                                   help='Cross-validate classifiers on the four cases')
    evaluate.add_argument('--folds', type=int)
    evaluate.add_argument('--repetitions', type=int)
    evaluate.add_argument('--aggregation', choices=AGGREGATIONS)
    commands.add_parser('plot', parents=[common, segment], help='Six-panel SVG of one segment')
    decompose = commands.add_parser('decompose', parents=[common, segment], help='Coefficient CSV of one segment')
    decompose.add_argument('--plot', action='store_true', help='Also write the band figure')
    train = commands.add_parser('train', parents=[common, learning], help='Fit and save one model')
    train.add_argument('--model-out', help='Model file path')
    commands.add_parser('info', parents=[common], help='Print set, case and band reference')
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    overrides = {f.name: getattr(args, f.name, None) for f in fields(PipelineConfig)}
    if args.command == 'info':
        # info reads no segments
        overrides['synthetic'] = True
    return load_config(args.config, overrides)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        config = config_from_args(args)
        if args.command == 'extract':
            banner("Extracting features")
            cmd_extract(config)
        elif args.command == 'evaluate':
            banner("Evaluating classifiers")
            _, failures = cmd_evaluate(config)
            if failures:
                print(f"\n⚠️  {len(failures)} case(s) failed")
                return failures[0].exit_code
        elif args.command == 'plot':
            print(f"✅ Band figure: {cmd_plot(config, args.set_id, args.segment_index, args.out)}")
        elif args.command == 'decompose':
            print(f"✅ Coefficients: {cmd_decompose(config, args.set_id, args.segment_index, args.out)}")
            if args.plot:
                print(f"✅ Band figure: {cmd_plot(config, args.set_id, args.segment_index)}")
        elif args.command == 'train':
            print(f"✅ Model: {cmd_train(config, args.model_out)}")
        elif args.command == 'info':
            cmd_info(config)
    except PipelineError as e:
        print(f"❌ {e.diagnostic()}", file=sys.stderr)
        if e.exit_code == EXIT_USAGE:
            print("   Run with --help for usage", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"❌ [io] {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
