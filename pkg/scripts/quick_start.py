"""
Quick Start Script - Run the whole pipeline on synthetic segments to test the setup
"""

import sys
import os

# Add parent directory to path
parent_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if parent_dir not in sys.path:
    sys.path.insert(0, parent_dir)

from app import cmd_evaluate, cmd_extract, configure_logging
from config_helper import load_config
from pipeline_errors import PipelineError


def quick_start(output_dir='output/quick_start'):
    """Quick start example - extracts synthetic features and evaluates Case 1 with k-NN."""
    print("\n" + "=" * 70)
    print("EEG Seizure Detection - Quick Start")
    print("=" * 70)

    configure_logging()
    config = load_config(overrides={
        'synthetic': True,
        'output_dir': output_dir,
        'cases': [1],
        'classifiers': ['knn'],
        'repetitions': 1,
    })

    print("\nExtracting features from 500 synthetic segments...")

    try:
        cmd_extract(config)
        reports, failures = cmd_evaluate(config)
    except PipelineError as e:
        print(f"\n❌ Error: {e.diagnostic()}")
        print("\nPlease check:")
        print("1. All packages in requirements.txt are installed")
        print("2. The output directory is writable")
        print("3. Run: python scripts/diagnose_setup.py")
        return None

    if failures:
        print(f"\n❌ {len(failures)} case(s) failed")
        return None

    report = reports[0]
    print("\n" + "=" * 70)
    print("✅ Pipeline ran successfully!")
    print("=" * 70)
    print(f"\n📊 {report.case.sets_label}, k-NN accuracy: {report.metrics.accuracy:.2f}%")
    print(f"\n📁 Outputs written to:")
    print(f"   {os.path.abspath(output_dir)}")
    print("\nNext: point SEIZURE_CORPUS_DIR at the real corpus and run")
    print("   python app.py evaluate")
    print("\n" + "=" * 70 + "\n")
    return report


if __name__ == '__main__':
    quick_start()
