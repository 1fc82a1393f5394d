"""
Diagnostic script to check the EEG seizure detection setup
Helps identify configuration issues before running the pipeline
"""

import importlib
import os
import sys

# Add parent directory to path
parent_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if parent_dir not in sys.path:
    sys.path.insert(0, parent_dir)

try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

REQUIRED_PACKAGES = {
    'numpy': 'numpy',
    'scipy': 'scipy',
    'pandas': 'pandas',
    'matplotlib': 'matplotlib',
    'sklearn': 'scikit-learn',
    'dotenv': 'python-dotenv',
}


def print_header(title):
    """Print a formatted header."""
    print("\n" + "=" * 70)
    print(f"  {title}")
    print("=" * 70)


def check_dependencies():
    """Check if required Python packages are installed."""
    print_header("Checking Python Dependencies")

    all_installed = True
    for module, package in REQUIRED_PACKAGES.items():
        try:
            imported = importlib.import_module(module)
            print(f"✅ {package} {getattr(imported, '__version__', '')}")
        except ImportError:
            print(f"❌ {package} not installed")
            all_installed = False

    if not all_installed:
        print("\n📝 Solution:")
        print("   Run: pip install -r requirements.txt")
    return all_installed


def check_python_version():
    """Check Python version."""
    print_header("Checking Python Version")

    version = sys.version_info
    print(f"Python version: {version.major}.{version.minor}.{version.micro}")

    if version >= (3, 9):
        print("✅ Python version is compatible (3.9+)")
        return True
    print("❌ Python 3.9 or higher is required")
    return False


def check_corpus():
    """Check the corpus directory named by SEIZURE_CORPUS_DIR."""
    print_header("Checking Corpus Directory")

    from config_helper import ConfigHelper

    corpus = os.getenv('SEIZURE_CORPUS_DIR')
    if not corpus:
        print("ℹ️  SEIZURE_CORPUS_DIR not set (use --corpus, or --synthetic for test runs)")
        return True

    info = ConfigHelper.get_corpus_info(corpus)
    if not info['exists']:
        print(f"❌ {info['message']}")
        return False

    complete = True
    for set_id, entry in info['sets'].items():
        mark = '✅' if entry['missing'] == 0 else '❌'
        print(f"{mark} Set {set_id} ({entry['prefix']}): {entry['found']}/100 files in {entry['directory']}")
        complete = complete and entry['missing'] == 0
    return complete


def check_filter_design():
    """Design the default band-limiting filter and check its cutoff gain."""
    print_header("Checking Filter Design")

    from butterworth_filter import design_butterworth_lowpass, frequency_response
    from eeg_corpus import SAMPLING_RATE_HZ

    cascade = design_butterworth_lowpass(4, 60.0, SAMPLING_RATE_HZ)
    gain = abs(frequency_response(cascade, [60.0])[0])
    if abs(gain - 2 ** -0.5) < 1e-6:
        print(f"✅ Order-4 low-pass at 60 Hz: |H(60 Hz)| = {gain:.6f}")
        return True
    print(f"❌ Unexpected cutoff gain {gain:.6f}")
    return False


def main():
    """Run all diagnostic checks."""
    print("\n" + "=" * 70)
    print("  EEG Seizure Detection - Setup Diagnostic")
    print("=" * 70)
    print("\nThis script will check your setup and identify any issues.\n")

    results = {
        'python_version': check_python_version(),
        'dependencies': check_dependencies(),
    }
    if results['dependencies']:
        results['corpus'] = check_corpus()
        results['filter'] = check_filter_design()

    print_header("Diagnostic Summary")

    if all(results.values()):
        print("✅ Basic setup looks good!")
        print("\n📝 Next steps:")
        print("   1. Run: python scripts/quick_start.py")
        print("   2. Run: python app.py evaluate")
    else:
        print("❌ Some issues found. Please fix them before proceeding.")
        print("\n📖 See docs/setup_guide.md for detailed instructions")

    print("\n" + "=" * 70 + "\n")
    return all(results.values())


if __name__ == '__main__':
    try:
        sys.exit(0 if main() else 1)
    except KeyboardInterrupt:
        print("\n\nDiagnostic cancelled by user.")
        sys.exit(0)
