"""
Report Writer
Case reports as JSON and summary tables with one row per case and one
column per performance measure, next to the published accuracy.
"""

import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional

import pandas as pd

from classifiers import CLASSIFIER_TITLES
from cross_validation import METRIC_NAMES, CaseReport

logger = logging.getLogger(__name__)

COLUMN_TITLES = {
    'accuracy': 'Accuracy(%)',
    'sensitivity': 'Sensitivity(%)',
    'specificity': 'Specificity(%)',
    'precision': 'Precision(%)',
    'f_measure': 'F-Measure(%)',
}
UNDEFINED = 'n/a'


def report_filename(report: CaseReport) -> str:
    return f"report_case{report.case.case_id}_{report.classifier}.json"


def report_to_json(report: CaseReport) -> str:
    """Stable JSON text: sorted keys, no timestamps, repr-precision floats."""
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + '\n'


def write_report(report: CaseReport, directory) -> Path:
    path = Path(directory) / report_filename(report)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report_to_json(report))
    logger.debug("Wrote %s", path)
    return path


def summary_frame(reports: Iterable[CaseReport]) -> pd.DataFrame:
    """Rows 'Set X vs Set E' in case order; measures plus reference accuracy and difference."""
    rows = []
    for report in sorted(reports, key=lambda r: r.case.case_id):
        row = {'case': report.case.sets_label}
        row.update({COLUMN_TITLES[name]: value for name, value in report.metrics.as_dict().items()})
        reference = report.reference
        accuracy = report.metrics.accuracy
        row['Reference Acc(%)'] = reference.accuracy if reference else None
        row['Diff'] = (accuracy - reference.accuracy
                       if reference is not None and accuracy is not None else None)
        rows.append(row)
    return pd.DataFrame(rows).set_index('case') if rows else pd.DataFrame()


def _cell(value) -> str:
    if value is None or pd.isna(value):
        return UNDEFINED
    return f"{value:.3f}".rstrip('0').rstrip('.')


def format_summary_table(reports: Iterable[CaseReport], classifier: Optional[str] = None) -> str:
    """
    Text table for one classifier.

    Args:
        reports: Reports of a single classifier, any case order
        classifier: Classifier key for the heading (taken from the reports if omitted)
    """
    reports = list(reports)
    if not reports:
        return ''
    classifier = classifier or reports[0].classifier
    frame = summary_frame(reports).astype(object)
    text = frame.to_string(formatters={column: _cell for column in frame.columns}, index_names=False)
    first = reports[0]
    heading = [
        f"Performance of {CLASSIFIER_TITLES.get(classifier, classifier)} classifier",
        f"{first.folds}-fold cross-validation, {len(first.repetitions)} repetition(s), "
        f"{first.aggregation} aggregation, base seed {first.base_seed}",
    ]
    rule = '=' * max(len(line) for line in text.splitlines() + heading)
    return '\n'.join(heading + [rule, text, rule]) + '\n'


def write_summary(reports: List[CaseReport], directory, classifier: str) -> Path:
    path = Path(directory) / f"summary_{classifier}.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_summary_table(reports, classifier))
    return path
