"""
Cross Validation
Stratified repeated k-fold evaluation of one classifier on one binary case,
confusion-matrix accounting and the five performance measures.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from classifiers import NEGATIVE, POSITIVE, build_classifier, standardize_fit
from eeg_corpus import CaseSpec
from feature_extractor import FEATURE_NAMES, feature_csv_path, read_feature_csv
from pipeline_errors import EmptyMatrix, InvalidNeighbours, PipelineError, TooFewSamples

logger = logging.getLogger(__name__)

METRIC_NAMES = ('accuracy', 'sensitivity', 'specificity', 'precision', 'f_measure')
AGGREGATIONS = ('micro', 'macro')
SCALER_SCOPES = ('train', 'all')


# ---- folds -----------------------------------------------------------------

@dataclass(frozen=True)
class FoldPlan:
    """Fold index of every sample for one k-fold split."""
    k: int
    assignments: np.ndarray
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def fold_sizes(self) -> List[int]:
        return np.bincount(self.assignments, minlength=self.k).tolist()


def stratified_kfold(labels, k: int, seed: int) -> FoldPlan:
    """
    Split samples into k folds that keep the class proportions.

    Each class is shuffled with a generator seeded by ``seed`` and dealt
    round-robin; the deal continues across classes so fold sizes differ
    by at most one.
    """
    labels = np.asarray(labels)
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k!r}")
    classes, counts = np.unique(labels, return_counts=True)
    for value, count in zip(classes, counts):
        if count < k:
            raise TooFewSamples(f"class {value} has {count} sample(s), fewer than {k} folds")

    rng = np.random.default_rng(seed)
    assignments = np.empty(len(labels), dtype=int)
    dealt = 0
    for value in classes:
        members = rng.permutation(np.flatnonzero(labels == value))
        assignments[members] = (dealt + np.arange(len(members))) % k
        dealt += len(members)
    assignments.setflags(write=False)
    return FoldPlan(int(k), assignments, int(seed))


# ---- confusion matrix and metrics ------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    """Positive = non-seizure sets A-D, negative = seizure set E."""
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: 'ConfusionMatrix') -> 'ConfusionMatrix':
        return ConfusionMatrix(self.tp + other.tp, self.tn + other.tn,
                               self.fp + other.fp, self.fn + other.fn)

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> 'ConfusionMatrix':
        y_true = np.asarray(y_true)
        y_pred = np.asarray(y_pred)
        if y_true.shape != y_pred.shape:
            raise ValueError(f"{y_true.shape} labels vs {y_pred.shape} predictions")
        return cls(
            tp=int(np.sum((y_true == POSITIVE) & (y_pred == POSITIVE))),
            tn=int(np.sum((y_true == NEGATIVE) & (y_pred == NEGATIVE))),
            fp=int(np.sum((y_true == NEGATIVE) & (y_pred == POSITIVE))),
            fn=int(np.sum((y_true == POSITIVE) & (y_pred == NEGATIVE))),
        )

    def to_dict(self) -> Dict[str, int]:
        return {'tp': self.tp, 'tn': self.tn, 'fp': self.fp, 'fn': self.fn}


def total_confusion(matrices: Sequence[ConfusionMatrix]) -> ConfusionMatrix:
    result = ConfusionMatrix()
    for cm in matrices:
        result = result + cm
    return result


@dataclass(frozen=True)
class Metrics:
    """Percentages; None marks a measure whose denominator is zero."""
    accuracy: Optional[float]
    sensitivity: Optional[float]
    specificity: Optional[float]
    precision: Optional[float]
    f_measure: Optional[float]

    def as_dict(self) -> Dict[str, Optional[float]]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def _percent(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator * 100.0 if denominator else None


def f_measure(precision: Optional[float], sensitivity: Optional[float]) -> Optional[float]:
    """2PS/(P+S), undefined when either input is undefined or P+S is 0."""
    if precision is None or sensitivity is None or precision + sensitivity == 0:
        return None
    return 2.0 * precision * sensitivity / (precision + sensitivity)


def compute_metrics(cm: ConfusionMatrix) -> Metrics:
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix has no predictions")
    sensitivity = _percent(cm.tp, cm.tp + cm.fn)
    precision = _percent(cm.tp, cm.tp + cm.fp)
    return Metrics(
        accuracy=_percent(cm.tp + cm.tn, cm.total),
        sensitivity=sensitivity,
        specificity=_percent(cm.tn, cm.tn + cm.fp),
        precision=precision,
        f_measure=f_measure(precision, sensitivity),
    )


def average_metrics(items: Sequence[Metrics]) -> Metrics:
    """Mean of each measure over the items where it is defined."""
    averaged = {}
    for name in METRIC_NAMES:
        defined = [getattr(m, name) for m in items if getattr(m, name) is not None]
        averaged[name] = float(np.mean(defined)) if defined else None
    return Metrics(**averaged)


# Published accuracy/sensitivity/specificity/precision/F-measure per classifier and case
REFERENCE_METRICS: Dict[str, Dict[int, Metrics]] = {
    'svm': {
        1: Metrics(100.0, 100.0, 100.0, 100.0, 100.0),
        2: Metrics(100.0, 100.0, 100.0, 100.0, 100.0),
        3: Metrics(99.0, 100.0, 98.0, 98.039, 99.01),
        4: Metrics(97.0, 98.0, 96.0, 96.078, 97.03),
    },
    'knn': {
        1: Metrics(99.5, 99.0, 100.0, 100.0, 99.497),
        2: Metrics(99.0, 98.0, 100.0, 100.0, 98.99),
        3: Metrics(97.5, 95.0, 100.0, 100.0, 97.436),
        4: Metrics(96.5, 94.0, 99.0, 98.947, 96.41),
    },
    'nb': {
        1: Metrics(99.5, 100.0, 99.0, 99.01, 99.502),
        2: Metrics(99.0, 99.0, 99.0, 99.0, 99.0),
        3: Metrics(98.5, 99.0, 98.0, 98.02, 98.507),
        4: Metrics(96.5, 95.0, 98.0, 97.938, 96.447),
    },
}


# ---- case runner -----------------------------------------------------------

@dataclass
class RepetitionResult:
    repetition: int
    seed: int
    folds: List[ConfusionMatrix]
    metrics: Metrics
    hyperparameters: List[dict] = field(default_factory=list)

    @property
    def confusion(self) -> ConfusionMatrix:
        return total_confusion(self.folds)

    def to_dict(self) -> dict:
        return {
            'repetition': self.repetition,
            'seed': self.seed,
            'confusion': self.confusion.to_dict(),
            'folds': [cm.to_dict() for cm in self.folds],
            'metrics': self.metrics.as_dict(),
            'hyperparameters': self.hyperparameters,
        }


@dataclass
class CaseReport:
    case: CaseSpec
    classifier: str
    repetitions: List[RepetitionResult]
    metrics: Metrics
    base_seed: int
    folds: int
    aggregation: str = 'micro'
    settings: dict = field(default_factory=dict)

    @property
    def seeds(self) -> List[int]:
        return [r.seed for r in self.repetitions]

    @property
    def reference(self) -> Optional[Metrics]:
        return REFERENCE_METRICS.get(self.classifier, {}).get(self.case.case_id)

    def to_dict(self) -> dict:
        reference = self.reference
        return {
            'case': {'id': self.case.case_id, 'name': self.case.name, 'sets': self.case.sets_label,
                     'title': self.case.title},
            'classifier': self.classifier,
            'base_seed': self.base_seed,
            'seeds': self.seeds,
            'folds': self.folds,
            'aggregation': self.aggregation,
            'settings': self.settings,
            'metrics': self.metrics.as_dict(),
            'reference_metrics': reference.as_dict() if reference else None,
            'repetitions': [r.to_dict() for r in self.repetitions],
        }


def case_dataset(positive, negative):
    """Stack the two sets' feature matrices with +1/-1 labels."""
    positive = np.asarray(positive, dtype=float)
    negative = np.asarray(negative, dtype=float)
    X = np.vstack([positive, negative])
    y = np.concatenate([np.full(len(positive), POSITIVE), np.full(len(negative), NEGATIVE)])
    return X, y


def load_case_features(feature_dir, case: CaseSpec, expected_columns: Sequence[str] = FEATURE_NAMES):
    """Read the two feature CSVs of a case."""
    positive, _ = read_feature_csv(feature_csv_path(feature_dir, case.positive_set), expected_columns)
    negative, _ = read_feature_csv(feature_csv_path(feature_dir, case.negative_set), expected_columns)
    return positive, negative


def _fit_predict(X, y, plan: FoldPlan, fold: int, make_estimator, scaler_scope: str, inner_seed: int):
    train, test = plan.train_indices(fold), plan.test_indices(fold)
    scaler = standardize_fit(X if scaler_scope == 'all' else X[train])
    estimator = make_estimator()
    if hasattr(estimator, 'get_params') and 'random_state' in estimator.get_params():
        estimator.set_params(random_state=inner_seed)
    estimator.fit(scaler.transform(X[train]), y[train])
    predicted = np.asarray(estimator.predict(scaler.transform(X[test])))
    chosen = estimator.hyperparameters() if hasattr(estimator, 'hyperparameters') else {}
    return ConfusionMatrix.from_predictions(y[test], predicted), chosen


def _check_neighbours(k: int, y, folds: int, seed: int):
    """k-NN needs at least k rows in every training fold."""
    smallest = len(y) - max(stratified_kfold(y, folds, seed).fold_sizes())
    if k > smallest:
        raise InvalidNeighbours(f"k={k} exceeds the {smallest} rows of the smallest training fold")


def run_case(case: CaseSpec, positive, negative, classifier: str = 'svm',
             classifier_params: Optional[dict] = None, repetitions: int = 10,
             base_seed: int = 0, folds: int = 10, aggregation: str = 'micro',
             workers: int = 1, scaler_scope: str = 'train',
             estimator_factory: Optional[Callable[[], object]] = None) -> CaseReport:
    """
    Repeated stratified k-fold evaluation of one classifier on one case.

    Repetition r uses fold seed base_seed + r. In every fold the standardizer
    and classifier (including any inner grid search) are fitted on the
    training rows only. 'micro' aggregation sums the fold confusion matrices
    before computing the measures; 'macro' averages per-fold measures.

    Args:
        case: Case to evaluate
        positive: Feature matrix of the non-seizure set
        negative: Feature matrix of set E
        classifier: 'svm', 'knn' or 'nb'
        classifier_params: Constructor arguments for the classifier
        repetitions: Number of repeated k-fold passes
        base_seed: Seed of the first repetition
        folds: k
        aggregation: 'micro' or 'macro'
        workers: Threads running repetitions
        scaler_scope: 'train' (per fold) or 'all' (leaks test rows, for audits)
        estimator_factory: Overrides classifier construction

    Returns:
        CaseReport with per-repetition, per-fold confusion matrices
    """
    if aggregation not in AGGREGATIONS:
        raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
    if scaler_scope not in SCALER_SCOPES:
        raise ValueError(f"scaler scope must be one of {SCALER_SCOPES}")
    if repetitions < 1:
        raise ValueError("at least one repetition is required")
    params = dict(classifier_params or {})
    make_estimator = estimator_factory or (lambda: build_classifier(classifier, **params))
    X, y = case_dataset(positive, negative)
    if estimator_factory is None and classifier == 'knn':
        _check_neighbours(params.get('k', 5), y, folds, base_seed)

    def run_repetition(r: int) -> RepetitionResult:
        seed = base_seed + r
        plan = stratified_kfold(y, folds, seed)
        matrices, chosen = [], []
        for fold in range(folds):
            try:
                cm, hyper = _fit_predict(X, y, plan, fold, make_estimator, scaler_scope,
                                         inner_seed=seed * 1000 + fold)
            except PipelineError as e:
                e.context = e.context or f"{case.name} {classifier} repetition {r + 1} fold {fold + 1}"
                raise
            matrices.append(cm)
            chosen.append(hyper)
        if aggregation == 'micro':
            metrics = compute_metrics(total_confusion(matrices))
        else:
            metrics = average_metrics([compute_metrics(cm) for cm in matrices])
        logger.debug("%s %s repetition %d: accuracy %s", case.name, classifier, r + 1, metrics.accuracy)
        return RepetitionResult(r + 1, seed, matrices, metrics, chosen)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_repetition, range(repetitions)))
    else:
        results = [run_repetition(r) for r in range(repetitions)]

    report = CaseReport(
        case=case,
        classifier=classifier,
        repetitions=results,
        metrics=average_metrics([r.metrics for r in results]),
        base_seed=base_seed,
        folds=folds,
        aggregation=aggregation,
        settings={'classifier_params': {k: (list(v) if isinstance(v, tuple) else v) for k, v in params.items()},
                  'repetitions': repetitions, 'scaler_scope': scaler_scope},
    )
    logger.info("%s (%s) with %s: accuracy %.2f%%", case.name, case.sets_label, classifier,
                report.metrics.accuracy if report.metrics.accuracy is not None else float('nan'))
    return report


# ---- leakage audit ---------------------------------------------------------

def pooled_test_means(X, y, plan: FoldPlan, scaler_scope: str = 'train') -> np.ndarray:
    """
    Column means of all standardized test rows pooled over the folds.

    A scaler fitted on every row makes these exactly zero; fitting on the
    training rows of each fold leaves them nonzero.
    """
    X = np.asarray(X, dtype=float)
    pooled = []
    for fold in range(plan.k):
        train, test = plan.train_indices(fold), plan.test_indices(fold)
        scaler = standardize_fit(X if scaler_scope == 'all' else X[train])
        pooled.append(scaler.transform(X[test]))
    return np.vstack(pooled).mean(axis=0)


def scaler_leaks(X, y, plan: FoldPlan, scaler_scope: str = 'train', atol: float = 1e-9) -> bool:
    """True when the standardizer evidently saw the test rows."""
    return bool(np.all(np.abs(pooled_test_means(X, y, plan, scaler_scope)) <= atol))
