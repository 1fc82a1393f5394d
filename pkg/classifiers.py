"""
Classifiers
Binary classifiers written on numpy: soft-margin SVM with an RBF kernel
trained by sequential minimal optimization, k-nearest neighbours and
Gaussian naive Bayes, plus feature standardization and model files.

Labels are +1 (non-seizure sets A-D) and -1 (seizure set E).
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from pipeline_errors import (
    DimensionMismatch,
    InvalidNeighbours,
    InvalidSigma,
    NonConvergence,
    SingleClass,
)

logger = logging.getLogger(__name__)

POSITIVE = 1
NEGATIVE = -1

SVM_C_GRID = (0.1, 1.0, 10.0, 100.0)
SVM_SIGMA_FACTORS = (0.5, 1.0, 2.0, 4.0, 8.0)
NB_VAR_SMOOTHING = 1e-9
MODEL_FORMAT = 'eeg-seizure-model'
MODEL_VERSION = 1

# Curvature floor for degenerate SMO pairs
_TAU = 1e-12


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D feature matrix, got shape {X.shape}")
    return X


def _as_labels(y, n: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n,):
        raise DimensionMismatch(f"{n} rows but {y.shape} labels")
    if not np.all(np.isin(y, (POSITIVE, NEGATIVE))):
        raise ValueError("labels must be +1 or -1")
    if len(np.unique(y)) < 2:
        raise SingleClass(f"training data holds only class {int(y[0]) if n else 'none'}")
    return y.astype(int)


def _check_width(X: np.ndarray, width: int):
    if X.shape[1] != width:
        raise DimensionMismatch(f"model expects {width} features, got {X.shape[1]}")


# ---- standardization -------------------------------------------------------

@dataclass
class Standardizer:
    """Per-feature mean and sample standard deviation of the training rows."""
    mean: np.ndarray
    scale: np.ndarray
    constant: np.ndarray

    def transform(self, X) -> np.ndarray:
        X = _as_matrix(X)
        _check_width(X, len(self.mean))
        return (X - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {'mean': self.mean.tolist(), 'scale': self.scale.tolist(),
                'constant': self.constant.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> 'Standardizer':
        return cls(np.array(data['mean'], dtype=float), np.array(data['scale'], dtype=float),
                   np.array(data['constant'], dtype=bool))


def standardize_fit(X) -> Standardizer:
    """
    Fit on training rows only. Constant columns keep scale 1 and are flagged,
    so they are centred but not scaled.
    """
    X = _as_matrix(X)
    if len(X) < 2:
        raise ValueError("standardization needs at least two rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1)
    constant = std == 0.0
    scale = np.where(constant, 1.0, std)
    if constant.any():
        logger.debug("Standardizer: %d constant column(s) left unscaled", int(constant.sum()))
    return Standardizer(mean, scale, constant)


def standardize_apply(standardizer: Standardizer, X) -> np.ndarray:
    return standardizer.transform(X)


# ---- RBF kernel ------------------------------------------------------------

def _check_sigma(sigma: float):
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidSigma(f"kernel width must be positive, got {sigma!r}")


def rbf_kernel(x, y, sigma: float) -> float:
    """K(x, y) = exp(-||x - y||^2 / (2 sigma^2))"""
    _check_sigma(sigma)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionMismatch(f"vectors of shape {x.shape} and {y.shape}")
    diff = x - y
    return float(np.exp(-np.dot(diff, diff) / (2.0 * sigma * sigma)))


def squared_distances(A, B) -> np.ndarray:
    """Pairwise squared Euclidean distances between rows of A and rows of B."""
    A = _as_matrix(A)
    B = _as_matrix(B)
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatch(f"{A.shape[1]} vs {B.shape[1]} features")
    diff = A[:, np.newaxis, :] - B[np.newaxis, :, :]
    return np.einsum('ijk,ijk->ij', diff, diff)


def rbf_kernel_matrix(A, B, sigma: float) -> np.ndarray:
    _check_sigma(sigma)
    return np.exp(-squared_distances(A, B) / (2.0 * sigma * sigma))


# ---- SVM -------------------------------------------------------------------

@dataclass
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray       # alpha_i * y_i
    bias: float
    sigma: float
    C: float
    alphas: np.ndarray          # alpha_i of the support vectors
    support_indices: np.ndarray  # rows of the training matrix
    iterations: int = 0
    kkt_violation: float = 0.0
    dual_objective: float = 0.0

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    def to_dict(self) -> dict:
        return {
            'support_vectors': self.support_vectors.tolist(),
            'dual_coef': self.dual_coef.tolist(),
            'bias': self.bias,
            'sigma': self.sigma,
            'C': self.C,
            'alphas': self.alphas.tolist(),
            'support_indices': self.support_indices.tolist(),
            'iterations': self.iterations,
            'kkt_violation': self.kkt_violation,
            'dual_objective': self.dual_objective,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'SvmModel':
        return cls(
            support_vectors=np.array(data['support_vectors'], dtype=float).reshape(len(data['dual_coef']), -1),
            dual_coef=np.array(data['dual_coef'], dtype=float),
            bias=float(data['bias']),
            sigma=float(data['sigma']),
            C=float(data['C']),
            alphas=np.array(data['alphas'], dtype=float),
            support_indices=np.array(data['support_indices'], dtype=int),
            iterations=int(data['iterations']),
            kkt_violation=float(data['kkt_violation']),
            dual_objective=float(data['dual_objective']),
        )


def dual_objective(alpha, y, K) -> float:
    """W(alpha) = sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij"""
    ay = np.asarray(alpha) * np.asarray(y)
    return float(np.sum(alpha) - 0.5 * ay @ K @ ay)


def svm_train(X, y, C: float = 1.0, sigma: float = 1.0, tol: float = 1e-3,
              max_iter: int = 10000, sq_dists: Optional[np.ndarray] = None) -> SvmModel:
    """
    Solve the soft-margin dual by SMO.

    Each iteration picks the maximal violating pair: i maximizes -y_t G_t over
    the indices that may move up, j minimizes it over those that may move
    down (lowest index on ties); G is the gradient of the dual. Training
    stops once the violation is at most tol.

    Args:
        X: Standardized training rows
        y: +1/-1 labels
        C: Box constraint
        sigma: RBF kernel width
        tol: KKT tolerance
        max_iter: Iteration cap
        sq_dists: Precomputed pairwise squared distances of X (optional)

    Returns:
        SvmModel with decision function f(x) = sum alpha_i y_i K(x_i, x) + b
    """
    X = _as_matrix(X)
    n = len(X)
    y = _as_labels(y, n)
    if not C > 0:
        raise ValueError(f"C must be positive, got {C!r}")
    _check_sigma(sigma)
    if sq_dists is None:
        sq_dists = squared_distances(X, X)
    K = np.exp(-sq_dists / (2.0 * sigma * sigma))
    yf = y.astype(float)
    Q = K * np.outer(yf, yf)
    diag = np.diag(K)

    alpha = np.zeros(n)
    G = -np.ones(n)
    positive = y > 0
    iterations = 0
    gap = np.inf
    while True:
        yG = -yf * G
        up = np.where(positive, alpha < C, alpha > 0)
        low = np.where(positive, alpha > 0, alpha < C)
        i = int(np.argmax(np.where(up, yG, -np.inf)))
        j = int(np.argmin(np.where(low, yG, np.inf)))
        gap = yG[i] - yG[j] if up.any() and low.any() else 0.0
        if gap <= tol:
            break
        if iterations >= max_iter:
            raise NonConvergence(
                f"SMO did not reach tolerance {tol} in {max_iter} iterations (violation {gap:.3g})")
        iterations += 1

        old_i, old_j = alpha[i], alpha[j]
        quad = max(diag[i] + diag[j] - 2.0 * K[i, j], _TAU)
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        G += Q[:, i] * (alpha[i] - old_i) + Q[:, j] * (alpha[j] - old_j)

    bias = -_smo_rho(alpha, yf, G, C)
    support = np.flatnonzero(alpha > 0)
    model = SvmModel(
        support_vectors=X[support].copy(),
        dual_coef=alpha[support] * yf[support],
        bias=float(bias),
        sigma=float(sigma),
        C=float(C),
        alphas=alpha[support].copy(),
        support_indices=support,
        iterations=iterations,
        kkt_violation=float(max(gap, 0.0)),
        dual_objective=dual_objective(alpha, yf, K),
    )
    logger.debug("SMO: n=%d C=%g sigma=%.3g -> %d iterations, %d support vectors",
                 n, C, sigma, iterations, len(support))
    return model


def _smo_rho(alpha, yf, G, C) -> float:
    """Threshold: mean of y*G over free vectors, else midpoint of the feasible interval."""
    yG = yf * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(yG[free].mean())
    at_upper = alpha >= C
    at_lower = alpha <= 0
    upper_bound = yG[(at_upper & (yf < 0)) | (at_lower & (yf > 0))]
    lower_bound = yG[(at_upper & (yf > 0)) | (at_lower & (yf < 0))]
    if len(upper_bound) and len(lower_bound):
        return float((upper_bound.min() + lower_bound.max()) / 2.0)
    return float(upper_bound.min() if len(upper_bound) else lower_bound.max())


def svm_decision(model: SvmModel, X) -> np.ndarray:
    """Raw margins f(x) for every row of X."""
    X = _as_matrix(X)
    _check_width(X, model.n_features)
    return rbf_kernel_matrix(X, model.support_vectors, model.sigma) @ model.dual_coef + model.bias


class Prediction(NamedTuple):
    label: int
    margin: float


def svm_predict(model: SvmModel, x) -> Prediction:
    """Sign of the decision function; f = 0 counts as positive."""
    margin = float(svm_decision(model, x)[0])
    return Prediction(POSITIVE if margin >= 0 else NEGATIVE, margin)


def grid_search_svm(X, y, c_grid: Sequence[float] = SVM_C_GRID, sigma_grid: Sequence[float] = None,
                    inner_folds: int = 5, seed: int = 0, tol: float = 1e-3,
                    max_iter: int = 10000) -> Tuple[float, float, Dict[Tuple[float, float], float]]:
    """
    Pick (C, sigma) by stratified inner cross-validation on the given rows only.

    The first grid point (C ascending, then sigma ascending) wins ties.
    Points whose training does not converge are skipped.

    Returns:
        (best C, best sigma, accuracy per grid point)
    """
    from cross_validation import stratified_kfold

    X = _as_matrix(X)
    y = _as_labels(y, len(X))
    if sigma_grid is None:
        sigma_grid = [f * np.sqrt(X.shape[1]) for f in SVM_SIGMA_FACTORS]
    plan = stratified_kfold(y, inner_folds, seed)
    sq = squared_distances(X, X)

    scores: Dict[Tuple[float, float], float] = {}
    best = None
    for C in c_grid:
        for sigma in sigma_grid:
            correct = 0
            try:
                for fold in range(plan.k):
                    train, test = plan.train_indices(fold), plan.test_indices(fold)
                    model = svm_train(X[train], y[train], C, sigma, tol, max_iter,
                                      sq_dists=sq[np.ix_(train, train)])
                    kernel = np.exp(-sq[np.ix_(test, train[model.support_indices])] / (2.0 * sigma * sigma))
                    predicted = np.where(kernel @ model.dual_coef + model.bias >= 0, POSITIVE, NEGATIVE)
                    correct += int(np.sum(predicted == y[test]))
            except NonConvergence as e:
                logger.warning("Grid point C=%g sigma=%.3g skipped: %s", C, sigma, e)
                continue
            accuracy = correct / len(y)
            scores[(C, sigma)] = accuracy
            if best is None or accuracy > scores[best]:
                best = (C, sigma)
    if best is None:
        raise NonConvergence("no grid point converged")
    logger.debug("Grid search picked C=%g sigma=%.3g (accuracy %.3f)", best[0], best[1], scores[best])
    return best[0], best[1], scores


# ---- k-nearest neighbours --------------------------------------------------

@dataclass
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int

    def to_dict(self) -> dict:
        return {'X': self.X.tolist(), 'y': self.y.tolist(), 'k': self.k}

    @classmethod
    def from_dict(cls, data: dict) -> 'KnnModel':
        y = np.array(data['y'], dtype=int)
        return cls(np.array(data['X'], dtype=float).reshape(len(y), -1), y, int(data['k']))


def knn_train(X, y, k: int = 5) -> KnnModel:
    X = _as_matrix(X)
    y = np.asarray(y).astype(int)
    if y.shape != (len(X),):
        raise DimensionMismatch(f"{len(X)} rows but {y.shape} labels")
    if len(X) == 0:
        raise InvalidNeighbours("k-NN needs at least one training row")
    if not isinstance(k, (int, np.integer)) or k < 1 or k % 2 == 0:
        raise InvalidNeighbours(f"k must be an odd positive integer, got {k!r}")
    if k > len(X):
        raise InvalidNeighbours(f"k={k} exceeds the {len(X)} training rows")
    return KnnModel(X.copy(), y.copy(), int(k))


def knn_predict_many(model: KnnModel, X) -> np.ndarray:
    """Majority label of the k nearest rows; equal distances go to the lower index."""
    X = _as_matrix(X)
    _check_width(X, model.X.shape[1])
    distances = squared_distances(X, model.X)
    nearest = np.argsort(distances, axis=1, kind='stable')[:, :model.k]
    votes = model.y[nearest].sum(axis=1)
    return np.where(votes > 0, POSITIVE, NEGATIVE)


def knn_predict(model: KnnModel, x) -> int:
    return int(knn_predict_many(model, x)[0])


# ---- Gaussian naive Bayes --------------------------------------------------

@dataclass
class NbModel:
    classes: np.ndarray
    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    epsilon: float

    def to_dict(self) -> dict:
        return {'classes': self.classes.tolist(), 'priors': self.priors.tolist(),
                'means': self.means.tolist(), 'variances': self.variances.tolist(),
                'epsilon': self.epsilon}

    @classmethod
    def from_dict(cls, data: dict) -> 'NbModel':
        return cls(np.array(data['classes'], dtype=int), np.array(data['priors'], dtype=float),
                   np.array(data['means'], dtype=float), np.array(data['variances'], dtype=float),
                   float(data['epsilon']))


def nb_train(X, y, epsilon: Optional[float] = None) -> NbModel:
    """
    Per-class priors and per-feature Gaussians.

    Variances are smoothed by epsilon, which defaults to 1e-9 times the
    largest feature variance of the training rows.
    """
    X = _as_matrix(X)
    y = _as_labels(y, len(X))
    if epsilon is None:
        epsilon = NB_VAR_SMOOTHING * float(X.var(axis=0).max())
        if epsilon == 0.0:
            epsilon = NB_VAR_SMOOTHING
    elif epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon!r}")

    # Positive first so that equal posteriors resolve to the positive class
    classes = np.array([POSITIVE, NEGATIVE])
    priors = np.array([np.mean(y == c) for c in classes])
    means = np.vstack([X[y == c].mean(axis=0) for c in classes])
    variances = np.vstack([X[y == c].var(axis=0) for c in classes]) + epsilon
    if np.any(variances <= 0):
        raise ValueError("a feature has zero variance within a class and epsilon is 0")
    return NbModel(classes, priors, means, variances, float(epsilon))


def nb_log_joint(model: NbModel, X) -> np.ndarray:
    """log prior + sum of log Gaussian densities, one column per class."""
    X = _as_matrix(X)
    _check_width(X, model.means.shape[1])
    log_norm = -0.5 * np.sum(np.log(2.0 * np.pi * model.variances), axis=1)
    columns = []
    for c in range(len(model.classes)):
        quad = -0.5 * np.sum((X - model.means[c]) ** 2 / model.variances[c], axis=1)
        columns.append(np.log(model.priors[c]) + log_norm[c] + quad)
    return np.column_stack(columns)


def nb_predict_many(model: NbModel, X) -> np.ndarray:
    return model.classes[np.argmax(nb_log_joint(model, X), axis=1)]


def nb_predict(model: NbModel, x) -> int:
    return int(nb_predict_many(model, x)[0])


# ---- estimator wrappers ----------------------------------------------------

class SvmClassifier(BaseEstimator, ClassifierMixin):
    """RBF SVM with optional inner grid search over (C, sigma)."""

    def __init__(self, C=1.0, sigma=None, tol=1e-3, max_iter=10000, grid_search=False,
                 c_grid=SVM_C_GRID, sigma_factors=SVM_SIGMA_FACTORS, inner_folds=5, random_state=0):
        self.C = C
        self.sigma = sigma
        self.tol = tol
        self.max_iter = max_iter
        self.grid_search = grid_search
        self.c_grid = c_grid
        self.sigma_factors = sigma_factors
        self.inner_folds = inner_folds
        self.random_state = random_state

    def fit(self, X, y):
        X = _as_matrix(X)
        scale = np.sqrt(X.shape[1])
        self.grid_points_skipped_ = 0
        if self.grid_search:
            C, sigma, scores = grid_search_svm(X, y, self.c_grid, [f * scale for f in self.sigma_factors],
                                               self.inner_folds, self.random_state, self.tol, self.max_iter)
            self.grid_points_skipped_ = len(self.c_grid) * len(self.sigma_factors) - len(scores)
        else:
            C, sigma = self.C, self.sigma if self.sigma is not None else scale
        self.model_ = svm_train(X, y, C, sigma, self.tol, self.max_iter)
        self.classes_ = np.array([NEGATIVE, POSITIVE])
        return self

    def decision_function(self, X):
        return svm_decision(self.model_, X)

    def predict(self, X):
        return np.where(self.decision_function(X) >= 0, POSITIVE, NEGATIVE)

    def hyperparameters(self) -> dict:
        chosen = {'C': self.model_.C, 'sigma': self.model_.sigma}
        if self.grid_search:
            chosen['grid_points'] = len(self.c_grid) * len(self.sigma_factors)
            chosen['grid_points_skipped'] = getattr(self, 'grid_points_skipped_', None)
        return chosen


class KnnClassifier(BaseEstimator, ClassifierMixin):
    def __init__(self, k=5):
        self.k = k

    def fit(self, X, y):
        self.model_ = knn_train(X, y, self.k)
        self.classes_ = np.array([NEGATIVE, POSITIVE])
        return self

    def predict(self, X):
        return knn_predict_many(self.model_, X)

    def hyperparameters(self) -> dict:
        return {'k': self.model_.k}


class NbClassifier(BaseEstimator, ClassifierMixin):
    def __init__(self, epsilon=None):
        self.epsilon = epsilon

    def fit(self, X, y):
        self.model_ = nb_train(X, y, self.epsilon)
        self.classes_ = np.array([NEGATIVE, POSITIVE])
        return self

    def predict(self, X):
        return nb_predict_many(self.model_, X)

    def hyperparameters(self) -> dict:
        return {'epsilon': self.model_.epsilon}


CLASSIFIERS = {'svm': SvmClassifier, 'knn': KnnClassifier, 'nb': NbClassifier}
CLASSIFIER_TITLES = {'svm': 'SVMRBF', 'knn': 'KNN', 'nb': 'NB'}
_MODEL_TYPES = {'svm': SvmModel, 'knn': KnnModel, 'nb': NbModel}


def build_classifier(name: str, **params):
    """Instantiate a classifier by its short name ('svm', 'knn', 'nb')."""
    try:
        return CLASSIFIERS[name](**params)
    except KeyError:
        raise ValueError(f"unknown classifier {name!r}; expected one of {sorted(CLASSIFIERS)}") from None


# ---- model files -----------------------------------------------------------

def classifier_name(estimator) -> str:
    for name, cls in CLASSIFIERS.items():
        if isinstance(estimator, cls):
            return name
    raise ValueError(f"not a pipeline classifier: {type(estimator).__name__}")


def save_model(path, estimator, standardizer: Standardizer, metadata: Optional[dict] = None) -> Path:
    """
    Write a fitted classifier and its standardizer as versioned JSON.

    Floats are written with repr precision, so loading restores them exactly.
    """
    name = classifier_name(estimator)
    document = {
        'format': MODEL_FORMAT,
        'version': MODEL_VERSION,
        'classifier': name,
        'params': {key: (list(value) if isinstance(value, tuple) else value)
                   for key, value in estimator.get_params().items()},
        'standardizer': standardizer.to_dict(),
        'model': estimator.model_.to_dict(),
        'metadata': metadata or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=1, sort_keys=True) + '\n')
    return path


def load_model(path):
    """
    Read a model file written by save_model.

    Returns:
        (estimator, standardizer, metadata)
    """
    path = Path(path)
    try:
        document = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: not a model file ({e})") from None
    if document.get('format') != MODEL_FORMAT:
        raise ValueError(f"{path}: unknown model format {document.get('format')!r}")
    if document.get('version') != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {document.get('version')!r}")

    name = document['classifier']
    params = {key: (tuple(value) if isinstance(value, list) else value)
              for key, value in document['params'].items()}
    estimator = build_classifier(name, **params)
    estimator.model_ = _MODEL_TYPES[name].from_dict(document['model'])
    estimator.classes_ = np.array([NEGATIVE, POSITIVE])
    return estimator, Standardizer.from_dict(document['standardizer']), document['metadata']
