"""Classification rule, per-class signatures, metrics, CV and radius sweeps.

A query x is assigned to the class whose center row is nearest to x W in
the l1 distance, ties broken toward the smallest class index.  The
signature of class j is the set of features whose weight magnitude in
column j exceeds a threshold; the default threshold is relative to the
largest weight so it survives feature rescaling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .linalg import check_matrix, normalize_features, one_hot
from .model import ProblemTemplate, TrainedModel
from .solver import SolverParams, TrainingHistory, solve

__all__ = [
    "CVResult",
    "EvalReport",
    "Signature",
    "SweepPoint",
    "SweepResult",
    "cross_validate",
    "detect_knee",
    "eta_sweep",
    "evaluate",
    "predict",
    "signature",
    "stratified_folds",
    "train_model",
]

DEFAULT_EPSILON_SCALE = 1e-6


@dataclass(frozen=True)
class Signature:
    """Per-class selected feature indices and the threshold that chose them."""

    selected: tuple[np.ndarray, ...]
    epsilon: float

    def union(self) -> np.ndarray:
        """Distinct features selected by any class, ascending."""
        if not self.selected:
            return np.array([], dtype=np.int64)
        return np.unique(np.concatenate(self.selected))


@dataclass(frozen=True)
class EvalReport:
    """Accuracy metrics on a labelled set.

    ``per_class_accuracy[j]`` is NaN when class j has no test samples.
    """

    global_accuracy: float
    per_class_accuracy: np.ndarray
    confusion: np.ndarray
    n_selected_features: int


@dataclass(frozen=True)
class CVResult:
    """Per-fold reports plus their mean and standard deviation."""

    reports: tuple[EvalReport, ...]
    mean_accuracy: float
    std_accuracy: float


@dataclass(frozen=True)
class SweepPoint:
    """One radius in a sweep: feature count and cross-validated accuracy."""

    eta: float
    n_features: int
    accuracy: float
    per_class_accuracy: np.ndarray
    cv: CVResult
    selected_features: np.ndarray


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]


def _scores(Xp: np.ndarray, model: TrainedModel) -> np.ndarray:
    """l1 distances from each projected sample to each center row."""
    proj = Xp @ model.W
    return np.abs(proj[:, None, :] - model.mu[None, :, :]).sum(axis=2)


def predict(x, model: TrainedModel) -> int:
    """Class of a single query (already divided by ``model.feature_scale``)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.n_features:
        raise ValueError(f"query must be a vector of length {model.n_features}")
    if not np.all(np.isfinite(x)):
        raise ValueError("query contains non-finite entries")
    return int(np.argmin(_scores(x[None, :], model)[0]))


def signature(model: TrainedModel, epsilon: float | None = None) -> Signature:
    """Per-class feature sets: indices i with |W[i, j]| above the threshold.

    Without an explicit epsilon the threshold is 1e-6 times the largest
    weight magnitude, so the selection is invariant under rescaling W.
    """
    W = model.W
    if epsilon is None:
        epsilon = DEFAULT_EPSILON_SCALE * float(np.abs(W).max())
    if epsilon < 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    sel = tuple(np.nonzero(np.abs(W[:, j]) > epsilon)[0] for j in range(W.shape[1]))
    return Signature(selected=sel, epsilon=float(epsilon))


def evaluate(X_test, labels_test, model: TrainedModel,
             epsilon: float | None = None) -> EvalReport:
    """Confusion matrix and accuracies of the model on a labelled set."""
    X_test = check_matrix(X_test, "X_test")
    labels_test = np.asarray(labels_test)
    if X_test.shape[0] == 0:
        raise ValueError("empty test set")
    if labels_test.shape[0] != X_test.shape[0]:
        raise ValueError("labels length does not match the number of rows")
    k = model.n_classes
    if labels_test.size and (labels_test.min() < 0 or labels_test.max() >= k):
        raise ValueError(f"test labels must lie in [0, {k})")
    preds = np.argmin(_scores(X_test / model.feature_scale, model), axis=1)
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (labels_test.astype(np.int64), preds), 1)
    counts = confusion.sum(axis=1)
    with np.errstate(invalid="ignore"):
        per_class = np.where(counts > 0, np.diag(confusion) / np.maximum(counts, 1), np.nan)
    return EvalReport(
        global_accuracy=float(np.trace(confusion) / X_test.shape[0]),
        per_class_accuracy=per_class,
        confusion=confusion,
        n_selected_features=int(signature(model, epsilon).union().size),
    )


def train_model(X, labels, template: ProblemTemplate,
                params: SolverParams | None = None, n_classes: int | None = None,
                normalize: bool = True) -> tuple[TrainedModel, TrainingHistory]:
    """Normalize features, build the problem and run the solver.

    The feature scale used for normalization is stored on the returned
    model so queries can be scaled consistently.
    """
    X = check_matrix(X, "X")
    labels = np.asarray(labels)
    k = n_classes if n_classes is not None else int(labels.max()) + 1
    if normalize:
        Xn, scale = normalize_features(X)
    else:
        Xn, scale = X, 1.0
    Y = one_hot(labels, k)
    problem = template.bind(Xn, Y.matrix)
    if params is None:
        params = SolverParams.for_problem(problem)
    else:
        params = replace(params, rho=template.rho, delta=template.loss.delta,
                         alpha=template.alpha)
    model, history = solve(problem, params)
    return replace(model, feature_scale=scale), history


def stratified_folds(labels, folds: int, seed: int = 0) -> list[np.ndarray]:
    """Deterministic stratified fold assignment.

    Shuffles each class with a counter-based generator and deals its
    samples round-robin, so fold class proportions deviate from the global
    ones by at most one sample per class; classes smaller than the fold
    count land in distinct folds.
    """
    labels = np.asarray(labels)
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if folds > labels.shape[0]:
        raise ValueError(f"cannot make {folds} folds from {labels.shape[0]} samples")
    k = int(labels.max()) + 1
    counts = np.bincount(labels.astype(np.int64), minlength=k)
    missing = np.nonzero(counts == 0)[0]
    if missing.size:
        raise ValueError(f"class {int(missing[0])} has no samples")
    rng = np.random.Generator(np.random.Philox(seed))
    assignment = [[] for _ in range(folds)]
    offset = 0
    for c in range(k):
        idx = rng.permutation(np.nonzero(labels == c)[0])
        for j, sample in enumerate(idx):
            assignment[(offset + j) % folds].append(int(sample))
        # continue dealing where the previous class stopped so no fold
        # stays empty when classes are smaller than the fold count
        offset = (offset + idx.size) % folds
    return [np.sort(np.array(a, dtype=np.int64)) for a in assignment]


def _fit_and_score(X, labels, train_idx, test_idx, template, params, k):
    model, _ = train_model(X[train_idx], labels[train_idx], template,
                           params=params, n_classes=k)
    return evaluate(X[test_idx], labels[test_idx], model)


def cross_validate(X, labels, folds: int, template: ProblemTemplate,
                   params: SolverParams | None = None, seed: int = 0,
                   jobs: int = 1) -> CVResult:
    """Stratified k-fold cross validation with one solver run per fold."""
    X = check_matrix(X, "X")
    labels = np.asarray(labels)
    k = int(labels.max()) + 1
    fold_idx = stratified_folds(labels, folds, seed=seed)
    all_idx = np.arange(labels.shape[0])
    tasks = []
    for test_idx in fold_idx:
        train_idx = np.setdiff1d(all_idx, test_idx)
        tasks.append((train_idx, test_idx))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(
                lambda t: _fit_and_score(X, labels, t[0], t[1], template, params, k),
                tasks))
    else:
        reports = [_fit_and_score(X, labels, tr, te, template, params, k)
                   for tr, te in tasks]
    accs = np.array([r.global_accuracy for r in reports])
    return CVResult(reports=tuple(reports),
                    mean_accuracy=float(accs.mean()),
                    std_accuracy=float(accs.std()))


def eta_sweep(X, labels, etas, template: ProblemTemplate,
              params: SolverParams | None = None, folds: int = 4,
              seed: int = 0, jobs: int = 1) -> SweepResult:
    """Cross-validate over a grid of constraint radii.

    For each radius the accuracy comes from cross validation and the
    feature count from the signature of a model fitted on the full data.
    """
    etas = [float(e) for e in etas]
    if not etas:
        raise ValueError("need at least one radius")
    if sorted(etas) != etas:
        raise ValueError("radii must be sorted ascending")
    points = []
    for eta in etas:
        t = template.with_radius(eta)
        cv = cross_validate(X, labels, folds, t, params=params, seed=seed, jobs=jobs)
        full_model, _ = train_model(X, labels, t, params=params)
        sel = signature(full_model).union()
        per_class = np.vstack([r.per_class_accuracy for r in cv.reports])
        with np.errstate(invalid="ignore"):
            per_class_mean = np.nanmean(per_class, axis=0)
        points.append(SweepPoint(
            eta=eta,
            n_features=int(sel.size),
            accuracy=cv.mean_accuracy,
            per_class_accuracy=per_class_mean,
            cv=cv,
            selected_features=sel,
        ))
    return SweepResult(points=tuple(points))


def detect_knee(result: SweepResult) -> int | None:
    """Heuristic knee index: the sharpest drop in accuracy slope.

    Flags the interior point with the most negative second difference of
    accuracy along the sweep.  Purely indicative; returns None for sweeps
    with fewer than three points.
    """
    acc = [p.accuracy for p in result.points]
    if len(acc) < 3:
        return None
    d2 = [acc[i + 1] - 2.0 * acc[i] + acc[i - 1] for i in range(1, len(acc) - 1)]
    return int(np.argmin(d2)) + 1
