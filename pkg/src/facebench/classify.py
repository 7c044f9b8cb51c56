"""Nearest-neighbor and RBF-kernel SVM classification.

The SVM solves the soft-margin dual with a sequential minimal
optimization loop written against the precomputed kernel matrix, using
maximal-violating-pair working-set selection.  Multi-class problems are
handled one-vs-rest with all binary machines sharing the same kernel
matrix.  Hyperparameters can be tuned by an exhaustive grid search over
stratified cross-validation folds.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import FacebenchError
from .metrics import DistanceMatrix

DEFAULT_C_GRID = tuple(float(2.0**p) for p in range(-5, 16, 2))
DEFAULT_GAMMA_GRID = tuple(float(2.0**p) for p in range(-15, 4, 2))

_SMO_TOL = 1e-3
_KERNEL_EVAL_BUDGET = 10_000_000


class TrainingLimitError(FacebenchError):
    """Raised when the SMO loop hits its iteration cap before converging."""


@dataclass(frozen=True)
class Prediction:
    """One classified probe: winning label, its score and the runner-up."""

    probe_id: str
    predicted: str
    score: float
    runner_up: str | None = None


def nn_classify(
    dm: DistanceMatrix, gallery_labels: "list[str] | tuple[str, ...]"
) -> list[Prediction]:
    """Assign each probe the label of its nearest gallery row.

    Ties go to the lowest gallery index.  The score is the negated
    winning distance so that higher is better, like the SVM decision
    value.  The runner-up is the label of the second-closest row.
    """
    labels = list(gallery_labels)
    n_p, n_g = dm.shape
    if len(labels) != n_g:
        raise ValueError("gallery_labels length must match gallery size")
    if n_g == 0:
        raise ValueError("gallery must be non-empty")
    probe_ids = dm.probe_ids or tuple(str(i) for i in range(n_p))
    preds = []
    for i in range(n_p):
        order = np.argsort(dm.values[i], kind="stable")
        best = int(order[0])
        runner = labels[int(order[1])] if n_g > 1 else None
        preds.append(
            Prediction(
                probe_id=probe_ids[i],
                predicted=labels[best],
                score=-float(dm.values[i, best]),
                runner_up=runner,
            )
        )
    return preds


def rbf_kernel(x: np.ndarray, y: np.ndarray, gamma: float) -> float:
    """exp(-gamma * ||x - y||^2) for two feature vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D vectors of the same length")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    return float(np.exp(-gamma * np.sum((x - y) ** 2)))


def _rbf_matrix(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    sq_a = np.sum(a * a, axis=1)
    sq_b = np.sum(b * b, axis=1)
    d2 = np.maximum(0.0, sq_a[:, None] + sq_b[None, :] - 2.0 * (a @ b.T))
    return np.exp(-gamma * d2)


def _smo_binary(
    K: np.ndarray, y: np.ndarray, C: float, tol: float = _SMO_TOL
) -> tuple[np.ndarray, float, int]:
    """Maximal-violating-pair SMO on a precomputed kernel.

    Works in the variables u_k = y_k * alpha_k, each boxed to
    [A_k, B_k] = [0, C] or [-C, 0] depending on the sign of y_k.  The
    gradient of the dual in u is g_k = y_k - sum_l K_kl u_l; at each
    step the pair maximizing g_i - g_j over the feasible up/down sets
    moves by the clipped Newton step.  Stops when the maximal violation
    drops to ``tol``.  Returns (alpha, bias, iterations).
    """
    n = y.size
    upper = np.where(y > 0, C, 0.0)
    lower = np.where(y > 0, 0.0, -C)
    u = np.zeros(n)
    g = y.astype(np.float64).copy()
    max_iter = max(_KERNEL_EVAL_BUDGET // n, 1)

    it = 0
    while it < max_iter:
        can_up = u < upper
        can_dn = u > lower
        if not can_up.any() or not can_dn.any():
            break
        i = int(np.argmax(np.where(can_up, g, -np.inf)))
        j = int(np.argmin(np.where(can_dn, g, np.inf)))
        gap = g[i] - g[j]
        if gap <= tol:
            break
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 1e-12:
            quad = 1e-12
        room_i = upper[i] - u[i]
        room_j = u[j] - lower[j]
        lam = min(room_i, room_j, gap / quad)
        g += lam * (K[:, j] - K[:, i])
        # Snap to the box edge when the step is bound-limited, so that
        # subsequent feasibility masks compare exactly.
        u[i] = upper[i] if lam == room_i else u[i] + lam
        u[j] = lower[j] if lam == room_j else u[j] - lam
        it += 1
    else:
        raise TrainingLimitError(
            f"SMO did not converge within {max_iter} iterations "
            f"(n={n}); loosen tol or rescale the data"
        )

    free = (u > lower) & (u < upper)
    if free.any():
        bias = float(np.mean(g[free]))
    else:
        can_up = u < upper
        can_dn = u > lower
        hi = g[can_up].max() if can_up.any() else 0.0
        lo = g[can_dn].min() if can_dn.any() else 0.0
        bias = float((hi + lo) / 2.0)
    return y * u, bias, it


@dataclass(frozen=True, eq=False)
class BinaryMachine:
    """One one-vs-rest margin: positive label, support set and bias."""

    positive_label: str
    support_vectors: np.ndarray
    coefficients: np.ndarray  # alpha_k * y_k for each support vector
    bias: float
    iterations: int


@dataclass(frozen=True, eq=False)
class SvmModel:
    """A trained one-vs-rest RBF SVM with its standardization statistics."""

    classes: tuple[str, ...]
    machines: tuple[BinaryMachine, ...]
    c: float
    gamma: float
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    warnings: tuple[str, ...] = field(default=())


def svm_train(
    X: np.ndarray,
    labels,
    c: float = 10.0,
    gamma: float | None = None,
    tol: float = _SMO_TOL,
    n_jobs: int = 1,
) -> SvmModel:
    """Fit a one-vs-rest RBF SVM by SMO on the precomputed kernel.

    Features are standardized internally (statistics stored on the
    model).  ``gamma`` defaults to 1 / n_features.  The kernel matrix is
    computed once and shared by every binary subproblem; with
    ``n_jobs`` > 1 the subproblems run on a thread pool, with results
    assembled in class order either way.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("X must be 2-D with at least 2 rows")
    labels = [str(v) for v in labels]
    if len(labels) != X.shape[0]:
        raise ValueError("labels length must match row count")
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise ValueError("need at least 2 classes")
    if c <= 0:
        raise ValueError("c must be > 0")
    if gamma is None:
        gamma = 1.0 / X.shape[1]
    if gamma <= 0:
        raise ValueError("gamma must be > 0")

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale < 1e-12, 1.0, scale)
    Xs = (X - mean) / scale
    K = _rbf_matrix(Xs, Xs, gamma)
    y_all = np.asarray(labels)

    notes = []
    if bool(np.all(Xs == Xs[0])):
        notes.append("degenerate training data: all rows identical")

    def fit_one(cls: str) -> BinaryMachine:
        y = np.where(y_all == cls, 1.0, -1.0)
        alpha, bias, iters = _smo_binary(K, y, c, tol)
        sv = alpha > 0
        return BinaryMachine(
            positive_label=cls,
            support_vectors=Xs[sv].copy(),
            coefficients=(alpha * y)[sv],
            bias=bias,
            iterations=iters,
        )

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            machines = tuple(pool.map(fit_one, classes))
    else:
        machines = tuple(fit_one(cls) for cls in classes)

    for m in machines:
        if m.support_vectors.shape[0] == 0:
            notes.append(f"class {m.positive_label!r}: no support vectors, constant margin")
    for note in notes:
        warnings.warn(note, stacklevel=2)
    return SvmModel(
        classes=classes,
        machines=machines,
        c=float(c),
        gamma=float(gamma),
        feature_mean=mean,
        feature_scale=scale,
        warnings=tuple(notes),
    )


def svm_decision(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """Decision values, one column per class in ``model.classes`` order."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.feature_mean.size:
        raise ValueError("feature dimension does not match the trained model")
    Xs = (X - model.feature_mean) / model.feature_scale
    out = np.empty((X.shape[0], len(model.machines)))
    for idx, m in enumerate(model.machines):
        if m.support_vectors.shape[0] == 0:
            out[:, idx] = m.bias
        else:
            Kp = _rbf_matrix(Xs, m.support_vectors, model.gamma)
            out[:, idx] = Kp @ m.coefficients + m.bias
    return out


def svm_predict(
    model: SvmModel, X: np.ndarray, probe_ids: "tuple[str, ...] | None" = None
) -> list[Prediction]:
    """Classify probe rows by the largest one-vs-rest decision value.

    Ties go to the earlier label in ``model.classes`` order.
    """
    scores = svm_decision(model, X)
    n = scores.shape[0]
    ids = probe_ids or tuple(str(i) for i in range(n))
    if len(ids) != n:
        raise ValueError("probe_ids length must match probe count")
    preds = []
    for i in range(n):
        order = np.argsort(-scores[i], kind="stable")
        best = int(order[0])
        runner = model.classes[int(order[1])] if len(model.classes) > 1 else None
        preds.append(
            Prediction(
                probe_id=ids[i],
                predicted=model.classes[best],
                score=float(scores[i, best]),
                runner_up=runner,
            )
        )
    return preds


def _make_folds(labels: np.ndarray, n_folds: int, seed: int) -> np.ndarray:
    """Stratified fold assignment; falls back to plain folds when a class
    has fewer members than folds."""
    rng = np.random.default_rng(seed)
    n = labels.size
    fold_of = np.empty(n, dtype=np.int64)
    counts = {cls: int(np.sum(labels == cls)) for cls in sorted(set(labels))}
    if min(counts.values()) < n_folds:
        warnings.warn(
            "a class has fewer members than folds; using unstratified folds",
            stacklevel=3,
        )
        order = rng.permutation(n)
        fold_of[order] = np.arange(n) % n_folds
        return fold_of
    for cls in sorted(counts):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(idx.size)]
        fold_of[idx] = np.arange(idx.size) % n_folds
    return fold_of


def grid_search_svm(
    X: np.ndarray,
    labels,
    c_grid=DEFAULT_C_GRID,
    gamma_grid=DEFAULT_GAMMA_GRID,
    n_folds: int = 5,
    seed: int = 0,
    tol: float = _SMO_TOL,
    n_jobs: int = 1,
) -> tuple[float, float]:
    """Pick (C, gamma) by cross-validated accuracy over a full grid.

    Accuracy is pooled over all held-out folds.  Ties prefer the smaller
    C, then the smaller gamma.  Fold assignment is stratified per class
    and fully determined by ``seed``.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray([str(v) for v in labels])
    if not len(c_grid) or not len(gamma_grid):
        raise ValueError("grids must be non-empty")
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    if X.shape[0] != labels.size:
        raise ValueError("labels length must match row count")
    fold_of = _make_folds(labels, n_folds, seed)

    best = (-1.0, None, None)
    for c in sorted(float(v) for v in c_grid):
        for gamma in sorted(float(v) for v in gamma_grid):
            correct = 0
            total = 0
            for fold in range(n_folds):
                test = fold_of == fold
                train = ~test
                if not test.any():
                    continue
                total += int(test.sum())
                if len(set(labels[train])) < 2:
                    continue
                model = svm_train(X[train], labels[train], c, gamma, tol, n_jobs)
                preds = svm_predict(model, X[test])
                correct += sum(
                    p.predicted == t for p, t in zip(preds, labels[test])
                )
            acc = correct / total if total else 0.0
            if acc > best[0]:
                best = (acc, c, gamma)
    return best[1], best[2]
