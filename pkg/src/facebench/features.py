"""Eigenfaces (PCA) and Fisherfaces (LDA) projections.

Both fits return a FeatureModel holding the training mean, a basis whose
columns are unit-norm directions in input space, and the corresponding
(generalized) eigenvalues in non-increasing order.  For image data the
input dimension (4200) far exceeds the sample count, so PCA runs on the
n x n Gram matrix of centered samples (snapshot method).  Eigenvalues
below 1e-10 of the largest are treated as zero and their directions
dropped, so a fit may return fewer components than requested on
rank-deficient data.

Fisherfaces follow the two-stage construction: PCA down to
(n_samples - n_classes) dimensions to make the within-class scatter
invertible, then the generalized eigenproblem of the between/within
scatter pair in that subspace; the two projections are composed into a
single basis.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import DataError

_RANK_TOL = 1e-10

_MODEL_MAGIC = b"FBMODEL\x00"
_MODEL_VERSION = 1


class FeatureKind(Enum):
    PCA = "PCA"
    LDA = "LDA"


@dataclass(frozen=True, eq=False)
class FeatureModel:
    """A fitted linear projection: x -> (x - mean) @ basis."""

    kind: FeatureKind
    mean: np.ndarray
    basis: np.ndarray
    n_components: int
    eigenvalues: np.ndarray

    def __post_init__(self):
        if self.basis.shape != (self.mean.shape[0], self.n_components):
            raise ValueError("basis shape inconsistent with mean/n_components")
        if self.eigenvalues.shape != (self.n_components,):
            raise ValueError("eigenvalues length must equal n_components")
        if np.any(np.diff(self.eigenvalues) > 1e-9 * max(abs(self.eigenvalues[0]), 1.0)):
            raise ValueError("eigenvalues must be non-increasing")

    @property
    def input_dim(self) -> int:
        return self.mean.shape[0]


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def fit_pca(X: np.ndarray, n_components: int) -> FeatureModel:
    """Fit principal components of the rows of X.

    Eigenvalues are the variances (sample covariance, ddof=1) along each
    component, in non-increasing order.  Components whose eigenvalue
    falls below 1e-10 of the largest are dropped, so ``n_components`` is
    an upper bound on rank-deficient data.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("X must be a matrix with at least 2 rows")
    n, d = X.shape
    if not 1 <= n_components <= min(n - 1, d):
        raise ValueError(
            f"n_components must lie in [1, {min(n - 1, d)}], got {n_components}"
        )
    mean = X.mean(axis=0)
    Xc = X - mean

    if d > n:
        # Snapshot method: eigendecompose the n x n Gram matrix.
        gram = Xc @ Xc.T
        w, u = np.linalg.eigh(gram)
        w = w[::-1] / (n - 1)
        u = u[:, ::-1]
        if w[0] <= 0:
            raise ValueError("degenerate data: zero covariance")
        keep = min(n_components, int(np.sum(w > _RANK_TOL * w[0])))
        scale = np.sqrt(w[:keep] * (n - 1))
        basis = (Xc.T @ u[:, :keep]) / scale
        eigenvalues = w[:keep]
    else:
        cov = (Xc.T @ Xc) / (n - 1)
        w, v = np.linalg.eigh(cov)
        w = w[::-1]
        v = v[:, ::-1]
        if w[0] <= 0:
            raise ValueError("degenerate data: zero covariance")
        keep = min(n_components, int(np.sum(w > _RANK_TOL * w[0])))
        basis = v[:, :keep]
        eigenvalues = w[:keep]

    basis /= np.linalg.norm(basis, axis=0)
    basis = _fix_signs(basis)
    return FeatureModel(
        kind=FeatureKind.PCA,
        mean=mean,
        basis=basis,
        n_components=basis.shape[1],
        eigenvalues=eigenvalues.copy(),
    )


def scatter_matrices(X: np.ndarray, labels) -> tuple[np.ndarray, np.ndarray]:
    """Between-class and within-class scatter matrices of labeled rows.

    Returns (S_B, S_W) as unnormalized sums: S_B weights each class-mean
    deviation by the class size; S_W sums squared deviations from the
    class means.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    mean = X.mean(axis=0)
    d = X.shape[1]
    s_b = np.zeros((d, d))
    s_w = np.zeros((d, d))
    for cls in np.unique(labels):
        rows = X[labels == cls]
        mu = rows.mean(axis=0)
        centered = rows - mu
        s_w += centered.T @ centered
        offset = (mu - mean)[:, None]
        s_b += len(rows) * (offset @ offset.T)
    return s_b, s_w


def fisher_criterion(w: np.ndarray, s_b: np.ndarray, s_w: np.ndarray) -> float:
    """Rayleigh quotient of the scatter pair: (w'S_B w) / (w'S_W w)."""
    w = np.asarray(w, dtype=np.float64)
    if not np.any(w):
        raise ValueError("w must be nonzero")
    if s_b.shape != s_w.shape or s_b.shape != (w.size, w.size):
        raise ValueError("scatter matrices must be square and match w")
    denom = float(w @ s_w @ w)
    if denom <= 0:
        raise ValueError("zero denominator: w'S_W w must be positive")
    return float(w @ s_b @ w) / denom


def fit_lda(X: np.ndarray, labels, n_components: int) -> FeatureModel:
    """Fit Fisherfaces discriminant directions.

    Data are first reduced by PCA to (n_samples - n_classes) dimensions
    (capped at the effective rank), then the top generalized eigenvectors
    of (S_B, S_W) in that subspace are composed with the PCA projection
    into a single unit-norm basis.  Eigenvalues are the generalized
    eigenvalues, non-increasing.  If the within-class scatter is singular
    even after reduction (e.g. every class's samples identical) a small
    scale-relative ridge is added so the problem stays solvable.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    if X.ndim != 2 or labels.shape != (X.shape[0],):
        raise ValueError("X must be a matrix with one label per row")
    classes, counts = np.unique(labels, return_counts=True)
    if len(classes) < 2:
        raise ValueError("need >= 2 classes")
    if counts.min() < 2:
        small = classes[counts.argmin()]
        raise ValueError(f"every class needs >= 2 samples (class {small!r} has {counts.min()})")
    n, d = X.shape
    c = len(classes)
    if not 1 <= n_components <= c - 1:
        raise ValueError(f"n_components must lie in [1, {c - 1}], got {n_components}")

    pca = fit_pca(X, min(n - c, d, n - 1))
    reduced = project(pca, X)
    s_b, s_w = scatter_matrices(reduced, labels)

    scale = (np.trace(s_w) + np.trace(s_b)) / s_w.shape[0]
    if scale <= 0:
        raise ValueError("degenerate data: zero scatter")
    for ridge in (0.0, 1e-10 * scale, 1e-6 * scale):
        s_w_reg = s_w + ridge * np.eye(s_w.shape[0])
        try:
            np.linalg.cholesky(s_w_reg)
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise ValueError("within-class scatter is not positive definite")

    eigvals, eigvecs = scipy.linalg.eigh(s_b, s_w_reg)
    order = np.argsort(eigvals)[::-1]
    keep = min(n_components, eigvecs.shape[1])
    directions = eigvecs[:, order[:keep]]
    eigenvalues = eigvals[order[:keep]]

    basis = pca.basis @ directions
    basis /= np.linalg.norm(basis, axis=0)
    basis = _fix_signs(basis)
    return FeatureModel(
        kind=FeatureKind.LDA,
        mean=pca.mean,
        basis=basis,
        n_components=basis.shape[1],
        eigenvalues=eigenvalues.copy(),
    )


def project(model: FeatureModel, X: np.ndarray) -> np.ndarray:
    """Project rows of X into the model's component space."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != model.input_dim:
        raise ValueError(f"expected {model.input_dim} columns, got {X.shape[1]}")
    out = (X - model.mean) @ model.basis
    return out[0] if single else out


def save_model(model: FeatureModel, path: str | Path) -> None:
    """Serialize a model to the flat little-endian binary container.

    Layout: 8-byte magic "FBMODEL\\0", u32 version, u32 reserved, then
    u64 kind (0=PCA, 1=LDA), u64 input dim, u64 n_components, followed by
    mean, basis (row-major) and eigenvalues as little-endian f64.
    """
    kind_code = 0 if model.kind is FeatureKind.PCA else 1
    with open(path, "wb") as f:
        f.write(_MODEL_MAGIC)
        f.write(struct.pack("<II", _MODEL_VERSION, 0))
        f.write(struct.pack("<QQQ", kind_code, model.input_dim, model.n_components))
        f.write(np.ascontiguousarray(model.mean, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(model.basis, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(model.eigenvalues, dtype="<f8").tobytes())


def load_model(path: str | Path) -> FeatureModel:
    """Read a model written by save_model."""
    data = Path(path).read_bytes()
    if data[:8] != _MODEL_MAGIC:
        raise DataError(f"{path}: not a facebench model file")
    version, _ = struct.unpack_from("<II", data, 8)
    if version != _MODEL_VERSION:
        raise DataError(f"{path}: unsupported model version {version}")
    kind_code, dim, k = struct.unpack_from("<QQQ", data, 16)
    offset = 40
    expected = offset + 8 * (dim + dim * k + k)
    if len(data) < expected:
        raise DataError(f"{path}: truncated model file")

    def take(count):
        nonlocal offset
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        offset += 8 * count
        return arr.astype(np.float64)

    mean = take(dim)
    basis = take(dim * k).reshape(dim, k)
    eigenvalues = take(k)
    return FeatureModel(
        kind=FeatureKind.PCA if kind_code == 0 else FeatureKind.LDA,
        mean=mean,
        basis=basis,
        n_components=k,
        eigenvalues=eigenvalues,
    )
