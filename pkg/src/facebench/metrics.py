"""The eight dissimilarity measures and probe x gallery distance matrices.

Metric numbering follows the benchmark tables: (1) Euclidean, (2) City
Block, (3) Cosine, (4) Mahalanobis, (5) Bray-Curtis, (6) Canberra,
(7) Correlation, (8) Chebyshev.  Correlation is reported as the distance
1 - r (r being Pearson's coefficient), mirroring the cosine-distance
convention, so every metric is >= 0 with d(x, x) = 0.

``pairwise`` uses vectorized fast paths (chunked over probe rows) that
agree with scalar ``distance`` calls to within 1e-12.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import DataError


class MetricKind(IntEnum):
    """Distance metrics with their table numbering."""

    EUC = 1
    CB = 2
    COS = 3
    MC = 4
    BC = 5
    CAN = 6
    CORR = 7
    CHEB = 8


@dataclass(frozen=True, eq=False)
class MetricContext:
    """Carries the inverse covariance for the Mahalanobis metric."""

    covariance_inverse: np.ndarray
    ridge: float = 0.0

    def __post_init__(self):
        vi = np.asarray(self.covariance_inverse, dtype=np.float64)
        if vi.ndim != 2 or vi.shape[0] != vi.shape[1]:
            raise ValueError("covariance_inverse must be square")
        if not np.allclose(vi, vi.T, atol=1e-8):
            raise ValueError("covariance_inverse must be symmetric")
        object.__setattr__(self, "covariance_inverse", vi)


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Probes x gallery dissimilarities under one metric (or one fusion).

    ``metric`` is a MetricKind or a free-form descriptor string for fused
    matrices.  Entries are finite and non-negative.
    """

    values: np.ndarray
    metric: MetricKind | str
    probe_ids: tuple[str, ...] | None = None
    gallery_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("values must be 2-D")
        if v.size and (not np.all(np.isfinite(v)) or v.min() < 0):
            raise ValueError("distance entries must be finite and >= 0")
        object.__setattr__(self, "values", v)
        if self.probe_ids is not None and len(self.probe_ids) != v.shape[0]:
            raise ValueError("probe_ids length must match row count")
        if self.gallery_ids is not None and len(self.gallery_ids) != v.shape[1]:
            raise ValueError("gallery_ids length must match column count")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _check_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape or x.size == 0:
        raise ValueError("x and y must be 1-D vectors of the same nonzero length")
    return x, y


def distance(
    kind: MetricKind,
    x: np.ndarray,
    y: np.ndarray,
    ctx: MetricContext | None = None,
) -> float:
    """Dissimilarity between two feature vectors under one metric.

    Conventions: Canberra terms with x_i = y_i = 0 contribute 0; a
    Bray-Curtis denominator of 0 yields distance 0; Correlation returns
    1 - r.  Cosine requires nonzero vectors, Correlation non-constant
    ones, Mahalanobis a fitted context.  Equal inputs give exactly 0.
    """
    x, y = _check_pair(x, y)
    kind = MetricKind(kind)
    if kind is MetricKind.COS and (not np.any(x) or not np.any(y)):
        raise ValueError("cosine distance needs nonzero vectors")
    if kind is MetricKind.CORR and (np.all(x == x[0]) or np.all(y == y[0])):
        raise ValueError("correlation distance needs non-constant vectors")
    if kind is MetricKind.MC:
        if ctx is None:
            raise ValueError("Mahalanobis distance needs a MetricContext")
        if ctx.covariance_inverse.shape[0] != x.size:
            raise ValueError("covariance dimension does not match vectors")
    if np.array_equal(x, y):
        return 0.0

    if kind is MetricKind.EUC:
        return float(np.sqrt(np.sum((x - y) ** 2)))
    if kind is MetricKind.CB:
        return float(np.sum(np.abs(x - y)))
    if kind is MetricKind.COS:
        sim = np.dot(x, y) / (np.linalg.norm(x) * np.linalg.norm(y))
        return max(0.0, 1.0 - float(sim))
    if kind is MetricKind.MC:
        diff = x - y
        return float(np.sqrt(max(0.0, float(diff @ ctx.covariance_inverse @ diff))))
    if kind is MetricKind.BC:
        denom = np.sum(np.abs(x + y))
        if denom == 0:
            return 0.0
        return float(np.sum(np.abs(x - y)) / denom)
    if kind is MetricKind.CAN:
        num = np.abs(x - y)
        denom = np.abs(x) + np.abs(y)
        terms = np.where(denom > 0, num / np.where(denom > 0, denom, 1.0), 0.0)
        return float(np.sum(terms))
    if kind is MetricKind.CORR:
        xc = x - x.mean()
        yc = y - y.mean()
        sim = np.dot(xc, yc) / (np.linalg.norm(xc) * np.linalg.norm(yc))
        return max(0.0, 1.0 - float(sim))
    if kind is MetricKind.CHEB:
        return float(np.max(np.abs(x - y)))
    raise ValueError(f"unknown metric kind {kind!r}")


def _chunks(n_rows: int, per_cell_cost: int) -> list[tuple[int, int]]:
    step = max(1, 4_000_000 // max(1, per_cell_cost))
    return [(i, min(i + step, n_rows)) for i in range(0, n_rows, step)]


def pairwise(
    kind: MetricKind,
    gallery: np.ndarray,
    probes: np.ndarray,
    ctx: MetricContext | None = None,
    probe_ids: tuple[str, ...] | None = None,
    gallery_ids: tuple[str, ...] | None = None,
) -> DistanceMatrix:
    """Distances from every probe row to every gallery row.

    values[i, j] = distance(kind, probes[i], gallery[j], ctx), computed
    by vectorized paths chunked over probe rows.
    """
    kind = MetricKind(kind)
    gallery = np.asarray(gallery, dtype=np.float64)
    probes = np.asarray(probes, dtype=np.float64)
    if gallery.ndim != 2 or probes.ndim != 2:
        raise ValueError("gallery and probes must be 2-D")
    if gallery.shape[0] == 0:
        raise ValueError("gallery must be non-empty")
    if gallery.shape[1] != probes.shape[1]:
        raise ValueError("gallery and probes must share the feature dimension")

    if kind is MetricKind.COS:
        g_norm = np.linalg.norm(gallery, axis=1)
        p_norm = np.linalg.norm(probes, axis=1)
        if np.any(g_norm == 0) or np.any(p_norm == 0):
            raise ValueError("cosine distance needs nonzero vectors")
        sims = (probes @ gallery.T) / (p_norm[:, None] * g_norm[None, :])
        values = np.maximum(0.0, 1.0 - sims)
    elif kind is MetricKind.CORR:
        gc = gallery - gallery.mean(axis=1, keepdims=True)
        pc = probes - probes.mean(axis=1, keepdims=True)
        g_norm = np.linalg.norm(gc, axis=1)
        p_norm = np.linalg.norm(pc, axis=1)
        if np.any(g_norm == 0) or np.any(p_norm == 0):
            raise ValueError("correlation distance needs non-constant vectors")
        sims = (pc @ gc.T) / (p_norm[:, None] * g_norm[None, :])
        values = np.maximum(0.0, 1.0 - sims)
    elif kind is MetricKind.MC:
        if ctx is None:
            raise ValueError("Mahalanobis distance needs a MetricContext")
        if ctx.covariance_inverse.shape[0] != gallery.shape[1]:
            raise ValueError("covariance dimension does not match features")
        chol = np.linalg.cholesky(ctx.covariance_inverse)
        values = _difference_reduce(MetricKind.EUC, gallery @ chol, probes @ chol)
    else:
        values = _difference_reduce(kind, gallery, probes)

    return DistanceMatrix(
        values=values, metric=kind, probe_ids=probe_ids, gallery_ids=gallery_ids
    )


def _difference_reduce(kind: MetricKind, gallery, probes) -> np.ndarray:
    """Chunked broadcast evaluation for the elementwise-difference metrics."""
    n_p, dim = probes.shape
    n_g = gallery.shape[0]
    out = np.empty((n_p, n_g))
    for lo, hi in _chunks(n_p, n_g * dim):
        diff = probes[lo:hi, None, :] - gallery[None, :, :]
        if kind is MetricKind.EUC:
            out[lo:hi] = np.sqrt(np.sum(diff * diff, axis=2))
        elif kind is MetricKind.CB:
            out[lo:hi] = np.sum(np.abs(diff), axis=2)
        elif kind is MetricKind.CHEB:
            out[lo:hi] = np.max(np.abs(diff), axis=2)
        elif kind is MetricKind.CAN:
            denom = np.abs(probes[lo:hi, None, :]) + np.abs(gallery[None, :, :])
            terms = np.where(denom > 0, np.abs(diff) / np.where(denom > 0, denom, 1.0), 0.0)
            out[lo:hi] = np.sum(terms, axis=2)
        elif kind is MetricKind.BC:
            num = np.sum(np.abs(diff), axis=2)
            den = np.sum(np.abs(probes[lo:hi, None, :] + gallery[None, :, :]), axis=2)
            out[lo:hi] = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
        else:
            raise ValueError(f"no broadcast path for {kind!r}")
    return out


def fit_metric_context(train_features: np.ndarray, ridge: float = 1e-6) -> MetricContext:
    """Estimate the inverse covariance of training features for Mahalanobis.

    The sample covariance gets a ridge of ridge * (trace/dim) on its
    diagonal before inversion.
    """
    X = np.asarray(train_features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    cov = np.atleast_2d(np.cov(X, rowvar=False, ddof=1))
    dim = cov.shape[0]
    cov = cov + ridge * (np.trace(cov) / dim) * np.eye(dim)
    cov = (cov + cov.T) / 2
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError("covariance matrix is singular even after ridge") from None
    inv = np.linalg.inv(cov)
    inv = (inv + inv.T) / 2
    return MetricContext(covariance_inverse=inv, ridge=ridge)


def save_distance_csv(dm: DistanceMatrix, path: str | Path) -> None:
    """Write a distance matrix as CSV: probe ids as rows, gallery ids as columns."""
    n_p, n_g = dm.shape
    probe_ids = dm.probe_ids or tuple(f"p{i}" for i in range(n_p))
    gallery_ids = dm.gallery_ids or tuple(f"g{j}" for j in range(n_g))
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["probe_id", *gallery_ids])
        for pid, row in zip(probe_ids, dm.values):
            writer.writerow([pid, *(repr(float(v)) for v in row)])


def load_distance_csv(path: str | Path) -> DistanceMatrix:
    """Read a distance matrix written by save_distance_csv."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"distance matrix not found: {path}")
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty distance matrix file") from None
        gallery_ids = tuple(header[1:])
        probe_ids = []
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path} row {lineno}: ragged row")
            probe_ids.append(row[0])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError:
                raise DataError(f"{path} row {lineno}: non-numeric entry") from None
    if not rows:
        raise DataError(f"{path}: no probe rows")
    return DistanceMatrix(
        values=np.array(rows, dtype=np.float64),
        metric=path.stem,
        probe_ids=tuple(probe_ids),
        gallery_ids=gallery_ids,
    )
