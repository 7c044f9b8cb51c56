"""Combining several distance matrices into a single fused matrix.

Matrices are first brought to a common [0, 1] scale by global min-max
normalization, then merged cell-by-cell by one of five rules: average,
minimum, median, fixed convex weights, or weighted matching-score
probability (WMP).  WMP turns the k candidate distances of each cell
into softmax weights and pairs the largest weight with the smallest
distance, so the most confident (smallest) distance dominates.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .metrics import DistanceMatrix, MetricKind


class FusionKind(Enum):
    AVG = "avg"
    MIN = "min"
    MED = "med"
    WEIGHTED = "weighted"
    WMP = "wmp"


@dataclass(frozen=True)
class FusionScheme:
    """A fusion rule, plus the weight vector when the rule needs one."""

    kind: FusionKind
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        kind = FusionKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is FusionKind.WEIGHTED:
            if not self.weights:
                raise ValueError("WEIGHTED fusion needs a weight vector")
            w = tuple(float(v) for v in self.weights)
            if any(v < 0 for v in w):
                raise ValueError("weights must be non-negative")
            if abs(sum(w) - 1.0) > 1e-9:
                raise ValueError("weights must sum to 1")
            object.__setattr__(self, "weights", w)
        elif self.weights is not None:
            raise ValueError(f"{kind.name} fusion takes no weights")

    def describe(self) -> str:
        if self.kind is FusionKind.WEIGHTED:
            return "W(" + ",".join(f"{v:g}" for v in self.weights) + ")"
        return self.kind.name


def minmax_normalize(dm: DistanceMatrix) -> DistanceMatrix:
    """Rescale a distance matrix to [0, 1] by its global min and max.

    A constant matrix maps to all zeros.
    """
    v = dm.values
    if v.size == 0:
        raise ValueError("cannot normalize an empty matrix")
    lo = v.min()
    hi = v.max()
    if hi == lo:
        out = np.zeros_like(v)
    else:
        out = (v - lo) / (hi - lo)
    return DistanceMatrix(
        values=out, metric=dm.metric, probe_ids=dm.probe_ids, gallery_ids=dm.gallery_ids
    )


def wmp_weights(distances: np.ndarray) -> np.ndarray:
    """Softmax weights re-paired so larger weights go to smaller distances.

    The softmax of the distances is computed, then its values are handed
    out in descending order to the distances in ascending order.  Ties
    keep their original relative order.  The result sums to 1.
    """
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("distances must be a non-empty 1-D vector")
    if not np.all(np.isfinite(d)):
        raise ValueError("distances must be finite")
    shifted = np.exp(d - d.max())
    soft = shifted / shifted.sum()
    order = np.argsort(d, kind="stable")
    out = np.empty_like(soft)
    out[order] = np.sort(soft)[::-1]
    return out


def fuse(matrices: Sequence[DistanceMatrix], scheme: FusionScheme) -> DistanceMatrix:
    """Merge k same-shape distance matrices cell-by-cell under one scheme.

    With a single input every scheme acts as the identity.  WMP computes
    its softmax weights independently in every cell.
    """
    if len(matrices) == 0:
        raise ValueError("need at least one matrix to fuse")
    shape = matrices[0].shape
    probe_ids = matrices[0].probe_ids
    gallery_ids = matrices[0].gallery_ids
    for dm in matrices[1:]:
        if dm.shape != shape:
            raise ValueError("all matrices must have the same shape")
        if dm.probe_ids is not None and probe_ids is not None and dm.probe_ids != probe_ids:
            raise ValueError("probe ids disagree between matrices")
        if (
            dm.gallery_ids is not None
            and gallery_ids is not None
            and dm.gallery_ids != gallery_ids
        ):
            raise ValueError("gallery ids disagree between matrices")
    scheme = FusionScheme(scheme.kind, scheme.weights)
    stack = np.stack([dm.values for dm in matrices])
    k = stack.shape[0]

    if scheme.kind is FusionKind.AVG:
        fused = stack.mean(axis=0)
    elif scheme.kind is FusionKind.MIN:
        fused = stack.min(axis=0)
    elif scheme.kind is FusionKind.MED:
        fused = np.median(stack, axis=0)
    elif scheme.kind is FusionKind.WEIGHTED:
        if len(scheme.weights) != k:
            raise ValueError(f"scheme has {len(scheme.weights)} weights for {k} matrices")
        fused = np.tensordot(np.asarray(scheme.weights), stack, axes=1)
    elif scheme.kind is FusionKind.WMP:
        # Per cell: softmax across the k candidates, sorted descending,
        # dotted with the candidates sorted ascending.
        shifted = np.exp(stack - stack.max(axis=0))
        soft = shifted / shifted.sum(axis=0)
        weights_desc = np.sort(soft, axis=0)[::-1]
        values_asc = np.sort(stack, axis=0)
        fused = np.sum(weights_desc * values_asc, axis=0)
    else:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unknown fusion kind {scheme.kind!r}")

    tags = ",".join(
        dm.metric.name if isinstance(dm.metric, MetricKind) else str(dm.metric)
        for dm in matrices
    )
    return DistanceMatrix(
        values=fused,
        metric=f"{scheme.describe()}[{tags}]",
        probe_ids=probe_ids,
        gallery_ids=gallery_ids,
    )


def rank_metrics(accuracies: Mapping[MetricKind, float]) -> list[MetricKind]:
    """Metrics ordered by accuracy, best first; ties by table number."""
    if not accuracies:
        raise ValueError("need at least one metric accuracy")
    return sorted(accuracies, key=lambda m: (-float(accuracies[m]), int(m)))
