"""Benchmark protocols: sample, split, fit, classify, fuse, report.

The named protocols fix the gender composition of the subject pool:

==========  ========  ======
protocol    females   males
==========  ========  ======
E1          83        83
E2          83        461
E3_MALE     0         82
E3_FEMALE   82        0
E3_MIXED    41        41
E4_120      20        100
E4_240      40        200
E4_360      60        300
E4_480      80        400
==========  ========  ======

Every E4 pool keeps the 5:1 male:female composition.  A run samples the
pool, splits each subject's images 9:1 or 5:5, fits the requested
feature spaces on the training half, evaluates every configured
classifier, optionally fuses the best-k distance matrices, and collects
accuracy and wall-clock timing into a report.  Runs are deterministic
functions of (data, config); thread count never changes the numbers.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .classify import Prediction, nn_classify, svm_predict, svm_train
from .dataset import (
    Dataset,
    ImageRecord,
    SamplingSpec,
    SplitRatio,
    filter_min_images,
    sample_subjects,
    split_train_test,
)
from .errors import DataError
from .fusion import FusionKind, FusionScheme, fuse, minmax_normalize, rank_metrics
from .metrics import MetricKind, fit_metric_context, pairwise
from .preprocess import (
    GrayImage,
    align_crop_resize,
    histogram_equalize,
    read_pgm,
    to_feature_vector,
)


class Protocol(Enum):
    E1 = "E1"
    E2 = "E2"
    E3_MALE = "E3_MALE"
    E3_FEMALE = "E3_FEMALE"
    E3_MIXED = "E3_MIXED"
    E4_120 = "E4_120"
    E4_240 = "E4_240"
    E4_360 = "E4_360"
    E4_480 = "E4_480"
    CUSTOM = "CUSTOM"


#: (n_female, n_male) pools implied by each named protocol.
PROTOCOL_COUNTS: dict[Protocol, tuple[int, int]] = {
    Protocol.E1: (83, 83),
    Protocol.E2: (83, 461),
    Protocol.E3_MALE: (0, 82),
    Protocol.E3_FEMALE: (82, 0),
    Protocol.E3_MIXED: (41, 41),
    Protocol.E4_120: (20, 100),
    Protocol.E4_240: (40, 200),
    Protocol.E4_360: (60, 300),
    Protocol.E4_480: (80, 400),
}

#: Protocol groups addressable by suite name.
SUITES: dict[str, tuple[Protocol, ...]] = {
    "e1": (Protocol.E1,),
    "e2": (Protocol.E2,),
    "e3": (Protocol.E3_MALE, Protocol.E3_FEMALE, Protocol.E3_MIXED),
    "e4": (Protocol.E4_120, Protocol.E4_240, Protocol.E4_360, Protocol.E4_480),
}

#: Classifier row order used in reports: SVM first, then metrics 1..8
#: in their table order.
CLASSIFIERS: tuple[str, ...] = ("SVM", "EUC", "CB", "COS", "BC", "CAN", "CORR", "CHEB", "MC")
FEATURE_KINDS: tuple[str, ...] = ("PCA", "LDA")

_SPLIT_SEED_OFFSET = 1_000_003


@dataclass(frozen=True)
class FusionSpec:
    """Fuse the best ``k`` metrics under ``scheme``."""

    k: int
    scheme: FusionScheme

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("fusion k must be >= 1")


def default_fusion_specs(ks: Sequence[int] = (2, 3, 4)) -> tuple[FusionSpec, ...]:
    """The benchmark's fusion grid: AVG/MIN/MED/WMP plus the published
    weight tuples for each k."""
    weight_table = {
        2: ((0.9, 0.1), (0.1, 0.9)),
        3: ((0.8, 0.1, 0.1), (0.4, 0.3, 0.3), (0.1, 0.1, 0.8)),
        4: ((0.4, 0.4, 0.1, 0.1), (0.3, 0.3, 0.2, 0.2), (0.1, 0.1, 0.4, 0.4)),
    }
    specs = []
    for k in ks:
        for kind in (FusionKind.AVG, FusionKind.MIN, FusionKind.MED, FusionKind.WMP):
            specs.append(FusionSpec(k, FusionScheme(kind)))
        for w in weight_table.get(k, ()):
            specs.append(FusionSpec(k, FusionScheme(FusionKind.WEIGHTED, w)))
    return tuple(specs)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run depends on besides the dataset itself."""

    protocol: Protocol = Protocol.E1
    ratio: SplitRatio = SplitRatio.R9_1
    features: tuple[str, ...] = FEATURE_KINDS
    classifiers: tuple[str, ...] = CLASSIFIERS
    fusion_specs: tuple[FusionSpec, ...] = ()
    seed: int = 0
    n_trials: int = 1
    n_components: int = 100
    svm_c: float = 10.0
    svm_gamma: float | None = None
    svm_tune: bool = False
    mc_ridge: float = 1e-6
    images_per_subject: int = 10
    n_female: int | None = None
    n_male: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        object.__setattr__(self, "ratio", SplitRatio(self.ratio))
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        object.__setattr__(self, "fusion_specs", tuple(self.fusion_specs))
        for f in self.features:
            if f not in FEATURE_KINDS:
                raise ValueError(f"unknown feature kind {f!r}")
        for c in self.classifiers:
            if c not in CLASSIFIERS:
                raise ValueError(f"unknown classifier {c!r}")
        if not self.features or not self.classifiers:
            raise ValueError("need at least one feature kind and one classifier")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.n_components < 1:
            raise ValueError("n_components must be >= 1")
        if self.protocol is Protocol.CUSTOM:
            if self.n_female is None or self.n_male is None:
                raise ValueError("CUSTOM protocol needs n_female and n_male")
            if self.n_female < 0 or self.n_male < 0 or self.n_female + self.n_male < 1:
                raise ValueError("CUSTOM subject counts must be >= 0 and sum >= 1")
        if self.svm_c <= 0:
            raise ValueError("svm_c must be > 0")
        if self.svm_gamma is not None and self.svm_gamma <= 0:
            raise ValueError("svm_gamma must be > 0")
        if self.mc_ridge < 0:
            raise ValueError("mc_ridge must be >= 0")

    def pool_counts(self) -> tuple[int, int]:
        """(n_female, n_male) demanded by the protocol."""
        if self.protocol is Protocol.CUSTOM:
            return (self.n_female, self.n_male)
        return PROTOCOL_COUNTS[self.protocol]

    def to_dict(self) -> dict:
        d = {
            "protocol": self.protocol.value,
            "ratio": self.ratio.value,
            "features": list(self.features),
            "classifiers": list(self.classifiers),
            "fusion_specs": [
                {
                    "k": s.k,
                    "scheme": s.scheme.kind.value,
                    "weights": list(s.scheme.weights) if s.scheme.weights else None,
                }
                for s in self.fusion_specs
            ],
            "seed": self.seed,
            "n_trials": self.n_trials,
            "n_components": self.n_components,
            "svm_c": self.svm_c,
            "svm_gamma": self.svm_gamma,
            "svm_tune": self.svm_tune,
            "mc_ridge": self.mc_ridge,
            "images_per_subject": self.images_per_subject,
        }
        if self.protocol is Protocol.CUSTOM:
            d["n_female"] = self.n_female
            d["n_male"] = self.n_male
        return d


@dataclass
class CellResult:
    """One (feature, classifier) table cell aggregated over trials."""

    feature: str
    classifier: str
    accuracy: float
    std: float | None
    trial_accuracies: list[float]
    fit_seconds: float
    predict_seconds: float


@dataclass
class FusionRow:
    """One fused-matrix row: scheme, constituents and accuracy."""

    feature: str
    k: int
    scheme: str
    weights: tuple[float, ...] | None
    metrics: list[int]  # constituent metric numbers, best first (first trial)
    accuracy: float
    std: float | None
    trial_accuracies: list[float]
    improved: bool  # fused mean >= best constituent mean


@dataclass
class TrialInfo:
    """Provenance of one trial: its seed and a hash of the drawn subjects."""

    seed: int
    subjects_sha256: str
    n_train: int
    n_test: int


@dataclass
class SectionResult:
    """All results for one protocol (or one protocol x ratio) section."""

    name: str
    protocol: str
    ratio: str
    n_female: int
    n_male: int
    trials: list[TrialInfo]
    components: dict[str, int]
    cells: list[CellResult]
    fusion_rows: list[FusionRow]
    timings: dict[str, float]


@dataclass
class ExperimentReport:
    """Full nested report: config echo plus one or more sections."""

    config: dict
    sections: list[SectionResult] = field(default_factory=list)

    def cell(self, section: str, feature: str, classifier: str) -> CellResult:
        for s in self.sections:
            if s.name == section:
                for c in s.cells:
                    if c.feature == feature and c.classifier == classifier:
                        return c
        raise KeyError(f"no cell ({section}, {feature}, {classifier})")

    def to_dict(self, include_timing: bool = True) -> dict:
        sections = []
        for s in self.sections:
            sec = {
                "name": s.name,
                "protocol": s.protocol,
                "ratio": s.ratio,
                "n_female": s.n_female,
                "n_male": s.n_male,
                "trials": [dataclasses.asdict(t) for t in s.trials],
                "components": dict(s.components),
                "cells": [
                    {
                        "feature": c.feature,
                        "classifier": c.classifier,
                        "accuracy": c.accuracy,
                        "std": c.std,
                        "trial_accuracies": list(c.trial_accuracies),
                        **(
                            {
                                "fit_seconds": c.fit_seconds,
                                "predict_seconds": c.predict_seconds,
                            }
                            if include_timing
                            else {}
                        ),
                    }
                    for c in s.cells
                ],
                "fusion": [
                    {
                        "feature": r.feature,
                        "k": r.k,
                        "scheme": r.scheme,
                        "weights": list(r.weights) if r.weights else None,
                        "metrics": list(r.metrics),
                        "accuracy": r.accuracy,
                        "std": r.std,
                        "trial_accuracies": list(r.trial_accuracies),
                        "improved": r.improved,
                    }
                    for r in s.fusion_rows
                ],
            }
            if include_timing:
                sec["timings"] = dict(s.timings)
            sections.append(sec)
        return {"config": self.config, "sections": sections}


def accuracy(predictions: Sequence, truth: Sequence[str]) -> float:
    """Percentage of predictions matching the true labels."""
    if len(predictions) != len(truth) or len(truth) == 0:
        raise ValueError("predictions and truth must have equal nonzero length")
    correct = 0
    for p, t in zip(predictions, truth):
        label = p.predicted if isinstance(p, Prediction) else p
        correct += label == t
    return 100.0 * correct / len(truth)


def time_section(label: str, thunk: Callable):
    """Run ``thunk`` and return (result, wall seconds) for stage ``label``."""
    t0 = time.perf_counter()
    result = thunk()
    return result, time.perf_counter() - t0


def preprocess_records(
    records: Sequence[ImageRecord],
) -> tuple[np.ndarray, list[str], tuple[str, ...]]:
    """Turn image records into the feature matrix fed to PCA/LDA.

    Each image is aligned by its eye coordinates (skipped when absent,
    in which case it must already be canonical 70x60), histogram
    equalized and flattened.  Returns (X, subject labels, row ids).
    """
    rows = []
    labels = []
    ids = []
    for idx, rec in enumerate(records):
        if isinstance(rec.image_ref, np.ndarray):
            img = GrayImage(pixels=rec.image_ref)
        else:
            img = read_pgm(rec.image_ref)
        if rec.has_eyes:
            img = align_crop_resize(img, rec.eye_left, rec.eye_right)
        elif (img.height, img.width) != (70, 60):
            raise DataError(
                f"record {rec.subject_id!r}: no eye coordinates and image is "
                f"{img.height}x{img.width}, not 70x60"
            )
        img = histogram_equalize(img)
        rows.append(to_feature_vector(img))
        labels.append(rec.subject_id)
        ids.append(f"{rec.subject_id}#{idx}")
    if not rows:
        raise DataError("no records to preprocess")
    return np.stack(rows), labels, tuple(ids)


def _fit_feature(kind: str, X: np.ndarray, labels: list[str], n_components: int):
    from . import features as feat

    n, d = X.shape
    if kind == "PCA":
        k = min(n_components, n - 1, d)
        return feat.fit_pca(X, k)
    n_classes = len(set(labels))
    k = min(n_components, n_classes - 1)
    return feat.fit_lda(X, np.asarray(labels), k)


def _subjects_hash(dataset: Dataset) -> str:
    joined = ",".join(sorted(dataset.subject_ids))
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


def _run_trial(data: Dataset, cfg: ExperimentConfig, trial: int, n_jobs: int):
    """One sampled run: returns per-cell and per-fusion accuracies plus
    timings and provenance for a single trial."""
    from . import features as feat

    trial_seed = cfg.seed + trial
    nf, nm = cfg.pool_counts()

    pool = filter_min_images(data, cfg.images_per_subject)
    spec = SamplingSpec(
        n_female=nf,
        n_male=nm,
        images_per_subject=cfg.images_per_subject,
        seed=trial_seed,
    )
    sampled = sample_subjects(pool, spec)
    split = split_train_test(sampled, cfg.ratio, seed=trial_seed + _SPLIT_SEED_OFFSET)

    timings: dict[str, float] = {}
    (train_pack, secs) = time_section("preprocess", lambda: preprocess_records(split.train))
    X_train, y_train, train_ids = train_pack
    timings[f"t{trial}:preprocess:train"] = secs
    (test_pack, secs) = time_section("preprocess", lambda: preprocess_records(split.test))
    X_test, y_test, test_ids = test_pack
    timings[f"t{trial}:preprocess:test"] = secs

    info = TrialInfo(
        seed=trial_seed,
        subjects_sha256=_subjects_hash(sampled),
        n_train=len(split.train),
        n_test=len(split.test),
    )

    cell_acc: dict[tuple[str, str], float] = {}
    cell_fit: dict[tuple[str, str], float] = {}
    cell_pred: dict[tuple[str, str], float] = {}
    fusion_acc: dict[tuple[str, int], tuple[list[int], float, float]] = {}
    components: dict[str, int] = {}

    for fkind in cfg.features:
        model, fit_secs = time_section(
            "fit", lambda: _fit_feature(fkind, X_train, y_train, cfg.n_components)
        )
        timings[f"t{trial}:fit:{fkind}"] = fit_secs
        components[fkind] = model.n_components
        gallery = feat.project(model, X_train)
        probes = feat.project(model, X_test)

        ctx = None
        if "MC" in cfg.classifiers:
            ctx, ctx_secs = time_section(
                "mc-context", lambda: fit_metric_context(gallery, cfg.mc_ridge)
            )
            timings[f"t{trial}:mc-context:{fkind}"] = ctx_secs

        norm_by_kind = {}
        acc_by_kind = {}
        predict_total = 0.0
        for clf in cfg.classifiers:
            if clf == "SVM":
                def fit_svm():
                    c, gamma = cfg.svm_c, cfg.svm_gamma
                    if cfg.svm_tune:
                        from .classify import grid_search_svm

                        c, gamma = grid_search_svm(
                            gallery, y_train, seed=trial_seed, n_jobs=n_jobs
                        )
                    return svm_train(
                        gallery, y_train, c=c, gamma=gamma, n_jobs=n_jobs
                    )

                svm, svm_fit_secs = time_section("svm-fit", fit_svm)
                preds, svm_pred_secs = time_section(
                    "svm-predict", lambda: svm_predict(svm, probes, test_ids)
                )
                cell_acc[(fkind, clf)] = accuracy(preds, y_test)
                cell_fit[(fkind, clf)] = fit_secs + svm_fit_secs
                cell_pred[(fkind, clf)] = svm_pred_secs
                predict_total += svm_pred_secs
                continue

            kind = MetricKind[clf]

            def classify_metric():
                dm = pairwise(
                    kind,
                    gallery,
                    probes,
                    ctx=ctx if kind is MetricKind.MC else None,
                    probe_ids=test_ids,
                    gallery_ids=train_ids,
                )
                return dm, nn_classify(dm, y_train)

            (dm, preds), pred_secs = time_section("nn", classify_metric)
            cell_acc[(fkind, clf)] = accuracy(preds, y_test)
            extra_fit = (
                timings.get(f"t{trial}:mc-context:{fkind}", 0.0)
                if kind is MetricKind.MC
                else 0.0
            )
            cell_fit[(fkind, clf)] = fit_secs + extra_fit
            cell_pred[(fkind, clf)] = pred_secs
            predict_total += pred_secs
            acc_by_kind[kind] = cell_acc[(fkind, clf)]
            if cfg.fusion_specs:
                norm_by_kind[kind] = minmax_normalize(dm)
        timings[f"t{trial}:predict:{fkind}"] = predict_total

        if cfg.fusion_specs:
            if not acc_by_kind:
                raise ValueError("fusion needs at least one distance-metric classifier")
            ranked = rank_metrics(acc_by_kind)

            def run_fusions():
                for spec_idx, fspec in enumerate(cfg.fusion_specs):
                    if fspec.k > len(ranked):
                        raise ValueError(
                            f"fusion k={fspec.k} exceeds the {len(ranked)} "
                            "available metrics"
                        )
                    top = ranked[: fspec.k]
                    fused = fuse([norm_by_kind[m] for m in top], fspec.scheme)
                    preds = nn_classify(fused, y_train)
                    facc = accuracy(preds, y_test)
                    best = max(acc_by_kind[m] for m in top)
                    fusion_acc[(fkind, spec_idx)] = ([int(m) for m in top], facc, best)

            _, fuse_secs = time_section("fusion", run_fusions)
            timings[f"t{trial}:fusion:{fkind}"] = fuse_secs

    return info, cell_acc, cell_fit, cell_pred, fusion_acc, components, timings


def _run_section(
    data: Dataset, cfg: ExperimentConfig, name: str, n_jobs: int
) -> SectionResult:
    nf, nm = cfg.pool_counts()
    trials: list[TrialInfo] = []
    acc_lists: dict[tuple[str, str], list[float]] = {}
    fit_lists: dict[tuple[str, str], list[float]] = {}
    pred_lists: dict[tuple[str, str], list[float]] = {}
    fusion_lists: dict[tuple[str, int], list[tuple[list[int], float, float]]] = {}
    components: dict[str, int] = {}
    timings: dict[str, float] = {}

    for trial in range(cfg.n_trials):
        info, c_acc, c_fit, c_pred, f_acc, comps, t_times = _run_trial(
            data, cfg, trial, n_jobs
        )
        trials.append(info)
        components.update(comps)
        for label, secs in t_times.items():
            if label in timings:
                raise ValueError(f"duplicate timing label {label!r}")
            timings[label] = secs
        for key, v in c_acc.items():
            acc_lists.setdefault(key, []).append(v)
            fit_lists.setdefault(key, []).append(c_fit[key])
            pred_lists.setdefault(key, []).append(c_pred[key])
        for key, v in f_acc.items():
            fusion_lists.setdefault(key, []).append(v)

    def agg(values: list[float]) -> tuple[float, float | None]:
        mean = float(np.mean(values))
        std = float(np.std(values, ddof=1)) if len(values) > 1 else None
        return mean, std

    cells = []
    for fkind in cfg.features:
        for clf in cfg.classifiers:
            key = (fkind, clf)
            mean, std = agg(acc_lists[key])
            cells.append(
                CellResult(
                    feature=fkind,
                    classifier=clf,
                    accuracy=mean,
                    std=std,
                    trial_accuracies=acc_lists[key],
                    fit_seconds=float(np.mean(fit_lists[key])),
                    predict_seconds=float(np.mean(pred_lists[key])),
                )
            )

    fusion_rows = []
    for fkind in cfg.features:
        for idx, fspec in enumerate(cfg.fusion_specs):
            key = (fkind, idx)
            if key not in fusion_lists:
                continue
            entries = fusion_lists[key]
            accs = [e[1] for e in entries]
            bests = [e[2] for e in entries]
            mean, std = agg(accs)
            fusion_rows.append(
                FusionRow(
                    feature=fkind,
                    k=fspec.k,
                    scheme=fspec.scheme.describe(),
                    weights=fspec.scheme.weights,
                    metrics=entries[0][0],
                    accuracy=mean,
                    std=std,
                    trial_accuracies=accs,
                    improved=mean >= float(np.mean(bests)),
                )
            )

    return SectionResult(
        name=name,
        protocol=cfg.protocol.value,
        ratio=cfg.ratio.value,
        n_female=nf,
        n_male=nm,
        trials=trials,
        components=components,
        cells=cells,
        fusion_rows=fusion_rows,
        timings=timings,
    )


def run_experiment(data: Dataset, cfg: ExperimentConfig, n_jobs: int = 1) -> ExperimentReport:
    """Run one protocol end-to-end and return its report."""
    report = ExperimentReport(config=cfg.to_dict())
    report.sections.append(_run_section(data, cfg, cfg.protocol.value, n_jobs))
    return report


def run_protocols(
    data: Dataset,
    cfg: ExperimentConfig,
    protocols: Sequence[Protocol],
    n_jobs: int = 1,
) -> ExperimentReport:
    """Run several protocols under one config; one report section each."""
    if not protocols:
        raise ValueError("need at least one protocol")
    report = ExperimentReport(config=cfg.to_dict())
    report.config["protocol"] = [Protocol(p).value for p in protocols]
    for proto in protocols:
        sub = dataclasses.replace(cfg, protocol=Protocol(proto))
        report.sections.append(_run_section(data, sub, sub.protocol.value, n_jobs))
    return report


def run_fusion_study(
    data: Dataset,
    cfg: ExperimentConfig,
    ratios: Sequence[SplitRatio] = (SplitRatio.R9_1, SplitRatio.R5_5),
    n_jobs: int = 1,
) -> ExperimentReport:
    """Best-k fusion tables at each split ratio under one protocol.

    Requires non-empty cfg.fusion_specs (use default_fusion_specs() for
    the published grid).  Sections are named ``<protocol>:<ratio>``.
    """
    if not cfg.fusion_specs:
        raise ValueError("fusion study needs non-empty fusion_specs")
    if not ratios:
        raise ValueError("need at least one ratio")
    report = ExperimentReport(config=cfg.to_dict())
    report.config["ratio"] = [SplitRatio(r).value for r in ratios]
    for ratio in ratios:
        sub = dataclasses.replace(cfg, ratio=SplitRatio(ratio))
        name = f"{sub.protocol.value}:{sub.ratio.value}"
        report.sections.append(_run_section(data, sub, name, n_jobs))
    return report


def emit_report(
    report: ExperimentReport,
    fmt: str,
    path: str | Path,
    include_timing: bool = True,
) -> None:
    """Write a report as nested JSON or a flat CSV table.

    JSON keeps full float precision; CSV rounds accuracy to 2 decimals
    (the table convention) and prefixes config and provenance as
    ``#`` comment lines.  With include_timing=False all wall-clock
    fields are omitted, making reports byte-comparable across runs.
    """
    path = Path(path)
    if fmt == "json":
        payload = json.dumps(report.to_dict(include_timing), indent=2)
        path.write_text(payload + "\n", encoding="utf-8")
        return
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")

    buf = io.StringIO()
    buf.write("# facebench report\n")
    buf.write("# config: " + json.dumps(report.config, separators=(",", ":")) + "\n")
    for s in report.sections:
        for t in s.trials:
            buf.write(
                f"# section {s.name}: seed={t.seed} subjects_sha256={t.subjects_sha256}"
                f" n_train={t.n_train} n_test={t.n_test}\n"
            )
    writer = csv.writer(buf, lineterminator="\n")
    header = [
        "section",
        "row_type",
        "feature",
        "classifier",
        "k",
        "scheme",
        "metrics",
        "weights",
        "accuracy",
        "std",
        "improved",
    ]
    if include_timing:
        header += ["fit_seconds", "predict_seconds"]
    writer.writerow(header)

    def fmt_acc(v: float | None) -> str:
        return "" if v is None else f"{v:.2f}"

    for s in report.sections:
        for c in s.cells:
            row = [
                s.name,
                "cell",
                c.feature,
                c.classifier,
                "",
                "",
                "",
                "",
                fmt_acc(c.accuracy),
                fmt_acc(c.std),
                "",
            ]
            if include_timing:
                row += [f"{c.fit_seconds:.6f}", f"{c.predict_seconds:.6f}"]
            writer.writerow(row)
        for r in s.fusion_rows:
            row = [
                s.name,
                "fusion",
                r.feature,
                "",
                str(r.k),
                r.scheme,
                "+".join(str(m) for m in r.metrics),
                ";".join(f"{w:g}" for w in r.weights) if r.weights else "",
                fmt_acc(r.accuracy),
                fmt_acc(r.std),
                "yes" if r.improved else "no",
            ]
            if include_timing:
                row += ["", ""]
            writer.writerow(row)
    path.write_text(buf.getvalue(), encoding="utf-8")
