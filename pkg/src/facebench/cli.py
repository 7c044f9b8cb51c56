"""Command-line front end.

Subcommands: synth, preprocess, features, classify, fuse, experiment,
fusion-study.  Flags may come from the command line or a TOML/JSON
config file (--config); explicit flags win over file values, and
unknown file keys are rejected.  Exit codes: 0 success, 2 configuration
error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import sys
import zipfile
from pathlib import Path

import numpy as np

from . import __version__
from .classify import grid_search_svm, nn_classify, svm_predict, svm_train
from .dataset import (
    Dataset,
    SplitRatio,
    generate_synthetic,
    load_manifest,
    split_train_test,
)
from .errors import ConfigError, DataError, FacebenchError
from .experiments import (
    CLASSIFIERS,
    SUITES,
    ExperimentConfig,
    FusionSpec,
    Protocol,
    default_fusion_specs,
    emit_report,
    preprocess_records,
    run_experiment,
    run_fusion_study,
    run_protocols,
)
from .features import fit_lda, fit_pca, project, save_model
from .fusion import FusionKind, FusionScheme, fuse, minmax_normalize
from .metrics import (
    MetricKind,
    fit_metric_context,
    load_distance_csv,
    pairwise,
    save_distance_csv,
)
from .preprocess import (
    CANONICAL_HEIGHT,
    CANONICAL_WIDTH,
    align_crop_resize,
    histogram_equalize,
    read_pgm,
    write_pgm,
)

log = logging.getLogger("facebench")

_METRIC_NAMES = tuple(m.name for m in MetricKind)

_DEFAULTS = {
    "synth": {
        "out_dir": None,
        "subjects": "100:500",
        "images": 10,
        "size": "70x60",
        "noise": 20.0,
        "seed": 0,
    },
    "preprocess": {"manifest": None, "out_dir": None},
    "features": {
        "manifest": None,
        "synthetic": None,
        "kind": None,
        "components": 100,
        "ratio": "9:1",
        "seed": 0,
        "model_out": None,
        "features_out": None,
    },
    "classify": {
        "features": None,
        "method": None,
        "c": 10.0,
        "gamma": None,
        "tune": False,
        "out": None,
        "matrix_out": None,
        "seed": 0,
        "threads": 1,
    },
    "fuse": {"matrices": None, "scheme": None, "weights": None, "out": None},
    "experiment": {
        "protocol": None,
        "manifest": None,
        "synthetic": None,
        "ratio": "9:1",
        "seed": 0,
        "trials": 1,
        "out": None,
        "components": 100,
        "features": "pca,lda",
        "classifiers": ",".join(c.lower() for c in CLASSIFIERS),
        "svm_c": 10.0,
        "svm_gamma": None,
        "svm_tune": False,
        "no_timing": False,
        "females": None,
        "males": None,
        "images_per_subject": None,
        "threads": 1,
        "verbose": False,
    },
    "fusion-study": {
        "protocol": "e1",
        "manifest": None,
        "synthetic": None,
        "ratio": None,
        "seed": 0,
        "trials": 1,
        "out": None,
        "components": 100,
        "features": "pca,lda",
        "classifiers": "euc,cb,cos,bc,can,corr,cheb,mc",
        "best_k": "2,3,4",
        "schemes": "avg,min,med,wmp,weighted",
        "weights": None,
        "no_timing": False,
        "females": None,
        "males": None,
        "images_per_subject": None,
        "threads": 1,
        "verbose": False,
    },
}


def _build_hash() -> str:
    digest = hashlib.sha256(Path(__file__).read_bytes()).hexdigest()
    return digest[:8]


def _add_common(sp: argparse.ArgumentParser, names) -> None:
    if "seed" in names:
        sp.add_argument("--seed", type=int, help="base RNG seed")
    if "threads" in names:
        sp.add_argument("--threads", type=int, help="worker threads (results unaffected)")
    if "verbose" in names:
        sp.add_argument("--verbose", action="store_true", default=None)
    sp.add_argument("--config", help="TOML or JSON file supplying flag values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facebench",
        description="Face identification benchmark: features, metrics, SVM, fusion.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"facebench {__version__} (build {_build_hash()})",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    sp = sub.add_parser("synth", help="generate a synthetic PGM corpus + manifest")
    sp.add_argument("--out-dir", dest="out_dir")
    sp.add_argument("--subjects", help="F:M subject counts (default 100:500)")
    sp.add_argument("--images", type=int, help="images per subject")
    sp.add_argument("--size", help="HxW image size (default 70x60)")
    sp.add_argument("--noise", type=float, help="intra-subject noise std")
    _add_common(sp, {"seed"})

    sp = sub.add_parser("preprocess", help="align + equalize a manifest corpus")
    sp.add_argument("--manifest")
    sp.add_argument("--out-dir", dest="out_dir")
    _add_common(sp, set())

    sp = sub.add_parser("features", help="fit PCA/LDA and export projected features")
    sp.add_argument("--manifest")
    sp.add_argument("--synthetic", help="'default' or F:M[:IMAGES[:NOISE]]")
    sp.add_argument("--kind", choices=["pca", "lda"])
    sp.add_argument("--components", type=int)
    sp.add_argument("--ratio", choices=["9:1", "5:5"])
    sp.add_argument("--model-out", dest="model_out")
    sp.add_argument("--features-out", dest="features_out")
    _add_common(sp, {"seed"})

    sp = sub.add_parser("classify", help="classify probe features against a gallery")
    sp.add_argument("--features", help="features .npz bundle")
    sp.add_argument(
        "--method", help="nn:<metric> (euc, cb, cos, mc, bc, can, corr, cheb) or svm"
    )
    sp.add_argument("--C", dest="c", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--tune", action="store_true", default=None)
    sp.add_argument("--out")
    sp.add_argument("--matrix-out", dest="matrix_out")
    _add_common(sp, {"seed", "threads"})

    sp = sub.add_parser("fuse", help="fuse distance matrix CSVs")
    sp.add_argument("--matrices", help="comma-separated distance CSV paths")
    sp.add_argument("--scheme", choices=["avg", "min", "med", "wmp", "weighted"])
    sp.add_argument("--weights", help="comma-separated weights for --scheme weighted")
    sp.add_argument("--out")
    _add_common(sp, set())

    for name in ("experiment", "fusion-study"):
        sp = sub.add_parser(
            name,
            help="run benchmark protocols"
            if name == "experiment"
            else "run the best-k fusion study",
        )
        protocol_choices = (
            ["e1", "e2", "e3", "e4", "custom"]
            if name == "experiment"
            else ["e1", "e2", "custom"]
        )
        sp.add_argument("--protocol", choices=protocol_choices)
        sp.add_argument("--manifest")
        sp.add_argument("--synthetic", help="'default' or F:M[:IMAGES[:NOISE]]")
        sp.add_argument("--ratio", choices=["9:1", "5:5"])
        sp.add_argument("--trials", type=int)
        sp.add_argument("--out")
        sp.add_argument("--components", type=int)
        sp.add_argument("--features", help="comma list from: pca,lda")
        sp.add_argument("--classifiers", help="comma list from: svm + metric names")
        sp.add_argument("--no-timing", dest="no_timing", action="store_true", default=None)
        sp.add_argument("--females", type=int, help="custom protocol female count")
        sp.add_argument("--males", type=int, help="custom protocol male count")
        sp.add_argument(
            "--images-per-subject", dest="images_per_subject", type=int
        )
        if name == "experiment":
            sp.add_argument("--svm-c", dest="svm_c", type=float)
            sp.add_argument("--svm-gamma", dest="svm_gamma", type=float)
            sp.add_argument("--svm-tune", dest="svm_tune", action="store_true", default=None)
        else:
            sp.add_argument("--best-k", dest="best_k", help="comma list, e.g. 2,3,4")
            sp.add_argument("--schemes", help="comma list of fusion schemes")
            sp.add_argument("--weights", help="weight tuples: 0.9,0.1;0.8,0.1,0.1")
        _add_common(sp, {"seed", "threads", "verbose"})

    return parser


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    text = p.read_text(encoding="utf-8")
    if p.suffix == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc})") from None
    if p.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{p}: invalid TOML ({exc})") from None
    raise ConfigError(f"config file must end in .toml or .json: {p}")


def _merge_options(command: str, ns: argparse.Namespace) -> dict:
    """Defaults <- config file <- explicit flags, rejecting unknown keys."""
    opts = dict(_DEFAULTS[command])
    explicit = {
        k: v for k, v in vars(ns).items() if k not in ("command", "config") and v is not None
    }
    if getattr(ns, "config", None):
        file_opts = _load_config_file(ns.config)
        for key, value in file_opts.items():
            dest = key.replace("-", "_")
            if dest not in opts:
                raise ConfigError(f"unknown config key {key!r} for {command}")
            opts[dest] = value
    opts.update(explicit)
    return opts


def _require(opts: dict, command: str, *keys: str) -> None:
    for key in keys:
        if opts.get(key) is None:
            flag = "--" + key.replace("_", "-")
            raise ConfigError(f"{command}: missing required flag {flag}")


def _parse_synthetic(spec: str, seed: int) -> tuple[Dataset, int]:
    """Build the in-memory synthetic corpus named by a --synthetic spec.

    Returns (dataset, images_per_subject).
    """
    if spec == "default":
        nf, nm, images, noise = 100, 500, 10, 20.0
    else:
        parts = spec.split(":")
        if len(parts) < 2 or len(parts) > 4:
            raise ConfigError(
                f"synthetic spec must be 'default' or F:M[:IMAGES[:NOISE]], got {spec!r}"
            )
        try:
            nf, nm = int(parts[0]), int(parts[1])
            images = int(parts[2]) if len(parts) > 2 else 10
            noise = float(parts[3]) if len(parts) > 3 else 20.0
        except ValueError:
            raise ConfigError(f"bad synthetic spec {spec!r}") from None
    try:
        data = generate_synthetic(
            n_female=nf,
            n_male=nm,
            images_per_subject=images,
            intra_noise=noise,
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return data, images


def _load_data(opts: dict, command: str) -> tuple[Dataset, int | None]:
    manifest = opts.get("manifest")
    synthetic = opts.get("synthetic")
    if (manifest is None) == (synthetic is None):
        raise ConfigError(f"{command}: give exactly one of --manifest or --synthetic")
    if manifest is not None:
        return load_manifest(manifest), None
    return _parse_synthetic(synthetic, int(opts.get("seed") or 0))


def _split_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _parse_ratio(text: str) -> SplitRatio:
    try:
        return SplitRatio(text)
    except ValueError:
        raise ConfigError(f"ratio must be 9:1 or 5:5, got {text!r}") from None


def _parse_feature_list(text: str) -> tuple[str, ...]:
    out = []
    for name in _split_list(text):
        up = name.upper()
        if up not in ("PCA", "LDA"):
            raise ConfigError(f"unknown feature kind {name!r}")
        out.append(up)
    if not out:
        raise ConfigError("feature list is empty")
    return tuple(out)


def _parse_classifier_list(text: str) -> tuple[str, ...]:
    out = []
    for name in _split_list(text):
        up = name.upper()
        if up not in CLASSIFIERS:
            raise ConfigError(f"unknown classifier {name!r}")
        out.append(up)
    if not out:
        raise ConfigError("classifier list is empty")
    return tuple(out)


def _cmd_synth(opts: dict) -> int:
    _require(opts, "synth", "out_dir")
    try:
        nf, nm = (int(v) for v in str(opts["subjects"]).split(":"))
        height, width = (int(v) for v in str(opts["size"]).lower().split("x"))
    except ValueError:
        raise ConfigError("synth: --subjects must be F:M and --size HxW") from None
    try:
        data = generate_synthetic(
            n_female=nf,
            n_male=nm,
            images_per_subject=int(opts["images"]),
            image_height=height,
            image_width=width,
            intra_noise=float(opts["noise"]),
            seed=int(opts["seed"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    counters: dict[str, int] = {}
    for rec in data.records:
        k = counters.get(rec.subject_id, 0)
        counters[rec.subject_id] = k + 1
        name = f"{rec.subject_id}_{k}.pgm"
        write_pgm(rec.image_ref, out_dir / name)
        rows.append(
            [
                rec.subject_id,
                rec.gender,
                name,
                repr(float(rec.eye_left[0])),
                repr(float(rec.eye_left[1])),
                repr(float(rec.eye_right[0])),
                repr(float(rec.eye_right[1])),
            ]
        )
    _write_manifest(out_dir / "manifest.csv", rows)
    log.info("wrote %d images for %d subjects to %s", len(rows), len(data.subject_ids), out_dir)
    return 0


def _write_manifest(path: Path, rows: list[list[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            [
                "subject_id",
                "gender",
                "image_path",
                "eye_left_row",
                "eye_left_col",
                "eye_right_row",
                "eye_right_col",
            ]
        )
        writer.writerows(rows)


def _cmd_preprocess(opts: dict) -> int:
    _require(opts, "preprocess", "manifest", "out_dir")
    data = load_manifest(opts["manifest"])
    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    from .preprocess import EYE_ROW, LEFT_EYE_COL, RIGHT_EYE_COL

    rows = []
    counters: dict[str, int] = {}
    for rec in data.records:
        img = read_pgm(rec.image_ref)
        if rec.has_eyes:
            img = align_crop_resize(img, rec.eye_left, rec.eye_right)
        elif (img.height, img.width) != (CANONICAL_HEIGHT, CANONICAL_WIDTH):
            raise DataError(
                f"{rec.image_ref}: no eye coordinates and not "
                f"{CANONICAL_HEIGHT}x{CANONICAL_WIDTH}"
            )
        img = histogram_equalize(img)
        k = counters.get(rec.subject_id, 0)
        counters[rec.subject_id] = k + 1
        name = f"{rec.subject_id}_{k}.pgm"
        write_pgm(img, out_dir / name)
        rows.append(
            [
                rec.subject_id,
                rec.gender,
                name,
                repr(float(EYE_ROW)),
                repr(float(LEFT_EYE_COL)),
                repr(float(EYE_ROW)),
                repr(float(RIGHT_EYE_COL)),
            ]
        )
    _write_manifest(out_dir / "manifest.csv", rows)
    log.info("preprocessed %d images into %s", len(rows), out_dir)
    return 0


def _cmd_features(opts: dict) -> int:
    _require(opts, "features", "kind", "features_out")
    data, _ = _load_data(opts, "features")
    ratio = _parse_ratio(opts["ratio"])
    split = split_train_test(data, ratio, seed=int(opts["seed"]))
    X_train, y_train, train_ids = preprocess_records(split.train)
    X_test, y_test, test_ids = preprocess_records(split.test)
    k = int(opts["components"])
    if opts["kind"] == "pca":
        model = fit_pca(X_train, min(k, X_train.shape[0] - 1, X_train.shape[1]))
    else:
        model = fit_lda(X_train, np.asarray(y_train), min(k, len(set(y_train)) - 1))
    if opts.get("model_out"):
        save_model(model, opts["model_out"])
    np.savez_compressed(
        opts["features_out"],
        kind=np.array(model.kind.value),
        gallery=project(model, X_train),
        probes=project(model, X_test),
        gallery_labels=np.array(y_train),
        probe_labels=np.array(y_test),
        gallery_ids=np.array(train_ids),
        probe_ids=np.array(test_ids),
    )
    log.info(
        "fitted %s with %d components; %d gallery / %d probe rows -> %s",
        model.kind.value,
        model.n_components,
        len(y_train),
        len(y_test),
        opts["features_out"],
    )
    return 0


def _load_feature_bundle(path: str):
    p = Path(path)
    if not p.is_file():
        raise DataError(f"features bundle not found: {p}")
    try:
        with np.load(p, allow_pickle=False) as z:
            needed = (
                "gallery",
                "probes",
                "gallery_labels",
                "probe_labels",
                "gallery_ids",
                "probe_ids",
            )
            missing = [k for k in needed if k not in z.files]
            if missing:
                raise DataError(f"{p}: bundle missing arrays {missing}")
            return {k: z[k] for k in needed}
    except (OSError, ValueError, zipfile.BadZipFile) as exc:
        raise DataError(f"{p}: unreadable features bundle ({exc})") from None


def _cmd_classify(opts: dict) -> int:
    _require(opts, "classify", "features", "method", "out")
    bundle = _load_feature_bundle(opts["features"])
    gallery = bundle["gallery"]
    probes = bundle["probes"]
    gallery_labels = [str(v) for v in bundle["gallery_labels"]]
    probe_labels = [str(v) for v in bundle["probe_labels"]]
    probe_ids = tuple(str(v) for v in bundle["probe_ids"])
    gallery_ids = tuple(str(v) for v in bundle["gallery_ids"])
    method = str(opts["method"]).lower()

    if method == "svm":
        c, gamma = float(opts["c"]), opts["gamma"]
        if opts["tune"]:
            c, gamma = grid_search_svm(
                gallery,
                gallery_labels,
                seed=int(opts["seed"]),
                n_jobs=int(opts["threads"]),
            )
        model = svm_train(
            gallery, gallery_labels, c=c, gamma=gamma, n_jobs=int(opts["threads"])
        )
        preds = svm_predict(model, probes, probe_ids)
    elif method.startswith("nn:"):
        name = method[3:].upper()
        if name not in _METRIC_NAMES:
            raise ConfigError(f"unknown metric {method[3:]!r}; pick one of "
                              + ", ".join(m.lower() for m in _METRIC_NAMES))
        kind = MetricKind[name]
        ctx = fit_metric_context(gallery) if kind is MetricKind.MC else None
        dm = pairwise(kind, gallery, probes, ctx, probe_ids, gallery_ids)
        if opts.get("matrix_out"):
            save_distance_csv(dm, opts["matrix_out"])
        preds = nn_classify(dm, gallery_labels)
    else:
        raise ConfigError(f"method must be 'svm' or 'nn:<metric>', got {method!r}")

    with open(opts["out"], "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["probe_id", "predicted_subject", "true_subject", "correct"])
        for pred, truth in zip(preds, probe_labels):
            writer.writerow(
                [pred.probe_id, pred.predicted, truth, int(pred.predicted == truth)]
            )
    n_correct = sum(p.predicted == t for p, t in zip(preds, probe_labels))
    log.info(
        "classified %d probes, %d correct (%.2f%%)",
        len(preds),
        n_correct,
        100.0 * n_correct / max(1, len(preds)),
    )
    return 0


def _cmd_fuse(opts: dict) -> int:
    _require(opts, "fuse", "matrices", "scheme", "out")
    paths = _split_list(str(opts["matrices"]))
    if not paths:
        raise ConfigError("fuse: --matrices list is empty")
    matrices = [minmax_normalize(load_distance_csv(p)) for p in paths]
    weights = None
    if opts.get("weights"):
        try:
            weights = tuple(float(v) for v in _split_list(str(opts["weights"])))
        except ValueError:
            raise ConfigError(f"bad weights {opts['weights']!r}") from None
    try:
        scheme = FusionScheme(FusionKind(opts["scheme"]), weights)
        fused = fuse(matrices, scheme)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    save_distance_csv(fused, opts["out"])
    log.info("fused %d matrices with %s -> %s", len(matrices), scheme.describe(), opts["out"])
    return 0


def _experiment_config(opts: dict, command: str, images_default: int | None) -> ExperimentConfig:
    protocol_key = str(opts["protocol"]).lower()
    if protocol_key == "custom":
        _require(opts, command, "females", "males")
    images = opts.get("images_per_subject")
    if images is None:
        images = images_default if images_default is not None else 10
    kwargs = dict(
        ratio=_parse_ratio(opts["ratio"]) if opts.get("ratio") else SplitRatio.R9_1,
        features=_parse_feature_list(str(opts["features"])),
        classifiers=_parse_classifier_list(str(opts["classifiers"])),
        seed=int(opts["seed"]),
        n_trials=int(opts["trials"]),
        n_components=int(opts["components"]),
        images_per_subject=int(images),
    )
    if command == "experiment":
        kwargs.update(
            svm_c=float(opts["svm_c"]),
            svm_gamma=opts["svm_gamma"],
            svm_tune=bool(opts["svm_tune"]),
        )
    if protocol_key == "custom":
        kwargs.update(
            protocol=Protocol.CUSTOM,
            n_female=int(opts["females"]),
            n_male=int(opts["males"]),
        )
    else:
        kwargs.update(protocol=SUITES[protocol_key][0])
    try:
        return ExperimentConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _report_summary(report, verbose: bool) -> None:
    if not verbose:
        return
    for section in report.sections:
        for cell in section.cells:
            log.info(
                "%s %s+%s: %.2f%%",
                section.name,
                cell.feature,
                cell.classifier,
                cell.accuracy,
            )
        for row in section.fusion_rows:
            log.info(
                "%s %s %s k=%d [%s]: %.2f%%%s",
                section.name,
                row.feature,
                row.scheme,
                row.k,
                "+".join(str(m) for m in row.metrics),
                row.accuracy,
                " (>= best constituent)" if row.improved else "",
            )


def _emit(report, opts: dict) -> None:
    out = Path(opts["out"])
    fmt = out.suffix.lstrip(".").lower()
    if fmt not in ("csv", "json"):
        raise ConfigError(f"--out must end in .csv or .json, got {out.name!r}")
    emit_report(report, fmt, out, include_timing=not bool(opts["no_timing"]))


def _cmd_experiment(opts: dict) -> int:
    _require(opts, "experiment", "protocol", "out")
    data, images_default = _load_data(opts, "experiment")
    cfg = _experiment_config(opts, "experiment", images_default)
    protocol_key = str(opts["protocol"]).lower()
    n_jobs = int(opts["threads"])
    if protocol_key in SUITES and len(SUITES[protocol_key]) > 1:
        report = run_protocols(data, cfg, SUITES[protocol_key], n_jobs=n_jobs)
    else:
        report = run_experiment(data, cfg, n_jobs=n_jobs)
    _emit(report, opts)
    _report_summary(report, bool(opts["verbose"]))
    return 0


def _parse_fusion_cli(opts: dict) -> tuple[FusionSpec, ...]:
    try:
        ks = [int(v) for v in _split_list(str(opts["best_k"]))]
    except ValueError:
        raise ConfigError(f"bad --best-k {opts['best_k']!r}") from None
    if not ks or any(k < 1 for k in ks):
        raise ConfigError("--best-k needs positive integers")
    scheme_names = [s.lower() for s in _split_list(str(opts["schemes"]))]
    try:
        kinds = [FusionKind(s) for s in scheme_names]
    except ValueError:
        raise ConfigError(f"unknown scheme in {opts['schemes']!r}") from None
    if not kinds:
        raise ConfigError("--schemes list is empty")

    weight_tuples: list[tuple[float, ...]] = []
    if opts.get("weights"):
        for chunk in str(opts["weights"]).split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            try:
                weight_tuples.append(tuple(float(v) for v in _split_list(chunk)))
            except ValueError:
                raise ConfigError(f"bad weight tuple {chunk!r}") from None

    if kinds == [FusionKind.AVG, FusionKind.MIN, FusionKind.MED, FusionKind.WMP,
                 FusionKind.WEIGHTED] and not weight_tuples:
        return default_fusion_specs(ks)

    specs: list[FusionSpec] = []
    default_by_k = {}
    for spec in default_fusion_specs(ks):
        if spec.scheme.kind is FusionKind.WEIGHTED:
            default_by_k.setdefault(spec.k, []).append(spec.scheme.weights)
    for k in ks:
        for kind in kinds:
            if kind is FusionKind.WEIGHTED:
                tuples = [w for w in weight_tuples if len(w) == k]
                if not tuples:
                    tuples = default_by_k.get(k, [])
                for w in tuples:
                    try:
                        specs.append(FusionSpec(k, FusionScheme(kind, w)))
                    except ValueError as exc:
                        raise ConfigError(str(exc)) from None
            else:
                specs.append(FusionSpec(k, FusionScheme(kind)))
    if not specs:
        raise ConfigError("fusion study resolved to zero fusion specs")
    return tuple(specs)


def _cmd_fusion_study(opts: dict) -> int:
    _require(opts, "fusion-study", "out")
    data, images_default = _load_data(opts, "fusion-study")
    specs = _parse_fusion_cli(opts)
    cfg = _experiment_config(opts, "fusion-study", images_default)
    cfg = dataclasses.replace(cfg, fusion_specs=specs)
    ratios = (
        (_parse_ratio(opts["ratio"]),)
        if opts.get("ratio")
        else (SplitRatio.R9_1, SplitRatio.R5_5)
    )
    report = run_fusion_study(data, cfg, ratios=ratios, n_jobs=int(opts["threads"]))
    _emit(report, opts)
    _report_summary(report, bool(opts["verbose"]))
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "preprocess": _cmd_preprocess,
    "features": _cmd_features,
    "classify": _cmd_classify,
    "fuse": _cmd_fuse,
    "experiment": _cmd_experiment,
    "fusion-study": _cmd_fusion_study,
}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        opts = _merge_options(ns.command, ns)
        logging.basicConfig(
            level=logging.INFO if opts.get("verbose") else logging.WARNING,
            format="%(message)s",
            stream=sys.stderr,
        )
        return _COMMANDS[ns.command](opts)
    except ConfigError as exc:
        print(f"facebench: configuration error: {exc}", file=sys.stderr)
        return 2
    except (DataError, FileNotFoundError) as exc:
        print(f"facebench: data error: {exc}", file=sys.stderr)
        return 3
    except FacebenchError as exc:
        print(f"facebench: error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    entry()
