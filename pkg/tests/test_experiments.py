"""Experiment configs, protocol runs, reports and their serializations."""

import csv
import json

import numpy as np
import pytest
from scipy import stats

from facebench.classify import Prediction
from facebench.dataset import (
    Dataset,
    ImageRecord,
    SplitRatio,
    canonical_eye_positions,
    generate_synthetic,
)
from facebench.experiments import (
    CLASSIFIERS,
    FEATURE_KINDS,
    PROTOCOL_COUNTS,
    SUITES,
    ExperimentConfig,
    FusionSpec,
    Protocol,
    accuracy,
    default_fusion_specs,
    emit_report,
    run_experiment,
    run_fusion_study,
    run_protocols,
)
from facebench.fusion import FusionKind, FusionScheme


@pytest.fixture(scope="module")
def clean_data():
    # Zero intra-subject noise: every image of a subject is identical, so
    # any sane classifier scores 100%.
    return generate_synthetic(3, 3, images_per_subject=4, intra_noise=0.0, seed=5)


@pytest.fixture(scope="module")
def noisy_data():
    return generate_synthetic(4, 4, images_per_subject=4, intra_noise=60.0, seed=6)


def small_cfg(**kw):
    base = dict(
        protocol=Protocol.CUSTOM,
        ratio=SplitRatio.R5_5,
        n_female=3,
        n_male=3,
        images_per_subject=4,
        n_components=10,
        seed=0,
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestAccuracy:
    def test_fraction_to_percent(self):
        preds = ["a"] * 71 + ["b"] * 12
        truth = ["a"] * 83
        assert round(accuracy(preds, truth), 2) == 85.54

    def test_accepts_prediction_objects(self):
        preds = [
            Prediction(probe_id="0", predicted="a", score=0.0),
            Prediction(probe_id="1", predicted="b", score=0.0),
        ]
        assert accuracy(preds, ["a", "a"]) == 50.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            accuracy([], [])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            accuracy(["a"], ["a", "b"])


class TestProtocolTables:
    def test_gender_balance_counts(self):
        assert PROTOCOL_COUNTS[Protocol.E1] == (83, 83)
        assert PROTOCOL_COUNTS[Protocol.E2] == (83, 461)
        assert PROTOCOL_COUNTS[Protocol.E3_MALE] == (0, 82)
        assert PROTOCOL_COUNTS[Protocol.E3_FEMALE] == (82, 0)
        assert PROTOCOL_COUNTS[Protocol.E3_MIXED] == (41, 41)

    def test_size_ladder_counts(self):
        assert PROTOCOL_COUNTS[Protocol.E4_120] == (20, 100)
        assert PROTOCOL_COUNTS[Protocol.E4_240] == (40, 200)
        assert PROTOCOL_COUNTS[Protocol.E4_360] == (60, 300)
        assert PROTOCOL_COUNTS[Protocol.E4_480] == (80, 400)

    def test_every_size_is_one_to_five(self):
        for proto in (Protocol.E4_120, Protocol.E4_240, Protocol.E4_360, Protocol.E4_480):
            nf, nm = PROTOCOL_COUNTS[proto]
            assert nm == 5 * nf

    def test_suites(self):
        assert SUITES["e1"] == (Protocol.E1,)
        assert SUITES["e2"] == (Protocol.E2,)
        assert SUITES["e3"] == (Protocol.E3_MALE, Protocol.E3_FEMALE, Protocol.E3_MIXED)
        assert len(SUITES["e4"]) == 4

    def test_classifier_and_feature_lists(self):
        assert CLASSIFIERS == ("SVM", "EUC", "CB", "COS", "BC", "CAN", "CORR", "CHEB", "MC")
        assert FEATURE_KINDS == ("PCA", "LDA")


class TestFusionSpecs:
    def test_default_grid_size(self):
        specs = default_fusion_specs((2, 3, 4))
        # 4 parameterless schemes per k, plus 2+3+3 weighted rows
        assert len(specs) == 20

    def test_contains_all_published_weight_tuples(self):
        specs = default_fusion_specs((2, 3, 4))
        weighted = {s.scheme.weights for s in specs if s.scheme.weights}
        assert weighted == {
            (0.9, 0.1),
            (0.1, 0.9),
            (0.8, 0.1, 0.1),
            (0.4, 0.3, 0.3),
            (0.1, 0.1, 0.8),
            (0.4, 0.4, 0.1, 0.1),
            (0.3, 0.3, 0.2, 0.2),
            (0.1, 0.1, 0.4, 0.4),
        }

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            FusionSpec(0, FusionScheme(FusionKind.AVG))


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.protocol is Protocol.E1
        assert cfg.ratio is SplitRatio.R9_1
        assert cfg.pool_counts() == (83, 83)

    def test_string_coercion(self):
        cfg = ExperimentConfig(protocol="E4_240", ratio="5:5")
        assert cfg.protocol is Protocol.E4_240
        assert cfg.ratio is SplitRatio.R5_5
        assert cfg.pool_counts() == (40, 200)

    def test_custom_needs_counts(self):
        with pytest.raises(ValueError, match="n_female"):
            ExperimentConfig(protocol=Protocol.CUSTOM)

    def test_unknown_names_rejected(self):
        with pytest.raises(ValueError, match="feature"):
            ExperimentConfig(features=("ICA",))
        with pytest.raises(ValueError, match="classifier"):
            ExperimentConfig(classifiers=("KNN5",))

    def test_numeric_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(n_trials=0)
        with pytest.raises(ValueError):
            ExperimentConfig(svm_c=-1.0)
        with pytest.raises(ValueError):
            ExperimentConfig(svm_gamma=0.0)
        with pytest.raises(ValueError):
            ExperimentConfig(mc_ridge=-1e-9)

    def test_to_dict_echoes_every_knob(self):
        cfg = small_cfg(fusion_specs=default_fusion_specs((2,)))
        d = cfg.to_dict()
        assert d["protocol"] == "CUSTOM"
        assert d["ratio"] == "5:5"
        assert d["n_female"] == 3 and d["n_male"] == 3
        assert d["fusion_specs"][0] == {"k": 2, "scheme": "avg", "weights": None}
        assert {"seed", "n_trials", "n_components", "svm_c", "svm_gamma"} <= d.keys()
        json.dumps(d)  # must be JSON-serializable as-is


@pytest.fixture(scope="module")
def clean_report(clean_data):
    return run_experiment(clean_data, small_cfg())


class TestCleanRun:
    @pytest.fixture
    def report(self, clean_report):
        return clean_report

    def test_every_cell_present(self, report):
        sec = report.sections[0]
        got = {(c.feature, c.classifier) for c in sec.cells}
        assert got == {(f, c) for f in FEATURE_KINDS for c in CLASSIFIERS}

    def test_identical_images_classify_perfectly(self, report):
        for c in report.sections[0].cells:
            assert c.accuracy == 100.0, (c.feature, c.classifier)

    def test_trial_provenance(self, report):
        sec = report.sections[0]
        assert len(sec.trials) == 1
        t = sec.trials[0]
        assert t.seed == 0
        assert len(t.subjects_sha256) == 64
        int(t.subjects_sha256, 16)
        # 6 subjects x 4 images, 5:5 -> 12 train, 12 test
        assert (t.n_train, t.n_test) == (12, 12)

    def test_section_metadata(self, report):
        sec = report.sections[0]
        assert sec.name == "CUSTOM"
        assert sec.protocol == "CUSTOM"
        assert sec.ratio == "5:5"
        assert (sec.n_female, sec.n_male) == (3, 3)

    def test_components_recorded(self, report):
        comps = report.sections[0].components
        # Zero-noise duplicates leave 6 distinct rows: PCA rank 5.
        assert comps == {"PCA": 5, "LDA": 5}

    def test_single_trial_has_no_std(self, report):
        assert all(c.std is None for c in report.sections[0].cells)

    def test_timings_nonnegative(self, report):
        timings = report.sections[0].timings
        assert timings
        assert all(v >= 0.0 for v in timings.values())

    def test_cell_lookup(self, report):
        c = report.cell("CUSTOM", "PCA", "EUC")
        assert c.accuracy == 100.0
        with pytest.raises(KeyError):
            report.cell("CUSTOM", "PCA", "nope")

    def test_deterministic_rerun(self, clean_data, report):
        again = run_experiment(clean_data, small_cfg())
        assert again.to_dict(include_timing=False) == report.to_dict(
            include_timing=False
        )


class TestChanceLevel:
    def test_labelless_noise_stays_at_chance(self):
        # Pixels carry no subject information, so nearest-neighbor hit
        # rates must stay inside a binomial band around 1/n_subjects.
        rng = np.random.default_rng(7)
        eye_l, eye_r = canonical_eye_positions(70, 60)
        records = []
        for s in range(8):
            gender = "F" if s < 4 else "M"
            for _ in range(4):
                records.append(
                    ImageRecord(
                        subject_id=f"{gender}{s:04d}",
                        gender=gender,
                        image_ref=rng.integers(0, 256, size=(70, 60)).astype(np.uint8),
                        eye_left=eye_l,
                        eye_right=eye_r,
                    )
                )
        data = Dataset(records=tuple(records))
        cfg = small_cfg(
            n_female=4,
            n_male=4,
            features=("PCA",),
            classifiers=("EUC", "COS"),
            n_components=8,
        )
        report = run_experiment(data, cfg)
        n_test = report.sections[0].trials[0].n_test
        p_chance = 1 / 8
        hi = stats.binom.ppf(0.9999, n_test, p_chance) / n_test * 100.0
        for c in report.sections[0].cells:
            assert c.accuracy <= hi, (c.classifier, c.accuracy)


@pytest.fixture(scope="module")
def noisy_fusion_report(noisy_data):
    cfg = small_cfg(
        n_female=4,
        n_male=4,
        features=("PCA",),
        classifiers=("EUC", "CB", "COS", "CHEB"),
        fusion_specs=default_fusion_specs((2,)),
        n_trials=3,
    )
    return run_experiment(noisy_data, cfg)


class TestNoisyRunWithFusion:
    @pytest.fixture
    def report(self, noisy_fusion_report):
        return noisy_fusion_report

    def test_fusion_rows_cover_the_grid(self, report):
        rows = report.sections[0].fusion_rows
        assert len(rows) == 6  # AVG MIN MED WMP W(0.9,0.1) W(0.1,0.9)
        assert {r.scheme for r in rows} == {
            "AVG",
            "MIN",
            "MED",
            "WMP",
            "W(0.9,0.1)",
            "W(0.1,0.9)",
        }

    def test_fusion_constituents_are_metric_numbers(self, report):
        for r in report.sections[0].fusion_rows:
            assert len(r.metrics) == r.k == 2
            assert all(m in (1, 2, 3, 8) for m in r.metrics)

    def test_improvement_flag_matches_accuracies(self, report):
        sec = report.sections[0]
        by_clf = {c.classifier: c.accuracy for c in sec.cells}
        num_to_name = {1: "EUC", 2: "CB", 3: "COS", 8: "CHEB"}
        for r in sec.fusion_rows:
            best = max(by_clf[num_to_name[m]] for m in r.metrics)
            assert r.improved == (r.accuracy >= best)

    def test_multi_trial_aggregation(self, report):
        for c in report.sections[0].cells:
            assert len(c.trial_accuracies) == 3
            assert c.accuracy == pytest.approx(np.mean(c.trial_accuracies))
            assert c.std == pytest.approx(np.std(c.trial_accuracies, ddof=1))

    def test_trial_seeds_increment(self, report):
        seeds = [t.seed for t in report.sections[0].trials]
        assert seeds == [0, 1, 2]

    def test_fusion_k_larger_than_metric_count_rejected(self, noisy_data):
        cfg = small_cfg(
            n_female=4,
            n_male=4,
            features=("PCA",),
            classifiers=("EUC", "CB"),
            fusion_specs=(FusionSpec(3, FusionScheme(FusionKind.AVG)),),
        )
        with pytest.raises(ValueError, match="exceeds"):
            run_experiment(noisy_data, cfg)

    def test_fusion_without_metric_classifier_rejected(self, noisy_data):
        cfg = small_cfg(
            n_female=4,
            n_male=4,
            features=("PCA",),
            classifiers=("SVM",),
            fusion_specs=(FusionSpec(1, FusionScheme(FusionKind.AVG)),),
        )
        with pytest.raises(ValueError, match="fusion"):
            run_experiment(noisy_data, cfg)


class TestMultiSectionRuns:
    def test_run_protocols_sections_and_echo(self, clean_data):
        cfg = small_cfg(classifiers=("EUC",), features=("PCA",))
        report = run_protocols(
            clean_data, cfg, (Protocol.CUSTOM, Protocol.CUSTOM)
        )
        assert [s.name for s in report.sections] == ["CUSTOM", "CUSTOM"]
        assert report.config["protocol"] == ["CUSTOM", "CUSTOM"]

    def test_run_protocols_empty_rejected(self, clean_data):
        with pytest.raises(ValueError):
            run_protocols(clean_data, small_cfg(), ())

    def test_fusion_study_names_sections_by_ratio(self, clean_data):
        cfg = small_cfg(
            classifiers=("EUC", "CB"),
            features=("PCA",),
            fusion_specs=default_fusion_specs((2,)),
        )
        report = run_fusion_study(clean_data, cfg, ratios=(SplitRatio.R5_5,))
        assert [s.name for s in report.sections] == ["CUSTOM:5:5"]
        assert report.config["ratio"] == ["5:5"]
        assert report.sections[0].fusion_rows

    def test_fusion_study_requires_specs(self, clean_data):
        with pytest.raises(ValueError, match="fusion_specs"):
            run_fusion_study(clean_data, small_cfg(), ratios=(SplitRatio.R5_5,))


@pytest.fixture(scope="module")
def emit_source_report(noisy_data):
    cfg = small_cfg(
        n_female=4,
        n_male=4,
        features=("PCA",),
        classifiers=("EUC", "CB"),
        fusion_specs=default_fusion_specs((2,)),
    )
    return run_experiment(noisy_data, cfg)


class TestEmitReport:
    @pytest.fixture
    def report(self, emit_source_report):
        return emit_source_report

    def test_json_round_trips_config_verbatim(self, report, tmp_path):
        out = tmp_path / "r.json"
        emit_report(report, "json", out)
        loaded = json.loads(out.read_text())
        assert loaded["config"] == json.loads(json.dumps(report.config))
        assert loaded["sections"][0]["cells"]
        assert "timings" in loaded["sections"][0]

    def test_json_without_timing_omits_clock_fields(self, report, tmp_path):
        out = tmp_path / "r.json"
        emit_report(report, "json", out, include_timing=False)
        loaded = json.loads(out.read_text())
        sec = loaded["sections"][0]
        assert "timings" not in sec
        assert all("fit_seconds" not in c for c in sec["cells"])

    def test_csv_shape_and_rounding(self, report, tmp_path):
        out = tmp_path / "r.csv"
        emit_report(report, "csv", out)
        lines = out.read_text().splitlines()
        comments = [l for l in lines if l.startswith("#")]
        assert any("config:" in l for l in comments)
        assert any("subjects_sha256=" in l for l in comments)
        body = [l for l in lines if not l.startswith("#")]
        rows = list(csv.reader(body))
        header, data = rows[0], rows[1:]
        assert header[:4] == ["section", "row_type", "feature", "classifier"]
        acc_col = header.index("accuracy")
        cells = [r for r in data if r[1] == "cell"]
        fusion = [r for r in data if r[1] == "fusion"]
        assert len(cells) == 2 and len(fusion) == 6
        for r in data:
            # two-decimal table convention
            whole, frac = r[acc_col].split(".")
            assert len(frac) == 2
            assert float(r[acc_col]) <= 100.0
        m_col = header.index("metrics")
        w_col = header.index("weights")
        assert all("+" in r[m_col] for r in fusion)
        weighted = [r for r in fusion if r[header.index("scheme")].startswith("W(")]
        assert all(";" in r[w_col] for r in weighted)

    def test_csv_without_timing_drops_columns(self, report, tmp_path):
        out = tmp_path / "r.csv"
        emit_report(report, "csv", out, include_timing=False)
        body = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        header = next(csv.reader([body[0]]))
        assert "fit_seconds" not in header and "predict_seconds" not in header

    def test_unknown_format_rejected(self, report, tmp_path):
        with pytest.raises(ValueError, match="format"):
            emit_report(report, "yaml", tmp_path / "r.yaml")
