"""facebench: face identification toolkit and experiment harness.

Eigenface (PCA) and Fisherface (LDA) features over aligned, histogram
equalized 70x60 face crops; eight nearest-neighbor distance metrics; an
RBF-kernel SVM trained by sequential minimal optimization; distance
matrix fusion; and the E1-E4 gender/size benchmark protocols with a
best-k fusion study, all reproducible from a single seed.
"""

__version__ = "0.1.0"

from .classify import (
    DEFAULT_C_GRID,
    DEFAULT_GAMMA_GRID,
    Prediction,
    SvmModel,
    TrainingLimitError,
    grid_search_svm,
    nn_classify,
    rbf_kernel,
    svm_decision,
    svm_predict,
    svm_train,
)
from .dataset import (
    Dataset,
    ImageRecord,
    SamplingSpec,
    Split,
    SplitRatio,
    canonical_eye_positions,
    filter_min_images,
    generate_synthetic,
    load_manifest,
    sample_subjects,
    split_train_test,
)
from .errors import ConfigError, DataError, FacebenchError
from .experiments import (
    CLASSIFIERS,
    PROTOCOL_COUNTS,
    SUITES,
    ExperimentConfig,
    ExperimentReport,
    FusionSpec,
    Protocol,
    accuracy,
    default_fusion_specs,
    emit_report,
    preprocess_records,
    run_experiment,
    run_fusion_study,
    run_protocols,
    time_section,
)
from .features import (
    FeatureKind,
    FeatureModel,
    fisher_criterion,
    fit_lda,
    fit_pca,
    load_model,
    project,
    save_model,
    scatter_matrices,
)
from .fusion import (
    FusionKind,
    FusionScheme,
    fuse,
    minmax_normalize,
    rank_metrics,
    wmp_weights,
)
from .metrics import (
    DistanceMatrix,
    MetricContext,
    MetricKind,
    distance,
    fit_metric_context,
    load_distance_csv,
    pairwise,
    save_distance_csv,
)
from .preprocess import (
    CANONICAL_HEIGHT,
    CANONICAL_WIDTH,
    GrayImage,
    align_crop_resize,
    histogram_equalize,
    read_pgm,
    to_feature_vector,
    write_pgm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
