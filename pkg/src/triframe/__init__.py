"""Trapezoidal three-frame song statistics and a two-class classifier bench.

Split a song into opening/stanzas/closing segments, compute eight plain
statistics per segment (24 features, or 8 on the whole signal), rank and
transform them, and evaluate a classifier roster under Monte Carlo
cross-validation.
"""

__version__ = "0.1.0"

from .audio_io import (
    AudioClip,
    FrameTriple,
    MonoSignal,
    decode_wav,
    encode_wav,
    load_wav,
    mixdown,
    save_wav,
    split_frames,
)
from .dataset import Dataset
from .features import (
    BASELINE_NAMES,
    FEATURE_NAMES,
    BaselineVector,
    FeatureVector,
    FrameFeatures,
    extract_baseline_features,
    extract_feature_vector,
    extract_frame_features,
    fano_factor,
    power_spectral_density,
    standardized_moment,
    welch_psd,
)
from .selection import (
    PcaModel,
    RankedFeatures,
    SfsTrace,
    fdr_score,
    fit_pca,
    j_criteria,
    rank_features,
    scatter_matrices,
    sfs,
    t_screen,
    t_statistic,
    transform_pca,
)
from .classifiers import (
    ClassifierSpec,
    GaussianModel,
    KernelSpec,
    KnnSpec,
    SvmModel,
    fit_gaussian,
    fit_svm,
    kernel_eval,
    knn_predict,
    predict_gaussian,
    predict_svm,
    svm_decision,
)
from .evaluation import (
    ComparisonReport,
    CvConfig,
    EvalReport,
    SelectorSpec,
    compare_datasets,
    compare_frame_vs_baseline,
    misclassification_rate,
    monte_carlo_cv,
    sweep,
)
