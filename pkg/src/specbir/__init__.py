"""Hyperspectral patch retrieval with dissimilarity-space relevance feedback."""

from .cube import (
    CorpusLabels,
    HyperCube,
    Patch,
    load_corpus,
    load_cube,
    render_rgb,
    save_corpus,
    tile,
    write_cube,
)
from .dissim import (
    KINDS,
    angular_distance,
    load_matrix_csv,
    mshp_significance,
    ndd,
    pairwise_matrix,
    patch_dissim,
    save_matrix_csv,
    sdm,
    spectral_dissim,
    spectral_spatial_dissim,
)
from .dspace import (
    DissimilarityKnn,
    OfflinePrototypeSelector,
    dissim_matrix,
    knn_positive_fraction,
    offline_prototypes,
)
from .evaluation import (
    ExperimentReport,
    anr,
    normalized_rank,
    pr_curve,
    precision_recall,
    run_experiment,
)
from .features import PatchFeatures, featurize_corpus, featurize_patch
from .lzw import linearize, lzw_dictionary
from .rf import (
    DissimilarityIndex,
    Ranking,
    RfConfig,
    RfEngine,
    RfSession,
    select_retrieval,
    zero_query,
)
from .svm import SmoSvc, platt_calibration, train_svm
from .synth import synth_corpus
from .unmixing import (
    EndmemberSet,
    UnmixingChar,
    characterize,
    nnls,
    nnls_abundances,
    reconstruction_error,
    vca,
)

__version__ = "0.1.0"

__all__ = [
    "CorpusLabels", "HyperCube", "Patch", "load_corpus", "load_cube",
    "render_rgb", "save_corpus", "tile", "write_cube",
    "KINDS", "angular_distance", "load_matrix_csv", "mshp_significance",
    "ndd", "pairwise_matrix", "patch_dissim", "save_matrix_csv", "sdm",
    "spectral_dissim", "spectral_spatial_dissim",
    "DissimilarityKnn", "OfflinePrototypeSelector", "dissim_matrix",
    "knn_positive_fraction", "offline_prototypes",
    "ExperimentReport", "anr", "normalized_rank", "pr_curve",
    "precision_recall", "run_experiment",
    "PatchFeatures", "featurize_corpus", "featurize_patch",
    "linearize", "lzw_dictionary",
    "DissimilarityIndex", "Ranking", "RfConfig", "RfEngine", "RfSession",
    "select_retrieval", "zero_query",
    "SmoSvc", "platt_calibration", "train_svm",
    "synth_corpus",
    "EndmemberSet", "UnmixingChar", "characterize", "nnls",
    "nnls_abundances", "reconstruction_error", "vca",
]
