"""Clustering framework comparison for residential electric load demand profiles.

The package builds unit-norm median daily profiles from smart-meter data,
reduces them (PCA or feature agglomeration), clusters them (k-means,
spectral, agglomerative, or fuzzy c-means) with automated hyperparameter
selection, scores the results with five validity indices, and validates
whole pipelines by checking how stably shuffled day partitions map back to
their household's cluster.
"""

from .clusterers import (
    ClusteringResult,
    agglomerative,
    centroids_from_labels,
    fcm,
    hardened_labels,
    kmeans,
    spectral,
)
from .cvi import CviScores, all_indices, calinski_harabasz, davies_bouldin, dunn_index, silhouette, xie_beni
from .dimreduce import Curve, ElbowResult, FittedReducer, detect_elbow, fa_fit, identity_reducer, pca_fit, transform
from .profiles import (
    DayMatrix,
    ProfileMatrix,
    RawDataset,
    Reading,
    build_day_matrices,
    build_day_matrix,
    generate_synthetic,
    ingest_csv,
    preprocess,
    write_csv,
)
from .tuning import TuningResult, elbow_k_for_ac, estimate_fuzzifier, fpc, fpc_sweep, gap_statistic
from .validation import ValidationReport, validate_framework

__version__ = "0.1.0"
