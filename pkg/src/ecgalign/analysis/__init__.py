"""Downstream analyses of aligned beats: PCA, clustering, classification, metrics."""
from .cluster import ClusterResult, kmeans, ward_cluster
from .importance import ImportanceMap, auc_scorer, default_intervals, grouped_permutation_importance
from .logreg import LogisticModel, logreg_fit, logreg_predict_proba
from .metrics import CalibrationReport, binary_auc, ece, macro_auc, v_measure
from .pca import PcaResult, interval_pca, pca_fit, pca_inverse_transform, pca_transform, wave_columns

__all__ = [
    "ClusterResult", "kmeans", "ward_cluster",
    "ImportanceMap", "auc_scorer", "default_intervals", "grouped_permutation_importance",
    "LogisticModel", "logreg_fit", "logreg_predict_proba",
    "CalibrationReport", "binary_auc", "ece", "macro_auc", "v_measure",
    "PcaResult", "interval_pca", "pca_fit", "pca_inverse_transform", "pca_transform",
    "wave_columns",
]
