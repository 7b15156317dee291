"""Cluster agreement, calibration and ranking metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from ..errors import InputError, MetricError, ParameterError


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def _conditional_entropy(table):
    # H(rows | columns) from a contingency table, natural log
    n = table.sum()
    col = table.sum(axis=0)
    nz = table > 0
    ratio = table[nz] / np.broadcast_to(col, table.shape)[nz]
    return float(-(table[nz] / n * np.log(ratio)).sum())


def v_measure(labels_pred, labels_true):
    """Harmonic mean of homogeneity and completeness of ``labels_pred``.

    A partition with zero entropy counts as perfectly homogeneous (or
    complete); the score is 0 when both parts are 0.
    """
    t = np.asarray(labels_true).ravel()
    p = np.asarray(labels_pred).ravel()
    if t.size != p.size:
        raise InputError(f"label lengths differ: {t.size} vs {p.size}")
    if t.size == 0:
        raise InputError("empty labelling")
    _, ti = np.unique(t, return_inverse=True)
    _, pi = np.unique(p, return_inverse=True)
    table = np.zeros((ti.max() + 1, pi.max() + 1))
    np.add.at(table, (ti, pi), 1)
    h_c, h_k = _entropy(table.sum(1)), _entropy(table.sum(0))
    hom = 1.0 if h_c == 0 else 1.0 - _conditional_entropy(table) / h_c
    com = 1.0 if h_k == 0 else 1.0 - _conditional_entropy(table.T) / h_k
    return 0.0 if hom + com == 0 else 2.0 * hom * com / (hom + com)


def _as_prob_matrix(probs):
    P = np.asarray(probs, dtype=np.float64)
    if P.ndim == 1:
        P = np.column_stack([1.0 - P, P])
    if P.ndim != 2 or P.shape[1] < 2:
        raise InputError("probabilities must be (n,) binary or (n, n_classes)")
    if not np.all(np.isfinite(P)):
        raise InputError("probabilities must be finite")
    return P


@dataclass(frozen=True)
class CalibrationReport:
    """Per-bin reliability statistics; empty bins hold NaN accuracy/confidence."""

    ece: float
    counts: np.ndarray
    accuracy: np.ndarray
    confidence: np.ndarray
    edges: np.ndarray


def ece(probs, labels, n_bins=10):
    """Expected calibration error of the top-class confidence.

    Bin ``m`` collects confidences in ``((m-1)/M, m/M]``; the error is the
    count-weighted mean of ``|accuracy - confidence|`` over bins.
    """
    if int(n_bins) != n_bins or n_bins < 1:
        raise ParameterError(f"n_bins must be a positive integer, got {n_bins}")
    P = _as_prob_matrix(probs)
    y = np.asarray(labels).ravel()
    if y.size != P.shape[0] or y.size == 0:
        raise InputError("labels must match the probability rows and be non-empty")
    if np.any(np.abs(P.sum(1) - 1.0) > 1e-6) or np.any(P < 0):
        raise InputError("probability rows must be non-negative and sum to 1")
    conf = P.max(1)
    correct = (P.argmax(1) == y).astype(np.float64)
    edges = np.arange(n_bins + 1) / n_bins
    b = np.clip(np.searchsorted(edges, conf, side="left") - 1, 0, n_bins - 1)
    counts = np.bincount(b, minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        acc = np.bincount(b, correct, n_bins) / counts
        cbar = np.bincount(b, conf, n_bins) / counts
    gap = np.where(counts > 0, np.abs(acc - cbar), 0.0)
    return CalibrationReport(float((counts * gap).sum() / y.size), counts, acc, cbar, edges)


def binary_auc(scores, positive):
    """Area under the ROC curve as a rank statistic; ties count 1/2."""
    s = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(positive, dtype=bool)
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs both positive and negative samples")
    ranks = rankdata(s)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def macro_auc(probs, labels, n_classes=None):
    """Unweighted mean of one-vs-rest AUCs over all classes.

    Raises
    ------
    MetricError
        Some class has no positive or no negative sample.
    """
    P = _as_prob_matrix(probs)
    y = np.asarray(labels).ravel()
    if y.size != P.shape[0]:
        raise InputError("labels must match the probability rows")
    C = P.shape[1] if n_classes is None else int(n_classes)
    aucs = []
    for c in range(C):
        pos = y == c
        if not pos.any() or pos.all():
            missing = "positive" if not pos.any() else "negative"
            raise MetricError(f"class {c} has no {missing} samples; AUC undefined")
        aucs.append(binary_auc(P[:, c], pos))
    return float(np.mean(aucs))
