"""Principal components of aligned beats, over all columns or one wave interval."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..align import HrcCoefficients, Template, hrc_segment_bounds, round_half_away
from ..errors import InputError, ParameterError

QRS_HALF_WIDTH_S = 0.06


@dataclass(frozen=True)
class PcaResult:
    """Fitted principal axes.

    ``components`` has orthonormal rows, ordered by decreasing explained
    variance; ``columns`` records which input columns were used (all of them
    for :func:`pca_fit`, the wave window for :func:`interval_pca`).
    """

    components: np.ndarray
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray
    means: np.ndarray
    columns: np.ndarray | None = None


def pca_fit(X, k):
    """Top-``k`` principal components of ``X`` (rows are observations).

    Computed from the SVD of the centered data. The sign of every component
    is fixed so that its largest-magnitude entry is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InputError("pca_fit needs a 2-d matrix with at least 2 rows")
    n, d = X.shape
    if int(k) != k or not 1 <= k <= min(n, d):
        raise ParameterError(f"k must be in [1, {min(n, d)}], got {k}")
    k = int(k)
    means = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - means, full_matrices=False)
    comps = vt[:k]
    pivot = np.argmax(np.abs(comps), axis=1)
    comps = comps * np.sign(comps[np.arange(k), pivot])[:, np.newaxis]
    var = s ** 2 / (n - 1)
    total = var.sum()
    ratio = var[:k] / total if total > 0 else np.zeros(k)
    return PcaResult(comps, var[:k], ratio, means, np.arange(d))


def pca_transform(res: PcaResult, X):
    """Project rows of ``X`` onto the fitted components."""
    X = np.asarray(X, dtype=np.float64)
    if res.columns is not None and X.shape[-1] != len(res.means):
        X = X[..., res.columns]
    return (X - res.means) @ res.components.T


def pca_inverse_transform(res: PcaResult, scores):
    return np.asarray(scores) @ res.components + res.means


def wave_columns(template: Template, wave, r_column=None, coeffs=None):
    """Column range ``[start, stop)`` of a wave inside one median beat.

    QRS spans ``R +- round(0.06 s * fs)``. The T window runs from the end of
    the QRS window to the T-offset predicted at the template heart rate,
    clipped to the beat.
    """
    rr = template.rr_samples
    r = template.initial_offset if r_column is None else int(r_column)
    half = round_half_away(QRS_HALF_WIDTH_S * template.fs)
    if wave == "QRS":
        start, stop = r - half, r + half + 1
    elif wave == "T":
        _, t_len = hrc_segment_bounds(template.target_bpm, rr, coeffs or HrcCoefficients())
        start, stop = r + half + 1, r + t_len + 1
    else:
        raise ParameterError(f"wave must be 'QRS' or 'T', got {wave!r}")
    start, stop = max(start, 0), min(stop, rr)
    if start >= stop:
        raise ParameterError(f"empty {wave} interval for R at column {r} of {rr}")
    return start, stop


def interval_pca(X_aligned, template: Template, wave, r_column=None, coeffs=None):
    """One-component PCA restricted to the QRS or T window of every lead.

    ``X_aligned`` holds one flattened median beat per row: lead 0 columns
    ``[0, rr)``, lead 1 ``[rr, 2 rr)`` and so on.
    """
    X = np.asarray(X_aligned, dtype=np.float64)
    rr = template.rr_samples
    if X.ndim != 2 or X.shape[1] % rr:
        raise InputError(f"columns ({X.shape[-1]}) are not a whole number of {rr}-sample beats")
    start, stop = wave_columns(template, wave, r_column, coeffs)
    n_leads = X.shape[1] // rr
    cols = np.concatenate([lead * rr + np.arange(start, stop) for lead in range(n_leads)])
    res = pca_fit(X[:, cols], 1)
    return PcaResult(res.components, res.explained_variance, res.explained_variance_ratio,
                     res.means, cols)
