"""Permutation importance of contiguous feature intervals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError, ParameterError
from .metrics import macro_auc


@dataclass(frozen=True)
class ImportanceMap:
    """Score drop per interval: ``drops[i, r]`` is repeat ``r`` of interval ``i``."""

    intervals: tuple
    baseline: float
    drops: np.ndarray

    @property
    def mean_drop(self):
        return self.drops.mean(axis=1)

    @property
    def std(self):
        return self.drops.std(axis=1)


def default_intervals(n_leads, beat_len, n_intervals=19, width=25):
    """``n_intervals`` adjacent windows of ``width`` samples inside every lead's beat.

    Windows are centred in the beat and never cross a lead boundary.
    """
    span = n_intervals * width
    if span > beat_len:
        raise ParameterError(f"{n_intervals} x {width} samples do not fit a {beat_len}-sample beat")
    start = (beat_len - span) // 2
    return [(lead * beat_len + start + i * width, lead * beat_len + start + (i + 1) * width)
            for lead in range(n_leads) for i in range(n_intervals)]


def auc_scorer(model):
    """Score function ``(X, y) -> macro AUC`` for a fitted probabilistic model."""
    return lambda X, y: macro_auc(model.predict_proba(X), y)


def grouped_permutation_importance(score, X, y, intervals, n_repeats=20, seed=0):
    """Mean drop of ``score(X, y)`` when one interval's columns are shuffled.

    All columns of an interval are permuted with the same row permutation,
    so within-interval structure survives while its link to ``y`` breaks.
    Each interval draws from its own child of ``SeedSequence(seed)``; repeat
    ``r`` is therefore the same whatever ``n_repeats`` is.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InputError("X must be 2-d")
    if n_repeats < 1:
        raise ParameterError("n_repeats must be >= 1")
    ivs = [(int(a), int(b)) for a, b in intervals]
    if not ivs:
        raise ParameterError("no intervals given")
    for a, b in ivs:
        if not 0 <= a < b <= X.shape[1]:
            raise ParameterError(f"interval [{a}, {b}) outside 0..{X.shape[1]}")
    ordered = sorted(ivs)
    for (a0, b0), (a1, b1) in zip(ordered, ordered[1:]):
        if a1 < b0:
            raise ParameterError(f"intervals [{a0}, {b0}) and [{a1}, {b1}) overlap")

    baseline = float(score(X, y))
    drops = np.empty((len(ivs), n_repeats))
    streams = np.random.SeedSequence(seed).spawn(len(ivs))
    for i, ((a, b), ss) in enumerate(zip(ivs, streams)):
        rng = np.random.default_rng(ss)
        Xp = X.copy()
        for r in range(n_repeats):
            Xp[:, a:b] = X[rng.permutation(X.shape[0]), a:b]
            drops[i, r] = baseline - float(score(Xp, y))
    return ImportanceMap(tuple(ivs), baseline, drops)
