"""k-means (Lloyd with k-means++ seeding) and Ward agglomerative clustering."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError, ParameterError


@dataclass
class ClusterResult:
    """Cluster labels plus algorithm-specific diagnostics.

    For k-means ``centers``, ``inertia`` and the per-iteration
    ``inertia_history`` of the winning restart are set. For Ward, ``merges``
    lists the merged pairs as sorted tuples of original sample indices and
    ``linkage`` is a SciPy-style ``(n - 1, 4)`` matrix of the full tree.
    """

    labels: np.ndarray
    centers: np.ndarray | None = None
    inertia: float | None = None
    inertia_history: list = field(default_factory=list)
    n_iter: int = 0
    merges: list = field(default_factory=list)
    linkage: np.ndarray | None = None


def _check(X, k):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    if X.ndim != 2 or X.shape[0] < 1:
        raise InputError("expected a non-empty (n_samples, n_features) matrix")
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k}")
    if k > X.shape[0]:
        raise ParameterError(f"k={k} exceeds the number of samples ({X.shape[0]})")
    return X, int(k)


def _sq_dist(X, C):
    d = (X * X).sum(1)[:, None] - 2 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp(X, k, rng):
    n = X.shape[0]
    idx = [int(rng.integers(n))]
    d2 = _sq_dist(X, X[idx])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            i = int(rng.choice(n, p=d2 / total))
        else:
            # all remaining points coincide with a chosen center
            free = np.setdiff1d(np.arange(n), idx)
            i = int(rng.choice(free))
        idx.append(i)
        d2 = np.minimum(d2, _sq_dist(X, X[i:i + 1])[:, 0])
    return X[idx].copy()


def _lloyd(X, centers, max_iter, tol):
    k = centers.shape[0]
    history = []
    labels = None
    for it in range(1, max_iter + 1):
        d = _sq_dist(X, centers)
        new_labels = d.argmin(1)
        history.append(float(d[np.arange(len(X)), new_labels].sum()))
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
        new_centers = centers.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new_centers[j] = X[members].mean(0)
        empty = [j for j in range(k) if not (labels == j).any()]
        for j in empty:
            # re-seed from the point farthest from its current center
            far = int(np.argmax(_sq_dist(X, new_centers)[np.arange(len(X)), labels]))
            new_centers[j] = X[far]
            labels = labels.copy()
            labels[far] = j
        shift = float(((new_centers - centers) ** 2).sum())
        centers = new_centers
        if shift <= tol and not empty:
            d = _sq_dist(X, centers)
            labels = d.argmin(1)
            history.append(float(d[np.arange(len(X)), labels].sum()))
            break
    return labels, centers, history, it


def kmeans(X, k, seed=0, n_init=10, max_iter=300, tol=1e-6):
    """Lloyd's k-means, best of ``n_init`` k-means++ restarts.

    Each restart draws from its own child of ``SeedSequence(seed)``, so the
    result does not depend on the order restarts are run in.
    """
    X, k = _check(X, k)
    best = None
    for child in np.random.SeedSequence(seed).spawn(n_init):
        rng = np.random.default_rng(child)
        labels, centers, history, n_iter = _lloyd(X, _kmeanspp(X, k, rng), max_iter, tol)
        inertia = history[-1]
        if best is None or inertia < best.inertia:
            best = ClusterResult(labels, centers, inertia, history, n_iter)
    return best


def _first_appearance_labels(groups, n):
    labels = np.empty(n, dtype=np.int64)
    for lab, members in enumerate(sorted(groups, key=min)):
        labels[list(members)] = lab
    return labels


def ward_cluster(X, k):
    """Agglomerative Ward clustering cut at ``k`` clusters.

    The merge cost is the increase in within-cluster sum of squares,
    ``n_i n_j / (n_i + n_j) * ||c_i - c_j||^2``, updated with the
    Lance-Williams recurrence. Ties go to the smallest ``(i, j)`` slot pair,
    where the merged cluster keeps the smaller slot.
    """
    X, k = _check(X, k)
    n = X.shape[0]
    cost = 0.5 * _sq_dist(X, X)
    np.fill_diagonal(cost, np.inf)
    size = np.ones(n)
    active = np.ones(n, dtype=bool)
    members = {i: [i] for i in range(n)}
    node_id = list(range(n))
    merges, linkage, groups_at_k = [], [], None
    if k == n:
        groups_at_k = [list(m) for m in members.values()]

    for step in range(n - 1):
        # cost is symmetric, so the first row-major minimum is the smallest (i, j), i < j
        i, j = divmod(int(np.argmin(cost)), n)
        dij = cost[i, j]
        ni, nj = size[i], size[j]
        others = active.copy()
        others[[i, j]] = False
        nk = size[others]
        cost[i, others] = ((nk + ni) * cost[i, others] + (nk + nj) * cost[j, others]
                           - nk * dij) / (nk + ni + nj)
        cost[others, i] = cost[i, others]
        cost[j, :] = np.inf
        cost[:, j] = np.inf
        active[j] = False
        size[i] = ni + nj

        merges.append((tuple(sorted(members[i])), tuple(sorted(members[j]))))
        linkage.append([min(node_id[i], node_id[j]), max(node_id[i], node_id[j]),
                        np.sqrt(2.0 * dij), ni + nj])
        members[i] = members[i] + members.pop(j)
        node_id[i] = n + step
        if n - step - 1 == k:
            groups_at_k = [list(m) for m in members.values()]

    return ClusterResult(_first_appearance_labels(groups_at_k, n), merges=merges,
                         linkage=np.asarray(linkage).reshape(-1, 4))
