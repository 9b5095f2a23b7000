"""Dissimilarity-space representations and prototype-based scoring.

Objects are embedded as vectors of dissimilarities to a prototype set;
the embedding is an ordinary Euclidean feature space, so conventional
classifiers apply.  This module provides the embedding matrix, an
offline prototype selector (cluster medoids over a precomputed
dissimilarity matrix) and a k-nearest-neighbour positive-fraction
scorer, both with the scikit-learn estimator API.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_X_y

from .dissim import patch_dissim
from .features import PatchFeatures


def check_square_dissimilarity(D, tol: float = 1e-8) -> np.ndarray:
    """Validate an N x N dissimilarity matrix (finite, nonnegative, square)."""
    D = check_array(D, ensure_2d=True)
    if D.shape[0] != D.shape[1]:
        raise ValueError("dissimilarity matrix must be square")
    if not np.isfinite(D).all():
        raise ValueError("dissimilarity matrix must be finite")
    if (D < -tol).any():
        raise ValueError("dissimilarity matrix must be nonnegative")
    return D


def dissim_matrix(objects: list[PatchFeatures], prototypes: list[PatchFeatures],
                  kind: str) -> np.ndarray:
    """t x r matrix of dissimilarities from ``objects`` to ``prototypes``."""
    return np.array([
        [patch_dissim(x, p, kind) for p in prototypes]
        for x in objects
    ])


class OfflinePrototypeSelector(BaseEstimator):
    """Cluster medoids of a precomputed dissimilarity matrix.

    Average-linkage agglomerative clustering is cut at ``n_clusters``;
    each cluster contributes the member minimizing its average
    dissimilarity to the rest of the cluster (ties go to the lowest
    index).

    Attributes
    ----------
    labels_ : ndarray of shape (n,)
        Cluster label per object, 1..n_clusters.
    prototype_indices_ : list of int
        One medoid index per cluster, in cluster-label order.
    """

    def __init__(self, n_clusters: int = 10):
        self.n_clusters = n_clusters

    def fit(self, D, y=None):
        D = check_square_dissimilarity(D)
        n = D.shape[0]
        if n < self.n_clusters:
            raise ValueError(f"need at least n_clusters={self.n_clusters} objects, got {n}")
        sym = (D + D.T) / 2.0
        np.fill_diagonal(sym, 0.0)
        if n == 1:
            self.labels_ = np.ones(1, dtype=int)
        else:
            Z = linkage(squareform(sym, checks=False), method="average")
            self.labels_ = fcluster(Z, t=self.n_clusters, criterion="maxclust")
        medoids = []
        for cluster in range(1, int(self.labels_.max()) + 1):
            members = np.flatnonzero(self.labels_ == cluster)
            mean_dist = sym[np.ix_(members, members)].mean(axis=1)
            medoids.append(int(members[int(np.argmin(mean_dist))]))
        self.prototype_indices_ = medoids
        return self

    def fit_predict(self, D, y=None):
        return self.fit(D).labels_


def offline_prototypes(D, n_clusters: int = 10) -> list[int]:
    """Medoid indices of an average-linkage cut of ``D`` at ``n_clusters``."""
    return OfflinePrototypeSelector(n_clusters=n_clusters).fit(D).prototype_indices_


def knn_positive_fraction(train_vectors, train_labels, query_vector,
                          k: int = 7, train_ids=None) -> float:
    """Fraction of the k nearest training vectors labelled positive.

    Distances are Euclidean in the dissimilarity space; ties prefer the
    lower patch id.  When fewer than ``k`` training vectors exist, all
    of them are used and the fraction is over that count.
    """
    X = np.asarray(train_vectors, dtype=np.float64)
    y = np.asarray(train_labels)
    if X.shape[0] == 0:
        raise ValueError("training set is empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    ids = np.arange(X.shape[0]) if train_ids is None else np.asarray(train_ids)
    q = np.asarray(query_vector, dtype=np.float64)
    dist = np.sqrt(((X - q) ** 2).sum(axis=1))
    order = np.lexsort((ids, dist))
    k_eff = min(k, X.shape[0])
    nearest = order[:k_eff]
    return float(np.sum(y[nearest] == 1)) / k_eff


class DissimilarityKnn(BaseEstimator, ClassifierMixin):
    """k-NN scorer over dissimilarity-space coordinates.

    ``predict_proba`` returns the fraction of the k nearest training
    samples belonging to the positive class; there is no training phase
    beyond storing the data.
    """

    def __init__(self, k: int = 7):
        self.k = k

    def fit(self, X, y, sample_ids=None):
        X, y = check_X_y(X, y)
        self.X_ = X.astype(np.float64)
        self.y_ = np.asarray(y)
        self.classes_ = np.array([0, 1])
        self.sample_ids_ = (
            np.arange(X.shape[0]) if sample_ids is None else np.asarray(sample_ids)
        )
        return self

    def _check_fitted(self):
        if not hasattr(self, "X_"):
            raise NotFittedError("fit must be called first")

    def predict_proba(self, X):
        self._check_fitted()
        X = check_array(X)
        if X.shape[1] != self.X_.shape[1]:
            raise ValueError("query dimension differs from training dimension")
        scores = np.array([
            knn_positive_fraction(self.X_, self.y_, row, k=self.k,
                                  train_ids=self.sample_ids_)
            for row in X
        ])
        return np.column_stack([1.0 - scores, scores])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)


def save_prototypes_csv(path, patch_ids, kind: str) -> None:
    """Persist a prototype set as patch ids with the dissimilarity kind used."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["patch_id", "kind"])
        for pid in patch_ids:
            writer.writerow([pid, kind])


def load_prototypes_csv(path) -> tuple[list[int], str]:
    path = Path(path)
    ids = []
    kind = ""
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if not row:
                continue
            ids.append(int(row[0]))
            kind = row[1]
    return ids, kind
