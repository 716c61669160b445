"""User- and item-based neighbourhood collaborative filtering.

Each entity (user for user-kNN, item for item-kNN) keeps a fixed
neighbourhood: its ``k`` most similar other entities with strictly positive
similarity.  For a target (user, item) only the neighbours that carry a
rating for the target contribute.

``predict`` always returns the similarity-weighted average of those
neighbours' ratings (mean-centred for Pearson), clamped to the rating scale.
Top-N ranking uses ``config.scoring``: ``"average"`` ranks by that same
prediction, ``"sum"`` ranks by the summed similarity of the contributing
neighbours.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import scipy.sparse as sp

from ..ingest import RatingDataset
from .base import ModelConfig, TrainedModel


def similarity_matrix(X, kind: str = "cosine", shrinkage: float = 0.0) -> np.ndarray:
    """Dense row-by-row similarity of a sparse matrix, zero diagonal.

    ``cosine`` uses full-vector norms; ``pearson`` centres each row on the mean
    of its stored entries and normalises over the co-rated support only.
    Pairs without co-rated support get similarity 0.
    """
    X = sp.csr_matrix(X, dtype=np.float64)
    B = X.copy()
    B.data = np.ones_like(B.data)
    if kind == "cosine":
        num = (X @ X.T).toarray()
        norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
        den = np.outer(norms, norms)
    elif kind == "pearson":
        C = _center_rows(X)
        C2 = C.multiply(C).tocsr()
        num = (C @ C.T).toarray()
        den = np.sqrt((C2 @ B.T).toarray() * (B @ C2.T).toarray())
    else:
        raise ValueError(f"unknown similarity {kind!r}")
    with np.errstate(invalid="ignore", divide="ignore"):
        S = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    if shrinkage > 0:
        support = (B @ B.T).toarray()
        S *= support / (support + shrinkage)
    S = (S + S.T) / 2.0
    np.clip(S, -1.0, 1.0, out=S)
    np.fill_diagonal(S, 0.0)
    return S


def row_means(X: sp.csr_matrix) -> np.ndarray:
    counts = np.diff(X.indptr)
    sums = np.asarray(X.sum(axis=1)).ravel()
    return np.divide(sums, counts, out=np.zeros(len(counts)), where=counts > 0)


def _center_rows(X: sp.csr_matrix) -> sp.csr_matrix:
    C = X.copy()
    C.data = C.data - np.repeat(row_means(X), np.diff(X.indptr))
    return C


def top_k_neighbours(S: np.ndarray, k: int) -> sp.csr_matrix:
    """Keep each row's ``k`` largest positive entries (ties to lower index)."""
    n = S.shape[0]
    indptr = [0]
    indices: list[np.ndarray] = []
    data: list[np.ndarray] = []
    for a in range(n):
        row = S[a]
        order = np.argsort(-row, kind="stable")[:k]
        order = order[row[order] > 0]
        indices.append(order)
        data.append(row[order])
        indptr.append(indptr[-1] + len(order))
    return sp.csr_matrix(
        (np.concatenate(data) if data else [], np.concatenate(indices) if indices else [], indptr),
        shape=S.shape,
    )


class NeighbourhoodModel(TrainedModel):
    kind = ""

    def _prepare(self):
        R = self.matrix
        self.binary = R.copy()
        self.binary.data = np.ones_like(self.binary.data)
        self.user_means = row_means(R)
        self.item_means = row_means(R.T.tocsr())
        self.global_mean = float(R.data.mean()) if R.nnz else float(np.mean(self.scale))
        self.centered = _center_rows(R) if self.kind == "user" else _center_rows(R.T.tocsr()).T.tocsr()

    def _fit(self):
        self._prepare()
        X = self.matrix if self.kind == "user" else self.matrix.T.tocsr()
        S = similarity_matrix(X, self.config.similarity, self.config.shrinkage)
        self.neighbours = top_k_neighbours(S, self.config.k)
        return self

    def _evidence(self, u: int):
        """(weighted numerator, weight sum) over every catalog item for user index ``u``."""
        pearson = self.config.similarity == "pearson"
        if self.kind == "user":
            w = self.neighbours[u]
            source = self.centered if pearson else self.matrix
            num = np.asarray((w @ source).todense()).ravel()
            den = np.asarray((w @ self.binary).todense()).ravel()
        else:
            W = self.neighbours
            source = self.centered if pearson else self.matrix
            r = np.asarray(source[u].todense()).ravel()
            b = np.asarray(self.binary[u].todense()).ravel()
            num = W @ r
            den = W @ b
        return num, den

    def _average(self, u: int) -> np.ndarray:
        num, den = self._evidence(u)
        if self.kind == "user":
            base = self.user_means[u] if self.config.similarity == "pearson" else 0.0
            fallback = np.full(len(num), self.user_means[u])
        else:
            base = self.item_means if self.config.similarity == "pearson" else 0.0
            fallback = self.item_means
        avg = base + num / np.where(den > 0, den, 1.0)
        return np.clip(np.where(den > 0, avg, fallback), *self.scale)

    def _cold(self, user):
        return np.clip(np.where(np.diff(self.binary.tocsc().indptr) > 0, self.item_means, self.global_mean),
                       *self.scale)

    def predict(self, user, item):
        i = self.item_index.get(item)
        u = self.user_index.get(user)
        if u is None and i is None:
            return float(np.clip(self.global_mean, *self.scale))
        if u is None:
            return float(self._cold(user)[i])
        if i is None:
            return float(np.clip(self.user_means[u], *self.scale))
        return float(self._average(u)[i])

    def score_items(self, user):
        u = self.user_index.get(user)
        if u is None:
            return self._cold(user)
        if self.config.scoring == "average":
            return self._average(u)
        return self._evidence_sum(u)

    def _evidence_sum(self, u: int) -> np.ndarray:
        _, den = self._evidence(u)
        return den

    def _state(self):
        W = self.neighbours
        return {"nb_data": W.data, "nb_indices": W.indices, "nb_indptr": W.indptr}

    def _set_state(self, arrays):
        self._prepare()
        n = self.matrix.shape[0] if self.kind == "user" else self.matrix.shape[1]
        self.neighbours = sp.csr_matrix((arrays["nb_data"], arrays["nb_indices"], arrays["nb_indptr"]),
                                        shape=(n, n))


class UserKNN(NeighbourhoodModel):
    algorithm = "user_knn"
    kind = "user"


class ItemKNN(NeighbourhoodModel):
    algorithm = "item_knn"
    kind = "item"


def fit_user_knn(train: RatingDataset, config: ModelConfig | None = None) -> UserKNN:
    if len(train) == 0:
        raise ValueError("empty training data")
    return UserKNN(replace(config or ModelConfig(), algorithm="user_knn"), train)._fit()


def fit_item_knn(train: RatingDataset, config: ModelConfig | None = None) -> ItemKNN:
    if len(train) == 0:
        raise ValueError("empty training data")
    return ItemKNN(replace(config or ModelConfig(), algorithm="item_knn"), train)._fit()
