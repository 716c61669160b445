"""Biased matrix factorisation trained with SGD.

Prediction is ``mu + b_u + b_i + p_u . q_i`` with ``mu`` the global training
mean (held fixed).  The objective summed over observed ratings is

    sum 1/2 (r - r_hat)^2 + 1/2 reg (b_u^2 + b_i^2 + |p_u|^2 + |q_i|^2)

and each SGD step applies the gradient of one term of that sum.
"""

from __future__ import annotations

import logging
from dataclasses import replace

import numba
import numpy as np

from ..errors import TrainingDivergedError
from ..ingest import RatingDataset
from .base import ModelConfig, TrainedModel

log = logging.getLogger(__name__)


def mf_predict(mu, bu, bi, P, Q, users, items):
    return mu + bu[users] + bi[items] + np.einsum("ij,ij->i", P[users], Q[items])


def mf_objective(mu, bu, bi, P, Q, users, items, ratings, reg) -> float:
    err = ratings - mf_predict(mu, bu, bi, P, Q, users, items)
    penalty = bu[users] ** 2 + bi[items] ** 2 + (P[users] ** 2).sum(1) + (Q[items] ** 2).sum(1)
    return float(0.5 * (err ** 2).sum() + 0.5 * reg * penalty.sum())


def mf_gradient(mu, bu, bi, P, Q, users, items, ratings, reg):
    """Analytic gradient of :func:`mf_objective` w.r.t. (bu, bi, P, Q)."""
    err = ratings - mf_predict(mu, bu, bi, P, Q, users, items)
    g_bu = np.zeros_like(bu)
    g_bi = np.zeros_like(bi)
    g_P = np.zeros_like(P)
    g_Q = np.zeros_like(Q)
    np.add.at(g_bu, users, -err + reg * bu[users])
    np.add.at(g_bi, items, -err + reg * bi[items])
    np.add.at(g_P, users, -err[:, None] * Q[items] + reg * P[users])
    np.add.at(g_Q, items, -err[:, None] * P[users] + reg * Q[items])
    return g_bu, g_bi, g_P, g_Q


@numba.njit(cache=False)
def _sgd_epoch(order, users, items, ratings, mu, bu, bi, P, Q, lr, reg):
    n_factors = P.shape[1]
    for k in order:
        u = users[k]
        i = items[k]
        pred = mu + bu[u] + bi[i]
        for f in range(n_factors):
            pred += P[u, f] * Q[i, f]
        err = ratings[k] - pred
        bu[u] += lr * (err - reg * bu[u])
        bi[i] += lr * (err - reg * bi[i])
        for f in range(n_factors):
            pu = P[u, f]
            qi = Q[i, f]
            P[u, f] += lr * (err * qi - reg * pu)
            Q[i, f] += lr * (err * pu - reg * qi)


class BiasedMF(TrainedModel):
    algorithm = "biased_mf"

    def _fit(self):
        cfg = self.config
        coo = self.matrix.tocoo()
        users = coo.row.astype(np.int64)
        items = coo.col.astype(np.int64)
        ratings = coo.data.astype(np.float64)
        rng = np.random.default_rng(cfg.seed)
        n_users, n_items = self.matrix.shape
        self.mu = float(ratings.mean())
        self.bu = np.zeros(n_users)
        self.bi = np.zeros(n_items)
        self.P = rng.normal(0.0, cfg.init_std, (n_users, cfg.factors))
        self.Q = rng.normal(0.0, cfg.init_std, (n_items, cfg.factors))
        self.loss_history: list[float] = []
        for epoch in range(cfg.epochs):
            order = rng.permutation(len(ratings))
            _sgd_epoch(order, users, items, ratings, self.mu, self.bu, self.bi, self.P, self.Q,
                       cfg.learning_rate, cfg.regularization)
            with np.errstate(over="ignore", invalid="ignore"):
                loss = mf_objective(self.mu, self.bu, self.bi, self.P, self.Q, users, items, ratings,
                                    cfg.regularization)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"biased_mf diverged at epoch {epoch + 1} "
                    f"(learning_rate={cfg.learning_rate}, regularization={cfg.regularization}, "
                    f"factors={cfg.factors})"
                )
            self.loss_history.append(loss)
            log.debug("epoch %d loss %.6f", epoch + 1, loss)
        return self

    def train_rmse(self) -> float:
        coo = self.matrix.tocoo()
        pred = mf_predict(self.mu, self.bu, self.bi, self.P, self.Q, coo.row, coo.col)
        return float(np.sqrt(np.mean((coo.data - pred) ** 2)))

    def predict(self, user, item):
        u = self.user_index.get(user)
        i = self.item_index.get(item)
        score = self.mu
        if u is not None:
            score += self.bu[u]
        if i is not None:
            score += self.bi[i]
        if u is not None and i is not None:
            score += float(self.P[u] @ self.Q[i])
        return float(score)

    def score_items(self, user):
        u = self.user_index.get(user)
        if u is None:
            return self.mu + self.bi
        return self.mu + self.bu[u] + self.bi + self.Q @ self.P[u]

    def _state(self):
        return {"mu": np.array(self.mu), "bu": self.bu, "bi": self.bi, "P": self.P, "Q": self.Q,
                "loss_history": np.asarray(self.loss_history)}

    def _set_state(self, arrays):
        self.mu = float(arrays["mu"])
        self.bu, self.bi, self.P, self.Q = arrays["bu"], arrays["bi"], arrays["P"], arrays["Q"]
        self.loss_history = arrays["loss_history"].tolist()


def fit_biased_mf(train: RatingDataset, config: ModelConfig | None = None) -> BiasedMF:
    if len(train) == 0:
        raise ValueError("empty training data")
    config = replace(config or ModelConfig(), algorithm="biased_mf")
    return BiasedMF(config, train)._fit()
