"""Non-personalised most-popular baseline."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..ingest import RatingDataset
from .base import ModelConfig, TrainedModel


class MostPopular(TrainedModel):
    algorithm = "most_popular"

    def _fit(self):
        self.counts = np.diff(self.matrix.tocsc().indptr).astype(np.float64)
        return self

    def ranking(self) -> list[str]:
        order = np.argsort(-self.counts, kind="stable")
        return [self.item_ids[k] for k in order]

    def predict(self, user, item):
        k = self.item_index.get(item)
        return 0.0 if k is None else float(self.counts[k])

    def score_items(self, user):
        return self.counts

    def _set_state(self, arrays):
        self._fit()


def fit_most_popular(train: RatingDataset, config: ModelConfig | None = None) -> MostPopular:
    if len(train) == 0:
        raise ValueError("empty training data")
    config = replace(config or ModelConfig(), algorithm="most_popular")
    return MostPopular(config, train)._fit()
