"""The four recommenders under audit and top-N list generation."""

from .base import (
    ALGORITHMS,
    ModelConfig,
    RecommendationTable,
    TrainedModel,
    generate_recommendations,
    load_model,
    save_model,
)
from .knn import ItemKNN, UserKNN, fit_item_knn, fit_user_knn, similarity_matrix
from .mf import BiasedMF, fit_biased_mf
from .popular import MostPopular, fit_most_popular

MODEL_CLASSES = {
    "biased_mf": BiasedMF,
    "user_knn": UserKNN,
    "item_knn": ItemKNN,
    "most_popular": MostPopular,
}

_FITTERS = {
    "biased_mf": fit_biased_mf,
    "user_knn": fit_user_knn,
    "item_knn": fit_item_knn,
    "most_popular": fit_most_popular,
}


def fit(train, config: ModelConfig) -> TrainedModel:
    return _FITTERS[config.algorithm](train, config)


def predict(model: TrainedModel, user: str, item: str) -> float:
    return model.predict(user, item)


__all__ = [
    "ALGORITHMS", "BiasedMF", "ItemKNN", "MODEL_CLASSES", "ModelConfig", "MostPopular",
    "RecommendationTable", "TrainedModel", "UserKNN", "fit", "fit_biased_mf", "fit_item_knn",
    "fit_most_popular", "fit_user_knn", "generate_recommendations", "load_model", "predict",
    "save_model", "similarity_matrix",
]
