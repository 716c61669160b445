"""Shared model plumbing: configuration, scoring interface, top-N lists, model files."""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import asdict, dataclass, fields

import numpy as np
import pandas as pd
import scipy.sparse as sp

from ..ingest import RatingDataset

ALGORITHMS = ("biased_mf", "user_knn", "item_knn", "most_popular")
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    algorithm: str = "biased_mf"
    # biased_mf
    factors: int = 50
    learning_rate: float = 0.005
    regularization: float = 0.02
    epochs: int = 30
    init_std: float = 0.1
    # user_knn / item_knn
    k: int = 50
    similarity: str = "cosine"
    shrinkage: float = 0.0
    scoring: str = "sum"
    # all
    n: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.factors < 1:
            raise ValueError("factors must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.regularization < 0 or self.shrinkage < 0 or self.epochs < 0:
            raise ValueError("regularization, shrinkage and epochs must be non-negative")
        if self.similarity not in ("cosine", "pearson"):
            raise ValueError(f"unknown similarity {self.similarity!r}")
        if self.scoring not in ("sum", "average"):
            raise ValueError(f"unknown scoring {self.scoring!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**data)


class TrainedModel:
    """Fitted recommender.  Subclasses set ``algorithm`` and implement scoring.

    Every model keeps the training matrix so that recommendation lists can
    exclude already-rated items without re-reading the training file.
    """

    algorithm: str = ""

    def __init__(self, config: ModelConfig, train: RatingDataset | None = None, *,
                 matrix=None, user_ids=None, item_ids=None, scale=None):
        self.config = config
        if train is not None:
            matrix, user_ids, item_ids, scale = train.to_csr(), train.user_ids, train.item_ids, train.scale
        self.matrix: sp.csr_matrix = sp.csr_matrix(matrix)
        self.user_ids = np.asarray(user_ids, dtype=object)
        self.item_ids = np.asarray(item_ids, dtype=object)
        self.scale = (float(scale[0]), float(scale[1]))
        self.user_index = {u: k for k, u in enumerate(self.user_ids)}
        self.item_index = {i: k for k, i in enumerate(self.item_ids)}

    def predict(self, user: str, item: str) -> float:
        raise NotImplementedError

    def score_items(self, user: str) -> np.ndarray:
        """Ranking scores for every catalog item (``item_ids`` order)."""
        raise NotImplementedError

    def rated(self, user: str) -> np.ndarray:
        u = self.user_index.get(user)
        if u is None:
            return np.empty(0, dtype=np.int64)
        return self.matrix.indices[self.matrix.indptr[u]:self.matrix.indptr[u + 1]]

    # serialization hooks
    def _state(self) -> dict[str, np.ndarray]:
        return {}

    def _set_state(self, arrays: dict[str, np.ndarray]) -> None:
        pass


@dataclass
class RecommendationTable:
    lists: dict[str, list[tuple[str, float]]]
    n: int
    short_users: tuple[str, ...] = ()

    def items(self, user: str) -> list[str]:
        return [i for i, _ in self.lists[user]]

    @property
    def users(self) -> list[str]:
        return list(self.lists)

    def to_frame(self) -> pd.DataFrame:
        rows = [(u, i, r + 1, s) for u, lst in self.lists.items() for r, (i, s) in enumerate(lst)]
        return pd.DataFrame(rows, columns=["user", "item", "rank", "score"])

    def write(self, path) -> None:
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def read(cls, path, n: int | None = None) -> "RecommendationTable":
        frame = pd.read_csv(path, dtype={"user": str, "item": str, "rank": np.int64, "score": np.float64},
                            keep_default_na=False, float_precision="round_trip")
        frame = frame.sort_values(["user", "rank"], kind="mergesort")
        lists: dict[str, list[tuple[str, float]]] = {}
        for u, i, s in zip(frame["user"], frame["item"], frame["score"]):
            lists.setdefault(u, []).append((i, float(s)))
        if n is None:
            n = max((len(v) for v in lists.values()), default=0)
        short = tuple(u for u, v in lists.items() if len(v) < n)
        return cls(lists, n, short)


def top_n(scores: np.ndarray, exclude: np.ndarray, n: int) -> np.ndarray:
    """Indices of the ``n`` best-scoring items not in ``exclude``.

    Ties go to the lower index, which is the lexically smaller item id.
    """
    mask = np.ones(len(scores), dtype=bool)
    mask[exclude] = False
    candidates = np.flatnonzero(mask)
    order = np.argsort(-scores[candidates], kind="stable")
    return candidates[order[:n]]


def generate_recommendations(model: TrainedModel, train: RatingDataset | None = None,
                             users=None, n: int | None = None) -> RecommendationTable:
    """Top-``n`` unrated items for each user.

    Exclusion uses ``train`` profiles when given, otherwise the profiles the
    model was fitted on.  Users default to every training user.
    """
    n = model.config.n if n is None else n
    if n < 1:
        raise ValueError("n must be >= 1")
    if users is None:
        users = train.user_ids if train is not None else model.user_ids
    profiles = train.profiles if train is not None else None
    lists: dict[str, list[tuple[str, float]]] = {}
    short = []
    for user in users:
        if profiles is not None:
            exclude = np.fromiter((model.item_index[i] for i in profiles.get(user, {}) if i in model.item_index),
                                  dtype=np.int64)
        else:
            exclude = model.rated(user)
        scores = model.score_items(user)
        idx = top_n(scores, exclude, n)
        lists[user] = [(model.item_ids[k], float(scores[k])) for k in idx]
        if len(idx) < n:
            short.append(user)
    return RecommendationTable(lists, n, tuple(short))


def save_model(model: TrainedModel, path) -> None:
    meta = {
        "format_version": MODEL_FORMAT_VERSION,
        "algorithm": model.algorithm,
        "config": model.config.to_dict(),
        "scale": list(model.scale),
    }
    m = model.matrix
    arrays = {
        "meta": np.array(json.dumps(meta, sort_keys=True)),
        "user_ids": np.array(model.user_ids.tolist(), dtype=str),
        "item_ids": np.array(model.item_ids.tolist(), dtype=str),
        "train_data": m.data, "train_indices": m.indices, "train_indptr": m.indptr,
    }
    for key, value in model._state().items():
        arrays[f"state_{key}"] = value
    # fixed zip timestamps keep model files byte-identical across runs
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for key, value in arrays.items():
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(value), allow_pickle=False)
            info = zipfile.ZipInfo(f"{key}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(info, buf.getvalue())


def load_model(path) -> TrainedModel:
    from . import MODEL_CLASSES

    with np.load(path, allow_pickle=False) as npz:
        meta = json.loads(str(npz["meta"]))
        if meta.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported model format {meta.get('format_version')}")
        user_ids = npz["user_ids"].tolist()
        item_ids = npz["item_ids"].tolist()
        matrix = sp.csr_matrix((npz["train_data"], npz["train_indices"], npz["train_indptr"]),
                               shape=(len(user_ids), len(item_ids)))
        state = {k[len("state_"):]: npz[k] for k in npz.files if k.startswith("state_")}
    config = ModelConfig.from_dict(meta["config"])
    cls = MODEL_CLASSES[meta["algorithm"]]
    model = cls(config, matrix=matrix, user_ids=user_ids, item_ids=item_ids, scale=meta["scale"])
    model._set_state(state)
    return model
