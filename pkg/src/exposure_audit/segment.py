"""Popularity segmentation of items, users and suppliers.

Everything here is computed from training data only.  Sorting is always by
descending mass with ascending id as tie-break, so results are fully
deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .ingest import RatingDataset, SupplierMap

log = logging.getLogger(__name__)

CATEGORIES = ("H", "M", "T")
_EPS = 1e-12


@dataclass(frozen=True)
class ItemPopularity:
    counts: dict[str, int]
    n_users: int

    @property
    def user_fraction(self) -> dict[str, float]:
        return {i: c / self.n_users for i, c in self.counts.items()}

    def ranked(self) -> list[tuple[str, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))


@dataclass(frozen=True)
class ItemSegmentation:
    categories: dict[str, str]
    shares: dict[str, float]

    def __getitem__(self, item_id: str) -> str:
        return self.categories[item_id]

    def members(self, category: str) -> list[str]:
        return sorted(i for i, c in self.categories.items() if c == category)


@dataclass(frozen=True)
class UserGroups:
    groups: tuple[tuple[str, ...], ...]
    propensity: dict[str, float]

    @property
    def labels(self) -> list[str]:
        return [f"G{k + 1}" for k in range(len(self.groups))]

    def group_of(self) -> dict[str, str]:
        return {u: label for label, members in zip(self.labels, self.groups) for u in members}


@dataclass(frozen=True)
class SupplierGroups:
    groups: tuple[tuple[str, ...], ...]
    mass_share: dict[str, float]

    @property
    def labels(self) -> list[str]:
        return [f"S{k + 1}" for k in range(len(self.groups))]

    def group_of(self) -> dict[str, str]:
        return {s: label for label, members in zip(self.labels, self.groups) for s in members}


def pareto_cut(masses: list[tuple[str, float]], head_share: float, tail_share: float):
    """Split ``(key, mass)`` pairs into head / middle / tail.

    Keys are ordered by descending mass then ascending key.  Head is the
    shortest prefix whose mass share reaches ``head_share``; tail is the
    shortest suffix of what remains reaching ``tail_share`` (or all of the
    remainder if it cannot).  Returns three key lists.
    """
    if head_share + tail_share >= 1:
        raise ValueError("head_share + tail_share must be < 1")
    ordered = sorted(masses, key=lambda kv: (-kv[1], kv[0]))
    total = float(sum(m for _, m in ordered))
    if not ordered or total <= 0:
        return [], [], []
    n = len(ordered)
    cum = 0.0
    h_end = n
    for k, (_, m) in enumerate(ordered):
        cum += m
        if cum / total >= head_share - _EPS:
            h_end = k + 1
            break
    cum = 0.0
    t_start = h_end
    for k in range(n - 1, h_end - 1, -1):
        cum += ordered[k][1]
        if cum / total >= tail_share - _EPS:
            t_start = k
            break
    keys = [k for k, _ in ordered]
    return keys[:h_end], keys[h_end:t_start], keys[t_start:]


def compute_item_popularity(train: RatingDataset) -> ItemPopularity:
    if len(train) == 0:
        raise ValueError("empty training data")
    return ItemPopularity(dict(train.item_counts), train.n_users)


def segment_items_pareto(popularity: ItemPopularity, head_share: float = 0.2,
                         tail_share: float = 0.2) -> ItemSegmentation:
    if not popularity.counts:
        raise ValueError("empty popularity table")
    head, mid, tail = pareto_cut(list(popularity.counts.items()), head_share, tail_share)
    categories = {i: "H" for i in head}
    categories.update({i: "M" for i in mid})
    categories.update({i: "T" for i in tail})
    total = sum(popularity.counts.values())
    shares = {c: 0.0 for c in CATEGORIES}
    for item, cat in categories.items():
        shares[cat] += popularity.counts[item]
    shares = {c: v / total for c, v in shares.items()}
    return ItemSegmentation(categories, shares)


def user_propensity(train: RatingDataset, segmentation: ItemSegmentation,
                    weighting: str = "count") -> dict[str, float]:
    """Share of each user's profile that falls in the head category.

    ``weighting="count"`` counts distinct items; ``"rating"`` weights each item
    by its rating, i.e. the head entry of the profile category distribution.
    """
    if weighting not in ("count", "rating"):
        raise ValueError(f"unknown weighting {weighting!r}")
    is_head = np.array([segmentation[i] == "H" for i in train.item_ids])
    w = np.ones(len(train)) if weighting == "count" else np.asarray(train.values)
    head = np.bincount(train.user_codes, weights=w * is_head[train.item_codes], minlength=train.n_users)
    tot = np.bincount(train.user_codes, weights=w, minlength=train.n_users)
    return {u: float(h / t) for u, h, t in zip(train.user_ids, head, tot)}


def group_users_by_propensity(train: RatingDataset, segmentation: ItemSegmentation,
                              n_groups: int = 3, weighting: str = "count") -> UserGroups:
    if n_groups < 1:
        raise ValueError("n_groups must be >= 1")
    if n_groups > train.n_users:
        raise ValueError(f"n_groups={n_groups} exceeds number of users {train.n_users}")
    prop = user_propensity(train, segmentation, weighting)
    ranked = sorted(prop, key=lambda u: (-prop[u], u))
    # array_split hands the remainder to the earliest bins
    bins = np.array_split(np.arange(len(ranked)), n_groups)
    groups = tuple(tuple(ranked[k] for k in b) for b in bins)
    return UserGroups(groups, prop)


def supplier_masses(train: RatingDataset, supplier_map: SupplierMap) -> dict[str, int]:
    masses: dict[str, int] = {}
    for item, count in train.item_counts.items():
        s = supplier_map(item)
        masses[s] = masses.get(s, 0) + count
    return masses


def group_suppliers_pareto(train: RatingDataset, supplier_map: SupplierMap,
                           shares: tuple[float, float, float] = (0.2, 0.6, 0.2)) -> SupplierGroups:
    masses = supplier_masses(train, supplier_map)
    if len(masses) < 3:
        log.warning("only %d suppliers; supplier groups will be degenerate", len(masses))
    s1, s2, s3 = pareto_cut(list(masses.items()), shares[0], shares[2])
    total = sum(masses.values())
    return SupplierGroups((tuple(s1), tuple(s2), tuple(s3)), {s: m / total for s, m in masses.items()})


def longtail_series(popularity: ItemPopularity) -> list[tuple[int, str, float]]:
    """(rank, item, user_fraction) from most to least popular."""
    return [(r + 1, i, c / popularity.n_users) for r, (i, c) in enumerate(popularity.ranked())]
