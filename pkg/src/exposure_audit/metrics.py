"""Exposure-bias and accuracy metrics over recommendation tables.

All measures are rank-agnostic: they only look at which items appear in a
list, never at their position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import spearmanr

from .ingest import RatingDataset, SupplierMap
from .recsys.base import RecommendationTable
from .segment import CATEGORIES, ItemSegmentation, SupplierGroups, UserGroups

SIDES = ("profile", "recommendation")


def profile_category_distribution(user: str, train: RatingDataset,
                                  segmentation: ItemSegmentation) -> dict[str, float]:
    """Rating-weighted share of the user's training profile in each category."""
    return _profile_distribution(train.profiles.get(user, {}), segmentation)


def _profile_distribution(profile: Mapping[str, float], segmentation: ItemSegmentation) -> dict[str, float]:
    if not profile:
        raise ValueError("empty profile has no category distribution")
    mass = dict.fromkeys(CATEGORIES, 0.0)
    for item, rating in profile.items():
        mass[segmentation[item]] += rating
    total = sum(mass.values())
    return {c: m / total for c, m in mass.items()}


def list_category_distribution(items: Sequence[str], segmentation: ItemSegmentation) -> dict[str, float]:
    """Share of list slots in each category."""
    if len(items) == 0:
        raise ValueError("empty recommendation list has no category distribution")
    counts = dict.fromkeys(CATEGORIES, 0)
    for item in items:
        counts[segmentation[item]] += 1
    return {c: k / len(items) for c, k in counts.items()}


def _as_vector(dist, keys=None):
    if isinstance(dist, Mapping):
        keys = sorted(dist) if keys is None else keys
        return keys, np.array([dist[k] for k in keys], dtype=np.float64)
    return None, np.asarray(dist, dtype=np.float64)


def jensen_shannon(P, Q) -> float:
    """Base-2 Jensen-Shannon divergence, in [0, 1].

    Accepts two mappings over the same keys or two equal-length sequences.
    Zero entries contribute nothing, so the value is finite whenever either
    side has zeros.
    """
    if isinstance(P, Mapping) != isinstance(Q, Mapping):
        raise ValueError("P and Q must both be mappings or both be sequences")
    if isinstance(P, Mapping):
        if set(P) != set(Q):
            raise ValueError(f"support mismatch: {sorted(P)} vs {sorted(Q)}")
        keys, p = _as_vector(P)
        _, q = _as_vector(Q, keys)
    else:
        p, q = np.asarray(P, dtype=np.float64), np.asarray(Q, dtype=np.float64)
        if p.shape != q.shape:
            raise ValueError(f"support mismatch: {p.shape} vs {q.shape}")
    m = 0.5 * (p + q)
    return 0.5 * _kl2(p, m) + 0.5 * _kl2(q, m)


def _kl2(p, m):
    nz = p > 0
    return float(np.sum(p[nz] * np.log2(p[nz] / m[nz])))


@dataclass(frozen=True)
class UPDResult:
    upd: float
    group_means: dict[str, float]
    user_divergence: dict[str, float] = field(repr=False, default_factory=dict)


def compute_upd(recommendations: RecommendationTable, train: RatingDataset,
                segmentation: ItemSegmentation, user_groups: UserGroups) -> UPDResult:
    """Mean over user groups of the mean per-user profile/list divergence."""
    group_means: dict[str, float] = {}
    per_user: dict[str, float] = {}
    for label, members in zip(user_groups.labels, user_groups.groups):
        if not members:
            raise ValueError(f"user group {label} is empty")
        total = 0.0
        for user in members:
            if user not in recommendations.lists:
                raise ValueError(f"user {user} in {label} has no recommendation list")
            P = profile_category_distribution(user, train, segmentation)
            Q = list_category_distribution(recommendations.items(user), segmentation)
            per_user[user] = jensen_shannon(P, Q)
            total += per_user[user]
        group_means[label] = total / len(members)
    upd = sum(group_means.values()) / len(group_means)
    return UPDResult(upd, group_means, per_user)


@dataclass(frozen=True)
class SupplierExposure:
    q: dict[str, float]
    p: dict[str, float]


def supplier_exposure(recommendations: RecommendationTable, train: RatingDataset,
                      supplier_groups: SupplierGroups, supplier_map: SupplierMap) -> SupplierExposure:
    """Recommendation-slot share ``q`` and rating share ``p`` per supplier group."""
    group_of = supplier_groups.group_of()
    labels = supplier_groups.labels

    def group(item):
        if item not in supplier_map:
            raise ValueError(f"item {item} has no supplier")
        return group_of[supplier_map(item)]

    rec_counts = dict.fromkeys(labels, 0)
    for user in recommendations.lists:
        for item in recommendations.items(user):
            rec_counts[group(item)] += 1
    slots = recommendations.n * len(recommendations.lists)
    rate_counts = dict.fromkeys(labels, 0)
    for item, count in train.item_counts.items():
        rate_counts[group(item)] += count
    n_ratings = len(train)
    return SupplierExposure(
        {s: rec_counts[s] / slots for s in labels},
        {s: rate_counts[s] / n_ratings for s in labels},
    )


def compute_spd(exposure: SupplierExposure) -> float:
    """Mean absolute gap between recommendation and rating share per supplier group."""
    return sum(abs(exposure.q[s] - exposure.p[s]) for s in exposure.q) / len(exposure.q)


def precision_at_n(recommendations: RecommendationTable, test: RatingDataset,
                   n: int | None = None, threshold: float | None = None) -> float:
    """Mean fraction of the ``n`` list slots that hit a held-out item.

    Users with no (relevant) test rating are left out of the mean.  With
    ``threshold`` only test ratings >= threshold count as relevant.
    """
    n = recommendations.n if n is None else n
    relevant: dict[str, set[str]] = {}
    for user, profile in test.profiles.items():
        hits = {i for i, r in profile.items() if threshold is None or r >= threshold}
        if hits:
            relevant[user] = hits
    evaluated = [u for u in recommendations.lists if u in relevant]
    if not evaluated:
        raise ValueError("no user has both a recommendation list and relevant test items")
    total = sum(len(set(recommendations.items(u)[:n]) & relevant[u]) / n for u in evaluated)
    return total / len(evaluated)


def catalog_coverage(recommendations: RecommendationTable, catalog) -> float:
    catalog = set(catalog)
    if not catalog:
        raise ValueError("empty catalog")
    seen = {i for u in recommendations.lists for i in recommendations.items(u)}
    return len(seen & catalog) / len(catalog)


def popularity_scatter(recommendations: RecommendationTable, train: RatingDataset):
    """Per-item (item, pop_data, pop_rec) and their Pearson correlation.

    ``pop_data`` is the fraction of training users who rated the item and
    ``pop_rec`` the fraction of recommended users who received it.  The
    correlation is ``None`` when either side is constant.
    """
    if not recommendations.lists:
        raise ValueError("empty recommendation table")
    received = dict.fromkeys(train.item_ids, 0)
    for user in recommendations.lists:
        for item in recommendations.items(user):
            received[item] = received.get(item, 0) + 1
    n_rec_users = len(recommendations.lists)
    counts = train.item_counts
    rows = [(i, counts.get(i, 0) / train.n_users, received[i] / n_rec_users) for i in sorted(received)]
    x = np.array([r[1] for r in rows])
    y = np.array([r[2] for r in rows])
    corr = None
    if len(rows) > 1 and x.std() > 0 and y.std() > 0:
        corr = float(np.corrcoef(x, y)[0, 1])
    return rows, corr


def group_popularity_report(recommendations: RecommendationTable, train: RatingDataset,
                            user_groups: UserGroups, segmentation: ItemSegmentation):
    """Rows (group, category, side, proportion): mean category shares per user group."""
    rows = []
    for label, members in zip(user_groups.labels, user_groups.groups):
        sums = {side: dict.fromkeys(CATEGORIES, 0.0) for side in SIDES}
        n_rec = 0
        for user in members:
            for c, v in profile_category_distribution(user, train, segmentation).items():
                sums["profile"][c] += v
            if recommendations.lists.get(user):
                n_rec += 1
                for c, v in list_category_distribution(recommendations.items(user), segmentation).items():
                    sums["recommendation"][c] += v
        denom = {"profile": len(members), "recommendation": n_rec}
        for side in SIDES:
            for c in CATEGORIES:
                value = sums[side][c] / denom[side] if denom[side] else 0.0
                rows.append((label, c, side, value))
    return rows


def supplier_rank_report(recommendations: RecommendationTable, train: RatingDataset,
                         supplier_map: SupplierMap):
    """Rows (supplier, rank, data_share, rec_share) by descending data popularity."""
    data = dict.fromkeys(supplier_map.suppliers, 0)
    for item, count in train.item_counts.items():
        data[supplier_map(item)] += count
    rec = dict.fromkeys(data, 0)
    slots = 0
    for user in recommendations.lists:
        for item in recommendations.items(user):
            rec[supplier_map(item)] += 1
            slots += 1
    n_ratings = sum(data.values())
    ranked = sorted(data, key=lambda s: (-data[s], s))
    return [(s, r + 1, data[s] / n_ratings, rec[s] / slots if slots else 0.0) for r, s in enumerate(ranked)]


@dataclass
class MetricsReport:
    algorithm: str
    config: dict
    n: int
    n_users: int
    upd: float
    upd_group_means: dict[str, float]
    precision: float | None
    coverage: float
    spd: float | None = None
    supplier_q: dict[str, float] | None = None
    supplier_p: dict[str, float] | None = None
    popularity_correlation: float | None = None
    head_slot_share: float = 0.0
    short_lists: int = 0
    scatter: list = field(default_factory=list, repr=False)
    group_popularity: list = field(default_factory=list, repr=False)
    supplier_rank: list | None = field(default=None, repr=False)

    @property
    def supplier_fairness(self) -> float | None:
        return None if self.spd is None else 1.0 - self.spd

    def summary(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "config": self.config,
            "n": self.n,
            "n_users": self.n_users,
            "upd": self.upd,
            "upd_group_means": self.upd_group_means,
            "spd": self.spd,
            "supplier_fairness": self.supplier_fairness,
            "supplier_q": self.supplier_q,
            "supplier_p": self.supplier_p,
            "precision": self.precision,
            "coverage": self.coverage,
            "popularity_correlation": self.popularity_correlation,
            "head_slot_share": self.head_slot_share,
            "short_lists": self.short_lists,
        }


def head_slot_share(recommendations: RecommendationTable, segmentation: ItemSegmentation) -> float:
    slots = [segmentation[i] for u in recommendations.lists for i in recommendations.items(u)]
    return sum(c == "H" for c in slots) / len(slots) if slots else 0.0


def evaluate(recommendations: RecommendationTable, train: RatingDataset, test: RatingDataset | None,
             segmentation: ItemSegmentation, user_groups: UserGroups,
             supplier_groups: SupplierGroups | None = None, supplier_map: SupplierMap | None = None,
             algorithm: str = "", config: dict | None = None,
             relevance_threshold: float | None = None) -> MetricsReport:
    """Full metrics report for one recommendation table."""
    upd = compute_upd(recommendations, train, segmentation, user_groups)
    precision = None
    if test is not None and len(test):
        precision = precision_at_n(recommendations, test, threshold=relevance_threshold)
    scatter, corr = popularity_scatter(recommendations, train)
    report = MetricsReport(
        algorithm=algorithm,
        config=dict(config or {}),
        n=recommendations.n,
        n_users=len(recommendations.lists),
        upd=upd.upd,
        upd_group_means=upd.group_means,
        precision=precision,
        coverage=catalog_coverage(recommendations, train.item_ids),
        popularity_correlation=corr,
        head_slot_share=head_slot_share(recommendations, segmentation),
        short_lists=len(recommendations.short_users),
        scatter=scatter,
        group_popularity=group_popularity_report(recommendations, train, user_groups, segmentation),
    )
    if supplier_groups is not None and supplier_map is not None:
        exposure = supplier_exposure(recommendations, train, supplier_groups, supplier_map)
        report.spd = compute_spd(exposure)
        report.supplier_q = exposure.q
        report.supplier_p = exposure.p
        report.supplier_rank = supplier_rank_report(recommendations, train, supplier_map)
    return report


def spearman(x, y) -> float:
    """Spearman rank correlation with average ranks for ties."""
    value = spearmanr(x, y).statistic
    return float(value) if not math.isnan(value) else float("nan")
