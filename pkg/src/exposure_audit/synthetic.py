"""Zipf-shaped synthetic rating data with suppliers.

Items get Zipf popularity weights.  Each user has a popularity affinity
``a`` in [0, 1] and samples their profile without replacement from the
mixture ``a * zipf + (1 - a) * uniform``.  Rating values come from a small
latent-factor model so that personalised recommenders have signal to learn.
Suppliers own Zipf-distributed catalogue sizes.  ``supplier_coupling``
controls how strongly large suppliers own the popular items (0 gives random
ownership), so supplier rating mass is long-tailed as well.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from .ingest import RatingDataset, SupplierMap


@dataclass(frozen=True)
class SyntheticSpec:
    n_users: int = 1000
    n_items: int = 500
    n_suppliers: int = 150
    zipf_exponent: float = 1.0
    supplier_exponent: float = 0.8
    supplier_coupling: float = 0.5
    # per-user affinity ~ Beta(affinity_a, affinity_b)
    affinity_a: float = 1.0
    affinity_b: float = 1.0
    min_profile: int = 20
    mean_extra_profile: float = 20.0
    latent_factors: int = 5
    latent_scale: float = 0.5
    rating_noise: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("n_users", "n_items", "n_suppliers", "min_profile", "latent_factors"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.zipf_exponent <= 0 or self.supplier_exponent <= 0:
            raise ValueError("exponents must be > 0")
        if self.affinity_a <= 0 or self.affinity_b <= 0:
            raise ValueError("affinity Beta parameters must be > 0")
        if not 0 <= self.supplier_coupling <= 1:
            raise ValueError("supplier_coupling must be in [0, 1]")
        if self.min_profile > self.n_items:
            raise ValueError("min_profile cannot exceed n_items")

    def to_dict(self) -> dict:
        return asdict(self)


def zipf_weights(n: int, exponent: float) -> np.ndarray:
    w = np.arange(1, n + 1, dtype=np.float64) ** -exponent
    return w / w.sum()


def _ids(prefix: str, n: int) -> list[str]:
    width = len(str(n))
    return [f"{prefix}{k:0{width}d}" for k in range(1, n + 1)]


def sample_profile(rng, popularity: np.ndarray, affinity: float, size: int) -> np.ndarray:
    p = affinity * popularity + (1.0 - affinity) / len(popularity)
    return rng.choice(len(popularity), size=size, replace=False, p=p / p.sum())


def generate_synthetic(spec: SyntheticSpec = SyntheticSpec(), affinities=None):
    """Return ``(RatingDataset, SupplierMap)``.

    ``affinities`` overrides the per-user Beta draws (one value per user).
    """
    rng = np.random.default_rng(spec.seed)
    popularity = zipf_weights(spec.n_items, spec.zipf_exponent)
    # item ids are shuffled against popularity rank so id tie-breaks carry no signal
    item_ids = np.array(_ids("i", spec.n_items), dtype=object)[rng.permutation(spec.n_items)]
    user_ids = _ids("u", spec.n_users)

    if affinities is None:
        affinities = rng.beta(spec.affinity_a, spec.affinity_b, size=spec.n_users)
    affinities = np.asarray(affinities, dtype=np.float64)
    if affinities.shape != (spec.n_users,) or (affinities < 0).any() or (affinities > 1).any():
        raise ValueError("affinities must be n_users values in [0, 1]")

    extra = rng.geometric(1.0 / (1.0 + spec.mean_extra_profile), size=spec.n_users) - 1
    sizes = np.minimum(spec.min_profile + extra, spec.n_items)

    d = spec.latent_factors
    user_f = rng.normal(0.0, spec.latent_scale, (spec.n_users, d))
    item_f = rng.normal(0.0, spec.latent_scale, (spec.n_items, d))
    user_b = rng.normal(0.0, 0.3, spec.n_users)
    item_b = rng.normal(0.0, 0.3, spec.n_items)

    users, items, values = [], [], []
    for u in range(spec.n_users):
        chosen = sample_profile(rng, popularity, affinities[u], int(sizes[u]))
        raw = 3.5 + user_b[u] + item_b[chosen] + item_f[chosen] @ user_f[u]
        raw += rng.normal(0.0, spec.rating_noise, len(chosen))
        users.extend([user_ids[u]] * len(chosen))
        items.extend(item_ids[chosen])
        values.extend(np.clip(np.rint(raw), 1, 5))
    dataset = RatingDataset(pd.DataFrame({"user": users, "item": items, "rating": values}))

    supplier_ids = np.array(_ids("s", spec.n_suppliers), dtype=object)[rng.permutation(spec.n_suppliers)]
    sizes_s = np.sort(rng.multinomial(spec.n_items, zipf_weights(spec.n_suppliers, spec.supplier_exponent)))[::-1]
    # items are dealt to suppliers (largest first) in an order that mixes
    # popularity rank with noise according to the coupling strength
    key = spec.supplier_coupling * np.arange(spec.n_items) / spec.n_items
    key = key + (1.0 - spec.supplier_coupling) * rng.random(spec.n_items)
    owner = np.repeat(np.arange(spec.n_suppliers), sizes_s)[np.argsort(np.argsort(key, kind="stable"))]
    mapping = {item_ids[k]: supplier_ids[owner[k]] for k in range(spec.n_items)}
    smap = SupplierMap({i: mapping[i] for i in dataset.item_ids})
    return dataset, smap
