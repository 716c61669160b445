"""Loading, conversion, filtering and splitting of rating data.

Ratings files are delimited UTF-8 text with columns ``user, item, value``
and an optional trailing timestamp that is ignored.  MovieLens files use
``::`` as delimiter; generic CSV uses ``,``.  When no delimiter is given it
is sniffed from the first line.

User and item ids are opaque strings.  Internally they are re-indexed to
dense integers in sorted id order, so the integer index of an id is a pure
function of the id set and never needs to be stored separately.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np
import pandas as pd
import scipy.sparse as sp

from .errors import EmptyDatasetError, ParseError, SupplierConflictError

log = logging.getLogger(__name__)

DEFAULT_SCALE = (1.0, 5.0)
FORMATS = ("explicit_csv", "implicit_csv")


class Interaction(NamedTuple):
    user_id: str
    item_id: str
    count: int


class Rating(NamedTuple):
    user_id: str
    item_id: str
    value: float


class RatingDataset:
    """Immutable user x item explicit ratings.

    ``frame`` must hold columns ``user``, ``item``, ``rating`` with unique
    (user, item) pairs.  Rows are re-sorted by (user, item) on construction.
    """

    def __init__(self, frame: pd.DataFrame, scale: tuple[float, float] = DEFAULT_SCALE):
        frame = frame.loc[:, ["user", "item", "rating"]].copy()
        frame["user"] = frame["user"].astype(str)
        frame["item"] = frame["item"].astype(str)
        frame["rating"] = frame["rating"].astype(np.float64)
        if frame.duplicated(["user", "item"]).any():
            raise ValueError("duplicate (user, item) pairs in rating frame")
        frame = frame.sort_values(["user", "item"], kind="mergesort").reset_index(drop=True)
        self._frame = frame
        self.scale = (float(scale[0]), float(scale[1]))
        u_codes, u_ids = pd.factorize(frame["user"], sort=True)
        i_codes, i_ids = pd.factorize(frame["item"], sort=True)
        self.user_ids = np.asarray(u_ids, dtype=object)
        self.item_ids = np.asarray(i_ids, dtype=object)
        self.user_codes = u_codes.astype(np.int64)
        self.item_codes = i_codes.astype(np.int64)
        self.values = frame["rating"].to_numpy()
        for arr in (self.user_codes, self.item_codes, self.values):
            arr.setflags(write=False)

    @classmethod
    def from_records(cls, records, scale=DEFAULT_SCALE) -> "RatingDataset":
        frame = pd.DataFrame(list(records), columns=["user", "item", "rating"])
        return cls(frame, scale=scale)

    @property
    def frame(self) -> pd.DataFrame:
        return self._frame.copy()

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[Rating]:
        for u, i, r in self._frame.itertuples(index=False, name=None):
            yield Rating(u, i, float(r))

    def __repr__(self) -> str:
        return f"RatingDataset(n_users={self.n_users}, n_items={self.n_items}, n_ratings={len(self)})"

    @cached_property
    def user_index(self) -> dict[str, int]:
        return {u: k for k, u in enumerate(self.user_ids)}

    @cached_property
    def item_index(self) -> dict[str, int]:
        return {i: k for k, i in enumerate(self.item_ids)}

    @cached_property
    def profiles(self) -> dict[str, dict[str, float]]:
        """user id -> {item id: rating}, the profile rho_u."""
        out: dict[str, dict[str, float]] = {}
        for u, i, r in self._frame.itertuples(index=False, name=None):
            out.setdefault(u, {})[i] = float(r)
        return out

    @cached_property
    def item_counts(self) -> dict[str, int]:
        counts = np.bincount(self.item_codes, minlength=self.n_items)
        return {i: int(c) for i, c in zip(self.item_ids, counts)}

    def profile_sizes(self) -> np.ndarray:
        return np.bincount(self.user_codes, minlength=self.n_users)

    def to_csr(self) -> sp.csr_matrix:
        """Dense-indexed users x items rating matrix."""
        return sp.csr_matrix(
            (self.values, (self.user_codes, self.item_codes)),
            shape=(self.n_users, self.n_items),
        )

    def subset(self, mask: np.ndarray) -> "RatingDataset":
        return RatingDataset(self._frame[np.asarray(mask, dtype=bool)], scale=self.scale)

    def stats(self) -> dict:
        return {"users": self.n_users, "items": self.n_items, "ratings": len(self)}


@dataclass(frozen=True)
class SupplierMap:
    """Total item -> supplier mapping over a dataset catalog."""

    mapping: dict[str, str]
    dropped_items: int = 0
    dropped_ratings: int = 0

    def __call__(self, item_id: str) -> str:
        return self.mapping[item_id]

    def __len__(self) -> int:
        return len(self.mapping)

    def __contains__(self, item_id) -> bool:
        return item_id in self.mapping

    @property
    def suppliers(self) -> list[str]:
        return sorted(set(self.mapping.values()))

    def restrict(self, item_ids) -> "SupplierMap":
        return SupplierMap({i: self.mapping[i] for i in item_ids})


@dataclass(frozen=True)
class SplitPair:
    train: RatingDataset
    test: RatingDataset
    seed: int
    warnings: tuple[str, ...] = field(default_factory=tuple)


def _sniff_delimiter(line: str) -> str:
    if "::" in line:
        return "::"
    if "\t" in line:
        return "\t"
    return ","


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _read_rows(path, delimiter):
    """Yield (line_no, fields) for non-blank lines, skipping a header row."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        first = True
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if delimiter is None:
                delimiter = _sniff_delimiter(line)
            fields = [f.strip() for f in line.split(delimiter)]
            if first:
                first = False
                looks_like_header = (len(fields) >= 3 and not _is_number(fields[2])) or (
                    fields[0].lower() in {"user", "user_id", "userid", "item", "item_id", "itemid"}
                )
                if looks_like_header:
                    continue
            yield line_no, fields


def load_ratings(path, format: str = "explicit_csv", delimiter: str | None = None,
                 scale: tuple[float, float] = DEFAULT_SCALE):
    """Parse a ratings file.

    ``explicit_csv`` returns a :class:`RatingDataset`; duplicate (user, item)
    rows keep the last value.  ``implicit_csv`` returns a DataFrame with
    columns ``user, item, count`` where each row is one or more interaction
    events (value column optional, default 1) and duplicates are summed.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    explicit = format == "explicit_csv"
    lo, hi = scale
    users: list[str] = []
    items: list[str] = []
    values: list[float] = []
    for line_no, fields in _read_rows(path, delimiter):
        if len(fields) < (3 if explicit else 2) or len(fields) > 4:
            raise ParseError(path, line_no, f"expected user,item,value[,timestamp], got {len(fields)} fields")
        user, item = fields[0], fields[1]
        if not user or not item:
            raise ParseError(path, line_no, "empty user or item id")
        raw = fields[2] if len(fields) >= 3 else "1"
        try:
            value = float(raw)
        except ValueError:
            raise ParseError(path, line_no, f"non-numeric value {raw!r}") from None
        if not math.isfinite(value):
            raise ParseError(path, line_no, f"non-finite value {raw!r}")
        if explicit:
            if not lo <= value <= hi:
                raise ParseError(path, line_no, f"rating {value} outside scale [{lo}, {hi}]")
        elif value < 1 or value != int(value):
            raise ParseError(path, line_no, f"interaction count must be a positive integer, got {raw!r}")
        users.append(user)
        items.append(item)
        values.append(value)
    if not users:
        raise EmptyDatasetError(f"{path}: no rating rows")

    if explicit:
        frame = pd.DataFrame({"user": users, "item": items, "rating": values})
        frame = frame.drop_duplicates(["user", "item"], keep="last")
        return RatingDataset(frame, scale=scale)
    frame = pd.DataFrame({"user": users, "item": items, "count": np.asarray(values, dtype=np.int64)})
    return (
        frame.groupby(["user", "item"], sort=True, as_index=False)["count"].sum()
        .reset_index(drop=True)
    )


def implicit_to_explicit(interactions, scale: tuple[float, float] = DEFAULT_SCALE) -> RatingDataset:
    """Per-user min-max scaling of interaction counts onto ``scale``.

    A user whose counts are all equal gets the scale midpoint for every item.
    Accepts a ``user, item, count`` DataFrame or an iterable of
    :class:`Interaction`.
    """
    if not isinstance(interactions, pd.DataFrame):
        interactions = pd.DataFrame(list(interactions), columns=["user", "item", "count"])
    if len(interactions) == 0:
        raise EmptyDatasetError("no interactions to convert")
    if (interactions["count"] < 1).any():
        raise ValueError("interaction counts must be >= 1")
    lo, hi = scale
    counts = interactions["count"].astype(np.float64)
    grouped = counts.groupby(interactions["user"])
    cmin = grouped.transform("min")
    cmax = grouped.transform("max")
    span = cmax - cmin
    scaled = lo + (hi - lo) * (counts - cmin) / span.where(span > 0, 1.0)
    rating = scaled.where(span > 0, (lo + hi) / 2.0)
    frame = pd.DataFrame({"user": interactions["user"], "item": interactions["item"], "rating": rating})
    return RatingDataset(frame, scale=scale)


def filter_min_profile(dataset: RatingDataset, min_ratings: int = 20) -> RatingDataset:
    """Drop users with fewer than ``min_ratings`` ratings (single pass).

    Items left without ratings disappear from the catalog automatically.
    """
    if min_ratings < 1:
        raise ValueError("min_ratings must be >= 1")
    sizes = dataset.profile_sizes()
    keep = sizes[dataset.user_codes] >= min_ratings
    if not keep.any():
        raise EmptyDatasetError(f"no user has >= {min_ratings} ratings")
    if keep.all():
        return dataset
    return dataset.subset(keep)


def split_train_test(dataset: RatingDataset, test_fraction: float = 0.2, seed: int = 0) -> SplitPair:
    """Per-user random hold-out.

    Each user sends ``round(test_fraction * |profile|)`` ratings to test
    (half rounds up), clamped so at least one stays in train.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    keys = rng.random(len(dataset))
    order = np.lexsort((keys, dataset.user_codes))
    sizes = dataset.profile_sizes()
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    rank = np.empty(len(dataset), dtype=np.int64)
    ucodes_sorted = dataset.user_codes[order]
    rank[order] = np.arange(len(dataset)) - starts[ucodes_sorted]
    n_test = np.floor(test_fraction * sizes + 0.5).astype(np.int64)
    n_test = np.minimum(n_test, sizes - 1)
    in_test = rank < n_test[dataset.user_codes]

    warnings = []
    for u in dataset.user_ids[sizes == 1]:
        msg = f"user {u} has a single rating; kept in train"
        log.warning(msg)
        warnings.append(msg)
    return SplitPair(dataset.subset(~in_test), _maybe_empty(dataset, in_test), seed, tuple(warnings))


def _maybe_empty(dataset, mask):
    if mask.any():
        return dataset.subset(mask)
    return RatingDataset(dataset.frame.iloc[:0], scale=dataset.scale)


def read_supplier_map(path, delimiter: str | None = None) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for line_no, fields in _read_rows(path, delimiter):
        if len(fields) != 2 or not fields[0] or not fields[1]:
            raise ParseError(path, line_no, "expected item,supplier")
        item, supplier = fields
        prev = mapping.get(item)
        if prev is not None and prev != supplier:
            raise SupplierConflictError(f"item {item} mapped to both {prev!r} and {supplier!r} (line {line_no})")
        mapping[item] = supplier
    return mapping


def load_supplier_map(path, dataset: RatingDataset, delimiter: str | None = None):
    """Join a supplier map onto ``dataset``.

    Returns ``(SupplierMap, dataset)`` where items without a supplier have
    been dropped together with their ratings; the map records how many.
    """
    mapping = read_supplier_map(path, delimiter)
    return attach_suppliers(dataset, mapping)


def attach_suppliers(dataset: RatingDataset, mapping: dict[str, str]):
    mapped = np.array([i in mapping for i in dataset.item_ids], dtype=bool)
    keep = mapped[dataset.item_codes]
    if not keep.any():
        raise EmptyDatasetError("no rated item has a supplier")
    dropped_items = int((~mapped).sum())
    dropped_ratings = int((~keep).sum())
    if dropped_items:
        log.info("supplier join dropped %d items / %d ratings", dropped_items, dropped_ratings)
        dataset = dataset.subset(keep)
    smap = SupplierMap({i: mapping[i] for i in dataset.item_ids}, dropped_items, dropped_ratings)
    return smap, dataset


def write_ratings(dataset: RatingDataset, path) -> None:
    dataset.frame.to_csv(path, index=False)


def write_supplier_map(smap: SupplierMap, path) -> None:
    frame = pd.DataFrame(sorted(smap.mapping.items()), columns=["item", "supplier"])
    frame.to_csv(path, index=False)
