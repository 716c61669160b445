"""File-mediated experiment pipeline.

Each stage reads the files written by earlier stages and writes its own, so
any stage can be rerun on its own (or fed with external recommendations)
and produce the same bytes.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from . import artifacts
from .errors import StageError
from .ingest import (
    DEFAULT_SCALE,
    attach_suppliers,
    filter_min_profile,
    implicit_to_explicit,
    load_ratings,
    read_supplier_map,
    split_train_test,
    write_ratings,
    write_supplier_map,
)
from .metrics import MetricsReport, evaluate, precision_at_n
from .recsys import ModelConfig, RecommendationTable, fit, generate_recommendations, load_model, save_model
from .segment import (
    compute_item_popularity,
    group_suppliers_pareto,
    group_users_by_propensity,
    segment_items_pareto,
)
from .synthetic import SyntheticSpec, generate_synthetic

log = logging.getLogger(__name__)

DEFAULT_ALGORITHMS = ("most_popular", "biased_mf", "user_knn", "item_knn")


# stages

def synth_stage(spec: SyntheticSpec, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset, smap = generate_synthetic(spec)
    paths = {"ratings": out / "ratings.csv", "suppliers": out / "suppliers.csv"}
    write_ratings(dataset, paths["ratings"])
    write_supplier_map(smap, paths["suppliers"])
    artifacts.write_json(out / "spec.json", spec.to_dict())
    return paths


def ingest_stage(ratings, out_dir, format: str = "explicit_csv", suppliers=None, min_ratings: int = 20,
                 test_fraction: float = 0.2, seed: int = 0, delimiter: str | None = None,
                 scale=DEFAULT_SCALE) -> dict:
    """load -> (implicit conversion) -> supplier join -> min-profile filter -> split."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    loaded = load_ratings(ratings, format, delimiter=delimiter, scale=scale)
    if format == "implicit_csv":
        stats = {"raw": {"users": int(loaded["user"].nunique()), "items": int(loaded["item"].nunique()),
                         "interactions": len(loaded), "events": int(loaded["count"].sum())}}
        dataset = implicit_to_explicit(loaded, scale)
    else:
        dataset = loaded
        stats = {"raw": dataset.stats()}
    smap = None
    if suppliers is not None:
        smap, dataset = attach_suppliers(dataset, read_supplier_map(suppliers, delimiter))
        stats["after_supplier_join"] = {**dataset.stats(), "suppliers": len(smap.suppliers),
                                        "dropped_items": smap.dropped_items,
                                        "dropped_ratings": smap.dropped_ratings}
    dataset = filter_min_profile(dataset, min_ratings)
    stats["after_filter"] = dataset.stats()
    split = split_train_test(dataset, test_fraction, seed)
    stats["train"] = split.train.stats()
    stats["test"] = split.test.stats()
    stats["warnings"] = list(split.warnings)
    stats["params"] = {"format": format, "min_ratings": min_ratings, "test_fraction": test_fraction,
                       "seed": seed, "scale": list(dataset.scale)}
    write_ratings(split.train, out / "train.csv")
    write_ratings(split.test, out / "test.csv")
    if smap is not None:
        smap = smap.restrict(dataset.item_ids)
        stats["after_filter"]["suppliers"] = len(smap.suppliers)
        write_supplier_map(smap, out / "suppliers.csv")
    artifacts.write_json(out / "stats.json", stats)
    return stats


def segment_stage(train, out_dir, suppliers=None, head: float = 0.2, tail: float = 0.2, groups: int = 3,
                  propensity: str = "count") -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_ds = load_ratings(train)
    popularity = compute_item_popularity(train_ds)
    seg = segment_items_pareto(popularity, head, tail)
    artifacts.write_item_categories(seg, out / "item_categories.csv")
    artifacts.write_user_groups(group_users_by_propensity(train_ds, seg, groups, propensity),
                                out / "user_groups.csv")
    artifacts.write_longtail(popularity, out / "longtail.csv")
    if suppliers is not None:
        smap = artifacts.read_suppliers(suppliers).restrict(train_ds.item_ids)
        artifacts.write_supplier_groups(group_suppliers_pareto(train_ds, smap), out / "supplier_groups.csv")


def train_stage(train, config: ModelConfig, model_out, scale=DEFAULT_SCALE) -> None:
    model = fit(load_ratings(train, scale=scale), config)
    Path(model_out).parent.mkdir(parents=True, exist_ok=True)
    save_model(model, model_out)


def recommend_stage(model_path, out, n: int | None = None) -> RecommendationTable:
    table = generate_recommendations(load_model(model_path), n=n)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    table.write(out)
    return table


def evaluate_artifacts(train, recs, item_categories, user_groups, test=None, supplier_groups=None,
                       suppliers=None, algorithm: str = "", config: dict | None = None,
                       relevance_threshold: float | None = None) -> MetricsReport:
    train_ds = load_ratings(train)
    test_ds = load_ratings(test) if test is not None else None
    table = RecommendationTable.read(recs)
    seg = artifacts.read_item_categories(item_categories, train_ds)
    ugroups = artifacts.read_user_groups(user_groups)
    sgroups = smap = None
    if supplier_groups is not None and suppliers is not None:
        sgroups = artifacts.read_supplier_groups(supplier_groups)
        smap = artifacts.read_suppliers(suppliers)
    return evaluate(table, train_ds, test_ds, seg, ugroups, sgroups, smap, algorithm=algorithm,
                    config=config, relevance_threshold=relevance_threshold)


# experiment

@dataclass
class ExperimentConfig:
    ratings: str | None = None
    format: str = "explicit_csv"
    delimiter: str | None = None
    suppliers: str | None = None
    synthetic: dict | None = None
    min_ratings: int = 20
    test_fraction: float = 0.2
    seed: int = 0
    head: float = 0.2
    tail: float = 0.2
    groups: int = 3
    propensity: str = "count"
    n: int = 10
    relevance_threshold: float | None = None
    algorithms: list = field(default_factory=lambda: list(DEFAULT_ALGORITHMS))
    out: str = "results"

    def __post_init__(self):
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        self.model_configs()  # validate early

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown experiment config keys: {sorted(unknown)}")
        cfg = cls(**data)
        if base_dir is not None:
            for key in ("ratings", "suppliers", "out"):
                value = getattr(cfg, key)
                if value is not None and not Path(value).is_absolute():
                    setattr(cfg, key, str(Path(base_dir) / value))
        return cfg

    @classmethod
    def load(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        """Read a JSON config; relative paths resolve against its directory.

        Non-None ``overrides`` (CLI flags) win over file values and are taken
        as given.
        """
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        cfg = cls.from_dict(data, base_dir=Path(path).parent)
        set_values = {k: v for k, v in (overrides or {}).items() if v is not None}
        return replace(cfg, **set_values) if set_values else cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def model_configs(self) -> list[tuple[str, ModelConfig]]:
        """(name, ModelConfig) per requested algorithm; seed and n default to the experiment's."""
        out = []
        for entry in self.algorithms:
            spec = {"algorithm": entry} if isinstance(entry, str) else dict(entry)
            name = spec.pop("name", spec["algorithm"])
            spec.setdefault("seed", self.seed)
            spec.setdefault("n", self.n)
            out.append((name, ModelConfig.from_dict(spec)))
        names = [n for n, _ in out]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate algorithm names {names}; give each entry a distinct 'name'")
        return out


class _Stages:
    def __init__(self, root: Path):
        self.root = root
        self.completed: list[str] = []

    def run(self, name, fn, *args, **kwargs):
        try:
            result = fn(*args, **kwargs)
        except StageError:
            raise
        except Exception as exc:
            self.flush(failed=name)
            raise StageError(name, exc) from exc
        self.completed.append(name)
        return result

    def flush(self, failed=None):
        top = self.root / artifacts.MANIFEST_NAME
        files = sorted(p for p in self.root.rglob("*") if p.is_file() and p != top)
        extra = {"stages_completed": self.completed}
        if failed:
            extra["stage_failed"] = failed
        artifacts.write_manifest(self.root, files, extra=extra)


def run_experiment(config: ExperimentConfig) -> list[MetricsReport]:
    """ingest -> segment -> train -> recommend -> evaluate for every configured algorithm."""
    root = Path(config.out)
    root.mkdir(parents=True, exist_ok=True)
    stages = _Stages(root)
    ratings, suppliers = config.ratings, config.suppliers
    if ratings is None:
        spec = SyntheticSpec(**{"seed": config.seed, **(config.synthetic or {})})
        paths = stages.run("synth", synth_stage, spec, root / "synth")
        ratings, suppliers = paths["ratings"], paths["suppliers"]

    ingest_dir, seg_dir = root / "ingest", root / "segment"
    stages.run("ingest", ingest_stage, ratings, ingest_dir, format=config.format, suppliers=suppliers,
               min_ratings=config.min_ratings, test_fraction=config.test_fraction, seed=config.seed,
               delimiter=config.delimiter)
    train, test = ingest_dir / "train.csv", ingest_dir / "test.csv"
    supplier_file = ingest_dir / "suppliers.csv" if suppliers is not None else None
    stages.run("segment", segment_stage, train, seg_dir, suppliers=supplier_file, head=config.head,
               tail=config.tail, groups=config.groups, propensity=config.propensity)

    reports = []
    for name, mcfg in config.model_configs():
        model_path = root / "models" / f"{name}.npz"
        recs_path = root / "recs" / f"{name}.csv"
        stages.run(f"train:{name}", train_stage, train, mcfg, model_path)
        stages.run(f"recommend:{name}", recommend_stage, model_path, recs_path)
        report = stages.run(
            f"evaluate:{name}", evaluate_artifacts, train, recs_path, seg_dir / "item_categories.csv",
            seg_dir / "user_groups.csv", test=test,
            supplier_groups=seg_dir / "supplier_groups.csv" if supplier_file else None,
            suppliers=supplier_file, algorithm=name, config=mcfg.to_dict(),
            relevance_threshold=config.relevance_threshold,
        )
        reports.append(report)
    stages.run("report", artifacts.emit_report, reports, root / "report")
    stages.flush()
    return reports


def grid_search(train, test, base: ModelConfig, grid: dict[str, list]) -> list[tuple[ModelConfig, float]]:
    """Precision@n for every combination in ``grid``, best first."""
    keys = sorted(grid)
    results = []
    for values in itertools.product(*(grid[k] for k in keys)):
        cfg = replace(base, **dict(zip(keys, values)))
        table = generate_recommendations(fit(train, cfg), train)
        results.append((cfg, precision_at_n(table, test)))
    results.sort(key=lambda cp: -cp[1])
    return results
