"""On-disk formats shared by the pipeline stages.

Every file is plain CSV or JSON so that recommendations produced by other
systems can be dropped into the audit.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import pandas as pd

from .ingest import RatingDataset, SupplierMap, read_supplier_map
from .metrics import MetricsReport
from .segment import (
    CATEGORIES,
    ItemPopularity,
    ItemSegmentation,
    SupplierGroups,
    UserGroups,
    longtail_series,
)

REPORT_SCHEMA_VERSION = 1
MANIFEST_NAME = "MANIFEST.json"


def _write_rows(path, header, rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _read_frame(path) -> pd.DataFrame:
    return pd.read_csv(path, dtype=str, keep_default_na=False)


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(directory, files, omitted=(), extra=None) -> Path:
    directory = Path(directory)
    entries = [{"file": str(Path(f).relative_to(directory)), "sha256": file_digest(f)} for f in files]
    data = {"schema_version": REPORT_SCHEMA_VERSION, "files": entries, "omitted": list(omitted)}
    if extra:
        data.update(extra)
    path = directory / MANIFEST_NAME
    write_json(path, data)
    return path


# segmentation artifacts

def write_item_categories(seg: ItemSegmentation, path) -> None:
    _write_rows(path, ["item", "category"], sorted(seg.categories.items()))


def read_item_categories(path, train: RatingDataset | None = None) -> ItemSegmentation:
    frame = _read_frame(path)
    bad = set(frame["category"]) - set(CATEGORIES)
    if bad:
        raise ValueError(f"{path}: unknown categories {sorted(bad)}")
    categories = dict(zip(frame["item"], frame["category"]))
    shares = dict.fromkeys(CATEGORIES, 0.0)
    if train is not None and len(train):
        for item, count in train.item_counts.items():
            shares[categories[item]] += count / len(train)
    return ItemSegmentation(categories, shares)


def write_user_groups(groups: UserGroups, path) -> None:
    rows = [(u, label, repr(groups.propensity[u]))
            for label, members in zip(groups.labels, groups.groups) for u in members]
    _write_rows(path, ["user", "group", "propensity"], rows)


def read_user_groups(path) -> UserGroups:
    frame = _read_frame(path)
    labels = sorted(set(frame["group"]), key=lambda g: int(g.lstrip("G")))
    groups = tuple(tuple(frame.loc[frame["group"] == g, "user"]) for g in labels)
    return UserGroups(groups, {u: float(p) for u, p in zip(frame["user"], frame["propensity"])})


def write_supplier_groups(groups: SupplierGroups, path) -> None:
    rows = [(s, label, repr(groups.mass_share[s]))
            for label, members in zip(groups.labels, groups.groups) for s in members]
    _write_rows(path, ["supplier", "group", "mass_share"], rows)


def read_supplier_groups(path, n_groups: int = 3) -> SupplierGroups:
    frame = _read_frame(path)
    labels = [f"S{k + 1}" for k in range(n_groups)]
    groups = tuple(tuple(frame.loc[frame["group"] == g, "supplier"]) for g in labels)
    return SupplierGroups(groups, {s: float(m) for s, m in zip(frame["supplier"], frame["mass_share"])})


def write_longtail(popularity: ItemPopularity, path) -> None:
    _write_rows(path, ["rank", "user_fraction", "item"],
                [(r, repr(f), i) for r, i, f in longtail_series(popularity)])


def read_suppliers(path) -> SupplierMap:
    return SupplierMap(read_supplier_map(path))


# metrics report

def emit_report(reports: list[MetricsReport], out_dir, report_name: str = "report.json") -> list[Path]:
    """Write report.json, the figure-series CSVs and a MANIFEST.

    Supplier files are skipped, and listed as omitted in the MANIFEST, when
    no report carries supplier data.
    """
    if not reports:
        raise ValueError("no reports to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    report_path = out / report_name
    write_json(report_path, {"schema_version": REPORT_SCHEMA_VERSION,
                             "reports": [r.summary() for r in reports]})
    written.append(report_path)

    path = out / "tradeoff.csv"
    _write_rows(path, ["algorithm", "upd", "spd", "precision", "coverage"],
                [(r.algorithm, _fmt(r.upd), _fmt(r.spd), _fmt(r.precision), _fmt(r.coverage)) for r in reports])
    written.append(path)

    path = out / "scatter.csv"
    _write_rows(path, ["algorithm", "item", "pop_data", "pop_rec"],
                [(r.algorithm, i, _fmt(x), _fmt(y)) for r in reports for i, x, y in r.scatter])
    written.append(path)

    path = out / "group_popularity.csv"
    _write_rows(path, ["algorithm", "group", "category", "side", "proportion"],
                [(r.algorithm, g, c, side, _fmt(v)) for r in reports for g, c, side, v in r.group_popularity])
    written.append(path)

    omitted = []
    with_suppliers = [r for r in reports if r.supplier_rank is not None]
    if with_suppliers:
        path = out / "supplier_rank.csv"
        _write_rows(path, ["algorithm", "supplier", "rank", "data_share", "rec_share"],
                    [(r.algorithm, s, k, _fmt(d), _fmt(q)) for r in with_suppliers for s, k, d, q in r.supplier_rank])
        written.append(path)
    else:
        omitted.append({"file": "supplier_rank.csv", "reason": "no supplier map provided"})
    written.append(write_manifest(out, written, omitted))
    return written


def _fmt(value):
    return "" if value is None else repr(float(value))


def load_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
