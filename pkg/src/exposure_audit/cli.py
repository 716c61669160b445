"""Command line entry point: ``exposure-audit <subcommand>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import artifacts, pipeline
from .errors import AuditError, StageError
from .recsys import ALGORITHMS, ModelConfig
from .synthetic import SyntheticSpec


def _add_ingest(sub):
    p = sub.add_parser("ingest", help="load, filter and split ratings")
    p.add_argument("--ratings", required=True)
    p.add_argument("--format", choices=["explicit_csv", "implicit_csv"], default="explicit_csv")
    p.add_argument("--suppliers")
    p.add_argument("--delimiter", help="field delimiter (sniffed when omitted)")
    p.add_argument("--min-ratings", type=int, default=20)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)


def _add_segment(sub):
    p = sub.add_parser("segment", help="item categories, user groups and supplier groups")
    p.add_argument("--train", required=True)
    p.add_argument("--suppliers")
    p.add_argument("--head", type=float, default=0.2)
    p.add_argument("--tail", type=float, default=0.2)
    p.add_argument("--groups", type=int, default=3)
    p.add_argument("--propensity", choices=["count", "rating"], default="count")
    p.add_argument("--out", required=True)


def _add_train(sub):
    p = sub.add_parser("train", help="fit one recommender")
    p.add_argument("--algo", required=True, choices=ALGORITHMS)
    p.add_argument("--train", required=True)
    p.add_argument("--config", help="JSON file with model hyperparameters")
    p.add_argument("--seed", type=int)
    p.add_argument("--model-out", required=True)


def _add_recommend(sub):
    p = sub.add_parser("recommend", help="top-N lists from a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--out", required=True)


def _add_evaluate(sub):
    p = sub.add_parser("evaluate", help="bias and accuracy metrics for a recommendation file")
    p.add_argument("--train", required=True)
    p.add_argument("--test")
    p.add_argument("--recs", required=True)
    p.add_argument("--item-categories", required=True)
    p.add_argument("--user-groups", required=True)
    p.add_argument("--supplier-groups")
    p.add_argument("--suppliers", help="item,supplier map (needed for SPD)")
    p.add_argument("--algorithm", default="")
    p.add_argument("--relevance-threshold", type=float)
    p.add_argument("--out", required=True, help="path of report.json; figure CSVs go next to it")


def _add_synth(sub):
    p = sub.add_parser("synth", help="write a Zipf-shaped synthetic dataset")
    p.add_argument("--spec", help="JSON file with SyntheticSpec fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)


def _add_run(sub):
    p = sub.add_parser("run", help="full pipeline from an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--min-ratings", type=int)
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--n", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exposure-audit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for add in (_add_run, _add_ingest, _add_segment, _add_train, _add_recommend, _add_evaluate, _add_synth):
        add(sub)
    return parser


def _read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8")) if path else {}


def _dispatch(args) -> None:
    if args.command == "run":
        overrides = {"out": args.out, "seed": args.seed, "min_ratings": args.min_ratings,
                     "test_fraction": args.test_fraction, "n": args.n}
        config = pipeline.ExperimentConfig.load(args.config, overrides)
        reports = pipeline.run_experiment(config)
        for r in reports:
            print(f"{r.algorithm}: UPD={r.upd:.4f} SPD={_f(r.spd)} precision={_f(r.precision)} "
                  f"coverage={r.coverage:.4f}")
    elif args.command == "ingest":
        stats = pipeline.ingest_stage(args.ratings, args.out, format=args.format, suppliers=args.suppliers,
                                      min_ratings=args.min_ratings, test_fraction=args.test_fraction,
                                      seed=args.seed, delimiter=args.delimiter)
        print(json.dumps(stats["after_filter"]))
    elif args.command == "segment":
        pipeline.segment_stage(args.train, args.out, suppliers=args.suppliers, head=args.head, tail=args.tail,
                               groups=args.groups, propensity=args.propensity)
    elif args.command == "train":
        params = _read_json(args.config)
        params["algorithm"] = args.algo
        if args.seed is not None:
            params["seed"] = args.seed
        pipeline.train_stage(args.train, ModelConfig.from_dict(params), args.model_out)
    elif args.command == "recommend":
        pipeline.recommend_stage(args.model, args.out, n=args.n)
    elif args.command == "evaluate":
        report = pipeline.evaluate_artifacts(
            args.train, args.recs, args.item_categories, args.user_groups, test=args.test,
            supplier_groups=args.supplier_groups, suppliers=args.suppliers, algorithm=args.algorithm,
            relevance_threshold=args.relevance_threshold,
        )
        out = Path(args.out)
        artifacts.emit_report([report], out.parent, report_name=out.name)
        print(json.dumps({"upd": report.upd, "spd": report.spd, "precision": report.precision,
                          "coverage": report.coverage}))
    elif args.command == "synth":
        params = _read_json(args.spec)
        if args.seed is not None:
            params["seed"] = args.seed
        pipeline.synth_stage(SyntheticSpec(**params), args.out)


def _f(x):
    return "n/a" if x is None else f"{x:.4f}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _dispatch(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (AuditError, ValueError, KeyError, OSError) as exc:
        print(f"error: [{args.command}] {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
