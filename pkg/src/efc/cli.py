"""Command-line entry points.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 timed out with
partial results.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import synth
from .data import ConfigError, DataError, Dataset, load_arff, load_csv, save_arff, \
    save_csv
from .explain import ExplainConfig, get_explanations, load_matrix, save_matrix, \
    select_explanation_instances
from .groups import collect_groups, groups_to_json
from .mdl import render_ranking
from .model import ForestParams, train_random_forest
from .pipeline import (EXHAUSTIVE_BUDGET_DEFAULT, EfcConfig, cross_validate,
                       run_efc, run_exhaustive)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TIMEOUT = 4

KIND_FLAGS = {"log": "logical", "rel": "relational", "cart": "cartesian",
              "num": "numerical", "rule": "rule", "thr": "threshold"}


def _load_dataset(args) -> Dataset:
    if getattr(args, "synth", None):
        return synth.generate(synth.SyntheticSpec(args.synth, args.n, args.seed))
    path = args.data
    if path is None:
        raise DataError("no input: pass --data or --synth")
    if path.endswith(".arff"):
        return load_arff(path, getattr(args, "class_name", None))
    return load_csv(path, getattr(args, "class_name", None))


def _parse_kinds(raw: str) -> tuple[str, ...]:
    kinds = []
    for token in raw.split(","):
        token = token.strip()
        if token not in KIND_FLAGS:
            raise argparse.ArgumentTypeError(
                f"unknown kind {token!r}; expected {','.join(KIND_FLAGS)}")
        kinds.append(KIND_FLAGS[token])
    return tuple(kinds)


def _efc_config(args) -> EfcConfig:
    explain = ExplainConfig(class_to_explain=args.class_index,
                            max_to_explain=args.max_to_explain,
                            inst_thr=args.inst_thr,
                            samples_per_attribute=args.samples)
    model = ForestParams(tree_count=args.trees, max_depth=args.max_depth)
    return EfcConfig(thr_l=args.thr_l, thr_u=args.thr_u, step=args.step,
                     noise_thr=args.noise_thr, cf=args.cf, pci=args.pci,
                     bins=args.bins, min_score=args.min_score,
                     enabled_kinds=args.kinds, explain=explain, model=model,
                     seed=args.seed)


def _add_run_flags(p):
    p.add_argument("--data", help="input CSV or ARFF file")
    p.add_argument("--synth", choices=synth.DATASET_NAMES, help="generate instead of load")
    p.add_argument("--n", type=int, default=2000, help="rows for --synth")
    p.add_argument("--class", dest="class_name", help="class column name (default: last)")
    p.add_argument("--class-index", type=int, default=None, help="class value to explain")
    p.add_argument("--thr-l", type=float, default=0.1)
    p.add_argument("--thr-u", type=float, default=0.8)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--noise-thr", type=float, default=0.01)
    p.add_argument("--cf", type=float, default=0.6)
    p.add_argument("--pci", type=float, default=None)
    p.add_argument("--bins", type=int, default=4)
    p.add_argument("--min-score", type=float, default=0.0)
    p.add_argument("--kinds", type=_parse_kinds, default=_parse_kinds("log,rel,cart,rule,thr"))
    p.add_argument("--samples", type=int, default=100, help="explanation samples per attribute")
    p.add_argument("--max-to-explain", type=int, default=500)
    p.add_argument("--inst-thr", type=float, default=0.10)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")


def _write_result(result, ds, out_dir, formats=("csv", "arff")):
    os.makedirs(out_dir, exist_ok=True)
    attrs = ds.attributes
    feature_rows = [{
        "kind": s.feature.kind,
        "rendering": s.feature.render(attrs),
        "sourceGroup": [attrs[a].name for a in s.feature.source_group],
        "mdl": s.score,
    } for s in result.features]
    with open(os.path.join(out_dir, "features.json"), "w") as fh:
        json.dump(feature_rows, fh, indent=2)
    with open(os.path.join(out_dir, "groups.json"), "w") as fh:
        json.dump(groups_to_json(result.groups, [a.name for a in attrs]), fh, indent=2)
    with open(os.path.join(out_dir, "ranking.txt"), "w") as fh:
        fh.write(render_ranking(result.features, result.dataset.attributes))
    if "csv" in formats:
        save_csv(result.dataset, os.path.join(out_dir, "enriched.csv"))
    if "arff" in formats:
        save_arff(result.dataset, os.path.join(out_dir, "enriched.arff"))
    with open(os.path.join(out_dir, "timings.csv"), "w") as fh:
        fh.write("phase,milliseconds\n")
        for phase, ms in result.timings_ms.items():
            fh.write(f"{phase},{ms}\n")


def _cmd_run(args) -> int:
    ds = _load_dataset(args)
    result = run_efc(ds, _efc_config(args))
    _write_result(result, ds, args.out)
    print(f"groups: {len(result.groups)}  features kept: {len(result.features)}"
          f"  (of {result.candidate_count} candidates)")
    return EXIT_OK


def _cmd_exhaustive(args) -> int:
    ds = _load_dataset(args)
    result = run_exhaustive(ds, _efc_config(args), budget_seconds=args.budget)
    _write_result(result, ds, args.out)
    print(f"features kept: {len(result.features)} (of {result.candidate_count} candidates)"
          + ("  [timed out: partial]" if result.timed_out else ""))
    return EXIT_TIMEOUT if result.timed_out else EXIT_OK


def _cmd_cv(args) -> int:
    ds = _load_dataset(args)
    res = cross_validate(ds, args.classifier, args.folds, args.seed,
                         args.construct, _efc_config(args))
    print(f"{args.classifier} {args.construct}: CA = {100 * res.mean_accuracy:.2f}")
    for k, acc in enumerate(res.fold_accuracies):
        print(f"  fold {k}: {100 * acc:.2f}  (+{res.fold_feature_counts[k]} features)")
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "report.csv"), "w") as fh:
        fh.write("fold,accuracy,features\n")
        for k, acc in enumerate(res.fold_accuracies):
            fh.write(f"{k},{100 * acc:.4f},{res.fold_feature_counts[k]}\n")
        fh.write(f"mean,{100 * res.mean_accuracy:.4f},\n")
    return EXIT_OK


def _cmd_synth(args) -> int:
    spec = synth.SyntheticSpec(args.name, args.n, args.seed, args.noise)
    ds = synth.generate(spec)
    if args.out.endswith(".arff"):
        save_arff(ds, args.out)
    else:
        save_csv(ds, args.out)
    print(f"wrote {ds.n} x {ds.m} dataset to {args.out}")
    return EXIT_OK


def _cmd_explain(args) -> int:
    ds = _load_dataset(args)
    cfg = ExplainConfig(class_to_explain=args.class_index,
                        max_to_explain=args.max_to_explain, inst_thr=args.inst_thr,
                        samples_per_attribute=args.samples, seed=args.seed)
    model = train_random_forest(ds, ForestParams(tree_count=args.trees,
                                                 max_depth=args.max_depth,
                                                 seed=args.seed))
    class_index, idx = select_explanation_instances(ds, cfg)
    matrix = get_explanations(ds.subset(idx), model, class_index, cfg, background=ds)
    save_matrix(matrix, args.out)
    print(f"explained {matrix.e} instances of class {class_index} -> {args.out}")
    return EXIT_OK


def _cmd_groups(args) -> int:
    matrix = load_matrix(args.matrix)
    found = collect_groups(matrix, args.thr_l, args.thr_u, args.step, args.noise_thr)
    payload = groups_to_json(found, list(matrix.attr_names))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
    else:
        json.dump(payload, sys.stdout, indent=2)
        print()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="efc",
                                 description="explanation-guided feature construction")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full construction pipeline")
    _add_run_flags(p)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("exhaustive", help="all-attribute baseline enumeration")
    _add_run_flags(p)
    p.add_argument("--budget", type=float, default=EXHAUSTIVE_BUDGET_DEFAULT,
                   help="wall-clock budget in seconds")
    p.set_defaults(fn=_cmd_exhaustive)

    p = sub.add_parser("cv", help="cross-validated accuracy")
    _add_run_flags(p)
    p.add_argument("--classifier", choices=("dt", "nb", "rf"), default="dt")
    p.add_argument("--construct", choices=("base", "all", "fs"), default="base")
    p.add_argument("--folds", type=int, default=10)
    p.set_defaults(fn=_cmd_cv)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--name", required=True, choices=synth.DATASET_NAMES)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=None,
                   help="override the dataset's class-noise percentage")
    p.add_argument("--out", required=True, help="output .csv or .arff path")
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("explain", help="export an explanation matrix as CSV")
    p.add_argument("--data")
    p.add_argument("--synth", choices=synth.DATASET_NAMES)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--class", dest="class_name")
    p.add_argument("--class-index", type=int, default=None)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--max-to-explain", type=int, default=500)
    p.add_argument("--inst-thr", type=float, default=0.10)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_explain)

    p = sub.add_parser("groups", help="mine groups from an explanation matrix CSV")
    p.add_argument("--matrix", required=True)
    p.add_argument("--thr-l", type=float, default=0.1)
    p.add_argument("--thr-u", type=float, default=0.8)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--noise-thr", type=float, default=0.01)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_groups)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
