"""Command-line interface: train, predict, eval, sweep, gen, oracle-check.

Exit codes: 0 success, 2 usage error, 3 data/model error, 4 budget
infeasible, 5 approximation-bound violation.  Logs go to stderr; CSV and
JSON reports go to files or stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time

import numpy as np

from . import dataio, metrics, oracle, synthetic
from ._random import SPLIT_STREAM, derive_seed
from .errors import DataError, EmptyForestError, ModelFormatError
from .forest import BudgetConfig, grow_forest
from .impurity import ImpuritySpec
from .stumps import make_search
from .tree import DEFAULT_MAX_DEPTH

logger = logging.getLogger("budgetrf")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4
EXIT_BOUND = 5

THREADS_ENV = "BUDGETRF_THREADS"


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    vals = _float_list(text)
    if any(v != int(v) or v < 0 for v in vals):
        raise argparse.ArgumentTypeError(f"expected non-negative integers, got {text!r}")
    return [int(v) for v in vals]


def _default_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _add_data_args(p, labels=True):
    p.add_argument("--data", required=True, help="CSV file")
    if labels:
        p.add_argument("--labels-col", default=None,
                       help="label column name or zero-based index (default: last column)")
    p.add_argument("--no-header", action="store_true", help="CSV has no header row")
    p.add_argument("--query-col", default=None, help="query id column (ranking data)")


def _add_model_args(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--costs", help="cost file: one positive number per feature")
    g.add_argument("--uniform-costs", action="store_true", help="every feature costs 1")
    p.add_argument("--impurity", choices=("pairs", "powers"), default="pairs")
    p.add_argument("--l", type=int, default=2, help="exponent of the powers impurity")
    p.add_argument("--pairs-offset", action="store_true",
                   help="threshold-pairs variant that also subtracts alpha^2 per pair")
    p.add_argument("--max-trees", type=int, default=40)
    p.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
    p.add_argument("--stumps", choices=("random", "exhaustive"), default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=_default_threads(),
                   help=f"worker threads for tree growth (default ${THREADS_ENV} or 1)")
    p.add_argument("--label-map", help="CSV 'original,merged' applied to labels on load")
    p.add_argument("--quantize", type=int, metavar="LEVELS",
                   help="quantize every feature to LEVELS uniform bins before splitting")
    p.add_argument("--dedup", action="store_true",
                   help="collapse duplicate rows to their most common label before splitting")
    p.add_argument("--validation", help="validation CSV (same layout as --data)")
    p.add_argument("--train-idx", help="row index file selecting the training rows of --data")
    p.add_argument("--val-idx", help="row index file selecting the validation rows of --data")
    p.add_argument("--val-fraction", type=float, default=0.25,
                   help="validation share when splitting --data (default 0.25)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="budgetrf",
                                 description="Feature-budgeted random forests.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="grow a forest under an average feature-cost budget")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--budget", type=float, required=True, help="average validation cost cap")
    p.add_argument("--alpha", type=int, default=0, help="threshold-pairs alpha")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--report", help="also write the JSON training report here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict labels and acquisition costs")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--drop-col", action="append", default=[],
                   help="column (name or index) to ignore, e.g. a label column; repeatable")
    p.add_argument("--out", default="-", help="CSV output (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="evaluate a model on labeled data")
    p.add_argument("--model", required=True)
    _add_data_args(p)
    p.add_argument("--metric", action="append", choices=("error", "ap5", "cost", "fraction"),
                   help="repeatable; default: error, cost, fraction (plus ap5 with --query-col)")
    p.add_argument("--out", default="-", help="CSV output (default stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="accuracy-cost curve over alpha values")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--test", help="test CSV; otherwise split from --data")
    p.add_argument("--test-idx", help="row index file selecting the test rows of --data")
    p.add_argument("--test-fraction", type=float, default=0.25)
    p.add_argument("--alphas", type=_int_list, default=list(metrics.DEFAULT_ALPHAS))
    p.add_argument("--budgets", type=_float_list, default=[],
                   help="budget levels for validation-based alpha selection")
    p.add_argument("--budget", type=float, default=math.inf,
                   help="cap on validation cost while growing each forest (default none)")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--out", default="-", help="curve CSV (default stdout)")
    p.add_argument("--selection-out", help="per-budget alpha selection CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen", help="write a synthetic dataset and its cost file")
    p.add_argument("--dataset", required=True, choices=synthetic.GENERATORS)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("oracle-check",
                       help="compare greedy and optimal max-cost on random small instances")
    p.add_argument("--instances", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-features", type=int, default=4)
    p.add_argument("--max-examples", type=int, default=32)
    p.add_argument("--max-cost", type=int, default=5)
    p.add_argument("--impurity", choices=("pairs", "powers"), default="pairs")
    p.add_argument("--alpha", type=int, default=0)
    p.add_argument("--l", type=int, default=2)
    p.add_argument("--pairs-offset", action="store_true")
    p.add_argument("--out", default="-", help="per-instance CSV (default stdout)")
    p.set_defaults(func=cmd_oracle_check)
    return ap


class UsageError(Exception):
    pass


def _spec(args, alpha=None) -> ImpuritySpec:
    if args.impurity == "powers":
        return ImpuritySpec.powers(args.l)
    return ImpuritySpec.pairs(args.alpha if alpha is None else alpha, args.pairs_offset)


def _load_labeled(args, path, label_values=None):
    label_map = dataio.load_label_map(args.label_map) if getattr(args, "label_map", None) else None
    return dataio.load_csv(path, args.labels_col, header=not args.no_header,
                           query_column=args.query_col, label_map=label_map,
                           label_values=label_values)


def _preprocess(args, data):
    if args.quantize is not None:
        data = dataio.quantize(data, args.quantize)
    if args.dedup:
        data = dataio.dedup(data)
    return data


def _prepare(args, want_test=False):
    """Load data and return (train, validation, test-or-None, costs)."""
    if (args.quantize is not None or args.dedup) and (
            args.validation or getattr(args, "test", None)):
        raise UsageError("--quantize/--dedup need a single --data file split internally")
    data = _preprocess(args, _load_labeled(args, args.data))
    rng = np.random.default_rng(derive_seed(args.seed, SPLIT_STREAM))
    idx = {}
    if args.train_idx:
        idx["train"] = dataio.load_index_file(args.train_idx, data.n)
    if args.val_idx:
        idx["val"] = dataio.load_index_file(args.val_idx, data.n)
    if want_test and args.test_idx:
        idx["test"] = dataio.load_index_file(args.test_idx, data.n)

    validation = test = None
    if args.validation:
        validation = _load_labeled(args, args.validation, data.label_values)
    if want_test and args.test:
        test = _load_labeled(args, args.test, data.label_values)

    if idx:
        # explicit index files win; unspecified parts take the remaining rows
        used = np.concatenate(list(idx.values()))
        rest = np.setdiff1d(np.arange(data.n), used)
        if "val" not in idx and validation is None:
            raise UsageError("--train-idx without --val-idx or --validation")
        train = data.subset(idx.get("train", rest))
        if validation is None:
            validation = data.subset(idx["val"])
        if want_test and test is None:
            if "test" not in idx:
                raise UsageError("--test-idx or --test required with index files")
            test = data.subset(idx["test"])
    else:
        fr = [1.0]
        if validation is None:
            fr.append(args.val_fraction)
        if want_test and test is None:
            fr.append(args.test_fraction)
        if len(fr) > 1:
            fr[0] = 1.0 - sum(fr[1:])
            if fr[0] <= 0:
                raise UsageError("split fractions leave no training rows")
            parts = dataio.split_indices(data.n, fr, rng)
            train = data.subset(parts[0])
            k = 1
            if validation is None:
                validation = data.subset(parts[k])
                k += 1
            if want_test and test is None:
                test = data.subset(parts[k])
        else:
            train = data
    for name, part in (("training", train), ("validation", validation), ("test", test)):
        if part is not None and part.n == 0:
            raise UsageError(f"{name} split is empty")
        if part is not None and part.m != data.m:
            raise DataError(f"{name} data has {part.m} features, expected {data.m}")
    costs = dataio.load_costs(args.costs, data.m, uniform=args.uniform_costs)
    return train, validation, test, costs


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


def _close_out(fh):
    if fh is not sys.stdout:
        fh.close()


def _config(args, budget):
    if args.max_trees < 1 or args.threads < 1 or args.max_depth < 0:
        raise UsageError("--max-trees and --threads must be >= 1, --max-depth >= 0")
    if not budget >= 0:
        raise UsageError("--budget must be >= 0")
    return BudgetConfig(budget, args.max_trees, args.seed, args.max_depth, args.threads)


def cmd_train(args) -> int:
    t0 = time.perf_counter()
    train, validation, _, costs = _prepare(args)
    config = _config(args, args.budget)
    spec = _spec(args)
    forest = grow_forest(train, validation, config, spec, costs, make_search(args.stumps))
    wall = time.perf_counter() - t0
    if forest.budget_infeasible:
        print(f"budgetrf: budget {args.budget:g} is infeasible: a single tree already costs "
              f"{forest.infeasible_cost:.6g} on average over the validation set", file=sys.stderr)
        return EXIT_INFEASIBLE
    dataio.save_model(forest, args.out)
    report = {
        "model": args.out,
        "trees": len(forest),
        "validation_avg_cost": forest.average_cost(validation.X),
        "validation_error": metrics.test_error(forest, validation),
        "budget": args.budget,
        "impurity": str(spec),
        "wall_time_s": round(wall, 3),
    }
    text = json.dumps(report, indent=2)
    print(text)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    return EXIT_OK


def cmd_predict(args) -> int:
    forest = dataio.load_model(args.model)
    X = dataio.load_matrix(args.data, header=not args.no_header, drop_columns=args.drop_col)
    if X.shape[1] != forest.n_features:
        raise DataError(f"data has {X.shape[1]} features, model expects {forest.n_features}",
                        args.data)
    pred = forest.predict(X)
    cost = forest.example_costs(X)
    conf = forest.confidence(X) if forest.n_classes == 2 else None
    fh = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "prediction", "cost"] + (["confidence"] if conf is not None else []))
        for i in range(len(X)):
            row = [i, forest.label_values[pred[i]], repr(float(cost[i]))]
            if conf is not None:
                row.append(repr(float(conf[i])))
            w.writerow(row)
    finally:
        _close_out(fh)
    return EXIT_OK


def cmd_eval(args) -> int:
    forest = dataio.load_model(args.model)
    data = dataio.load_csv(args.data, args.labels_col, header=not args.no_header,
                           query_column=args.query_col, label_values=forest.label_values)
    if data.m != forest.n_features:
        raise DataError(f"data has {data.m} features, model expects {forest.n_features}", args.data)
    wanted = args.metric or (["error", "cost", "fraction"] + (["ap5"] if args.query_col else []))
    out = []
    for name in wanted:
        if name == "error":
            out.append((name, metrics.test_error(forest, data)))
        elif name == "cost":
            out.append((name, forest.average_cost(data.X)))
        elif name == "fraction":
            out.append((name, metrics.avg_feature_fraction(forest, data)))
        elif name == "ap5":
            if data.query_ids is None:
                raise UsageError("--metric ap5 needs --query-col")
            groups = metrics.query_groups(data.query_ids, data.y, forest.confidence(data.X))
            out.append((name, metrics.average_precision_at_5(groups)))
    fh = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "value"])
        for name, v in out:
            w.writerow([name, repr(float(v))])
    finally:
        _close_out(fh)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    if args.impurity != "pairs":
        raise UsageError("sweep varies the threshold-pairs alpha; use --impurity pairs")
    train, validation, test, costs = _prepare(args, want_test=True)
    config = _config(args, args.budget)
    result = metrics.sweep_alpha(
        train, validation, test, args.alphas, config, costs, make_search(args.stumps),
        repeats=args.repeats,
        make_spec=lambda a: ImpuritySpec.pairs(a, args.pairs_offset))
    for alpha, r, c in result.infeasible:
        logger.warning("alpha=%s repeat=%d infeasible (first tree costs %.6g)", alpha, r, c)
    metrics.write_curve(metrics.aggregate(result.points), args.out)
    if args.budgets:
        sel = metrics.select_alpha(result.points, args.budgets)
        fh = _open_out(args.selection_out) if args.selection_out else sys.stderr
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["budget", "alpha", "trees", "val_cost", "val_error", "avg_cost", "error"])
            for s in sel:
                w.writerow([repr(s.budget), s.alpha, s.trees, repr(s.val_cost),
                            repr(s.val_error), repr(s.avg_cost), repr(s.error)])
        finally:
            if fh is not sys.stderr:
                _close_out(fh)
    if not result.points:
        print("budgetrf: every alpha was budget-infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_gen(args) -> int:
    data, costs = synthetic.generate(args.dataset, args.seed)
    dataio.write_csv(data, f"{args.out_prefix}.csv")
    dataio.write_costs(costs, f"{args.out_prefix}.costs")
    logger.info("wrote %s.csv (%d rows, %d features) and %s.costs",
                args.out_prefix, data.n, data.m, args.out_prefix)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    if not 1 <= args.max_features <= oracle.MAX_FEATURES:
        raise UsageError(f"--max-features must be in 1..{oracle.MAX_FEATURES}")
    if not 1 <= args.max_examples <= oracle.MAX_EXAMPLES:
        raise UsageError(f"--max-examples must be in 1..{oracle.MAX_EXAMPLES}")
    if args.max_cost < 1 or args.instances < 1:
        raise UsageError("--max-cost and --instances must be >= 1")
    spec = _spec(args)
    rng = np.random.default_rng(args.seed)
    violations = 0
    fh = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance", "n", "m", "impurity", "greedy", "opt", "ratio", "bound", "ok",
                    "base_case"])
        for i in range(args.instances):
            inst = oracle.random_instance(rng, spec, args.max_features, args.max_examples,
                                          args.max_cost)
            b = oracle.check_bound(inst)
            violations += not b.ok
            w.writerow([i, inst.X.shape[0], inst.X.shape[1], b.impurity, repr(b.greedy),
                        repr(b.opt), repr(b.ratio), repr(b.bound), int(b.ok),
                        int(oracle.is_base_case(inst))])
    finally:
        _close_out(fh)
    print(f"budgetrf: {args.instances} instances, {violations} bound violation(s)",
          file=sys.stderr)
    return EXIT_BOUND if violations else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"budgetrf: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ModelFormatError, EmptyForestError) as e:
        print(f"budgetrf: error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
