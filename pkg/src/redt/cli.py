"""Command-line interface: ``redt {distill,train,predict,explain,benchmark}``.

Exit codes: 0 success, 2 usage or validation error, 1 runtime failure.
All randomness is derived from ``--seed``.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import tree as _tree
from ._utils import derive_seed
from .data import (BENCHMARKS, SplitSpec, benchmark_path, load_csv, one_hot,
                   read_column, read_features, train_test_split)
from .distill import AlphaGrid, CvParams, cv_soft_labels, grid_search_alpha, mix_labels
from .evaluation import BenchmarkConfig, accuracy, explain, overlay_ppm, run_benchmark
from .teacher import (ForestParams, RandomForestTeacher, import_soft_labels,
                      write_soft_labels)

log = logging.getLogger("redt")


class StageError(Exception):
    def __init__(self, stage, exc):
        super().__init__(f"{stage} failed: {exc}")


class _Stage:
    """Context manager that tags any exception with the pipeline stage."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.debug("[%s]", self.name)

    def __exit__(self, typ, exc, tb):
        if exc is not None and not isinstance(exc, (StageError, SystemExit, KeyboardInterrupt)):
            raise StageError(self.name, exc) from exc


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _at_least_two(text):
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError(f"must be >= 2, got {v}")
    return v


def _unit_interval(text):
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {v}")
    return v


def _open_fraction(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {v}")
    return v


def _image_shape(text):
    try:
        h, w = (int(p) for p in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected HEIGHTxWIDTH, e.g. 28x28") from None
    if h < 1 or w < 1:
        raise argparse.ArgumentTypeError("image dimensions must be positive")
    return h, w


def _add_data_args(p, required=True):
    src = p.add_mutually_exclusive_group(required=required)
    src.add_argument("--data", help="CSV file")
    src.add_argument("--dataset", choices=sorted(BENCHMARKS),
                     help="bundled UCI dataset (overrides --label-col/--categorical)")
    p.add_argument("--label-col", default="-1",
                   help="label column name or index (default: last)")
    p.add_argument("--categorical", default="",
                   help="comma-separated categorical column names or indices")
    p.add_argument("--no-header", dest="header", action="store_false",
                   help="the CSV has no header row")


def _add_tree_args(p):
    p.add_argument("--min-leaf", type=_positive_int, default=5)
    p.add_argument("--criterion", choices=("gini", "entropy"), default="gini")


def _add_forest_args(p):
    p.add_argument("--trees", type=_positive_int, default=100)
    p.add_argument("--repeats", type=_positive_int, default=5)
    p.add_argument("--folds", type=_at_least_two, default=5)


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=_positive_int, default=1,
                   help="worker processes; results do not depend on it")


def build_parser():
    parser = argparse.ArgumentParser(prog="redt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log pipeline stages")
    parser.add_argument("-q", "--quiet", action="store_true", help="log errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distill", help="cross-validated forest soft labels")
    _add_data_args(p)
    _add_tree_args(p)
    _add_forest_args(p)
    _add_common(p)
    p.add_argument("--out", help="soft-label CSV (default: stdout)")

    p = sub.add_parser("train", help="fit a rectified decision tree")
    _add_data_args(p)
    _add_tree_args(p)
    _add_forest_args(p)
    _add_common(p)
    p.add_argument("--soft", help="soft-label CSV aligned with the data rows")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--alpha", type=_unit_interval, default=None,
                      help="hard-label weight in [0, 1]")
    mode.add_argument("--alpha-search", action="store_true",
                      help="choose alpha on an internal holdout")
    p.add_argument("--grid-step", type=float, default=0.1)
    p.add_argument("--holdout", type=_open_fraction, default=0.25,
                   help="alpha-search holdout fraction of the training rows")
    p.add_argument("--train-fraction", type=_open_fraction, default=0.7)
    p.add_argument("--out", required=True, help="tree file to write")

    for name, helptext in (("predict", "predict classes with a saved tree"),
                           ("explain", "decision paths and key features")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--tree", required=True)
        p.add_argument("--data", required=True, help="CSV of rows to score")
        p.add_argument("--label-col", default=None,
                       help="drop this column before scoring (reports accuracy for predict)")
        p.add_argument("--no-header", dest="header", action="store_false")
        p.add_argument("--out", help="output file (explain with --image-shape: directory)")
        if name == "predict":
            p.add_argument("--proba", action="store_true", help="also print distributions")
        else:
            p.add_argument("--rows", default=None, help="comma-separated row indices")
            p.add_argument("--image-shape", type=_image_shape, default=None,
                           help="HEIGHTxWIDTH; writes P6 overlays with key pixels in red")

    p = sub.add_parser("benchmark", help="repeated DT vs ReDT comparison")
    _add_data_args(p)
    _add_tree_args(p)
    _add_forest_args(p)
    _add_common(p)
    p.add_argument("--runs", type=_positive_int, default=10)
    p.add_argument("--teacher", default="internal-rf",
                   help="internal-rf or imported:PATH (soft labels for every data row)")
    p.add_argument("--grid-step", type=float, default=0.1)
    p.add_argument("--holdout", type=_open_fraction, default=0.25)
    p.add_argument("--train-fraction", type=_open_fraction, default=0.7)
    p.add_argument("--level", type=_open_fraction, default=0.05)
    p.add_argument("--out", help="report CSV")
    p.add_argument("--alpha-out", help="per-alpha CSV")
    return parser


def _load(args):
    if args.dataset:
        label, cats = BENCHMARKS[args.dataset]
        return load_csv(benchmark_path(args.dataset), label, cats), args.dataset
    cats = [c for c in args.categorical.split(",") if c.strip()]
    return (load_csv(args.data, args.label_col, cats, header=args.header),
            os.path.splitext(os.path.basename(args.data))[0])


def _tree_params(args):
    return _tree.TreeParams(min_leaf_size=args.min_leaf, criterion=args.criterion)


def _forest_params(args):
    return ForestParams(tree_count=args.trees, tree_params=_tree_params(args))


def _grid(parser, args):
    try:
        return AlphaGrid.with_step(args.grid_step)
    except ValueError as exc:
        parser.error(f"--grid-step: {exc}")


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_distill(args, parser):
    with _Stage("load"):
        ds, _ = _load(args)
    if ds.n_samples < args.folds:
        parser.error(f"--folds {args.folds} exceeds the {ds.n_samples} data rows")
    with _Stage("distill"):
        soft = cv_soft_labels(ds.features, ds.labels,
                              RandomForestTeacher(_forest_params(args)),
                              CvParams(args.repeats, args.folds, derive_seed(args.seed, "cv")),
                              ds.class_count, jobs=args.jobs)
    for i, acc in enumerate(soft.fold_accuracies):
        log.info("repeat %d fold %d teacher accuracy %.4f",
                    i // args.folds, i % args.folds, acc)
    with _Stage("write"):
        write_soft_labels(soft, args.out or sys.stdout)
    return 0


def cmd_train(args, parser):
    alpha = 1.0 if args.alpha is None and not args.alpha_search else args.alpha
    grid = _grid(parser, args) if args.alpha_search else None
    with _Stage("load"):
        ds, _ = _load(args)
        train, hold = train_test_split(ds, SplitSpec(args.train_fraction,
                                                     derive_seed(args.seed, "split")))
        X, y = ds.features[train], ds.labels[train]
        hard = one_hot(y, ds.class_count)
    with _Stage("soft labels"):
        if args.soft:
            soft = import_soft_labels(args.soft, ds.n_samples, ds.class_count).values[train]
        elif alpha == 1.0:
            soft = hard
        else:
            soft = cv_soft_labels(X, y, RandomForestTeacher(_forest_params(args)),
                                  CvParams(args.repeats, args.folds,
                                           derive_seed(args.seed, "cv")),
                                  ds.class_count, jobs=args.jobs).values
    params = _tree_params(args)
    if args.alpha_search:
        with _Stage("alpha search"):
            search = grid_search_alpha(X, y, soft, grid, params, args.holdout,
                                       derive_seed(args.seed, "alpha"))
        print(f"{'alpha':>6} {'holdout acc':>11} {'nodes':>6}")
        for s in search.scores:
            print(f"{s.alpha:>6.2f} {s.accuracy:>11.4f} {s.node_count:>6d}")
        alpha = search.alpha_star
        print(f"alpha* = {alpha:g}")
    with _Stage("fit"):
        t = _tree.fit(X, mix_labels(hard, soft, alpha), params)
        acc = accuracy(t.predict(ds.features[hold]), ds.labels[hold])
    with _Stage("write"):
        meta = {"alpha": alpha, "feature_names": list(ds.feature_names),
                "class_names": list(ds.class_names),
                "categories": {str(k): list(v) for k, v in ds.categories.items()}}
        _tree.save(t, args.out, meta)
    print(f"nodes {t.node_count}")
    print(f"holdout accuracy {acc:.4f}")
    return 0


def _load_tree_and_rows(args):
    with _Stage("load tree"):
        t, meta = _tree.load(args.tree)
        cats = {int(k): v for k, v in meta.get("categories", {}).items()}
    with _Stage("load data"):
        X = read_features(args.data, t.n_features, cats, header=args.header,
                          drop_col=args.label_col)
    return t, meta, X


def _true_labels(args, meta):
    names = meta.get("class_names")
    if not names:
        return None
    lookup = {n: i for i, n in enumerate(names)}
    try:
        return np.array([lookup[v] for v in read_column(args.data, args.label_col, args.header)])
    except KeyError:
        return None


def cmd_predict(args, parser):
    t, meta, X = _load_tree_and_rows(args)
    names = meta.get("class_names")
    proba = t.predict_proba(X)
    pred = np.argmax(proba, axis=1)
    lines = []
    for p, dist in zip(pred, proba):
        label = names[p] if names else str(p)
        if args.proba:
            label += "," + ",".join(repr(float(v)) for v in dist)
        lines.append(label)
    _emit("\n".join(lines) + "\n", args.out)
    if args.label_col is not None:
        truth = _true_labels(args, meta)
        if truth is not None:
            log.info("accuracy %.4f", accuracy(pred, truth))
    return 0


def cmd_explain(args, parser):
    t, meta, X = _load_tree_and_rows(args)
    rows = (range(X.shape[0]) if args.rows is None
            else [int(r) for r in args.rows.split(",") if r.strip()])
    for r in rows:
        if not 0 <= r < X.shape[0]:
            parser.error(f"--rows: index {r} out of range for {X.shape[0]} rows")
    if args.image_shape is not None:
        h, w = args.image_shape
        if h * w != t.n_features:
            parser.error(f"--image-shape {h}x{w} does not match D={t.n_features}")
    texts = []
    with _Stage("explain"):
        for r in rows:
            e = explain(t, X[r], row_index=r)
            texts.append(e.format(meta.get("feature_names"), meta.get("class_names")))
            if args.image_shape is not None:
                image = overlay_ppm(X[r], e.key_features, args.image_shape)
                if args.out and args.out.endswith(".ppm") and len(rows) == 1:
                    target = args.out
                else:
                    outdir = args.out or "."
                    os.makedirs(outdir, exist_ok=True)
                    target = os.path.join(outdir, f"row_{r}.ppm")
                with open(target, "wb") as f:
                    f.write(image)
                log.info("wrote %s", target)
    if args.image_shape is None:
        _emit("".join(texts), args.out)
    else:
        sys.stdout.write("".join(texts))
    return 0


def cmd_benchmark(args, parser):
    grid = _grid(parser, args)
    if args.teacher != "internal-rf" and not args.teacher.startswith("imported:"):
        parser.error("--teacher must be internal-rf or imported:PATH")
    with _Stage("load"):
        ds, name = _load(args)
    teacher = "internal-rf"
    if args.teacher.startswith("imported:"):
        with _Stage("import soft labels"):
            teacher = import_soft_labels(args.teacher[len("imported:"):], ds.n_samples,
                                         ds.class_count)
    config = BenchmarkConfig(seed=args.seed, train_fraction=args.train_fraction,
                             tree_params=_tree_params(args),
                             forest_params=_forest_params(args),
                             cv_params=CvParams(args.repeats, args.folds),
                             grid=grid, holdout_fraction=args.holdout, level=args.level,
                             jobs=args.jobs)
    with _Stage("benchmark"):
        report = run_benchmark(ds, teacher, args.runs, config, name=name)
    sys.stdout.write(report.to_table())
    with _Stage("write"):
        if args.out:
            with open(args.out, "w", encoding="utf-8") as f:
                f.write(report.to_csv())
        if args.alpha_out:
            with open(args.alpha_out, "w", encoding="utf-8") as f:
                f.write(report.alpha_csv())
    return 0


COMMANDS = {"distill": cmd_distill, "train": cmd_train, "predict": cmd_predict,
            "explain": cmd_explain, "benchmark": cmd_benchmark}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(handler)
    log.propagate = False
    log.setLevel(logging.ERROR if args.quiet else logging.DEBUG if args.verbose else logging.INFO)
    try:
        return COMMANDS[args.command](args, parser)
    except StageError as exc:
        log.error("error: %s", exc)
        return 1
    finally:
        log.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
