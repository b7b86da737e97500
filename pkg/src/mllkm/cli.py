"""Command-line front end: train, predict, bench, synth."""

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .data import gen_piecewise, load_csv, load_libsvm, load_matrix_csv, save_libsvm, split
from .estimator import LinearSdcaClassifier, MllkmClassifier
from .model import load_model, predict_labels, predict_scores, save_model

BENCH_COLUMNS = ("split", "accuracy", "train_s", "infer_us_per_sample", "kernels", "svs")


def _onoff(value):
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError(f"expected on|off, got {value!r}")
    return value == "on"


def _parse_gammas(value):
    parts = value.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected <lo>:<hi>:<count>, got {value!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad gamma grid {value!r}") from None
    return lo, hi, count


def _load_dataset(path, fmt, label_column):
    if fmt == "libsvm":
        return load_libsvm(path)
    return load_csv(path, 0 if label_column is None else label_column)


def _add_train_flags(p):
    p.add_argument("--data", required=True, help="training data file")
    p.add_argument("--format", choices=("libsvm", "csv"), default="libsvm")
    p.add_argument("--label-column", type=int, default=None, help="CSV label column (default 0)")
    p.add_argument("--family", choices=("exp", "gauss", "linear", "square"), default="gauss")
    p.add_argument("--scope", choices=("global", "component"), default="global")
    p.add_argument("--gammas", type=_parse_gammas, default=(0.01, 10.0, 5), metavar="LO:HI:COUNT",
                   help="log-spaced bandwidth grid (default 0.01:10:5)")
    p.add_argument("--C", type=float, default=100.0)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--budget", type=int, default=64, help="Gram cache budget")
    p.add_argument("--batch", type=int, default=8, help="insertions per probe round")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--standardize", type=_onoff, default=True, metavar="on|off")
    p.add_argument("--reprocess", type=_onoff, default=False, metavar="on|off")


def _make_classifier(args, seed=None):
    lo, hi, count = args.gammas
    return MllkmClassifier(
        family=args.family,
        scope=args.scope,
        gamma_min=lo,
        gamma_max=hi,
        n_gammas=count,
        C=args.C,
        epochs=args.epochs,
        cache_budget=args.budget,
        batch_size=args.batch,
        standardize=args.standardize,
        reprocess=args.reprocess,
        random_state=args.seed if seed is None else seed,
    )


def cmd_train(args):
    data = _load_dataset(args.data, args.format, args.label_column)
    clf = _make_classifier(args)
    log_path = args.log or (os.path.splitext(args.out)[0] + ".log.jsonl")
    with open(log_path, "w") as log:
        clf.fit(
            data.features,
            data.labels,
            progress=lambda rec: print(json.dumps(rec), file=log, flush=True),
        )
    save_model(clf.model_, args.out)
    print(f"selected kernels: {clf.n_kernels_}")
    print(f"objective: {clf.objective_:.6f}")
    print(f"converged: {clf.converged_}")
    print(f"model: {args.out}")
    print(f"log: {log_path}")
    if args.strict and not clf.converged_:
        return 1
    return 0


def cmd_predict(args):
    model = load_model(args.model)
    if args.format == "libsvm":
        ds = load_libsvm(args.data)
        X, y = ds.features, ds.labels
    elif args.label_column is not None:
        ds = load_csv(args.data, args.label_column)
        X, y = ds.features, ds.labels
    else:
        X, y = load_matrix_csv(args.data), None
    if X.shape[1] < model.dim and args.format == "libsvm":
        # trailing all-zero dimensions are dropped by the sparse format
        X = np.hstack([X, np.zeros((X.shape[0], model.dim - X.shape[1]))])
    if X.shape[1] != model.dim:
        raise ValueError(f"data dimension {X.shape[1]} does not match model dimension {model.dim}")
    scores = predict_scores(model, X)
    labels = predict_labels(scores)
    with open(args.out, "w") as fh:
        for s, l in zip(scores, labels):
            fh.write(f"{float(s)!r}\t{int(l):+d}\n")
    print(f"predictions: {args.out}")
    if y is not None:
        print(f"accuracy: {float(np.mean(labels == y)):.4f}")
    return 0


def cmd_synth(args):
    data = gen_piecewise(args.n, args.segments, args.seed)
    save_libsvm(data, args.out)
    print(f"wrote {data.n} samples ({int(np.sum(data.labels > 0))} positive) to {args.out}")
    return 0


def _timed_scores(predict_fn, X):
    """Mean per-sample wall-clock of scoring the full set, best of 3 runs."""
    best = np.inf
    for _ in range(3):
        t0 = time.perf_counter()
        predict_fn(X)
        best = min(best, time.perf_counter() - t0)
    return best / X.shape[0] * 1e6  # microseconds per sample


def _bench_one(data, args, split_idx):
    seed = args.seed + split_idx
    train, test = split(data, args.train_frac, seed)
    clf = _make_classifier(args, seed=seed)
    t0 = time.perf_counter()
    clf.fit(train.features, train.labels)
    train_s = time.perf_counter() - t0
    accuracy = float(np.mean(clf.predict(test.features) == test.labels))
    row = {
        "split": split_idx,
        "accuracy": accuracy,
        "train_s": train_s,
        "infer_us_per_sample": _timed_scores(clf.decision_function, test.features),
        "kernels": clf.n_kernels_,
        "svs": clf.n_support_,
    }
    base_row = None
    if args.baseline == "linear":
        base = LinearSdcaClassifier(C=args.C, standardize=args.standardize, random_state=seed)
        t0 = time.perf_counter()
        base.fit(train.features, train.labels)
        base_row = {
            "split": split_idx,
            "accuracy": float(np.mean(base.predict(test.features) == test.labels)),
            "train_s": time.perf_counter() - t0,
            "infer_us_per_sample": _timed_scores(base.decision_function, test.features),
            "kernels": 1,
            "svs": base.n_support_,
        }
    return row, base_row


def run_benchmark(data, args):
    """Repeated shuffle-split evaluation; returns (rows, baseline_rows)."""
    workers = int(os.environ.get("MLLKM_THREADS", "1"))
    indices = range(args.splits)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: _bench_one(data, args, i), indices))
    else:
        results = [_bench_one(data, args, i) for i in indices]
    rows = [r for r, _ in results]
    base_rows = [b for _, b in results if b is not None]
    return rows, base_rows


def aggregate(rows):
    """Column means and population standard deviations over the split rows."""
    out = {}
    for col in BENCH_COLUMNS[1:]:
        values = np.array([row[col] for row in rows], dtype=np.float64)
        out[col] = (float(values.mean()), float(values.std()))
    return out


def _write_bench_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BENCH_COLUMNS)
        for row in rows:
            writer.writerow([row[col] for col in BENCH_COLUMNS])


def _print_bench_table(name, rows):
    print(f"== {name}")
    header = "  ".join(f"{c:>20}" for c in BENCH_COLUMNS)
    print(header)
    for row in rows:
        print("  ".join(f"{row[c]:>20.6g}" if c != "split" else f"{row[c]:>20}" for c in BENCH_COLUMNS))
    agg = aggregate(rows)
    means = "  ".join([f"{'mean':>20}"] + [f"{agg[c][0]:>20.6g}" for c in BENCH_COLUMNS[1:]])
    stds = "  ".join([f"{'std':>20}"] + [f"{agg[c][1]:>20.6g}" for c in BENCH_COLUMNS[1:]])
    print(means)
    print(stds)


def cmd_bench(args):
    data = _load_dataset(args.data, args.format, args.label_column)
    rows, base_rows = run_benchmark(data, args)
    _print_bench_table("mllkm", rows)
    if args.csv:
        _write_bench_csv(args.csv, rows)
        print(f"csv: {args.csv}")
    if base_rows:
        _print_bench_table("baseline (linear)", base_rows)
        if args.csv:
            base_path = os.path.splitext(args.csv)[0] + "_baseline.csv"
            _write_bench_csv(base_path, base_rows)
            print(f"baseline csv: {base_path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mllkm",
        description="Train, evaluate and apply sparse locally linear kernel machines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and write it as JSON")
    _add_train_flags(p_train)
    p_train.add_argument("--out", required=True, help="model output path")
    p_train.add_argument("--log", default=None, help="JSONL training log (default: <out>.log.jsonl)")
    p_train.add_argument("--strict", action="store_true",
                         help="exit non-zero when training did not converge")
    p_train.set_defaults(func=cmd_train)

    p_pred = sub.add_parser("predict", help="score a data file with a trained model")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--data", required=True)
    p_pred.add_argument("--format", choices=("libsvm", "csv"), default="libsvm")
    p_pred.add_argument("--label-column", type=int, default=None,
                        help="CSV label column; omit for unlabeled CSV input")
    p_pred.add_argument("--out", required=True, help="predictions output path")
    p_pred.set_defaults(func=cmd_predict)

    p_bench = sub.add_parser("bench", help="repeated shuffle-split benchmark")
    _add_train_flags(p_bench)
    p_bench.add_argument("--splits", type=int, default=10)
    p_bench.add_argument("--train-frac", type=float, default=0.7)
    p_bench.add_argument("--baseline", choices=("linear",), default=None)
    p_bench.add_argument("--csv", default=None, help="per-split metrics output path")
    p_bench.set_defaults(func=cmd_bench)

    p_synth = sub.add_parser("synth", help="generate a piecewise-linear synthetic dataset")
    p_synth.add_argument("--n", type=int, required=True)
    p_synth.add_argument("--segments", type=int, default=4)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
