"""Command-line interface.

Subcommands: synth (generate blob datasets), bench (cross-validated
metric/timing comparison of modes), tune (DE-tune one learner), fit (train
one pipeline to a model directory), predict (apply a saved pipeline).
Report files are written atomically (write-then-rename) so a failed run
never leaves truncated outputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import tempfile

from .dataset import FORMATS, load_dataset, save_dataset, synthetic_blobs
from .evaluation import (class_names, format_paper_table, run_experiment,
                         scott_knott)
from .locallearn import (MODES, PipelineConfig, fit_pipeline, load_pipeline,
                         predict_pipeline, save_pipeline)
from .smo import backend
from .tuner import DeSettings, tune_learner


def _write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _add_de_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--de-frontier", type=int, default=10, help="frontier size")
    p.add_argument("--de-cf", type=float, default=0.3, help="crossover probability")
    p.add_argument("--de-f", type=float, default=0.75, help="differential weight")
    p.add_argument("--de-lives", type=int, default=60, help="initial lives budget")


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kmin", type=int, default=3, help="smallest cluster count tried")
    p.add_argument("--kmax", type=int, default=15,
                   help="cluster-count upper bound (exclusive)")
    p.add_argument("--nrefs", type=int, default=3,
                   help="reference samples per cluster count")
    p.add_argument("--fixed-k", type=int, default=None,
                   help="skip cluster-count selection and use this k")
    p.add_argument("--parallel", type=int, default=1, metavar="WIDTH",
                   help="worker-pool width for per-cluster training")
    p.add_argument("--min-tune-size", type=int, default=10,
                   help="clusters smaller than this keep default configs")
    _add_de_flags(p)


def _de_settings(args) -> DeSettings:
    return DeSettings(n=args.de_frontier, cf=args.de_cf, f=args.de_f,
                      lives=args.de_lives)


def _pipeline_config(mode: str, args) -> PipelineConfig:
    return PipelineConfig(mode=mode, seed=args.seed, k_min=args.kmin,
                          k_max=args.kmax, nrefs=args.nrefs,
                          fixed_k=args.fixed_k, de=_de_settings(args),
                          n_jobs=args.parallel,
                          min_tune_size=args.min_tune_size)


def cmd_synth(args) -> int:
    blobs = args.blobs if args.blobs is not None else args.classes
    data = synthetic_blobs(args.n, args.dim, args.classes, blobs,
                           args.sigma, seed=args.seed, spread=args.spread,
                           class_sep=args.class_sep,
                           blob_classes=args.blob_classes)
    save_dataset(data, args.out)
    print(f"wrote {args.out}: {args.n} instances, dim={args.dim}, "
          f"classes={args.classes}, blobs={blobs}")
    return 0


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_bench(args) -> int:
    data = load_dataset(args.data, args.format)
    for m in args.modes:
        if m not in MODES:
            raise ValueError(f"unknown mode {m!r}; expected one of {MODES}")
    configs = [_pipeline_config(m, args) for m in args.modes]
    reports = run_experiment(data, configs, folds=args.folds,
                             repeats=args.repeats, seed=args.seed)
    ranks = scott_knott({r.mode: r.macro_f1_samples() for r in reports},
                        seed=args.seed)
    for r in reports:
        r.rank = ranks[r.mode]

    names = class_names(data.n_classes)
    metric_lines = ["mode,class,precision,recall,f1,rank,train_seconds"]
    for r in reports:
        for c, nm in enumerate(names):
            metric_lines.append(
                f"{r.mode},{nm},{_fmt(r.mean_precision[c])},"
                f"{_fmt(r.mean_recall[c])},{_fmt(r.mean_f1[c])},"
                f"{r.rank},{_fmt(r.mean_train_seconds)}")
        metric_lines.append(
            f"{r.mode},overall,{_fmt(r.mean_macro_precision)},"
            f"{_fmt(r.mean_macro_recall)},{_fmt(r.mean_macro_f1)},"
            f"{r.rank},{_fmt(r.mean_train_seconds)}")

    table_parts = []
    for r in reports:
        table_parts.append(f"== {r.mode} (rank {r.rank}) ==\n"
                           + format_paper_table(r))
    timing_lines = ["mode,seconds_mean,measured,source"]
    for r in reports:
        timing_lines.append(f"{r.mode},{_fmt(r.mean_train_seconds)},true,measured")
    if args.reference_times:
        with open(args.reference_times, "r", encoding="utf-8") as fh:
            for name, secs in sorted(json.load(fh).items()):
                timing_lines.append(f"{name},{_fmt(secs)},false,reference")
    plot_lines = ["mode,seconds,f1"]
    for r in reports:
        for f in r.folds:
            plot_lines.append(f"{r.mode},{_fmt(f.train_seconds)},{_fmt(f.scores.macro_f1)}")

    results = {
        "dataset": os.path.abspath(args.data),
        "folds": args.folds, "repeats": args.repeats, "seed": args.seed,
        "parallel": args.parallel, "smo_backend": backend(),
        "modes": {r.mode: {
            "rank": r.rank,
            "macro_f1_mean": r.mean_macro_f1,
            "macro_precision_mean": r.mean_macro_precision,
            "macro_recall_mean": r.mean_macro_recall,
            "train_seconds_mean": r.mean_train_seconds,
            "per_class_f1_mean": [float(v) for v in r.mean_f1],
            "folds": [{"repeat": f.repeat, "fold": f.fold,
                       "train_seconds": f.train_seconds,
                       "macro_f1": f.scores.macro_f1} for f in r.folds],
        } for r in reports},
    }

    out = args.out
    _write_atomic(os.path.join(out, "metrics.csv"), "\n".join(metric_lines) + "\n")
    _write_atomic(os.path.join(out, "paper_table.txt"), "\n".join(table_parts))
    _write_atomic(os.path.join(out, "timings.csv"), "\n".join(timing_lines) + "\n")
    _write_atomic(os.path.join(out, "plot_data.csv"), "\n".join(plot_lines) + "\n")
    _write_atomic(os.path.join(out, "results.json"), json.dumps(results, indent=1))
    print(f"wrote metrics.csv, paper_table.txt, timings.csv, plot_data.csv, "
          f"results.json to {out}")
    return 0


def cmd_tune(args) -> int:
    data = load_dataset(args.data, args.format)
    logging.getLogger("localtune.tuner").setLevel(logging.INFO)
    res = tune_learner(data, args.learner, _de_settings(args), seed=args.seed)
    payload = {"learner": args.learner, "tuning_f1": res.tuning_f1,
               "config": dataclasses.asdict(res.config)}
    _write_atomic(args.out, json.dumps(payload, indent=1))
    print(f"best {args.learner} config (tuning F1 "
          f"{res.tuning_f1:.4f}): {res.config}")
    return 0


def cmd_fit(args) -> int:
    data = load_dataset(args.data, args.format)
    config = _pipeline_config(args.mode, args)
    model = fit_pipeline(data, config)
    save_pipeline(model, args.out)
    k = model.k if model.kind == "local" else 1
    print(f"fit {args.mode} in {model.timing.total:.2f}s "
          f"({'%d clusters' % k if model.kind == 'local' else 'global model'}); "
          f"saved to {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = load_pipeline(args.model)
    data = load_dataset(args.data, args.format)
    pred = predict_pipeline(model, data)
    lines = [f"{data.ids[i]},{int(pred[i])}" for i in range(len(data))]
    _write_atomic(args.out, "\n".join(lines) + "\n")
    correct = int((pred == data.y).sum())
    print(f"wrote {len(lines)} predictions to {args.out} "
          f"(agreement with file labels: {correct}/{len(lines)})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="localtune",
        description="Cluster-then-tune-then-learn local model pipelines.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a Gaussian-blob dataset file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--blobs", type=int, default=None,
                   help="cluster count (default: same as --classes)")
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--class-sep", type=float, default=3.0,
                   help="class-center offset inside a blob, in sigmas")
    p.add_argument("--blob-classes", choices=("all", "one"), default="all",
                   help="'all': every blob holds every class; 'one': pure blobs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="cross-validated comparison of modes")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=FORMATS, default="vector-rows")
    p.add_argument("--modes", nargs="+", required=True,
                   help=f"any of {', '.join(MODES)}")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--reference-times", default=None,
                   help="JSON file of published times to annotate timings.csv")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("tune", help="DE-tune a single learner on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=FORMATS, default="vector-rows")
    p.add_argument("--learner", choices=("svm", "knn"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output JSON file")
    _add_de_flags(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("fit", help="fit one mode and save the model directory")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=FORMATS, default="vector-rows")
    p.add_argument("--mode", choices=MODES, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model output directory")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="apply a saved pipeline to a dataset")
    p.add_argument("--model", required=True, help="model directory from fit")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=FORMATS, default="vector-rows")
    p.add_argument("--out", required=True, help="predictions file (id,label)")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("LOCALTUNE_LOGLEVEL", "WARNING"),
                        format="%(name)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
