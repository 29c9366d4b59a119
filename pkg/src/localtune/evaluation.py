"""Confusion-matrix metrics, the cross-validated experiment driver, and
Scott-Knott ranking gated by bootstrap significance and Cliff's delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from ._seeds import EXPERIMENT, FOLDS, derive_seed
from .dataset import LINK_TYPES, VectorDataset, stratified_folds


def confusion(actual, predicted, n_classes: Optional[int] = None) -> np.ndarray:
    """Counts C[i][j] = instances of class i+1 predicted as class j+1."""
    actual = np.asarray(actual, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if actual.shape != predicted.shape or actual.ndim != 1:
        raise ValueError("actual and predicted must be 1-D and equally long")
    if actual.size == 0:
        raise ValueError("cannot build a confusion matrix from empty input")
    if n_classes is None:
        n_classes = int(max(actual.max(), predicted.max()))
    if actual.min() < 1 or predicted.min() < 1 \
            or max(actual.max(), predicted.max()) > n_classes:
        raise ValueError(f"labels must lie in 1..{n_classes}")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (actual - 1, predicted - 1), 1)
    return cm


@dataclass(frozen=True)
class Metrics:
    precision: np.ndarray  # per class, diagonal over column sum
    recall: np.ndarray     # per class, diagonal over row sum
    f1: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_f1: float


def _safe_div(num, den):
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den != 0)
    return out


def metrics(cm: np.ndarray) -> Metrics:
    """Per-class precision/recall/F1 plus unweighted macro means.

    Zero denominators (class never predicted / never present) yield 0.
    """
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise ValueError("confusion matrix must be square")
    diag = np.diag(cm).astype(np.float64)
    precision = _safe_div(diag, cm.sum(axis=0))
    recall = _safe_div(diag, cm.sum(axis=1))
    f1 = _safe_div(2.0 * recall * precision, precision + recall)
    return Metrics(precision, recall, f1,
                   float(precision.mean()), float(recall.mean()), float(f1.mean()))


def macro_f1(actual, predicted, n_classes: Optional[int] = None) -> float:
    return metrics(confusion(actual, predicted, n_classes)).macro_f1


@dataclass
class FoldRecord:
    repeat: int
    fold: int
    train_seconds: float
    scores: Metrics
    test_ids: tuple


@dataclass
class EvalReport:
    mode: str
    n_classes: int
    folds: list[FoldRecord]
    rank: Optional[int] = None

    def macro_f1_samples(self) -> list[float]:
        return [f.scores.macro_f1 for f in self.folds]

    @property
    def mean_precision(self) -> np.ndarray:
        return np.mean([f.scores.precision for f in self.folds], axis=0)

    @property
    def mean_recall(self) -> np.ndarray:
        return np.mean([f.scores.recall for f in self.folds], axis=0)

    @property
    def mean_f1(self) -> np.ndarray:
        return np.mean([f.scores.f1 for f in self.folds], axis=0)

    @property
    def mean_macro_f1(self) -> float:
        return float(np.mean([f.scores.macro_f1 for f in self.folds]))

    @property
    def mean_macro_precision(self) -> float:
        return float(np.mean([f.scores.macro_precision for f in self.folds]))

    @property
    def mean_macro_recall(self) -> float:
        return float(np.mean([f.scores.macro_recall for f in self.folds]))

    @property
    def mean_train_seconds(self) -> float:
        return float(np.mean([f.train_seconds for f in self.folds]))


def run_experiment(data: VectorDataset, configs, folds: int = 10,
                   repeats: int = 10, seed: int = 0) -> list[EvalReport]:
    """Fit and score every config on the same repeats x folds splits.

    All configs see identical splits (paired comparison); folds run
    sequentially so the per-fold wall-clock training times stay honest.
    """
    from .locallearn import fit_pipeline, predict_pipeline
    reports = []
    for config in configs:
        records = []
        split_iter = stratified_folds(data, folds, repeats,
                                      seed=derive_seed(seed, FOLDS))
        for s, (train, test) in enumerate(split_iter):
            rep, fold = divmod(s, folds)
            cfg = replace(config, seed=derive_seed(seed, EXPERIMENT,
                                                   config.seed, rep, fold))
            model = fit_pipeline(train, cfg)
            pred = predict_pipeline(model, test)
            m = metrics(confusion(test.y, pred, data.n_classes))
            records.append(FoldRecord(rep, fold, model.timing.total, m,
                                      tuple(test.ids)))
        reports.append(EvalReport(config.mode, data.n_classes, records))
    return reports


def cliffs_delta(xs, ys) -> float:
    """(#{x > y} - #{x < y}) / (|xs| * |ys|), in [-1, 1]."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size == 0 or ys.size == 0:
        raise ValueError("cliffs_delta needs non-empty samples")
    gt = int((xs[:, None] > ys[None, :]).sum())
    lt = int((xs[:, None] < ys[None, :]).sum())
    return (gt - lt) / (xs.size * ys.size)


def _best_cut(groups: Sequence[np.ndarray]) -> int:
    """Cut position (1..len-1) maximizing the between-part sum of squares
    over the pooled values; exhaustive over all cut points."""
    pooled = np.concatenate(groups)
    mu = pooled.mean()
    best, best_score = 1, -math.inf
    for cut in range(1, len(groups)):
        left = np.concatenate(groups[:cut])
        right = np.concatenate(groups[cut:])
        score = left.size * (left.mean() - mu) ** 2 \
            + right.size * (right.mean() - mu) ** 2
        if score > best_score:
            best, best_score = cut, score
    return best


def _bootstrap_significant(left: np.ndarray, right: np.ndarray, n_boot: int,
                           confidence: float, rng: np.random.Generator) -> bool:
    """Observed median difference against resampled differences under the
    null (both sides recentered on the pooled median)."""
    observed = abs(float(np.median(left)) - float(np.median(right)))
    center = float(np.median(np.concatenate([left, right])))
    lshift = left - np.median(left) + center
    rshift = right - np.median(right) + center
    lmed = np.median(rng.choice(lshift, size=(n_boot, lshift.size), replace=True), axis=1)
    rmed = np.median(rng.choice(rshift, size=(n_boot, rshift.size), replace=True), axis=1)
    return observed > float(np.percentile(np.abs(lmed - rmed), 100.0 * confidence))


def scott_knott(samples: Mapping[str, Sequence[float]], n_boot: int = 512,
                confidence: float = 0.95, delta_threshold: float = 0.147,
                seed: int = 0) -> dict[str, int]:
    """Rank treatments (1 = best median) by recursive bi-clustering.

    Treatments are sorted by median, then recursively split at the cut that
    most changes the expected value; a split stands only when the bootstrap
    test AND |Cliff's delta| >= delta_threshold both confirm the halves
    differ. Treatments in the same leaf share a rank.
    """
    if not samples:
        return {}
    arrays = {}
    for name, vals in samples.items():
        arr = np.asarray(vals, dtype=np.float64)
        if arr.size == 0:
            raise ValueError(f"treatment {name!r} has no samples")
        arrays[name] = arr
    order = sorted(arrays, key=lambda nm: (-float(np.median(arrays[nm])), nm))
    rng = np.random.default_rng([int(seed)])
    ranks: dict[str, int] = {}
    counter = 1

    def assign(names: list[str]) -> None:
        nonlocal counter
        if len(names) >= 2:
            groups = [arrays[nm] for nm in names]
            cut = _best_cut(groups)
            left = np.concatenate(groups[:cut])
            right = np.concatenate(groups[cut:])
            if abs(cliffs_delta(left, right)) >= delta_threshold \
                    and _bootstrap_significant(left, right, n_boot, confidence, rng):
                assign(names[:cut])
                assign(names[cut:])
                return
        for nm in names:
            ranks[nm] = counter
        counter += 1

    assign(order)
    return ranks


def class_names(n_classes: int) -> list[str]:
    if n_classes == len(LINK_TYPES):
        return [lt.name for lt in LINK_TYPES]
    return [f"class {c}" for c in range(1, n_classes + 1)]


def format_paper_table(report: EvalReport) -> str:
    """Per-class rows plus an Overall row, values x100 rounded to ints."""
    names = class_names(report.n_classes)
    rows = [("Class", "Precision", "Recall", "F1")]
    pct = lambda x: str(int(round(100.0 * float(x))))
    for c, nm in enumerate(names):
        rows.append((nm, pct(report.mean_precision[c]),
                     pct(report.mean_recall[c]), pct(report.mean_f1[c])))
    rows.append(("Overall", pct(report.mean_macro_precision),
                 pct(report.mean_macro_recall), pct(report.mean_macro_f1)))
    widths = [max(len(r[c]) for r in rows) for c in range(4)]
    lines = []
    for r in rows:
        lines.append("  ".join(val.ljust(widths[i]) if i == 0 else val.rjust(widths[i])
                               for i, val in enumerate(r)))
    return "\n".join(lines) + "\n"
