"""The cluster-then-tune-then-learn pipeline.

Local modes cluster the training data (cluster count picked by the gap
statistic unless fixed), fit one classifier per cluster (DE-tuned in the
DE modes), and route each test point to the model of its nearest centroid.
Global modes fit a single classifier on all the data. Wall-clock training
time is recorded per component; prediction time is never included.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._seeds import CLUSTER_TUNE, GAP, KMEANS, derive_seed
from .classifiers import (KnnConfig, SvmConfig, default_config, knn_fit,
                          load_model, save_model, svm_fit)
from .clustering import ClusterModel, GapResult, assign_many, gap_statistic, kmeans_fit
from .dataset import VectorDataset
from .tuner import DeSettings, tune_learner

MODES = ("SVM", "KNN", "DE_SVM", "DE_KNN",
         "KMeans_SVM", "KMeans_KNN", "KMeans_DE_SVM", "KMeans_DE_KNN")


@dataclass
class PipelineConfig:
    mode: str
    seed: int = 0
    k_min: int = 3
    k_max: int = 15          # exclusive, searched counts are [k_min, k_max)
    nrefs: int = 3
    fixed_k: Optional[int] = None  # skip cluster-count selection entirely
    gap_formula: str = "paper"
    de: DeSettings = field(default_factory=DeSettings)
    n_jobs: int = 1          # >1 fits clusters in a worker pool
    min_tune_size: int = 10  # clusters smaller than this skip tuning
    kmeans_max_iter: int = 300
    kmeans_tol: float = 1e-4

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be >= 1")
        if self.fixed_k is None and self.k_max <= self.k_min:
            raise ValueError("k_max must exceed k_min")

    @property
    def is_local(self) -> bool:
        return self.mode.startswith("KMeans_")

    @property
    def tuned(self) -> bool:
        return "DE_" in self.mode

    @property
    def learner(self) -> str:
        return "svm" if self.mode.endswith("SVM") else "knn"


@dataclass
class Timing:
    total: float = 0.0
    gap: float = 0.0
    kmeans: float = 0.0
    clusters: tuple = ()

    @property
    def clusters_sum(self) -> float:
        return float(sum(self.clusters))

    def to_dict(self) -> dict:
        return {"total": self.total, "gap": self.gap, "kmeans": self.kmeans,
                "clusters": list(self.clusters)}


@dataclass
class ClusterRecord:
    """What was fit for one cluster (or for the single global model)."""
    config: object
    tuned: bool
    tuning_f1: float
    size: int


class GlobalPipelineModel:
    kind = "global"

    def __init__(self, mode, model, record: ClusterRecord, timing: Timing):
        self.mode = mode
        self.model = model
        self.record = record
        self.timing = timing

    def predict(self, X) -> np.ndarray:
        return self.model.predict(X)


class LocalPipelineModel:
    kind = "local"

    def __init__(self, mode, clusters: ClusterModel, models, records,
                 timing: Timing, gap: Optional[GapResult] = None):
        self.mode = mode
        self.clusters = clusters
        self.models = list(models)
        self.records = list(records)
        self.timing = timing
        self.gap = gap

    @property
    def k(self) -> int:
        return self.clusters.k

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        routed = assign_many(self.clusters, X)
        out = np.empty(X.shape[0], dtype=np.int64)
        for c in np.unique(routed):
            mask = routed == c
            out[mask] = self.models[c].predict(X[mask])
        return out


def _fit_learner(learner: str, data: VectorDataset, config):
    return svm_fit(data, config) if learner == "svm" else knn_fit(data, config)


def _cluster_task(args):
    """Tune (if asked) and fit one cluster; module-level so a process pool
    can pickle it. Sequential fitting calls this too, keeping both paths
    identical."""
    sub, learner, tune, de, child_seed = args
    tstart = time.perf_counter()
    tuned = False
    tuning_f1 = math.nan
    cfg = default_config(learner)
    if tune and np.unique(sub.y).size >= 2:
        res = tune_learner(sub, learner, de, seed=child_seed)
        cfg, tuning_f1, tuned = res.config, res.tuning_f1, True
    model = _fit_learner(learner, sub, cfg)
    record = ClusterRecord(cfg, tuned, tuning_f1, len(sub))
    return model, record, time.perf_counter() - tstart


def fit_pipeline(train: VectorDataset, config: PipelineConfig):
    """Fit the configured mode; returns a Local- or GlobalPipelineModel."""
    t0 = time.perf_counter()
    learner = config.learner

    if not config.is_local:
        # a global model is cluster 0 of a one-cluster pipeline: sharing the
        # seed derivation makes k=1 local modes reduce to global modes exactly
        model, record, _ = _cluster_task(
            (train, learner, config.tuned,
             config.de, derive_seed(config.seed, CLUSTER_TUNE, 0)))
        timing = Timing(total=time.perf_counter() - t0)
        return GlobalPipelineModel(config.mode, model, record, timing)

    gap_res = None
    gap_time = 0.0
    if config.fixed_k is not None:
        k = config.fixed_k
    else:
        tg = time.perf_counter()
        gap_res = gap_statistic(train.X, config.k_min, config.k_max, config.nrefs,
                                seed=derive_seed(config.seed, GAP),
                                formula=config.gap_formula,
                                max_iter=config.kmeans_max_iter,
                                tol=config.kmeans_tol)
        k = gap_res.chosen_k
        gap_time = time.perf_counter() - tg

    tk = time.perf_counter()
    clusters = kmeans_fit(train.X, k, seed=derive_seed(config.seed, KMEANS),
                          max_iter=config.kmeans_max_iter, tol=config.kmeans_tol)
    kmeans_time = time.perf_counter() - tk

    member_idx = [np.flatnonzero(clusters.assignments == c) for c in range(k)]
    tasks = []
    for c in range(k):
        sub = train.subset(member_idx[c])
        tune = config.tuned and len(sub) >= config.min_tune_size
        tasks.append((sub, learner, tune, config.de,
                      derive_seed(config.seed, CLUSTER_TUNE, c)))

    if config.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=config.n_jobs) as pool:
            results = list(pool.map(_cluster_task, tasks))
    else:
        results = [_cluster_task(t) for t in tasks]

    models = [r[0] for r in results]
    records = [r[1] for r in results]
    cluster_times = tuple(r[2] for r in results)
    timing = Timing(total=time.perf_counter() - t0, gap=gap_time,
                    kmeans=kmeans_time, clusters=cluster_times)
    return LocalPipelineModel(config.mode, clusters, models, records,
                              timing, gap=gap_res)


def predict_pipeline(model, test) -> np.ndarray:
    """Predict labels for a VectorDataset or a 2-D array, in input order."""
    X = test.X if isinstance(test, VectorDataset) else np.asarray(test, dtype=np.float64)
    return model.predict(X)


# --- directory serialization ---------------------------------------------------

def _config_to_dict(cfg) -> dict:
    if isinstance(cfg, SvmConfig):
        return {"learner": "svm", "C": cfg.C, "kernel": cfg.kernel,
                "gamma": cfg.gamma, "coef0": cfg.coef0}
    if isinstance(cfg, KnnConfig):
        return {"learner": "knn", "n_neighbors": cfg.n_neighbors,
                "weights": cfg.weights}
    raise ValueError(f"unknown config type {type(cfg)!r}")


def _config_from_dict(d: dict):
    d = dict(d)
    learner = d.pop("learner")
    return SvmConfig(**d) if learner == "svm" else KnnConfig(**d)


def _record_to_dict(rec: ClusterRecord) -> dict:
    return {"config": _config_to_dict(rec.config), "tuned": rec.tuned,
            "tuning_f1": rec.tuning_f1, "size": rec.size}


def _record_from_dict(d: dict) -> ClusterRecord:
    return ClusterRecord(_config_from_dict(d["config"]), d["tuned"],
                         d["tuning_f1"], d["size"])


def save_pipeline(model, outdir) -> None:
    """Write a fitted pipeline as a directory of text artifacts."""
    os.makedirs(outdir, exist_ok=True)
    manifest = {"kind": model.kind, "mode": model.mode,
                "timing": model.timing.to_dict()}
    if model.kind == "global":
        manifest["record"] = _record_to_dict(model.record)
        save_model(model.model, os.path.join(outdir, "model.json"))
    else:
        manifest["k"] = model.k
        manifest["records"] = [_record_to_dict(r) for r in model.records]
        if model.gap is not None:
            manifest["gap"] = {"chosen_k": model.gap.chosen_k,
                               "formula": model.gap.formula,
                               "gaps": [[r.k, r.gap] for r in model.gap.records]}
        model.clusters.save_text(os.path.join(outdir, "centroids.txt"))
        for c, m in enumerate(model.models):
            save_model(m, os.path.join(outdir, f"model_{c:03d}.json"))
    with open(os.path.join(outdir, "pipeline.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)


def load_pipeline(outdir):
    with open(os.path.join(outdir, "pipeline.json"), "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    timing = Timing(**{k: tuple(v) if k == "clusters" else v
                       for k, v in manifest["timing"].items()})
    if manifest["kind"] == "global":
        model = load_model(os.path.join(outdir, "model.json"))
        return GlobalPipelineModel(manifest["mode"], model,
                                   _record_from_dict(manifest["record"]), timing)
    clusters = ClusterModel.load_text(os.path.join(outdir, "centroids.txt"))
    models = [load_model(os.path.join(outdir, f"model_{c:03d}.json"))
              for c in range(manifest["k"])]
    records = [_record_from_dict(d) for d in manifest["records"]]
    return LocalPipelineModel(manifest["mode"], clusters, models, records,
                              timing)
