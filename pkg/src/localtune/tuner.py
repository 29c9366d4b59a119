"""Differential-evolution search over classifier hyperparameters.

The optimizer keeps a frontier of n candidates. Each generation builds a
replacement frontier slot by slot: pick three distinct other members x, y,
z, copy the incumbent, and with probability cf per attribute set
new[j] = x[j] + f * (z[j] - y[j]); the better of (new, incumbent) fills the
slot. Every improvement of the global best adds one life; one life is spent
per generation; the search stops when lives run out. The returned candidate
is the best ever evaluated (the initial frontier counts), so seeding the
frontier with the default configuration guarantees tuned-never-worse on the
tuning split.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._seeds import derive_seed, TUNE_SPLIT
from .classifiers import (KnnConfig, SvmConfig, SvmWorkspace, _knn_vote,
                          default_config, svm_fit, svm_predict_workspace)
from .dataset import VectorDataset, stratified_holdout

logger = logging.getLogger("localtune.tuner")

_DE_RNG = 11  # seed-derivation code for the optimizer's own rng


@dataclass(frozen=True)
class Param:
    name: str
    kind: str  # continuous | integer | categorical
    low: float = 0.0
    high: float = 0.0
    categories: tuple = ()

    def __post_init__(self):
        if self.kind not in ("continuous", "integer", "categorical"):
            raise ValueError(f"unknown param kind {self.kind!r}")
        if self.kind == "categorical":
            if not self.categories:
                raise ValueError(f"param {self.name}: empty category list")
        elif self.high < self.low:
            raise ValueError(f"param {self.name}: empty range")


@dataclass(frozen=True)
class ParamSpace:
    params: tuple[Param, ...]

    @property
    def dim(self) -> int:
        return len(self.params)

    def decode(self, encoding) -> dict:
        """Total function: clamp continuous, round-then-clamp integers,
        floor-then-clamp categorical slots."""
        encoding = np.asarray(encoding, dtype=np.float64)
        if encoding.shape != (self.dim,):
            raise ValueError(f"encoding must have {self.dim} slots")
        out = {}
        for v, p in zip(encoding, self.params):
            if p.kind == "continuous":
                out[p.name] = float(min(max(v, p.low), p.high))
            elif p.kind == "integer":
                out[p.name] = int(min(max(round(float(v)), p.low), p.high))
            else:
                idx = int(min(max(math.floor(v), 0), len(p.categories) - 1))
                out[p.name] = p.categories[idx]
        return out

    def encode(self, values: dict) -> np.ndarray:
        enc = np.empty(self.dim)
        for s, p in enumerate(self.params):
            v = values[p.name]
            if p.kind == "categorical":
                enc[s] = p.categories.index(v) + 0.5
            else:
                enc[s] = float(v)
        return enc

    def random_encoding(self, rng: np.random.Generator) -> np.ndarray:
        enc = np.empty(self.dim)
        for s, p in enumerate(self.params):
            if p.kind == "categorical":
                enc[s] = rng.uniform(0.0, len(p.categories))
            else:
                enc[s] = rng.uniform(p.low, p.high)
        return enc


def decode(space: ParamSpace, encoding) -> dict:
    return space.decode(encoding)


def svm_param_space() -> ParamSpace:
    return ParamSpace((
        Param("C", "continuous", 1.0, 50.0),
        Param("kernel", "categorical", categories=kernels.SVM_KERNELS),
        Param("gamma", "continuous", 0.0, 1.0),
        Param("coef0", "continuous", 0.0, 1.0),
    ))


def knn_param_space() -> ParamSpace:
    return ParamSpace((
        Param("n_neighbors", "integer", 2, 10),
        Param("weights", "categorical", categories=("uniform", "distance")),
    ))


@dataclass(frozen=True)
class DeSettings:
    n: int = 10       # frontier size
    cf: float = 0.3   # per-attribute crossover probability
    f: float = 0.75   # differential weight
    lives: int = 60   # initial termination budget

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("frontier size must be >= 4 (need three distinct partners)")
        if not 0.0 <= self.cf <= 1.0:
            raise ValueError("cf must lie in [0, 1]")
        if self.f <= 0:
            raise ValueError("f must be positive")
        if self.lives < 1:
            raise ValueError("lives must be >= 1")


@dataclass
class Candidate:
    encoding: np.ndarray
    decoded: dict
    score: float = math.nan


def de_optimize(space: ParamSpace, objective, settings: DeSettings = DeSettings(),
                seed: int = 0, init=None) -> Candidate:
    """Maximize ``objective(candidate)``; returns the best candidate ever
    evaluated. ``init`` encodings fill the first frontier slots."""
    n = settings.n
    if n < 4:
        raise ValueError("frontier size must be >= 4")
    rng = np.random.default_rng([int(seed)])
    encodings = []
    for enc in (init or []):
        enc = np.asarray(enc, dtype=np.float64)
        if enc.shape != (space.dim,):
            raise ValueError("init encodings must match the space dimension")
        encodings.append(enc.copy())
    if len(encodings) > n:
        raise ValueError("more init encodings than frontier slots")
    while len(encodings) < n:
        encodings.append(space.random_encoding(rng))

    def evaluate(enc: np.ndarray) -> Candidate:
        cand = Candidate(enc, space.decode(enc))
        cand.score = float(objective(cand))
        return cand

    frontier = [evaluate(enc) for enc in encodings]
    best = max(frontier, key=lambda c: c.score)
    lives = settings.lives
    generation = 0
    while lives > 0:
        lives -= 1
        generation += 1
        tmp = []
        for i in range(n):
            old = frontier[i]
            others = [j for j in range(n) if j != i]
            picks = rng.choice(len(others), size=3, replace=False)
            x = frontier[others[picks[0]]].encoding
            y = frontier[others[picks[1]]].encoding
            z = frontier[others[picks[2]]].encoding
            enc = old.encoding.copy()
            for s in range(space.dim):
                if rng.random() < settings.cf:
                    enc[s] = x[s] + settings.f * (z[s] - y[s])
            new = evaluate(enc)
            tmp.append(new if new.score > old.score else old)
            if new.score > best.score:
                best = new
                lives += 1
        frontier = tmp
        logger.info("generation=%d best_score=%.6f lives=%d",
                    generation, best.score, lives)
    return best


@dataclass
class TuneResult:
    config: object
    tuning_f1: float


def tuning_split(train: VectorDataset, seed: int = 0):
    """The 90/10 stratified split used for tuning; exposed so callers can
    reproduce the objective."""
    return stratified_holdout(train, 0.1, seed=derive_seed(seed, TUNE_SPLIT))


def _macro_f1(actual, predicted, n_classes) -> float:
    from .evaluation import confusion, metrics
    return metrics(confusion(actual, predicted, n_classes)).macro_f1


def tune_learner(train: VectorDataset, learner_kind: str,
                 settings: DeSettings = DeSettings(), seed: int = 0) -> TuneResult:
    """Search the learner's hyperparameter space, maximizing macro F1 of a
    model fit on 90% of ``train`` and scored on the held-out 10%.

    The default configuration always occupies one frontier slot, so the
    returned config never scores below it on the tuning split. Degenerate
    splits (an empty part, or a single-class fit part) fall back to the
    default config with a warning.
    """
    if learner_kind not in ("svm", "knn"):
        raise ValueError("learner_kind must be 'svm' or 'knn'")
    cfg_default = default_config(learner_kind)
    fit_idx, tune_idx = tuning_split(train, seed)
    if len(tune_idx) == 0 or len(fit_idx) == 0 \
            or np.unique(train.y[fit_idx]).size < 2:
        warnings.warn("degenerate tuning split; keeping the default config")
        return TuneResult(cfg_default, math.nan)
    fit_ds = train.subset(fit_idx)
    tune_ds = train.subset(tune_idx)
    n_classes = train.n_classes

    if learner_kind == "svm":
        space = svm_param_space()
        ws = SvmWorkspace(fit_ds, X_eval=tune_ds.X)
        default_enc = space.encode({"C": cfg_default.C, "kernel": cfg_default.kernel,
                                    "gamma": 1.0 / train.d, "coef0": cfg_default.coef0})

        def objective(cand: Candidate) -> float:
            cfg = SvmConfig(C=cand.decoded["C"], kernel=cand.decoded["kernel"],
                            gamma=cand.decoded["gamma"], coef0=cand.decoded["coef0"])
            model = svm_fit(fit_ds, cfg, workspace=ws)
            pred = svm_predict_workspace(model, ws)
            return _macro_f1(tune_ds.y, pred, n_classes)

        def make_config(decoded: dict) -> SvmConfig:
            return SvmConfig(C=decoded["C"], kernel=decoded["kernel"],
                             gamma=decoded["gamma"], coef0=decoded["coef0"])
    else:
        space = knn_param_space()
        depth = min(10, len(fit_ds))
        D2 = kernels.sq_dists_hybrid(tune_ds.X, fit_ds.X)
        order = np.argsort(D2, axis=1, kind="stable")[:, :depth]
        dists = np.sqrt(np.take_along_axis(D2, order, axis=1))
        labels_sorted = fit_ds.y[order]
        default_enc = space.encode({"n_neighbors": cfg_default.n_neighbors,
                                    "weights": cfg_default.weights})

        def objective(cand: Candidate) -> float:
            k = min(cand.decoded["n_neighbors"], depth)
            pred = _knn_vote(labels_sorted[:, :k], dists[:, :k],
                             cand.decoded["weights"], n_classes)
            return _macro_f1(tune_ds.y, pred, n_classes)

        def make_config(decoded: dict) -> KnnConfig:
            return KnnConfig(n_neighbors=decoded["n_neighbors"],
                             weights=decoded["weights"])

    best = de_optimize(space, objective, settings,
                       seed=derive_seed(seed, _DE_RNG), init=[default_enc])
    return TuneResult(make_config(best.decoded), best.score)
