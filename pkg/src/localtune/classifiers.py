"""KNN and kernel-SVM classifiers with a small tunable surface.

SVM: soft-margin dual solved per class pair (one-vs-one voting), kernels
linear / poly (degree 3) / rbf / sigmoid. KNN: brute-force neighbors with
uniform or inverse-distance voting. All tie-breaks resolve to the smallest
class id; an exact-match neighbor (distance 0) wins a distance-weighted
vote outright.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from . import kernels
from .dataset import VectorDataset
from .smo import smo_solve

KNN_WEIGHTS = ("uniform", "distance")
SVM_KERNELS = kernels.SVM_KERNELS


class InvalidKernelError(ValueError):
    """Kernel evaluation produced non-finite values."""


@dataclass(frozen=True)
class KnnConfig:
    n_neighbors: int = 5
    weights: str = "uniform"

    def __post_init__(self):
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        if self.weights not in KNN_WEIGHTS:
            raise ValueError(f"weights must be one of {KNN_WEIGHTS}")


@dataclass(frozen=True)
class SvmConfig:
    C: float = 1.0
    kernel: str = "rbf"
    gamma: float | None = None  # None -> 1/d at fit time
    coef0: float = 0.0

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.kernel not in SVM_KERNELS:
            raise ValueError(f"kernel must be one of {SVM_KERNELS}")
        if self.gamma is not None and (not np.isfinite(self.gamma) or self.gamma < 0):
            raise ValueError("gamma must be finite and >= 0")


def default_config(learner_kind: str):
    if learner_kind == "svm":
        return SvmConfig()
    if learner_kind == "knn":
        return KnnConfig()
    raise ValueError(f"unknown learner kind {learner_kind!r}")


class ConstantModel:
    """Degenerate single-class model (e.g. a pure cluster)."""

    kind = "constant"

    def __init__(self, label: int, d: int, n_classes: int):
        self.label = int(label)
        self.d = int(d)
        self.n_classes = int(n_classes)

    def predict(self, X) -> np.ndarray:
        X = _check_points(X, self.d)
        return np.full(X.shape[0], self.label, dtype=np.int64)


class KnnModel:
    kind = "knn"

    def __init__(self, X, y, config: KnnConfig, n_classes: int):
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        self.config = config
        self.n_classes = int(n_classes)
        self.d = self.X.shape[1]

    def predict(self, X) -> np.ndarray:
        X = _check_points(X, self.d)
        k = self.config.n_neighbors
        D2 = kernels.sq_dists_hybrid(X, self.X)
        order = np.argsort(D2, axis=1, kind="stable")[:, :k]
        dists = np.sqrt(np.take_along_axis(D2, order, axis=1))
        return _knn_vote(self.y[order], dists, self.config.weights, self.n_classes)


class PairClassifier:
    """One cell of the one-vs-one scheme: decision > 0 votes class_lo."""

    __slots__ = ("class_lo", "class_hi", "sv", "dual_coef", "intercept", "sv_local")

    def __init__(self, class_lo, class_hi, sv, dual_coef, intercept, sv_local=None):
        self.class_lo = int(class_lo)
        self.class_hi = int(class_hi)
        self.sv = np.asarray(sv, dtype=np.float64)
        self.dual_coef = np.asarray(dual_coef, dtype=np.float64)
        self.intercept = float(intercept)
        self.sv_local = sv_local  # positions within the pair's training rows


class SvmModel:
    kind = "svm"

    def __init__(self, pairs, classes, config: SvmConfig, gamma: float,
                 d: int, n_classes: int):
        self.pairs = list(pairs)
        self.classes = np.asarray(classes, dtype=np.int64)
        self.config = config
        self.gamma = float(gamma)  # resolved value (config.gamma may be None)
        self.d = int(d)
        self.n_classes = int(n_classes)

    def pair_decisions(self, X) -> np.ndarray:
        X = _check_points(X, self.d)
        dec = np.empty((X.shape[0], len(self.pairs)))
        for p, pair in enumerate(self.pairs):
            K = kernels.kernel_matrix(self.config.kernel, X, pair.sv,
                                      self.gamma, self.config.coef0)
            dec[:, p] = K @ pair.dual_coef + pair.intercept
        return dec

    def predict(self, X) -> np.ndarray:
        return _ovo_vote(self.pair_decisions(X),
                         [(p.class_lo, p.class_hi) for p in self.pairs],
                         self.n_classes)


def _check_points(X, d: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != d:
        raise ValueError(f"expected points of dimension {d}, got shape {X.shape}")
    return X


def _knn_vote(labels_k, dists_k, weights: str, n_classes: int) -> np.ndarray:
    """Vote among the k nearest (nearest-first columns)."""
    nq, k = labels_k.shape
    if weights == "uniform":
        w = np.ones_like(dists_k)
    else:
        with np.errstate(divide="ignore"):
            w = 1.0 / dists_k
        exact = dists_k == 0.0
        hit = exact.any(axis=1)
        if hit.any():
            # an exact match wins outright: only distance-0 neighbors vote
            w[hit] = exact[hit].astype(np.float64)
    scores = np.zeros((nq, n_classes + 1))
    rows = np.repeat(np.arange(nq), k)
    np.add.at(scores, (rows, labels_k.ravel()), w.ravel())
    # argmax keeps the first (= smallest) class id on ties
    return scores[:, 1:].argmax(axis=1).astype(np.int64) + 1


def _ovo_vote(decisions, pair_classes, n_classes: int) -> np.ndarray:
    nq = decisions.shape[0]
    counts = np.zeros((nq, n_classes + 1))
    for p, (lo, hi) in enumerate(pair_classes):
        lo_wins = decisions[:, p] >= 0.0  # exact zero goes to the smaller id
        counts[lo_wins, lo] += 1.0
        counts[~lo_wins, hi] += 1.0
    return counts[:, 1:].argmax(axis=1).astype(np.int64) + 1


def knn_fit(train: VectorDataset, config: KnnConfig = KnnConfig()) -> KnnModel:
    if len(train) == 0:
        raise ValueError("cannot fit KNN on an empty training set")
    k = config.n_neighbors
    if k > len(train):
        warnings.warn(f"n_neighbors={k} exceeds training size {len(train)}; clamping")
        config = replace(config, n_neighbors=len(train))
    return KnnModel(train.X, train.y, config, train.n_classes)


def knn_predict(model: KnnModel, point):
    """Predict one point (1-D) or a batch (2-D)."""
    if model.kind != "knn":
        raise ValueError("knn_predict requires a knn model")
    single = np.asarray(point).ndim == 1
    out = model.predict(point)
    return int(out[0]) if single else out


class SvmWorkspace:
    """Per-class-pair gram tables reused across repeated SVM fits on one
    fixed training set, plus cross tables against a fixed evaluation set.

    This is what makes tuning affordable: all four kernels are cheap
    elementwise transforms of the cached gram / squared-norm blocks.
    """

    def __init__(self, train: VectorDataset, X_eval=None):
        self.train = train
        self.classes = np.unique(train.y)
        self.pair_idx = {}
        self._G = {}
        self._sq = {}
        self._Gx = {}
        self._sq_eval = None
        if X_eval is not None:
            X_eval = np.asarray(X_eval, dtype=np.float64)
            self._sq_eval = kernels.sq_norms(X_eval)
        for a, b in combinations(self.classes.tolist(), 2):
            idx = np.flatnonzero((train.y == a) | (train.y == b))
            Xp = train.X[idx]
            self.pair_idx[a, b] = idx
            self._G[a, b] = Xp @ Xp.T
            self._sq[a, b] = kernels.sq_norms(Xp)
            if X_eval is not None:
                self._Gx[a, b] = X_eval @ Xp.T

    def pair_parts(self, a, b):
        return self.pair_idx[a, b], self._G[a, b], self._sq[a, b]

    def eval_parts(self, a, b):
        if self._sq_eval is None:
            raise ValueError("workspace was built without an evaluation set")
        return self._Gx[a, b], self._sq_eval, self._sq[a, b]


def _pair_kernel(kind, G, sq, gamma, coef0):
    D2 = None
    if kind == "rbf":
        D2 = sq[:, None] + sq[None, :] - 2.0 * G
        np.maximum(D2, 0.0, out=D2)
    return kernels.kernel_from_parts(kind, G, D2, gamma, coef0)


def svm_fit(train: VectorDataset, config: SvmConfig = SvmConfig(),
            workspace: SvmWorkspace | None = None):
    """Fit a one-vs-one kernel SVM; single-class input yields a ConstantModel."""
    if len(train) == 0:
        raise ValueError("cannot fit SVM on an empty training set")
    classes = np.unique(train.y)
    if classes.size == 1:
        return ConstantModel(int(classes[0]), train.d, train.n_classes)
    gamma = config.gamma if config.gamma is not None else 1.0 / train.d
    pairs = []
    for a, b in combinations(classes.tolist(), 2):
        with np.errstate(over="ignore", invalid="ignore"):
            if workspace is not None:
                idx, G, sq = workspace.pair_parts(a, b)
            else:
                idx = np.flatnonzero((train.y == a) | (train.y == b))
                Xp = train.X[idx]
                G = Xp @ Xp.T
                sq = kernels.sq_norms(Xp)
            y_pair = np.where(train.y[idx] == a, 1.0, -1.0)
            K = _pair_kernel(config.kernel, G, sq, gamma, config.coef0)
        if not np.isfinite(K).all():
            raise InvalidKernelError(f"non-finite kernel values while fitting {config}")
        alpha, bias, _ = smo_solve(K, y_pair, config.C)
        sv = np.flatnonzero(alpha > 0.0)
        pairs.append(PairClassifier(a, b, train.X[idx[sv]].copy(),
                                    (alpha * y_pair)[sv], bias, sv_local=sv))
    return SvmModel(pairs, classes, config, gamma, train.d, train.n_classes)


def svm_predict(model, point):
    """Predict one point (1-D) or a batch (2-D) with an SVM or constant model."""
    if model.kind not in ("svm", "constant"):
        raise ValueError("svm_predict requires an svm or constant model")
    single = np.asarray(point).ndim == 1
    out = model.predict(point)
    return int(out[0]) if single else out


def svm_predict_workspace(model, workspace: SvmWorkspace) -> np.ndarray:
    """Predict the workspace's evaluation set using its cached cross grams."""
    if model.kind == "constant":
        n_eval = workspace._sq_eval.shape[0]
        return np.full(n_eval, model.label, dtype=np.int64)
    dec = None
    pair_classes = []
    for p, pair in enumerate(model.pairs):
        Gx, sq_eval, sq_p = workspace.eval_parts(pair.class_lo, pair.class_hi)
        Gsv = Gx[:, pair.sv_local]
        D2 = None
        if model.config.kernel == "rbf":
            D2 = sq_eval[:, None] + sq_p[pair.sv_local][None, :] - 2.0 * Gsv
            np.maximum(D2, 0.0, out=D2)
        K = kernels.kernel_from_parts(model.config.kernel, Gsv, D2,
                                      model.gamma, model.config.coef0)
        if dec is None:
            dec = np.empty((K.shape[0], len(model.pairs)))
        dec[:, p] = K @ pair.dual_coef + pair.intercept
        pair_classes.append((pair.class_lo, pair.class_hi))
    return _ovo_vote(dec, pair_classes, model.n_classes)


# --- text (JSON) serialization ------------------------------------------------

def model_to_dict(model) -> dict:
    if model.kind == "constant":
        return {"kind": "constant", "label": model.label, "d": model.d,
                "n_classes": model.n_classes}
    if model.kind == "knn":
        return {"kind": "knn", "n_classes": model.n_classes,
                "config": {"n_neighbors": model.config.n_neighbors,
                           "weights": model.config.weights},
                "X": model.X.tolist(), "y": model.y.tolist()}
    if model.kind == "svm":
        return {"kind": "svm", "n_classes": model.n_classes, "d": model.d,
                "gamma": model.gamma,
                "config": {"C": model.config.C, "kernel": model.config.kernel,
                           "gamma": model.config.gamma, "coef0": model.config.coef0},
                "classes": model.classes.tolist(),
                "pairs": [{"lo": p.class_lo, "hi": p.class_hi,
                           "intercept": p.intercept,
                           "dual_coef": p.dual_coef.tolist(),
                           "sv": p.sv.tolist()} for p in model.pairs]}
    raise ValueError(f"cannot serialize model kind {model.kind!r}")


def model_from_dict(d: dict):
    kind = d["kind"]
    if kind == "constant":
        return ConstantModel(d["label"], d["d"], d["n_classes"])
    if kind == "knn":
        cfg = KnnConfig(**d["config"])
        X = np.asarray(d["X"], dtype=np.float64)
        return KnnModel(X, d["y"], cfg, d["n_classes"])
    if kind == "svm":
        cfg = SvmConfig(**d["config"])
        pairs = [PairClassifier(p["lo"], p["hi"], p["sv"], p["dual_coef"],
                                p["intercept"]) for p in d["pairs"]]
        return SvmModel(pairs, d["classes"], cfg, d["gamma"], d["d"], d["n_classes"])
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
