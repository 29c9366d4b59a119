"""KMeans (k-means++ seeding, Lloyd iterations) and cluster-count selection.

Cluster-count selection compares the clustered dispersion of the data
against uniform reference samples drawn inside the data's per-feature
bounding box. The default scoring is gap = log(mean(ref inertias) - data
inertia) with the count chosen by argmax; formula="classical" switches to
the log-ratio form gap = mean(log ref) - log(data) with the usual
simulation-error rule (smallest k with gap(k) >= gap(k+1) - sk(k+1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .dataset import VectorDataset


class GapUndefinedError(ValueError):
    """Every candidate cluster count had non-positive dispersion gap."""


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: Optional[np.ndarray]
    inertia: float
    n_iter: int = 0

    @property
    def d(self) -> int:
        return self.centroids.shape[1]

    def save_text(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{self.k} {self.d}\n")
            for row in self.centroids:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load_text(cls, path) -> "ClusterModel":
        with open(path, "r", encoding="utf-8") as fh:
            k, d = (int(v) for v in fh.readline().split())
            centroids = np.array(
                [[float(v) for v in fh.readline().split()] for _ in range(k)]
            )
        if centroids.shape != (k, d):
            raise ValueError(f"centroid block does not match header ({k} x {d})")
        return cls(k=k, centroids=centroids, assignments=None, inertia=float("nan"))


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, VectorDataset):
        return data.X
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("expected a 2-D array of row vectors")
    return X


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seed centroids: first uniform from the data, rest with probability
    proportional to squared distance from the nearest chosen centroid."""
    n, d = X.shape
    C = np.empty((k, d))
    C[0] = X[int(rng.integers(n))]
    d2 = ((X - C[0]) ** 2).sum(axis=1)
    for m in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        C[m] = X[idx]
        np.minimum(d2, ((X - C[m]) ** 2).sum(axis=1), out=d2)
    return C


def _repair_empty(X, C, D2, labels):
    """Reseed each empty centroid to the point farthest from it."""
    counts = np.bincount(labels, minlength=C.shape[0])
    empties = np.flatnonzero(counts == 0)
    if empties.size == 0:
        return False
    taken: set[int] = set()
    for c in empties:
        for far in np.argsort(-D2[:, c], kind="stable"):
            if int(far) not in taken:
                break
        taken.add(int(far))
        C[c] = X[far]
    return True


def kmeans_fit(data, k: int, seed: int = 0, max_iter: int = 300,
               tol: float = 1e-4) -> ClusterModel:
    """Lloyd iterations from a k-means++ seeding.

    Stops when the largest centroid movement drops below ``tol`` or after
    ``max_iter`` iterations. Deterministic for a given seed; clusters never
    end up empty (empty centroids are reseeded to the farthest point).
    """
    X = _as_matrix(data)
    n = X.shape[0]
    if n == 0:
        raise ValueError("cannot cluster an empty dataset")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds the {n} available instances")
    rng = np.random.default_rng([int(seed)])
    C = _kmeanspp(X, k, rng)
    prev_inertia = math.inf
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        D2 = kernels.sq_dists(X, C)
        labels = D2.argmin(axis=1)
        if _repair_empty(X, C, D2, labels):
            D2 = kernels.sq_dists(X, C)
            labels = D2.argmin(axis=1)
        inertia = float(D2[np.arange(n), labels].sum())
        assert inertia <= prev_inertia * (1.0 + 1e-9) + 1e-9, \
            "Lloyd iteration increased inertia"
        prev_inertia = inertia
        newC = np.empty_like(C)
        for c in range(k):
            newC[c] = X[labels == c].mean(axis=0)
        shift = float(np.sqrt(((newC - C) ** 2).sum(axis=1)).max())
        C = newC
        if shift < tol:
            break
    # final pass with exact distances so the tie rule and the
    # nearest-centroid invariant hold against independent checks
    for _ in range(k + 1):
        D2 = kernels.sq_dists_exact(X, C)
        labels = D2.argmin(axis=1)
        if not _repair_empty(X, C, D2, labels):
            break
    inertia = float(D2[np.arange(n), labels].sum())
    return ClusterModel(k=k, centroids=C, assignments=labels,
                        inertia=inertia, n_iter=n_iter)


def assign_many(model: ClusterModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.d:
        raise ValueError(f"expected points of dimension {model.d}, got {X.shape[1]}")
    return kernels.sq_dists_exact(X, model.centroids).argmin(axis=1)


def assign_nearest(model: ClusterModel, point) -> int:
    """Index of the nearest centroid; ties go to the lowest index."""
    point = np.asarray(point, dtype=np.float64)
    if point.ndim != 1:
        raise ValueError("assign_nearest expects a single point")
    return int(assign_many(model, point[None, :])[0])


@dataclass
class GapRecord:
    k: int
    gap: float
    sk: float = 0.0  # simulation-error term, used by formula="classical"


@dataclass
class GapResult:
    records: list[GapRecord]
    chosen_k: int
    formula: str

    def gaps(self) -> dict[int, float]:
        return {r.k: r.gap for r in self.records}


def gap_statistic(data, k_min: int = 1, k_max: int = 15, nrefs: int = 3,
                  seed: int = 0, formula: str = "paper", max_iter: int = 300,
                  tol: float = 1e-4) -> GapResult:
    """Score each cluster count in [k_min, k_max) against uniform references.

    Counts whose dispersion gap is undefined (non-positive difference, or a
    non-positive dispersion under the classical formula) are recorded as
    -inf and excluded from selection; if every count is undefined a
    GapUndefinedError is raised.
    """
    X = _as_matrix(data)
    n, d = X.shape
    if k_min < 1:
        raise ValueError("k_min must be >= 1")
    if k_max <= k_min:
        raise ValueError("k_max must exceed k_min (k_max is exclusive)")
    if nrefs < 1:
        raise ValueError("nrefs must be >= 1")
    if k_max - 1 > n:
        raise ValueError(f"k_max-1={k_max - 1} exceeds the {n} available instances")
    if formula not in ("paper", "classical"):
        raise ValueError("formula must be 'paper' or 'classical'")
    rng = np.random.default_rng([int(seed)])
    lo, hi = X.min(axis=0), X.max(axis=0)
    records = []
    for k in range(k_min, k_max):
        ref_disps = np.empty(nrefs)
        for i in range(nrefs):
            ref = rng.uniform(lo, hi, size=(n, d))
            ref_seed = int(rng.integers(2**31 - 1))
            ref_disps[i] = kmeans_fit(ref, k, seed=ref_seed,
                                      max_iter=max_iter, tol=tol).inertia
        org_seed = int(rng.integers(2**31 - 1))
        org_disp = kmeans_fit(X, k, seed=org_seed,
                              max_iter=max_iter, tol=tol).inertia
        if formula == "paper":
            diff = float(ref_disps.mean() - org_disp)
            gap = math.log(diff) if diff > 0 else -math.inf
            records.append(GapRecord(k, gap))
        else:
            if org_disp <= 0 or (ref_disps <= 0).any():
                records.append(GapRecord(k, -math.inf))
                continue
            logs = np.log(ref_disps)
            gap = float(logs.mean() - math.log(org_disp))
            sk = float(logs.std() * math.sqrt(1.0 + 1.0 / nrefs))
            records.append(GapRecord(k, gap, sk))
    finite = [r for r in records if math.isfinite(r.gap)]
    if not finite:
        raise GapUndefinedError(
            f"no usable dispersion gap for any k in [{k_min},{k_max})")
    if formula == "classical":
        chosen = None
        for r, r_next in zip(records, records[1:]):
            if math.isfinite(r.gap) and math.isfinite(r_next.gap) \
                    and r.gap >= r_next.gap - r_next.sk:
                chosen = r.k
                break
        if chosen is None:
            chosen = max(finite, key=lambda r: r.gap).k
    else:
        chosen = max(finite, key=lambda r: r.gap).k
    return GapResult(records=records, chosen_k=chosen, formula=formula)
