"""Labeled embedding-vector datasets: in-memory model, file I/O, fold splitting.

On-disk format is delimited text. The first non-comment content is a schema
line ``#dim=<d> classes=<n>``, then one instance per row:

    vector-rows:   id,label,v1,...,vd
    paired-posts:  id,label,p1,...,pd,r1,...,rd

In the paired-posts layout each row carries two vector blocks of ``dim``
values (the post vector and the related-post vector); the instance feature
vector is their concatenation, post block first, so instances have 2*dim
features. Labels are remapped to contiguous integers starting at 1 when they
are not already; the mapping is kept on the dataset.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

FORMATS = ("vector-rows", "paired-posts")


class ParseError(ValueError):
    """Raised when a dataset file violates the schema."""


@dataclass(frozen=True)
class Instance:
    id: str
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class LinkType:
    class_id: int
    name: str
    score_range: tuple[float, float]


# class-id convention for the 4-class post-relatedness task
LINK_TYPES = (
    LinkType(1, "duplicate", (1.0, 1.0)),
    LinkType(2, "direct link", (0.8, 0.8)),
    LinkType(3, "indirect link", (0.0, 0.8)),
    LinkType(4, "isolated", (0.0, 0.0)),
)


class VectorDataset:
    """Fixed-dimension labeled vectors. Immutable after construction."""

    def __init__(self, X, y, ids=None, n_classes=None, label_map=None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2:
            raise ValueError("X must be 2-D (n instances x d features)")
        if X.shape[1] < 1:
            raise ValueError("feature dimension must be >= 1")
        if y.shape != (X.shape[0],):
            raise ValueError("y must have one label per instance")
        if X.size and not np.isfinite(X).all():
            raise ValueError("features contain non-finite values")
        if n_classes is None:
            n_classes = int(y.max()) if y.size else 0
        if n_classes < 2:
            raise ValueError("a dataset needs at least 2 classes")
        if y.size and (y.min() < 1 or y.max() > n_classes):
            raise ValueError(f"labels must lie in 1..{n_classes}")
        if ids is None:
            ids = np.array([str(i) for i in range(X.shape[0])], dtype=object)
        else:
            ids = np.asarray(ids, dtype=object)
            if ids.shape != (X.shape[0],):
                raise ValueError("ids must have one entry per instance")
        X.setflags(write=False)
        y.setflags(write=False)
        self.X = X
        self.y = y
        self.ids = ids
        self.n_classes = int(n_classes)
        self.label_map = dict(label_map) if label_map else None

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def instances(self) -> Iterator[Instance]:
        for i in range(len(self)):
            yield Instance(str(self.ids[i]), self.X[i], int(self.y[i]))

    def classes_present(self) -> np.ndarray:
        return np.unique(self.y)

    def class_counts(self) -> np.ndarray:
        """Count per class id 1..n_classes (index 0 unused)."""
        return np.bincount(self.y, minlength=self.n_classes + 1)

    def subset(self, idx) -> "VectorDataset":
        idx = np.asarray(idx)
        return VectorDataset(
            self.X[idx].copy(), self.y[idx].copy(), self.ids[idx],
            n_classes=self.n_classes, label_map=self.label_map,
        )


def _parse_schema(line: str, lineno: int) -> tuple[int, int]:
    parts = line.lstrip("#").split()
    try:
        kv = dict(p.split("=", 1) for p in parts)
        dim, classes = int(kv["dim"]), int(kv["classes"])
    except (ValueError, KeyError):
        raise ParseError(f"line {lineno}: schema line must be '#dim=<d> classes=<n>'")
    if dim < 1 or classes < 2:
        raise ParseError(f"line {lineno}: need dim >= 1 and classes >= 2")
    return dim, classes


def load_dataset(path, format: str = "vector-rows") -> VectorDataset:
    """Load a dataset file; see the module docstring for the row layouts."""
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    dim = n_classes = None
    ids, raw_labels, rows = [], [], []
    first_seen = {}  # raw label -> line where it first appeared
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if dim is None and "dim=" in line:
                    dim, n_classes = _parse_schema(line, lineno)
                continue
            if dim is None:
                raise ParseError(f"line {lineno}: data before '#dim=... classes=...' schema line")
            fields = [f.strip() for f in line.split(",")]
            values_per_row = dim * (2 if format == "paired-posts" else 1)
            if len(fields) != 2 + values_per_row:
                raise ParseError(
                    f"line {lineno}: expected {2 + values_per_row} fields "
                    f"(id, label, {values_per_row} values), got {len(fields)}"
                )
            ids.append(fields[0])
            label = fields[1]
            if label not in first_seen:
                first_seen[label] = lineno
                if len(first_seen) > n_classes:
                    raise ParseError(
                        f"line {lineno}: unknown label {label!r} "
                        f"({n_classes} classes declared)"
                    )
            raw_labels.append(label)
            try:
                vec = np.array([float(v) for v in fields[2:]], dtype=np.float64)
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric feature value")
            if not np.isfinite(vec).all():
                raise ParseError(f"line {lineno}: non-finite feature value")
            rows.append(vec)
    if dim is None:
        raise ParseError("missing '#dim=... classes=...' schema line")
    if not rows:
        raise ParseError("no data rows")
    X = np.vstack(rows)
    y, label_map = _remap_labels(raw_labels, n_classes)
    return VectorDataset(X, y, ids=ids, n_classes=n_classes, label_map=label_map)


def _remap_labels(raw: Sequence[str], n_classes: int):
    """Map raw label tokens onto contiguous ints 1..n_classes."""
    distinct = set(raw)
    try:
        as_int = {r: int(r) for r in distinct}
        if all(1 <= v <= n_classes for v in as_int.values()):
            return np.array([int(r) for r in raw], dtype=np.int64), None
        ordered = sorted(distinct, key=lambda r: as_int[r])
    except ValueError:
        ordered = sorted(distinct)
    mapping = {r: i + 1 for i, r in enumerate(ordered)}
    return np.array([mapping[r] for r in raw], dtype=np.int64), mapping


def save_dataset(data: VectorDataset, path, format: str = "vector-rows") -> None:
    """Write ``data`` in the delimited text format loadable by load_dataset."""
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    if format == "paired-posts":
        if data.d % 2:
            raise ValueError("paired-posts requires an even feature dimension")
        dim = data.d // 2
    else:
        dim = data.d
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#dim={dim} classes={data.n_classes}\n")
        for i in range(len(data)):
            vals = ",".join(repr(float(v)) for v in data.X[i])
            fh.write(f"{data.ids[i]},{data.y[i]},{vals}\n")


def stratified_folds(data: VectorDataset, folds: int, repeats: int, seed: int = 0):
    """Yield ``repeats * folds`` (train, test) splits.

    Within one repeat the test folds partition the data; per-fold class
    counts stay within one instance of the ideal proportion. Deterministic
    for a given seed.
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    counts = data.class_counts()
    for c in range(1, data.n_classes + 1):
        if 0 < counts[c] < folds:
            raise ValueError(f"class {c} has {counts[c]} members, fewer than {folds} folds")
    for rep in range(repeats):
        rng = np.random.default_rng([int(seed), rep])
        fold_of = np.empty(len(data), dtype=np.int64)
        offset = 0
        for c in range(1, data.n_classes + 1):
            members = np.flatnonzero(data.y == c)
            members = members[rng.permutation(len(members))]
            fold_of[members] = (offset + np.arange(len(members))) % folds
            offset = (offset + len(members)) % folds
        for f in range(folds):
            test = np.flatnonzero(fold_of == f)
            train = np.flatnonzero(fold_of != f)
            yield data.subset(train), data.subset(test)


def stratified_holdout(data: VectorDataset, frac: float, seed: int = 0):
    """Split into (rest, held-out) index arrays, stratified per class.

    Classes too small to contribute a held-out instance go entirely to the
    rest part. Either side may come back empty; callers decide whether that
    is degenerate.
    """
    rng = np.random.default_rng([int(seed)])
    hold, rest = [], []
    for c in range(1, data.n_classes + 1):
        members = np.flatnonzero(data.y == c)
        members = members[rng.permutation(len(members))]
        n_hold = int(round(frac * len(members)))
        hold.append(members[:n_hold])
        rest.append(members[n_hold:])
    return np.sort(np.concatenate(rest)), np.sort(np.concatenate(hold))


def synthetic_blobs(n: int, d: int, n_classes: int, blobs: int, sigma: float,
                    seed: int = 0, spread: float = 1.0, class_sep: float = 3.0,
                    blob_classes: str = "all") -> VectorDataset:
    """Gaussian-blob dataset with known cluster structure.

    blob_classes="all": every blob contains every class, with per-class
    centers offset from the blob center by ``class_sep * sigma`` per axis,
    so each cluster poses a real (but separable) classification problem.
    blob_classes="one": blob b is pure class ``(b % n_classes) + 1``.
    """
    if n < n_classes * blobs:
        raise ValueError("need n >= classes * blobs")
    if blob_classes not in ("all", "one"):
        raise ValueError("blob_classes must be 'all' or 'one'")
    if blob_classes == "one" and blobs < n_classes:
        raise ValueError("blob_classes='one' needs blobs >= classes")
    rng = np.random.default_rng([int(seed)])
    centers = rng.uniform(-spread, spread, size=(blobs, d))
    X = np.empty((n, d))
    y = np.empty(n, dtype=np.int64)
    if blob_classes == "one":
        cells = [(b, b % n_classes + 1) for b in range(blobs)]
    else:
        offsets = rng.normal(0.0, class_sep * sigma, size=(blobs, n_classes, d))
        cells = [(b, c + 1) for b in range(blobs) for c in range(n_classes)]
    base, extra = divmod(n, len(cells))
    pos = 0
    for cell_i, (b, label) in enumerate(cells):
        cnt = base + (1 if cell_i < extra else 0)
        mu = centers[b]
        if blob_classes == "all":
            mu = mu + offsets[b, label - 1]
        X[pos:pos + cnt] = mu + rng.normal(0.0, sigma, size=(cnt, d))
        y[pos:pos + cnt] = label
        pos += cnt
    order = rng.permutation(n)
    ids = [f"p{i}" for i in range(n)]
    return VectorDataset(X[order], y[order], ids=ids, n_classes=n_classes)
