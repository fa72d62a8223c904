"""Dataset container, LIBSVM-format text parsing and feature scaling.

Raw inputs are stored dense (they are low-dimensional; sparsity lives in
the feature matrix). Classification labels are canonicalized at load time:
two classes become -1/+1 (smaller original value maps to -1), more become
0..C-1 in sorted order, with the original values kept for reporting.
"""

import enum
import gzip
from dataclasses import dataclass

import numpy as np


class Task(enum.Enum):
    REGRESSION = "regression"
    BINARY = "binary"
    MULTICLASS = "multiclass"


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    dim: int
    task: Task
    classes: np.ndarray = None  # original label values for classification

    @property
    def n(self) -> int:
        return self.x.shape[0]


def canonicalize_labels(raw, task: Task = None):
    """Map raw labels to the internal convention; returns (y, task, classes)."""
    raw = np.asarray(raw, dtype=np.float64)
    distinct = np.unique(raw)
    integral = np.all(np.abs(raw - np.round(raw)) < 1e-9)
    if task is None:
        if distinct.size == 2:
            task = Task.BINARY
        elif integral and 2 < distinct.size <= 50:
            task = Task.MULTICLASS
        else:
            task = Task.REGRESSION
    if task is Task.REGRESSION:
        return raw, task, None
    if task is Task.BINARY:
        if distinct.size != 2:
            raise ValueError(f"binary task needs exactly 2 label values, found {distinct.size}")
        y = np.where(raw == distinct[1], 1.0, -1.0)
        return y, task, distinct
    y = np.searchsorted(distinct, raw).astype(np.float64)
    return y, task, distinct


def load_libsvm(path, dim_hint: int = None, task: Task = None) -> Dataset:
    """Parse `<label> <idx>:<val> ...` lines with 1-based indices.

    Feature dimension is the largest index seen, or dim_hint if larger.
    Files ending in .gz are decompressed transparently. Malformed input
    raises with the offending line number.
    """
    opener = gzip.open if str(path).endswith(".gz") else open
    labels = []
    rows = []
    max_idx = 0
    with opener(path, "rt") as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            try:
                labels.append(float(parts[0]))
            except ValueError:
                raise ValueError(f"{path}:{ln}: bad label {parts[0]!r}")
            idxs = []
            vals = []
            for tok in parts[1:]:
                pieces = tok.split(":", 1)
                if len(pieces) != 2:
                    raise ValueError(f"{path}:{ln}: bad feature entry {tok!r}")
                try:
                    k = int(pieces[0])
                    v = float(pieces[1])
                except ValueError:
                    raise ValueError(f"{path}:{ln}: bad feature entry {tok!r}")
                if k < 1:
                    raise ValueError(f"{path}:{ln}: feature index {k} must be 1-based")
                idxs.append(k)
                vals.append(v)
            if idxs:
                max_idx = max(max_idx, max(idxs))
            rows.append((idxs, vals))
    if not rows:
        raise ValueError(f"{path}: no data lines")
    dim = max(max_idx, dim_hint or 0)
    if dim == 0:
        raise ValueError(f"{path}: no features found and no dim_hint given")
    x = np.zeros((len(rows), dim))
    for i, (idxs, vals) in enumerate(rows):
        for k, v in zip(idxs, vals):
            x[i, k - 1] = v
    y, task, classes = canonicalize_labels(labels, task)
    return Dataset(x, y, dim, task, classes)


def save_libsvm(path, ds: Dataset):
    """Write the dataset back out; zeros are dropped, indices 1-based."""
    with open(path, "w") as fh:
        for i in range(ds.n):
            row = ds.x[i]
            feats = " ".join(
                f"{j + 1}:{row[j]:.17g}" for j in np.nonzero(row)[0]
            )
            label = ds.y[i]
            text = f"{label:.17g}"
            fh.write(f"{text} {feats}".rstrip() + "\n")


@dataclass
class ScalingParams:
    lo: np.ndarray
    span: np.ndarray  # hi - lo, zeros where the training column was constant

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "span": self.span.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "ScalingParams":
        return cls(
            np.asarray(obj["lo"], dtype=np.float64),
            np.asarray(obj["span"], dtype=np.float64),
        )


def fit_scaling(x) -> ScalingParams:
    x = np.asarray(x, dtype=np.float64)
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    return ScalingParams(lo, span)


def apply_scaling(params: ScalingParams, x) -> np.ndarray:
    """Affine per-dimension map to [0,1] on the fitting range; no clipping,
    constant training columns go to 0."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x, dtype=np.float64)
    nz = params.span > 0
    out[:, nz] = (x[:, nz] - params.lo[nz]) / params.span[nz]
    return out


def scale_features(train: Dataset, test: Dataset = None):
    """Min-max scaling fit on train, applied to train and (optionally) test."""
    if train.n == 0:
        raise ValueError("cannot fit scaling on an empty dataset")
    params = fit_scaling(train.x)
    train_s = Dataset(apply_scaling(params, train.x), train.y, train.dim, train.task, train.classes)
    test_s = None
    if test is not None:
        if test.dim != train.dim:
            raise ValueError(f"test dimension {test.dim} does not match train {train.dim}")
        test_s = Dataset(apply_scaling(params, test.x), test.y, test.dim, test.task, test.classes)
    return train_s, test_s, params


def original_labels(ds: Dataset) -> np.ndarray:
    """Labels in the values the source file used, undoing canonicalization."""
    if ds.classes is None:
        return ds.y
    if ds.task is Task.BINARY:
        return ds.classes[(ds.y > 0).astype(np.intp)]
    return ds.classes[ds.y.astype(np.intp)]
