"""Evaluation metrics and the dense exact-kernel ridge oracle."""

import enum
from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, kernel_cross, kernel_gram

_JITTER = 1e-10


class MetricKind(enum.Enum):
    RMSE = "rmse"
    ACCURACY = "accuracy"


@dataclass
class MetricReport:
    kind: MetricKind
    value: float
    n: int


def rmse(pred, y) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if pred.shape != y.shape or pred.size == 0:
        raise ValueError("predictions and targets must have equal nonzero length")
    return float(np.sqrt(np.mean((pred - y) ** 2)))


def accuracy(pred_labels, y) -> float:
    pred_labels = np.asarray(pred_labels)
    y = np.asarray(y)
    if pred_labels.shape != y.shape or pred_labels.size == 0:
        raise ValueError("predictions and targets must have equal nonzero length")
    return float(np.mean(pred_labels == y))


def report(kind: MetricKind, pred, y) -> MetricReport:
    fn = rmse if kind is MetricKind.RMSE else accuracy
    return MetricReport(kind, fn(pred, y), int(np.asarray(y).shape[0]))


def exact_kernel_ridge(x_train, y, x_test, spec: KernelSpec, lam: float) -> np.ndarray:
    """Dense-oracle predictions: solve (K + N*lam*I) alpha = y, then
    k(x_test, .)' alpha.

    The N*lam scaling matches a (1/N)-averaged loss plus (lam/2)||f||^2
    objective, which keeps lam comparable with the feature-space solvers.
    Only meant for N small enough to hold K.
    """
    x_train = np.atleast_2d(np.asarray(x_train, dtype=np.float64))
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = x_train.shape[0]
    if y.shape != (n,):
        raise ValueError(f"y must have length {n}")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    k = kernel_gram(spec, x_train)
    k[np.diag_indices_from(k)] += n * lam + _JITTER
    try:
        alpha = np.linalg.solve(k, y)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"kernel system is singular: {exc}")
    return kernel_cross(spec, np.atleast_2d(x_test), x_train) @ alpha
