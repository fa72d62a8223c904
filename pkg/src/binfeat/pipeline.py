"""Fit/evaluate plumbing shared by the bench modes, the HTTP service and the CLI.

One convention worth spelling out: the lambda a caller passes here always
weights the per-sample objective

    (1/N) sum_i L(f(x_i), y_i) + lambda * penalty(w)

so this module hands N*lambda to the ridge system (whose contract puts the
bare lambda on the diagonal), hands lambda unchanged to coordinate descent
(whose objective already averages the loss), and hands lambda unchanged to
the exact oracle (which scales internally). All methods at the same lambda
then shrink the same way and the binned features converge to the oracle
predictions as R grows.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import binning
from .baselines import NystromTransform, RfTransform, nystrom_fit, rf_fit
from .data import Dataset, ScalingParams, Task, apply_scaling, scale_features
from .kernels import KernelSpec
from .metrics import accuracy, exact_kernel_ridge, rmse
from .solvers import (
    LossKind,
    Model,
    MulticlassModel,
    cg_ridge,
    decision_scores,
    loss_spec,
    loss_value,
    parallel_rcd_train,
    rcd_train,
)
from .sparse import SparseMatrix

METHODS = ("rb", "rf", "nystrom", "exact")
SOLVER_NAMES = ("cg", "cd")


def parse_loss(name) -> LossKind:
    if isinstance(name, LossKind):
        return name
    try:
        return LossKind(name)
    except ValueError:
        raise ValueError(f"unknown loss {name!r}, expected one of "
                         f"{[k.value for k in LossKind]}") from None


def fit_features(method: str, x, spec: KernelSpec, r: int, seed: int):
    """Fit one feature transform on x and build its training feature matrix.

    Returns (transform, features, info) where features is a SparseMatrix
    ready for the solvers and info carries d_cols / kappa_bar / timing /
    memory. Dense methods report the bytes of their natural dense storage,
    the binned method reports its CSR arrays.
    """
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    if method == "rb":
        t = binning.fit(x, spec, r, rng)
        feats = binning.transform(t, x)
        info = {"d_cols": t.D, "kappa_bar": t.D / r, "memory_bytes": feats.nbytes}
    elif method == "rf":
        t = rf_fit(spec, r, rng)
        dense = t.feature_matrix(x)
        feats = SparseMatrix.from_dense(dense, drop_zeros=False)
        info = {"d_cols": r, "kappa_bar": None, "memory_bytes": dense.nbytes}
    elif method == "nystrom":
        t = nystrom_fit(x, spec, r, rng)
        dense = t.feature_matrix(x)
        feats = SparseMatrix.from_dense(dense, drop_zeros=False)
        info = {"d_cols": dense.shape[1], "kappa_bar": None,
                "memory_bytes": dense.nbytes}
    else:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")
    info["transform_seconds"] = time.perf_counter() - t0
    return t, feats, info


def _train_single(feats: SparseMatrix, y, solver: str, loss: LossKind,
                  lam: float, tol: float, epochs: int, tau: int, seed: int):
    n = feats.n_rows
    spec = loss_spec(loss)
    if solver == "cg":
        if loss is not LossKind.SQUARE:
            raise ValueError("the cg solver handles the square loss only, "
                             "use solver=cd for other losses")
        res = cg_ridge(feats, y, lam=n * lam, tol=tol)
        w = res.model.weights
        scores = _scores_from(feats, w)
        obj = float(np.mean(loss_value(spec, scores, y)) + 0.5 * lam * w @ w)
        info = {"iterations": res.n_iter, "converged": res.converged,
                "objective": obj}
        return res.model, info
    if solver == "cd":
        rng = np.random.default_rng(seed)
        if tau == 1:
            res = rcd_train(feats, y, lam=lam, loss=spec, epochs=epochs, rng=rng)
        else:
            res = parallel_rcd_train(feats, y, lam=lam, loss=spec,
                                     epochs=epochs, tau=tau, rng=rng)
        info = {"iterations": epochs, "converged": True,
                "objective": res.objective}
        return res.model, info
    raise ValueError(f"unknown solver {solver!r}, expected one of {SOLVER_NAMES}")


def _scores_from(feats: SparseMatrix, w):
    from .sparse import matvec
    return matvec(feats, w)


def train_weights(feats: SparseMatrix, y, task: Task, classes, *, solver: str,
                  loss: LossKind, lam: float, tol: float, epochs: int,
                  tau: int, seed: int):
    """Train one model on prebuilt features; one-vs-rest for multiclass."""
    if task is Task.MULTICLASS:
        rows = []
        iters, objs, conv = [], [], []
        for k in range(len(classes)):
            target = np.where(y == k, 1.0, -1.0)
            m, info = _train_single(feats, target, solver, loss, lam, tol,
                                    epochs, tau, seed + 7919 * (k + 1))
            rows.append(m.weights)
            iters.append(info["iterations"])
            objs.append(info["objective"])
            conv.append(info["converged"])
        base = m
        model = MulticlassModel(weights=np.vstack(rows), lam=base.lam,
                                loss=base.loss, regularizer=base.regularizer,
                                classes=np.asarray(classes))
        info = {"iterations": int(max(iters)), "converged": all(conv),
                "objective": float(np.mean(objs))}
        return model, info
    return _train_single(feats, np.asarray(y, dtype=np.float64), solver, loss,
                         lam, tol, epochs, tau, seed)


def predictions(model, transform, x, task: Task) -> np.ndarray:
    """Model outputs in canonical label space (raw values for regression,
    +-1 for binary, class indices 0..C-1 for multiclass)."""
    scores = decision_scores(model, transform, x)
    if isinstance(model, MulticlassModel):
        return np.argmax(scores, axis=1).astype(np.float64)
    if task is Task.REGRESSION:
        return scores
    return np.where(scores > 0, 1.0, -1.0)


def _metric(pred, y, task: Task):
    if task is Task.REGRESSION:
        return rmse(pred, y), "rmse"
    return accuracy(pred, y), "accuracy"


def _run_exact(train: Dataset, test, spec: KernelSpec, lam: float):
    n = train.n
    t0 = time.perf_counter()
    if train.task is Task.MULTICLASS:
        def solve(x_eval):
            cols = []
            for k in range(len(train.classes)):
                target = np.where(train.y == k, 1.0, -1.0)
                cols.append(exact_kernel_ridge(train.x, target, x_eval, spec, lam))
            return np.argmax(np.column_stack(cols), axis=1).astype(np.float64)
    elif train.task is Task.BINARY:
        def solve(x_eval):
            s = exact_kernel_ridge(train.x, train.y, x_eval, spec, lam)
            return np.where(s > 0, 1.0, -1.0)
    else:
        def solve(x_eval):
            return exact_kernel_ridge(train.x, train.y, x_eval, spec, lam)

    train_pred = solve(train.x)
    test_pred = solve(test.x) if test is not None else None
    seconds = time.perf_counter() - t0
    return train_pred, test_pred, seconds, 8 * n * n


def run_one(train: Dataset, test: Dataset = None, *, method: str,
            spec: KernelSpec, r: int, lam: float, loss="square",
            solver: str = "cg", tol: float = 1e-3, epochs: int = 10,
            tau: int = 1, seed: int = 0) -> dict:
    """Fit one method on train, evaluate on train and (optionally) test.

    Expects preprocessed inputs; callers scale features before this point.
    Returns a flat record dict, one row of the bench CSV minus the mode
    and dataset columns.
    """
    loss = parse_loss(loss)
    task = train.task
    rec = {
        "method": method, "n_train": train.n,
        "n_test": test.n if test is not None else 0,
        "dim": train.dim, "task": task.value, "sigma": spec.sigma, "r": r,
        "lam": lam, "loss": loss.value, "solver": solver, "tol": tol,
        "epochs": epochs, "tau": tau, "seed": seed,
        "d_cols": None, "kappa_bar": None,
    }
    if method == "exact":
        train_pred, test_pred, secs, mem = _run_exact(train, test, spec, lam)
        rec.update(transform_seconds=0.0, train_seconds=secs,
                   memory_bytes=mem, iterations=None, converged=True,
                   objective=None)
    else:
        transform, feats, finfo = fit_features(method, train.x, spec, r, seed)
        t0 = time.perf_counter()
        model, tinfo = train_weights(feats, train.y, task, train.classes,
                                     solver=solver, loss=loss, lam=lam,
                                     tol=tol, epochs=epochs, tau=tau,
                                     seed=seed + 1)
        train_seconds = time.perf_counter() - t0
        train_pred = predictions(model, transform, train.x, task)
        test_pred = predictions(model, transform, test.x, task) if test is not None else None
        rec.update(d_cols=finfo["d_cols"], kappa_bar=finfo["kappa_bar"],
                   transform_seconds=finfo["transform_seconds"],
                   train_seconds=train_seconds,
                   memory_bytes=finfo["memory_bytes"],
                   iterations=tinfo["iterations"],
                   converged=tinfo["converged"],
                   objective=tinfo["objective"])
    train_metric, kind = _metric(train_pred, train.y, task)
    rec["train_metric"] = train_metric
    if test_pred is not None:
        rec["test_metric"], _ = _metric(test_pred, test.y, task)
    else:
        rec["test_metric"] = None
    rec["metric_kind"] = kind
    return rec


# ---------------------------------------------------------------------------
# model bundles for train/predict round trips

@dataclass
class ModelBundle:
    """Everything needed to score new raw inputs: transform, weights,
    scaling and the label decoding."""

    method: str
    spec: KernelSpec
    transform: object
    model: object
    task: Task
    scaling: ScalingParams = None
    classes: np.ndarray = None


def fit_bundle(train: Dataset, *, method: str, spec: KernelSpec, r: int,
               lam: float, loss="square", solver: str = "cg",
               tol: float = 1e-3, epochs: int = 10, tau: int = 1,
               seed: int = 0, scale: bool = True):
    """Train a deployable model on raw data; returns (bundle, record)."""
    if method == "exact":
        raise ValueError("the exact oracle has no standalone model to save, "
                         "use it through the compare mode")
    loss = parse_loss(loss)
    params = None
    if scale:
        train, _, params = scale_features(train)
    transform, feats, finfo = fit_features(method, train.x, spec, r, seed)
    t0 = time.perf_counter()
    model, tinfo = train_weights(feats, train.y, train.task, train.classes,
                                 solver=solver, loss=loss, lam=lam, tol=tol,
                                 epochs=epochs, tau=tau, seed=seed + 1)
    train_seconds = time.perf_counter() - t0
    train_pred = predictions(model, transform, train.x, train.task)
    train_metric, kind = _metric(train_pred, train.y, train.task)
    bundle = ModelBundle(method=method, spec=spec, transform=transform,
                         model=model, task=train.task, scaling=params,
                         classes=train.classes)
    record = dict(finfo)
    record.update(tinfo, train_seconds=train_seconds,
                  train_metric=train_metric, metric_kind=kind)
    return bundle, record


def bundle_predict(bundle: ModelBundle, x_raw) -> np.ndarray:
    """Score raw inputs; binary outputs are mapped back to the original
    label values when the bundle knows them."""
    x = np.asarray(x_raw, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if bundle.scaling is not None:
        x = apply_scaling(bundle.scaling, x)
    pred = predictions(bundle.model, bundle.transform, x, bundle.task)
    if bundle.classes is None:
        return pred
    if bundle.task is Task.BINARY:
        return bundle.classes[(pred > 0).astype(np.intp)]
    if bundle.task is Task.MULTICLASS:
        return bundle.classes[pred.astype(np.intp)]
    return pred


def bundle_eval(bundle: ModelBundle, ds: Dataset):
    """Metric of a bundle on a raw dataset (labels already canonical)."""
    x = ds.x
    if bundle.scaling is not None:
        x = apply_scaling(bundle.scaling, x)
    pred = predictions(bundle.model, bundle.transform, x, bundle.task)
    return _metric(pred, ds.y, bundle.task)
