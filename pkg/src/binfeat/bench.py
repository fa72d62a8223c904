"""Experiment driver: sigma sweep, R sweep, method comparison, parallel bench.

Each mode takes an ExperimentConfig, returns a list of flat record dicts
sharing one fixed CSV schema, and leaves writing to the caller. Records are
reproducible bit for bit (metrics, D, kappa_bar, not wall time) for a fixed
seed at thread count 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data import Dataset, Task, scale_features
from .kernels import laplacian
from .pipeline import METHODS, fit_features, parse_loss, predictions, run_one, _metric
from .solvers import loss_spec, parallel_rcd_train, predicted_speedup
from .synthetic import load_any

CSV_COLUMNS = [
    "mode", "method", "dataset", "n_train", "n_test", "dim", "task",
    "sigma", "r", "lam", "loss", "solver", "tol", "epochs", "tau", "seed",
    "d_cols", "kappa_bar", "transform_seconds", "train_seconds",
    "memory_bytes", "iterations", "converged", "objective",
    "train_metric", "test_metric", "metric_kind",
    "predicted_speedup", "measured_speedup",
]

DEFAULT_SIGMA_GRID = tuple(np.logspace(-2.0, 2.0, 9))
DEFAULT_TAU_GRID = (1, 2, 4, 8)


@dataclass
class ExperimentConfig:
    data: str
    test: str = None
    methods: tuple = ("rb",)
    sigma: float = 1.0
    sigma_grid: tuple = None
    r: int = 64
    r_grid: tuple = None
    lam: float = 0.01
    loss: str = "square"
    solver: str = "cg"
    tol: float = 1e-3
    epochs: int = 10
    tau: int = 1
    tau_grid: tuple = None
    seed: int = 0
    target: float = None
    scale: bool = True
    test_fraction: float = 0.25
    out: str = None


def _check_methods(methods, allow_exact=True):
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}, expected one of {METHODS}")
        if m == "exact" and not allow_exact:
            raise ValueError("the exact oracle has no R axis here, "
                             "use the compare mode")
    if not methods:
        raise ValueError("need at least one method")


def load_pair(config: ExperimentConfig):
    """Load train/test data for a config: explicit test source, or a
    seeded holdout split when none is given. Applies min-max scaling
    fit on train unless config.scale is off."""
    train = load_any(config.data)
    if config.test:
        test = load_any(config.test)
        if test.dim != train.dim:
            raise ValueError(f"train has dim {train.dim}, test has {test.dim}")
    else:
        if not 0.0 < config.test_fraction < 1.0:
            raise ValueError("test_fraction must be in (0, 1)")
        n_test = max(1, int(round(train.n * config.test_fraction)))
        if n_test >= train.n:
            raise ValueError("holdout split leaves no training rows")
        perm = np.random.default_rng(config.seed).permutation(train.n)
        te, tr = perm[:n_test], perm[n_test:]
        test = Dataset(train.x[te], train.y[te], train.dim, train.task,
                       classes=train.classes)
        train = Dataset(train.x[tr], train.y[tr], train.dim, train.task,
                        classes=train.classes)
    if config.scale:
        train, test, _ = scale_features(train, test)
    return train, test


def _record(config: ExperimentConfig, mode: str, row: dict) -> dict:
    out = {c: None for c in CSV_COLUMNS}
    out.update(row)
    out["mode"] = mode
    out["dataset"] = config.data
    return out


def run_sigma_sweep(config: ExperimentConfig) -> list:
    """One record per sigma (per method) at fixed R.

    The grid must span at least [1e-2, 1e2]; non-convergence shows up as
    flagged rows, never as a failure.
    """
    grid = config.sigma_grid or DEFAULT_SIGMA_GRID
    grid = [float(s) for s in grid]
    if min(grid) > 1e-2 * (1 + 1e-9) or max(grid) < 1e2 * (1 - 1e-9):
        raise ValueError("sigma grid must span at least [1e-2, 1e2]")
    _check_methods(config.methods, allow_exact=False)
    parse_loss(config.loss)
    train, test = load_pair(config)
    records = []
    for sigma in grid:
        spec = laplacian(sigma, train.dim)
        for method in config.methods:
            row = run_one(train, test, method=method, spec=spec, r=config.r,
                          lam=config.lam, loss=config.loss,
                          solver=config.solver, tol=config.tol,
                          epochs=config.epochs, tau=config.tau,
                          seed=config.seed)
            records.append(_record(config, "sweep-sigma", row))
    return records


def run_r_sweep(config: ExperimentConfig) -> list:
    """Records for each configured method at each R, fixed sigma."""
    if not config.r_grid:
        raise ValueError("r sweep needs a non-empty r grid")
    grid = [int(r) for r in config.r_grid]
    if min(grid) < 1:
        raise ValueError("r must be at least 1")
    _check_methods(config.methods, allow_exact=False)
    parse_loss(config.loss)
    train, test = load_pair(config)
    spec = laplacian(config.sigma, train.dim)
    records = []
    for r in grid:
        for method in config.methods:
            row = run_one(train, test, method=method, spec=spec, r=r,
                          lam=config.lam, loss=config.loss,
                          solver=config.solver, tol=config.tol,
                          epochs=config.epochs, tau=config.tau,
                          seed=config.seed)
            records.append(_record(config, "sweep-r", row))
    return records


def _target_reached(value, target, kind):
    if value is None or not np.isfinite(value):
        return False
    if kind == "rmse":
        return value <= target
    return value >= target


def run_method_comparison(config: ExperimentConfig):
    """R sweep across methods plus a smallest-R-to-target table.

    Returns (records, table, target). The target metric comes from config.target;
    without one the exact oracle must be among the methods and the target
    is its test RMSE * 1.05 (or accuracy * 0.99). Methods whose whole
    sweep misses the target get r=None in the table, rendered as
    "not reached".
    """
    if not config.r_grid:
        raise ValueError("compare needs a non-empty r grid")
    grid = [int(r) for r in config.r_grid]
    if min(grid) < 1:
        raise ValueError("r must be at least 1")
    _check_methods(config.methods)
    parse_loss(config.loss)
    if config.target is None and "exact" not in config.methods:
        raise ValueError("compare needs a target metric or the exact "
                         "oracle among the methods")
    train, test = load_pair(config)
    spec = laplacian(config.sigma, train.dim)
    records = []
    target = config.target
    if "exact" in config.methods:
        row = run_one(train, test, method="exact", spec=spec, r=None,
                      lam=config.lam, loss=config.loss, solver=config.solver,
                      tol=config.tol, epochs=config.epochs, tau=config.tau,
                      seed=config.seed)
        records.append(_record(config, "compare", row))
        if target is None:
            kind = row["metric_kind"]
            target = row["test_metric"] * (1.05 if kind == "rmse" else 0.99)
    swept = [m for m in config.methods if m != "exact"]
    per_method = {m: [] for m in swept}
    for r in grid:
        for method in swept:
            row = run_one(train, test, method=method, spec=spec, r=r,
                          lam=config.lam, loss=config.loss,
                          solver=config.solver, tol=config.tol,
                          epochs=config.epochs, tau=config.tau,
                          seed=config.seed)
            records.append(_record(config, "compare", row))
            per_method[method].append(row)
    table = []
    for method in swept:
        hit = None
        for row in per_method[method]:
            if _target_reached(row["test_metric"], target, row["metric_kind"]):
                hit = row
                break
        table.append({
            "method": method,
            "target": target,
            "r": hit["r"] if hit else None,
            "transform_seconds": hit["transform_seconds"] if hit else None,
            "train_seconds": hit["train_seconds"] if hit else None,
            "memory_bytes": hit["memory_bytes"] if hit else None,
            "test_metric": hit["test_metric"] if hit else None,
        })
    return records, table, target


def run_parallel_bench(config: ExperimentConfig) -> list:
    """Measured speedup per tau for the configured methods, with the
    closed-form prediction alongside for the binned features.

    Speedup is wall seconds at tau=1 over wall seconds at tau, identical
    draw sequence and epochs at every tau. Coordinate descent only;
    regression and binary tasks.
    """
    grid = tuple(int(t) for t in (config.tau_grid or DEFAULT_TAU_GRID))
    if not grid or min(grid) < 1:
        raise ValueError("tau grid entries must be at least 1")
    if 1 not in grid:
        raise ValueError("tau grid must include 1, the speedup baseline")
    methods = tuple(m for m in config.methods) or ("rb", "rf")
    _check_methods(methods, allow_exact=False)
    loss = parse_loss(config.loss)
    train, test = load_pair(config)
    if train.task is Task.MULTICLASS:
        raise ValueError("parallel bench handles regression and binary tasks")
    spec = laplacian(config.sigma, train.dim)
    lspec = loss_spec(loss)
    records = []
    for method in methods:
        transform, feats, finfo = fit_features(method, train.x, spec,
                                               config.r, config.seed)
        base_seconds = None
        for tau in sorted(grid):
            rng = np.random.default_rng(config.seed + 1)
            res = parallel_rcd_train(feats, train.y, lam=config.lam,
                                     loss=lspec, epochs=config.epochs,
                                     tau=tau, rng=rng)
            if tau == 1:
                base_seconds = res.wall_seconds
            measured = base_seconds / res.wall_seconds
            pred = None
            if method == "rb" and finfo["d_cols"] >= 2:
                pred = predicted_speedup(config.r, finfo["d_cols"], tau)
            train_pred = predictions(res.model, transform, train.x, train.task)
            train_metric, kind = _metric(train_pred, train.y, train.task)
            test_pred = predictions(res.model, transform, test.x, train.task)
            test_metric, _ = _metric(test_pred, test.y, train.task)
            row = {
                "method": method, "n_train": train.n, "n_test": test.n,
                "dim": train.dim, "task": train.task.value,
                "sigma": config.sigma, "r": config.r, "lam": config.lam,
                "loss": loss.value, "solver": "cd", "tol": config.tol,
                "epochs": config.epochs, "tau": tau, "seed": config.seed,
                "d_cols": finfo["d_cols"], "kappa_bar": finfo["kappa_bar"],
                "transform_seconds": finfo["transform_seconds"],
                "train_seconds": res.wall_seconds,
                "memory_bytes": finfo["memory_bytes"],
                "iterations": config.epochs, "converged": True,
                "objective": res.objective,
                "train_metric": train_metric, "test_metric": test_metric,
                "metric_kind": kind,
                "predicted_speedup": pred, "measured_speedup": measured,
            }
            records.append(_record(config, "parallel-bench", row))
    return records


# ---------------------------------------------------------------------------
# CSV output

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            return "diverged"
        return repr(float(value))
    return str(value)


def write_records(path, records):
    """One CSV with the fixed schema; non-finite metrics never leak,
    they render as the string diverged."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([_cell(rec.get(c)) for c in CSV_COLUMNS])


TABLE_COLUMNS = ["method", "target", "r", "transform_seconds",
                 "train_seconds", "memory_bytes", "test_metric"]


def write_table(path, table):
    """Smallest-R-to-target table as CSV; a missed target writes the
    literal string not reached in the r column."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE_COLUMNS)
        for row in table:
            cells = [_cell(row.get(c)) for c in TABLE_COLUMNS]
            if row.get("r") is None:
                cells[TABLE_COLUMNS.index("r")] = "not reached"
            writer.writerow(cells)


def format_table(table) -> str:
    """Human-readable smallest-R-to-target table for the compare mode."""
    lines = ["method  r_reached  transform_s  train_s  memory_bytes  test_metric"]
    for row in table:
        if row["r"] is None:
            lines.append(f"{row['method']:<7} not reached (target {row['target']:.6g})")
            continue
        lines.append(
            f"{row['method']:<7} {row['r']:<10d} "
            f"{row['transform_seconds']:<12.4f} {row['train_seconds']:<8.4f} "
            f"{row['memory_bytes']:<13d} {row['test_metric']:.6g}")
    return "\n".join(lines)
