"""FastAPI app exposing the transform, training and bench operations.

Endpoints take file paths or synth: descriptors, do the work in process
and write any requested artifacts server side. Domain errors (bad config,
parse failures, missing files) come back as 400 with a detail string.
"""

from __future__ import annotations

import csv

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__, binning
from ..bench import (
    ExperimentConfig,
    format_table,
    run_method_comparison,
    run_parallel_bench,
    run_r_sweep,
    run_sigma_sweep,
    write_records,
    write_table,
)
from ..data import Task, original_labels, scale_features
from ..kernels import laplacian
from ..metrics import accuracy, rmse
from ..pipeline import bundle_predict, fit_bundle, fit_features
from ..sparse import save_csr
from ..store import load_bundle, save_bundle, save_transform
from ..synthetic import load_any
from . import schemas


def _py(value):
    if isinstance(value, np.generic):
        return value.item()
    return value


def _clean(records):
    return [{k: _py(v) for k, v in rec.items()} for rec in records]


def _sweep_config(req, **extra) -> ExperimentConfig:
    return ExperimentConfig(
        data=req.data, test=req.test, methods=tuple(req.methods),
        lam=req.lam, loss=req.loss, tol=req.tol, epochs=req.epochs,
        seed=req.seed, scale=req.scale, test_fraction=req.test_fraction,
        out=req.out, **extra)


def create_app() -> FastAPI:
    app = FastAPI(title="binfeat", version=__version__)

    @app.exception_handler(ValueError)
    def _value_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(FileNotFoundError)
    def _missing_file(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/transform", response_model=schemas.TransformResponse)
    def transform(req: schemas.TransformRequest):
        ds = load_any(req.data)
        if req.scale:
            ds, _, _ = scale_features(ds)
        spec = laplacian(req.sigma, ds.dim)
        t, feats, info = fit_features(req.method, ds.x, spec, req.r, req.seed)
        if req.out:
            save_transform(req.out, t)
        if req.matrix_out:
            save_csr(req.matrix_out, feats)
        return schemas.TransformResponse(
            method=req.method, n_rows=ds.n, dim=ds.dim,
            d_cols=info["d_cols"], kappa_bar=info["kappa_bar"],
            nnz=feats.nnz, memory_bytes=info["memory_bytes"],
            transform_seconds=info["transform_seconds"],
            out=req.out, matrix_out=req.matrix_out)

    @app.post("/stats", response_model=schemas.StatsResponse)
    def stats(req: schemas.StatsRequest):
        ds = load_any(req.data)
        if req.scale:
            ds, _, _ = scale_features(ds)
        spec = laplacian(req.sigma, ds.dim)
        t = binning.fit(ds.x, spec, req.r, np.random.default_rng(req.seed))
        cs = binning.collision_stats(t, ds.x)
        if req.out:
            with open(req.out, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["grid", "nu", "kappa"])
                for g, (nu, kap) in enumerate(zip(cs.nu, cs.kappa)):
                    writer.writerow([g, repr(float(nu)), int(kap)])
        return schemas.StatsResponse(
            n_rows=ds.n, dim=ds.dim, r=req.r, d_cols=t.D,
            nu=[float(v) for v in cs.nu], kappa=[int(v) for v in cs.kappa],
            kappa_mean=float(cs.kappa_mean), kappa_bar=float(cs.kappa_bar),
            out=req.out)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest):
        ds = load_any(req.data)
        spec = laplacian(req.sigma, ds.dim)
        bundle, record = fit_bundle(
            ds, method=req.method, spec=spec, r=req.r, lam=req.lam,
            loss=req.loss, solver=req.solver, tol=req.tol,
            epochs=req.epochs, tau=req.threads, seed=req.seed,
            scale=req.scale)
        save_bundle(req.out, bundle)
        return schemas.TrainResponse(
            out=req.out, task=bundle.task.value,
            d_cols=_py(record["d_cols"]), kappa_bar=_py(record["kappa_bar"]),
            iterations=record["iterations"], converged=record["converged"],
            objective=record["objective"],
            train_metric=record["train_metric"],
            metric_kind=record["metric_kind"],
            transform_seconds=record["transform_seconds"],
            train_seconds=record["train_seconds"],
            memory_bytes=_py(record["memory_bytes"]))

    @app.post("/predict", response_model=schemas.PredictResponse)
    def predict(req: schemas.PredictRequest):
        bundle = load_bundle(req.model_path)
        ds = load_any(req.data)
        preds = bundle_predict(bundle, ds.x)
        if bundle.task is Task.REGRESSION:
            metric, kind = rmse(preds, ds.y), "rmse"
        else:
            metric, kind = accuracy(preds, original_labels(ds)), "accuracy"
        if req.out:
            with open(req.out, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["row", "prediction"])
                for i, p in enumerate(preds):
                    writer.writerow([i, repr(float(p))])
        return schemas.PredictResponse(
            n=len(preds), predictions=[float(p) for p in preds],
            metric=metric, metric_kind=kind, out=req.out)

    @app.post("/sweep/sigma", response_model=schemas.SweepResponse)
    def sweep_sigma(req: schemas.SigmaSweepRequest):
        config = _sweep_config(
            req, r=req.r, solver=req.solver, tau=req.threads,
            sigma_grid=tuple(req.sigma_grid) if req.sigma_grid else None)
        records = _clean(run_sigma_sweep(config))
        if req.out:
            write_records(req.out, records)
        return schemas.SweepResponse(n_records=len(records), records=records,
                                     out=req.out)

    @app.post("/sweep/r", response_model=schemas.SweepResponse)
    def sweep_r(req: schemas.RSweepRequest):
        config = _sweep_config(
            req, sigma=req.sigma, solver=req.solver, tau=req.threads,
            r_grid=tuple(req.r_grid))
        records = _clean(run_r_sweep(config))
        if req.out:
            write_records(req.out, records)
        return schemas.SweepResponse(n_records=len(records), records=records,
                                     out=req.out)

    @app.post("/compare", response_model=schemas.CompareResponse)
    def compare(req: schemas.CompareRequest):
        config = _sweep_config(
            req, sigma=req.sigma, solver=req.solver, tau=req.threads,
            r_grid=tuple(req.r_grid), target=req.target)
        records, table, target = run_method_comparison(config)
        records = _clean(records)
        table = _clean(table)
        if req.out:
            write_records(req.out, records)
        if req.table_out:
            write_table(req.table_out, table)
        return schemas.CompareResponse(
            n_records=len(records), records=records, out=req.out,
            target=float(target), table=table, table_text=format_table(table),
            table_out=req.table_out)

    @app.post("/parallel-bench", response_model=schemas.SweepResponse)
    def parallel_bench(req: schemas.ParallelBenchRequest):
        config = ExperimentConfig(
            data=req.data, test=req.test, methods=tuple(req.methods),
            sigma=req.sigma, r=req.r, lam=req.lam, loss=req.loss,
            solver="cd", tol=req.tol, epochs=req.epochs,
            tau_grid=tuple(req.tau_grid), seed=req.seed, scale=req.scale,
            test_fraction=req.test_fraction, out=req.out)
        records = _clean(run_parallel_bench(config))
        if req.out:
            write_records(req.out, records)
        return schemas.SweepResponse(n_records=len(records), records=records,
                                     out=req.out)

    return app
