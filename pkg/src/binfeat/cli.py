"""Command line front end.

Every subcommand is a thin client: it builds one request, sends it to the
service app (in process by default, over the network with --server) and
prints a short human summary. File outputs are written by the service.
"""

from __future__ import annotations

import argparse
import asyncio
import sys

import httpx


def _request(server, method, path, payload=None):
    async def go():
        if server:
            async with httpx.AsyncClient(base_url=server, timeout=600.0) as c:
                if method == "get":
                    return await c.get(path)
                return await c.post(path, json=payload)
        from .service.app import create_app
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://binfeat",
                                     timeout=600.0) as c:
            if method == "get":
                return await c.get(path)
            return await c.post(path, json=payload)
    return asyncio.run(go())


def _call(args, path, payload):
    resp = _request(args.server, "post", path, payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(1)
    return resp.json()


def _add_io(p, test=False):
    p.add_argument("--data", required=True,
                   help="LIBSVM path (optionally .gz) or synth: descriptor")
    if test:
        p.add_argument("--test", default=None,
                       help="held-out data; omitted = seeded holdout split")
        p.add_argument("--test-fraction", type=float, default=0.25)
    p.add_argument("--no-scale", dest="scale", action="store_false",
                   help="skip min-max feature scaling")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--server", default=None,
                   help="URL of a running service; default runs in process")


def _add_model_params(p, methods=("rb", "rf", "nystrom"), multi=False):
    if multi:
        p.add_argument("--method", action="append", choices=methods,
                       default=None, help="repeatable")
    else:
        p.add_argument("--method", choices=methods, default="rb")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--r", type=int, default=64)


def _add_solver_params(p, solver=True):
    p.add_argument("--lambda", type=float, default=0.01, dest="lam")
    p.add_argument("--loss", default="square",
                   choices=("square", "logistic", "squared_hinge"))
    if solver:
        p.add_argument("--solver", default="cg", choices=("cg", "cd"))
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=10)


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binfeat",
        description="kernel approximation with random binning features")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="fit a feature transform and save it")
    _add_io(p)
    _add_model_params(p)
    p.add_argument("--out", default=None, help="transform JSON path")
    p.add_argument("--matrix-out", default=None,
                   help="binary dump of the training feature matrix")

    p = sub.add_parser("stats", help="collision statistics of a binning transform")
    _add_io(p)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--r", type=int, default=64)
    p.add_argument("--out", default=None, help="per-grid CSV path")

    p = sub.add_parser("train", help="train a model and save the bundle")
    _add_io(p)
    _add_model_params(p)
    _add_solver_params(p)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="model bundle JSON path")

    p = sub.add_parser("predict", help="score data with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None, help="predictions CSV path")
    p.add_argument("--server", default=None)

    p = sub.add_parser("sweep-sigma", help="sweep kernel width at fixed R")
    _add_io(p, test=True)
    _add_model_params(p, multi=True)
    _add_solver_params(p)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--sigma-grid", type=_float_list, default=None,
                   help="comma separated, must span [1e-2,1e2]")
    p.add_argument("--out", default=None, help="records CSV path")

    p = sub.add_parser("sweep-r", help="sweep R at fixed kernel width")
    _add_io(p, test=True)
    _add_model_params(p, multi=True)
    _add_solver_params(p)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--r-grid", type=_int_list, required=True,
                   help="comma separated")
    p.add_argument("--out", default=None, help="records CSV path")

    p = sub.add_parser("compare", help="methods vs the exact kernel, R to target")
    _add_io(p, test=True)
    _add_model_params(p, methods=("rb", "rf", "nystrom", "exact"), multi=True)
    _add_solver_params(p)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--r-grid", type=_int_list, required=True)
    p.add_argument("--target", type=float, default=None,
                   help="metric to reach; default derives from the exact row")
    p.add_argument("--out", default=None, help="records CSV path")
    p.add_argument("--table-out", default=None, help="target table CSV path")

    p = sub.add_parser("parallel-bench", help="async solver speedup across threads")
    _add_io(p, test=True)
    _add_model_params(p, methods=("rb", "rf"), multi=True)
    _add_solver_params(p, solver=False)
    p.add_argument("--tau-grid", type=_int_list, default=[1, 2, 4, 8],
                   help="thread counts, must include 1")
    p.add_argument("--out", default=None, help="records CSV path")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _sweep_payload(args, methods_default):
    payload = {
        "data": args.data, "test": args.test,
        "methods": args.method or list(methods_default),
        "lambda": args.lam, "loss": args.loss,
        "tol": args.tol, "epochs": args.epochs, "threads": args.threads,
        "seed": args.seed, "scale": args.scale,
        "test_fraction": args.test_fraction, "out": args.out,
    }
    return payload


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def cmd_transform(args):
    payload = {"data": args.data, "method": args.method, "sigma": args.sigma,
               "r": args.r, "seed": args.seed, "scale": args.scale,
               "out": args.out, "matrix_out": args.matrix_out}
    body = _call(args, "/transform", payload)
    print(f"{args.method} transform on {body['n_rows']} rows, dim {body['dim']}: "
          f"D={_fmt(body['d_cols'])} kappa_bar={_fmt(body['kappa_bar'])} "
          f"nnz={body['nnz']} bytes={body['memory_bytes']}")
    if body["out"]:
        print(f"transform -> {body['out']}")
    if body["matrix_out"]:
        print(f"matrix -> {body['matrix_out']}")


def cmd_stats(args):
    payload = {"data": args.data, "sigma": args.sigma, "r": args.r,
               "seed": args.seed, "scale": args.scale, "out": args.out}
    body = _call(args, "/stats", payload)
    nu = body["nu"]
    print(f"{body['r']} grids over {body['n_rows']} rows: D={body['d_cols']} "
          f"kappa_bar={body['kappa_bar']:.4g} kappa_mean={body['kappa_mean']:.4g}")
    print(f"nu: min={min(nu):.4g} mean={sum(nu)/len(nu):.4g} max={max(nu):.4g}")
    if body["out"]:
        print(f"per-grid stats -> {body['out']}")


def cmd_train(args):
    payload = {"data": args.data, "method": args.method, "sigma": args.sigma,
               "r": args.r, "lambda": args.lam, "loss": args.loss,
               "solver": args.solver, "tol": args.tol, "epochs": args.epochs,
               "threads": args.threads, "seed": args.seed,
               "scale": args.scale, "out": args.out}
    body = _call(args, "/train", payload)
    print(f"trained {args.method}/{args.solver} ({body['task']}): "
          f"train {body['metric_kind']}={body['train_metric']:.6g} "
          f"iterations={body['iterations']} converged={body['converged']} "
          f"D={_fmt(body['d_cols'])}")
    print(f"model -> {body['out']}")


def cmd_predict(args):
    payload = {"model": args.model, "data": args.data, "out": args.out}
    body = _call(args, "/predict", payload)
    line = f"{body['n']} predictions"
    if body.get("metric") is not None:
        line += f", {body['metric_kind']}={body['metric']:.6g}"
    print(line)
    if body["out"]:
        print(f"predictions -> {body['out']}")


def cmd_sweep_sigma(args):
    payload = _sweep_payload(args, ("rb",))
    payload.update(r=args.r, solver=args.solver, sigma_grid=args.sigma_grid)
    body = _call(args, "/sweep/sigma", payload)
    for rec in body["records"]:
        print(f"sigma={rec['sigma']:<10.4g} {rec['method']:<8} "
              f"D={_fmt(rec['d_cols']):<7} train={_fmt(rec['train_metric'])} "
              f"test={_fmt(rec['test_metric'])}")
    if body["out"]:
        print(f"records -> {body['out']}")


def cmd_sweep_r(args):
    payload = _sweep_payload(args, ("rb", "rf"))
    payload.update(sigma=args.sigma, solver=args.solver, r_grid=args.r_grid)
    body = _call(args, "/sweep/r", payload)
    for rec in body["records"]:
        print(f"r={rec['r']:<6} {rec['method']:<8} D={_fmt(rec['d_cols']):<7} "
              f"train={_fmt(rec['train_metric'])} test={_fmt(rec['test_metric'])}")
    if body["out"]:
        print(f"records -> {body['out']}")


def cmd_compare(args):
    payload = _sweep_payload(args, ("exact", "rb", "rf"))
    payload.update(sigma=args.sigma, solver=args.solver, r_grid=args.r_grid,
                   target=args.target, table_out=args.table_out)
    body = _call(args, "/compare", payload)
    print(f"target {_fmt(body['target'])} "
          f"({body['records'][0]['metric_kind']})")
    print(body["table_text"])
    if body["out"]:
        print(f"records -> {body['out']}")
    if body["table_out"]:
        print(f"table -> {body['table_out']}")


def cmd_parallel_bench(args):
    payload = {
        "data": args.data, "test": args.test,
        "methods": args.method or ["rb", "rf"], "sigma": args.sigma,
        "r": args.r, "lambda": args.lam, "loss": args.loss, "tol": args.tol,
        "epochs": args.epochs, "tau_grid": args.tau_grid, "seed": args.seed,
        "scale": args.scale, "test_fraction": args.test_fraction,
        "out": args.out,
    }
    body = _call(args, "/parallel-bench", payload)
    for rec in body["records"]:
        print(f"{rec['method']:<8} tau={rec['tau']:<3} "
              f"measured={_fmt(rec['measured_speedup'])} "
              f"predicted={_fmt(rec['predicted_speedup'])} "
              f"objective={_fmt(rec['objective'])}")
    if body["out"]:
        print(f"records -> {body['out']}")


def cmd_serve(args):
    import uvicorn

    from .service.app import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port)


_HANDLERS = {
    "transform": cmd_transform,
    "stats": cmd_stats,
    "train": cmd_train,
    "predict": cmd_predict,
    "sweep-sigma": cmd_sweep_sigma,
    "sweep-r": cmd_sweep_r,
    "compare": cmd_compare,
    "parallel-bench": cmd_parallel_bench,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _HANDLERS[args.command](args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
