"""Bundled synthetic dataset generators.

Two desk-scale families: regression targets drawn from a Gaussian process
with the Laplacian kernel (so the exact-kernel oracle is the right model
for them), and a two-class Gaussian mixture for classification. Both live
in the [0,1] box that the scaling step would produce anyway.

A dataset argument of the form `synth:gp:n=2000,d=8,sigma=0.5,noise=0.1,seed=3`
or `synth:mix:n=500,d=4,sep=1.5,seed=1` is understood by load_any, which
otherwise treats its argument as a LIBSVM file path.
"""

import numpy as np

from .data import Dataset, Task, load_libsvm
from .kernels import kernel_gram, laplacian

_JITTER = 1e-8


def gp_regression(n: int, d: int, sigma: float, noise: float, rng) -> Dataset:
    """Uniform inputs, targets from a Laplacian-kernel GP plus white noise."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rng = np.random.default_rng(rng)
    x = rng.random((n, d))
    k = kernel_gram(laplacian(sigma, d), x)
    k[np.diag_indices_from(k)] += _JITTER
    chol = np.linalg.cholesky(k)
    f = chol @ rng.standard_normal(n)
    y = f + noise * rng.standard_normal(n)
    return Dataset(x, y, d, Task.REGRESSION)


def two_class_mixture(n: int, d: int, sep: float, rng) -> Dataset:
    """Two Gaussian blobs centered sep apart along the diagonal, labels -1/+1."""
    if n < 2 or d < 1:
        raise ValueError("need at least two points and one dimension")
    rng = np.random.default_rng(rng)
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    centers = np.where(y[:, None] > 0, 0.5 + sep / 4.0, 0.5 - sep / 4.0)
    x = centers + rng.standard_normal((n, d)) * (0.5 / max(sep, 1e-6))
    return Dataset(x, y, d, Task.BINARY, classes=np.array([-1.0, 1.0]))


def _parse_kv(text: str) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise ValueError(f"bad synthetic parameter {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def make_synthetic(descriptor: str) -> Dataset:
    """Build a dataset from a `synth:<family>:<k=v,...>` descriptor."""
    parts = descriptor.split(":", 2)
    if len(parts) < 2 or parts[0] != "synth":
        raise ValueError(f"not a synthetic descriptor: {descriptor!r}")
    family = parts[1]
    kv = _parse_kv(parts[2] if len(parts) > 2 else "")
    try:
        if family == "gp":
            return gp_regression(
                n=int(kv.get("n", 500)),
                d=int(kv.get("d", 4)),
                sigma=float(kv.get("sigma", 0.5)),
                noise=float(kv.get("noise", 0.1)),
                rng=int(kv.get("seed", 0)),
            )
        if family == "mix":
            return two_class_mixture(
                n=int(kv.get("n", 500)),
                d=int(kv.get("d", 4)),
                sep=float(kv.get("sep", 2.0)),
                rng=int(kv.get("seed", 0)),
            )
    except ValueError:
        raise
    raise ValueError(f"unknown synthetic family {family!r}")


def load_any(source, dim_hint: int = None, task: Task = None) -> Dataset:
    """Dispatch between a synth: descriptor and a LIBSVM file path."""
    if isinstance(source, str) and source.startswith("synth:"):
        return make_synthetic(source)
    return load_libsvm(source, dim_hint=dim_hint, task=task)
