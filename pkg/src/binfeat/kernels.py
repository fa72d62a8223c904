"""Exact shift-invariant kernel evaluation and the bin-width sampler.

Only the Laplacian kernel k(x1, x2) = exp(-||x1 - x2||_1 / sigma) is
implemented. Its per-dimension width distribution p(delta) is proportional to
delta * exp(-delta/sigma), which is Gamma(shape=2, scale=sigma); that draw is
realized exactly as the sum of two exponentials.
"""

import enum
from dataclasses import dataclass

import numpy as np

# smallest uniform we ever take a log of
_U_FLOOR = 2.0 ** -53


class KernelKind(enum.Enum):
    LAPLACIAN = "laplacian"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    sigma: float
    dim: int

    def __post_init__(self):
        if not isinstance(self.kind, KernelKind):
            raise ValueError(f"unknown kernel kind: {self.kind!r}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.dim < 1:
            raise ValueError("dim must be at least 1")


def laplacian(sigma: float, dim: int) -> KernelSpec:
    return KernelSpec(KernelKind.LAPLACIAN, float(sigma), int(dim))


@dataclass(frozen=True)
class WidthDistribution:
    """Per-dimension bin-width sampler parameters, Gamma(2, sigma) for every dim."""

    sigma: float
    dim: int

    @classmethod
    def for_kernel(cls, spec: KernelSpec) -> "WidthDistribution":
        return cls(sigma=spec.sigma, dim=spec.dim)


def kernel_eval(spec: KernelSpec, x1, x2) -> float:
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape != (spec.dim,) or x2.shape != (spec.dim,):
        raise ValueError(f"points must have dimension {spec.dim}")
    return float(np.exp(-np.abs(x1 - x2).sum() / spec.sigma))


def sample_width(dist: WidthDistribution, dim_index: int, rng) -> float:
    """One Gamma(2, sigma) width draw for the given dimension."""
    if not 0 <= dim_index < dist.dim:
        raise ValueError("dim_index out of range")
    u = np.clip(rng.random(2), _U_FLOOR, None)
    return float(-dist.sigma * np.log(u[0] * u[1]))


def sample_widths(dist: WidthDistribution, rng) -> np.ndarray:
    """Width draws for all dims at once; same law as sample_width per entry."""
    u = np.clip(rng.random((dist.dim, 2)), _U_FLOOR, None)
    return -dist.sigma * np.log(u[:, 0] * u[:, 1])


def kernel_gram(spec: KernelSpec, x) -> np.ndarray:
    """Dense N x N kernel matrix; oracle-scale only."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    d1 = np.abs(x[:, None, :] - x[None, :, :]).sum(axis=2)
    return np.exp(-d1 / spec.sigma)


def kernel_cross(spec: KernelSpec, x1, x2) -> np.ndarray:
    """Dense cross matrix K[i, j] = k(x1[i], x2[j])."""
    x1 = np.atleast_2d(np.asarray(x1, dtype=np.float64))
    x2 = np.atleast_2d(np.asarray(x2, dtype=np.float64))
    d1 = np.abs(x1[:, None, :] - x2[None, :, :]).sum(axis=2)
    return np.exp(-d1 / spec.sigma)
