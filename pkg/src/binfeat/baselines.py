"""Dense feature-map baselines the benchmark compares against.

Random Fourier features for the Laplacian kernel draw each frequency
component from Cauchy(0, 1/sigma), the kernel's spectral density, via the
inverse CDF. The landmark (Nystrom) map picks R training rows uniformly
without replacement and whitens the cross-kernel block with W^(-1/2).
"""

import json
from dataclasses import dataclass

import numpy as np

from .kernels import KernelKind, KernelSpec, kernel_cross

# eigenvalues below this fraction of the largest are treated as zero
_EIG_FLOOR = 1e-12


@dataclass
class RfTransform:
    frequencies: np.ndarray  # (R, d)
    phases: np.ndarray       # (R,)
    spec: KernelSpec

    @property
    def R(self) -> int:
        return self.frequencies.shape[0]

    def feature_matrix(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.spec.dim:
            raise ValueError(f"data has dimension {x.shape[1]}, transform expects {self.spec.dim}")
        proj = x @ self.frequencies.T + self.phases
        return np.sqrt(2.0 / self.R) * np.cos(proj)

    def to_dict(self) -> dict:
        return {
            "type": "rf",
            "kernel": {"kind": self.spec.kind.value, "sigma": self.spec.sigma, "dim": self.spec.dim},
            "frequencies": self.frequencies.tolist(),
            "phases": self.phases.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RfTransform":
        if obj.get("type") != "rf":
            raise ValueError("not a random Fourier transform description")
        k = obj["kernel"]
        spec = KernelSpec(KernelKind(k["kind"]), float(k["sigma"]), int(k["dim"]))
        return cls(
            np.asarray(obj["frequencies"], dtype=np.float64),
            np.asarray(obj["phases"], dtype=np.float64),
            spec,
        )


def rf_fit(spec: KernelSpec, r: int, rng) -> RfTransform:
    """Draw R frequency rows and phases for the given kernel."""
    if r < 1:
        raise ValueError("need at least one feature")
    rng = np.random.default_rng(rng)
    u = rng.random((r, spec.dim))
    freqs = np.tan(np.pi * (u - 0.5)) / spec.sigma
    phases = rng.random(r) * 2.0 * np.pi
    return RfTransform(freqs, phases, spec)


def rf_fit_transform(x, spec: KernelSpec, r: int, rng):
    """Fit and return (transform, N x R dense feature matrix)."""
    t = rf_fit(spec, r, rng)
    return t, t.feature_matrix(x)


def _inv_sqrt_factor(w: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root with small-eigenvalue cutoff.

    Components with eigenvalue below _EIG_FLOOR times the largest are
    dropped (their inverse contribution set to zero), which is what keeps
    duplicate landmarks from blowing up.
    """
    vals, vecs = np.linalg.eigh(w)
    lam_max = vals.max()
    if lam_max <= 0:
        raise ValueError("kernel block is degenerate: no positive eigenvalues")
    floor = _EIG_FLOOR * lam_max
    keep = vals > floor
    if not np.any(keep):
        raise ValueError("kernel block is degenerate: all eigenvalues below floor")
    inv_sqrt = np.zeros_like(vals)
    inv_sqrt[keep] = 1.0 / np.sqrt(vals[keep])
    return (vecs * inv_sqrt) @ vecs.T


@dataclass
class NystromTransform:
    landmarks: np.ndarray     # (R, d) rows copied from the training data
    landmark_idx: np.ndarray  # (R,) positions in the fitting set
    whitener: np.ndarray      # (R, R) symmetric W^(-1/2)
    spec: KernelSpec

    @property
    def R(self) -> int:
        return self.landmarks.shape[0]

    def feature_matrix(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.spec.dim:
            raise ValueError(f"data has dimension {x.shape[1]}, transform expects {self.spec.dim}")
        return kernel_cross(self.spec, x, self.landmarks) @ self.whitener

    def to_dict(self) -> dict:
        return {
            "type": "nystrom",
            "kernel": {"kind": self.spec.kind.value, "sigma": self.spec.sigma, "dim": self.spec.dim},
            "landmarks": self.landmarks.tolist(),
            "landmark_idx": self.landmark_idx.tolist(),
            "whitener": self.whitener.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "NystromTransform":
        if obj.get("type") != "nystrom":
            raise ValueError("not a landmark transform description")
        k = obj["kernel"]
        spec = KernelSpec(KernelKind(k["kind"]), float(k["sigma"]), int(k["dim"]))
        return cls(
            np.asarray(obj["landmarks"], dtype=np.float64),
            np.asarray(obj["landmark_idx"], dtype=np.int64),
            np.asarray(obj["whitener"], dtype=np.float64),
            spec,
        )


def nystrom_fit(x, spec: KernelSpec, r: int, rng) -> NystromTransform:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != spec.dim:
        raise ValueError(f"data has dimension {x.shape[1]}, kernel expects {spec.dim}")
    n = x.shape[0]
    if not 1 <= r <= n:
        raise ValueError(f"landmark count must be in [1, {n}]")
    rng = np.random.default_rng(rng)
    idx = rng.choice(n, size=r, replace=False)
    landmarks = x[idx].copy()
    w = kernel_cross(spec, landmarks, landmarks)
    return NystromTransform(landmarks, idx.astype(np.int64), _inv_sqrt_factor(w), spec)


def nystrom_transform(t: NystromTransform, x) -> np.ndarray:
    return t.feature_matrix(x)
