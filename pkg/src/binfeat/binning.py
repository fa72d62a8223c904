"""Random binning feature transform.

Each of R grids draws per-dimension widths from the kernel's width
distribution and offsets uniform in [0, width). A point lands in the bin
whose coordinates are floor((x_j - u_j) / delta_j). Fitting records every
bin occupied by the training set and assigns it a global column; the
feature matrix has one entry of 1/sqrt(R) per grid per row, so the dot
product of two feature rows counts the fraction of grids where the points
collide, an unbiased estimate of the kernel value.

The normalization is 1/sqrt(R), not 1/sqrt(D): only that choice makes
z(x).z(x) = 1 and keeps the estimator an average over grids. Rows of
unseen test points lose the entry for any bin the training set never
occupied, and are deliberately not renormalized.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelKind, KernelSpec, WidthDistribution, sample_widths
from .sparse import SparseMatrix


@dataclass
class Grid:
    """One random grid: widths, offsets and the occupied-bin dictionary."""

    widths: np.ndarray
    offsets: np.ndarray
    col_base: int
    # keyed by the raw int64 bytes of the bin coordinates; see bin_dict for
    # the tuple-keyed view
    _bins: dict = field(default_factory=dict, repr=False)

    @property
    def n_bins(self) -> int:
        return len(self._bins)

    @property
    def bin_dict(self) -> dict:
        """Bin coordinates (d-tuple of ints) -> global column index."""
        d = self.widths.shape[0]
        out = {}
        for key, col in self._bins.items():
            coords = tuple(int(v) for v in np.frombuffer(key, dtype=np.int64, count=d))
            out[coords] = col
        return out

    def codes_for(self, x) -> np.ndarray:
        """Integer bin coordinates of each row of x on this grid."""
        return np.floor((x - self.offsets) / self.widths).astype(np.int64)


def bin_index(x, widths, offsets):
    """Bin coordinates of a single point: componentwise floor((x-u)/delta)."""
    x = np.asarray(x, dtype=np.float64)
    widths = np.asarray(widths, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.float64)
    if not (x.shape == widths.shape == offsets.shape):
        raise ValueError("x, widths and offsets must have equal length")
    return tuple(int(v) for v in np.floor((x - offsets) / widths).astype(np.int64))


@dataclass
class RbTransform:
    grids: list
    D: int
    R: int
    scale: float
    spec: KernelSpec

    def to_dict(self) -> dict:
        grids = []
        for g in self.grids:
            d = g.widths.shape[0]
            bins = [None] * g.n_bins
            for key, col in g._bins.items():
                coords = [int(v) for v in np.frombuffer(key, dtype=np.int64, count=d)]
                bins[col - g.col_base] = coords
            grids.append(
                {
                    "widths": [float(v) for v in g.widths],
                    "offsets": [float(v) for v in g.offsets],
                    "bins": bins,
                }
            )
        return {
            "type": "rb",
            "kernel": {"kind": self.spec.kind.value, "sigma": self.spec.sigma, "dim": self.spec.dim},
            "R": self.R,
            "D": self.D,
            "grids": grids,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RbTransform":
        if obj.get("type") != "rb":
            raise ValueError("not a random binning transform description")
        k = obj["kernel"]
        spec = KernelSpec(KernelKind(k["kind"]), float(k["sigma"]), int(k["dim"]))
        grids = []
        base = 0
        for g in obj["grids"]:
            widths = np.asarray(g["widths"], dtype=np.float64)
            offsets = np.asarray(g["offsets"], dtype=np.float64)
            bins = {}
            for i, coords in enumerate(g["bins"]):
                key = np.asarray(coords, dtype=np.int64).tobytes()
                bins[key] = base + i
            grids.append(Grid(widths, offsets, base, bins))
            base += len(bins)
        if base != int(obj["D"]):
            raise ValueError("bin count does not match declared D")
        r = int(obj["R"])
        return cls(grids, base, r, 1.0 / np.sqrt(r), spec)


def fit(x, spec: KernelSpec, r: int, rng) -> RbTransform:
    """Sample R grids and record which bins the rows of x occupy.

    Columns are numbered grid by grid in sampling order, and within a grid
    by first occurrence in row order, so a fixed seed fixes the transform
    exactly. D ends up between R and N*R.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != spec.dim:
        raise ValueError(f"data has dimension {x.shape[1]}, kernel expects {spec.dim}")
    if r < 1:
        raise ValueError("need at least one grid")
    if x.shape[0] < 1:
        raise ValueError("need at least one data point")
    rng = np.random.default_rng(rng)
    dist = WidthDistribution.for_kernel(spec)
    grids = []
    base = 0
    for _ in range(r):
        widths = sample_widths(dist, rng)
        offsets = rng.random(spec.dim) * widths
        grid = Grid(widths, offsets, base)
        codes = grid.codes_for(x)
        bins = grid._bins
        nxt = base
        for row in codes:
            key = row.tobytes()
            if key not in bins:
                bins[key] = nxt
                nxt += 1
        base = nxt
        grids.append(grid)
    return RbTransform(grids, base, r, 1.0 / np.sqrt(r), spec)


def transform(t: RbTransform, x) -> SparseMatrix:
    """Feature matrix of x under a fitted transform.

    Training rows get exactly R entries of 1/sqrt(R); rows containing bins
    the fit never saw simply lose those entries.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != t.spec.dim:
        raise ValueError(f"data has dimension {x.shape[1]}, transform expects {t.spec.dim}")
    n = x.shape[0]
    row_parts = []
    col_parts = []
    for g in t.grids:
        codes = g.codes_for(x)
        bins = g._bins
        cols = np.fromiter(
            (bins.get(row.tobytes(), -1) for row in codes), dtype=np.int64, count=n
        )
        hit = cols >= 0
        row_parts.append(np.nonzero(hit)[0])
        col_parts.append(cols[hit])
    rows = np.concatenate(row_parts)
    cols = np.concatenate(col_parts)
    vals = np.full(rows.shape[0], t.scale)
    return SparseMatrix.from_coo(n, t.D, rows, cols, vals)


def approx_kernel(t: RbTransform, x1, x2) -> float:
    """z(x1).z(x2): the fraction of grids where the two points share a bin."""
    z = transform(t, np.vstack([np.atleast_1d(x1), np.atleast_1d(x2)]))
    a = dict(zip(z.col_idx[z.row_ptr[0] : z.row_ptr[1]], z.values[z.row_ptr[0] : z.row_ptr[1]]))
    acc = 0.0
    for c, v in zip(z.col_idx[z.row_ptr[1] : z.row_ptr[2]], z.values[z.row_ptr[1] : z.row_ptr[2]]):
        if c in a:
            acc += a[c] * v
    return float(acc)


@dataclass
class CollisionStats:
    """Bin occupancy summary of a dataset under a fitted transform."""

    nu: np.ndarray       # per grid: max bin occupancy / N
    kappa: np.ndarray    # per grid: number of non-empty bins
    kappa_mean: float    # mean of kappa over grids
    kappa_bar: float     # D / R of the fitted transform


def collision_stats(t: RbTransform, x) -> CollisionStats:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != t.spec.dim:
        raise ValueError(f"data has dimension {x.shape[1]}, transform expects {t.spec.dim}")
    n = x.shape[0]
    nu = np.empty(t.R)
    kappa = np.empty(t.R, dtype=np.int64)
    for i, g in enumerate(t.grids):
        codes = g.codes_for(x)
        _, counts = np.unique(codes, axis=0, return_counts=True)
        nu[i] = counts.max() / n
        kappa[i] = counts.shape[0]
    return CollisionStats(nu, kappa, float(kappa.mean()), t.D / t.R)


def save_transform(path, t: RbTransform):
    with open(path, "w") as fh:
        json.dump(t.to_dict(), fh)


def load_transform(path) -> RbTransform:
    with open(path) as fh:
        obj = json.load(fh)
    return RbTransform.from_dict(obj)
