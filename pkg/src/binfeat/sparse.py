"""Compressed sparse row matrices and the matrix-vector kernels used by the solvers.

The matrix is stored canonically: row_ptr is non-decreasing with
row_ptr[0] = 0 and row_ptr[n_rows] = nnz, and column indices are strictly
increasing within each row (duplicates are summed at construction time).
Values are float64, indices int64.
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit

_MAGIC = b"BFCSR1\x00\x00"


@dataclass
class SparseMatrix:
    """CSR matrix over float64 with int64 indices."""

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        self.col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        self.validate()

    def validate(self):
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if self.row_ptr.shape != (self.n_rows + 1,):
            raise ValueError("row_ptr must have length n_rows + 1")
        if self.row_ptr[0] != 0 or self.row_ptr[-1] != self.col_idx.shape[0]:
            raise ValueError("row_ptr must start at 0 and end at nnz")
        if np.any(np.diff(self.row_ptr) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if self.col_idx.shape != self.values.shape:
            raise ValueError("col_idx and values must have equal length")
        if self.col_idx.size:
            if self.col_idx.min() < 0 or self.col_idx.max() >= self.n_cols:
                raise ValueError("column index out of range")
            # strictly increasing within each row: mask out pairs straddling
            # a row boundary, then every remaining diff must be positive
            inner = np.diff(self.col_idx)
            if inner.size:
                mask = np.ones(inner.size, dtype=bool)
                starts = self.row_ptr[1:-1]
                starts = starts[(starts > 0) & (starts < self.col_idx.size)]
                mask[starts - 1] = False
                if np.any(inner[mask] <= 0):
                    raise ValueError("column indices must be strictly increasing within a row")

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    @property
    def nbytes(self) -> int:
        """Exact byte count of the stored arrays."""
        return self.row_ptr.nbytes + self.col_idx.nbytes + self.values.nbytes

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals):
        """Build a canonical CSR matrix from triplets; duplicates are summed."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("rows, cols and vals must have equal length")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            keep = np.empty(rows.size, dtype=bool)
            keep[0] = True
            keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            group = np.cumsum(keep) - 1
            summed = np.zeros(int(group[-1]) + 1, dtype=np.float64)
            np.add.at(summed, group, vals)
            rows, cols, vals = rows[keep], cols[keep], summed
        row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(row_ptr, rows + 1, 1)
        np.cumsum(row_ptr, out=row_ptr)
        return cls(n_rows, n_cols, row_ptr, cols, vals)

    @classmethod
    def from_dense(cls, arr, drop_zeros=True):
        """Convert a dense 2-D array to CSR.

        With drop_zeros=False every entry is kept, so nnz equals the full
        element count; that is what a dense feature matrix routed through the
        sparse solvers expects.
        """
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        n_rows, n_cols = arr.shape
        if drop_zeros:
            rows, cols = np.nonzero(arr)
        else:
            rows, cols = np.indices(arr.shape)
            rows, cols = rows.ravel(), cols.ravel()
        vals = arr[rows, cols]
        row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(row_ptr, rows.astype(np.int64) + 1, 1)
        np.cumsum(row_ptr, out=row_ptr)
        return cls(n_rows, n_cols, row_ptr, cols.astype(np.int64), vals)

    def to_dense(self):
        out = np.zeros((self.n_rows, self.n_cols))
        for i in range(self.n_rows):
            lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
            out[i, self.col_idx[lo:hi]] = self.values[lo:hi]
        return out


@dataclass
class ColumnView:
    """Column-major (CSC) view of a SparseMatrix.

    Within each column the row indices are increasing, and rebuilding a
    row-major matrix from the view reproduces the source bit-exactly.
    """

    n_rows: int
    n_cols: int
    col_ptr: np.ndarray
    row_idx: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    def column(self, j):
        """Row indices and values of column j."""
        lo, hi = self.col_ptr[j], self.col_ptr[j + 1]
        return self.row_idx[lo:hi], self.values[lo:hi]

    def to_matrix(self) -> SparseMatrix:
        """Rebuild the row-major source matrix."""
        row_ptr, col_idx, values = _csc_to_csr(
            self.n_rows, self.n_cols, self.col_ptr, self.row_idx, self.values
        )
        return SparseMatrix(self.n_rows, self.n_cols, row_ptr, col_idx, values)


@njit(cache=True)
def _matvec_kernel(row_ptr, col_idx, values, x, out):
    for i in range(out.shape[0]):
        acc = 0.0
        for p in range(row_ptr[i], row_ptr[i + 1]):
            acc += values[p] * x[col_idx[p]]
        out[i] = acc


@njit(cache=True)
def _matvec_t_kernel(row_ptr, col_idx, values, y, out):
    for i in range(row_ptr.shape[0] - 1):
        yi = y[i]
        for p in range(row_ptr[i], row_ptr[i + 1]):
            out[col_idx[p]] += values[p] * yi


@njit(cache=True)
def _transpose_kernel(n_rows, n_cols, row_ptr, col_idx, values):
    nnz = values.shape[0]
    ptr = np.zeros(n_cols + 1, dtype=np.int64)
    for p in range(nnz):
        ptr[col_idx[p] + 1] += 1
    for j in range(n_cols):
        ptr[j + 1] += ptr[j]
    idx = np.empty(nnz, dtype=np.int64)
    val = np.empty(nnz, dtype=np.float64)
    fill = ptr[:-1].copy()
    for i in range(n_rows):
        for p in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[p]
            q = fill[j]
            idx[q] = i
            val[q] = values[p]
            fill[j] = q + 1
    return ptr, idx, val


def _csc_to_csr(n_rows, n_cols, col_ptr, row_idx, values):
    # same counting sort with the roles of rows and columns swapped
    return _transpose_kernel(n_cols, n_rows, col_ptr, row_idx, values)


def matvec(a: SparseMatrix, x) -> np.ndarray:
    """Compute a @ x in O(nnz)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (a.n_cols,):
        raise ValueError(f"matvec expects a vector of length {a.n_cols}, got {x.shape}")
    out = np.empty(a.n_rows)
    _matvec_kernel(a.row_ptr, a.col_idx, a.values, x, out)
    return out


def matvec_transpose(a: SparseMatrix, y) -> np.ndarray:
    """Compute a.T @ y in O(nnz)."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.shape != (a.n_rows,):
        raise ValueError(f"matvec_transpose expects a vector of length {a.n_rows}, got {y.shape}")
    out = np.zeros(a.n_cols)
    _matvec_t_kernel(a.row_ptr, a.col_idx, a.values, y, out)
    return out


def column_view(a: SparseMatrix) -> ColumnView:
    """Materialize per-column access to a; entry order within a column is by row."""
    col_ptr, row_idx, values = _transpose_kernel(
        a.n_rows, a.n_cols, a.row_ptr, a.col_idx, a.values
    )
    return ColumnView(a.n_rows, a.n_cols, col_ptr, row_idx, values)


def save_csr(path, a: SparseMatrix):
    """Write the CSR arrays to a little-endian binary file.

    Layout: 8 magic bytes, three uint64 fields (n_rows, n_cols, nnz), then
    row_ptr as int64, col_idx as int64 and values as float64, all
    little-endian and contiguous.
    """
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(np.array([a.n_rows, a.n_cols, a.nnz], dtype="<u8").tobytes())
        fh.write(a.row_ptr.astype("<i8").tobytes())
        fh.write(a.col_idx.astype("<i8").tobytes())
        fh.write(a.values.astype("<f8").tobytes())


def load_csr(path) -> SparseMatrix:
    """Read a matrix written by save_csr."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a binfeat CSR file")
        header = np.frombuffer(fh.read(24), dtype="<u8")
        n_rows, n_cols, nnz = (int(v) for v in header)
        row_ptr = np.frombuffer(fh.read(8 * (n_rows + 1)), dtype="<i8").astype(np.int64)
        col_idx = np.frombuffer(fh.read(8 * nnz), dtype="<i8").astype(np.int64)
        values = np.frombuffer(fh.read(8 * nnz), dtype="<f8").astype(np.float64)
    return SparseMatrix(n_rows, n_cols, row_ptr, col_idx, values)
