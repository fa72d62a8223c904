import numpy as np
import numpy.testing as npt
import pytest

from binfeat.sparse import (
    ColumnView,
    SparseMatrix,
    column_view,
    load_csr,
    matvec,
    matvec_transpose,
    save_csr,
)


def random_csr(rng, n_rows, n_cols, density=0.3):
    dense = rng.standard_normal((n_rows, n_cols))
    dense[rng.random((n_rows, n_cols)) > density] = 0.0
    return SparseMatrix.from_dense(dense), dense


def test_matvec_identity():
    a = SparseMatrix.from_dense(np.eye(3))
    npt.assert_array_equal(matvec(a, [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_matvec_zero_matrix():
    a = SparseMatrix(2, 4, np.zeros(3, dtype=np.int64), np.array([], dtype=np.int64), np.array([]))
    npt.assert_array_equal(matvec(a, np.ones(4)), [0.0, 0.0])


def test_matvec_small_dense_oracle():
    a = SparseMatrix.from_dense([[0.0, 2.0], [3.0, 0.0]])
    npt.assert_array_equal(matvec(a, [1.0, 1.0]), [2.0, 3.0])


def test_matvec_dimension_mismatch():
    a = SparseMatrix.from_dense(np.eye(3))
    with pytest.raises(ValueError):
        matvec(a, np.ones(4))


def test_matvec_transpose_identity():
    a = SparseMatrix.from_dense(np.eye(3))
    npt.assert_array_equal(matvec_transpose(a, [4.0, 5.0, 6.0]), [4.0, 5.0, 6.0])


def test_matvec_transpose_small_dense_oracle():
    a = SparseMatrix.from_dense([[0.0, 2.0], [3.0, 0.0]])
    npt.assert_array_equal(matvec_transpose(a, [1.0, 1.0]), [3.0, 2.0])


def test_matvec_transpose_single_row():
    a = SparseMatrix.from_dense([[1.0, 1.0, 1.0]])
    npt.assert_array_equal(matvec_transpose(a, [2.0]), [2.0, 2.0, 2.0])


def test_matvec_transpose_dimension_mismatch():
    a = SparseMatrix.from_dense([[1.0, 1.0, 1.0]])
    with pytest.raises(ValueError):
        matvec_transpose(a, np.ones(3))


def test_matvec_against_dense_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n, m = rng.integers(1, 30, size=2)
        a, dense = random_csr(rng, n, m)
        x = rng.standard_normal(m)
        npt.assert_allclose(matvec(a, x), dense @ x, atol=1e-12)
        y = rng.standard_normal(n)
        npt.assert_allclose(matvec_transpose(a, y), dense.T @ y, atol=1e-12)


def test_adjoint_identity():
    # y.(Ax) == (A^T y).x
    rng = np.random.default_rng(1)
    for _ in range(20):
        n, m = rng.integers(1, 40, size=2)
        a, _ = random_csr(rng, n, m)
        x = rng.standard_normal(m)
        y = rng.standard_normal(n)
        lhs = np.dot(y, matvec(a, x))
        rhs = np.dot(matvec_transpose(a, y), x)
        npt.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-10)


def test_column_view_identity():
    cv = column_view(SparseMatrix.from_dense(np.eye(2)))
    rows0, vals0 = cv.column(0)
    rows1, vals1 = cv.column(1)
    npt.assert_array_equal(rows0, [0])
    npt.assert_array_equal(vals0, [1.0])
    npt.assert_array_equal(rows1, [1])
    npt.assert_array_equal(vals1, [1.0])


def test_column_view_small():
    cv = column_view(SparseMatrix.from_dense([[0.0, 2.0], [3.0, 0.0]]))
    rows0, vals0 = cv.column(0)
    npt.assert_array_equal(rows0, [1])
    npt.assert_array_equal(vals0, [3.0])
    rows1, vals1 = cv.column(1)
    npt.assert_array_equal(rows1, [0])
    npt.assert_array_equal(vals1, [2.0])


def test_column_view_empty_matrix():
    a = SparseMatrix(3, 3, np.zeros(4, dtype=np.int64), np.array([], dtype=np.int64), np.array([]))
    cv = column_view(a)
    assert cv.nnz == 0
    for j in range(3):
        rows, vals = cv.column(j)
        assert rows.size == 0 and vals.size == 0


def test_column_view_round_trip_bit_exact():
    rng = np.random.default_rng(2)
    for _ in range(10):
        n, m = rng.integers(1, 50, size=2)
        a, _ = random_csr(rng, n, m)
        b = column_view(a).to_matrix()
        npt.assert_array_equal(b.row_ptr, a.row_ptr)
        npt.assert_array_equal(b.col_idx, a.col_idx)
        assert np.array_equal(b.values, a.values)  # bitwise, no tolerance


def test_column_view_entry_count():
    rng = np.random.default_rng(3)
    a, _ = random_csr(rng, 17, 9)
    cv = column_view(a)
    assert cv.nnz == a.nnz
    total = sum(cv.column(j)[0].size for j in range(a.n_cols))
    assert total == a.nnz


def test_from_coo_sums_duplicates():
    a = SparseMatrix.from_coo(2, 2, [0, 0, 1], [1, 1, 0], [2.0, 3.0, 4.0])
    npt.assert_array_equal(a.to_dense(), [[0.0, 5.0], [4.0, 0.0]])
    assert a.nnz == 2


def test_canonical_form_rejected_when_unsorted():
    with pytest.raises(ValueError):
        SparseMatrix(
            1, 3,
            np.array([0, 2], dtype=np.int64),
            np.array([2, 0], dtype=np.int64),
            np.array([1.0, 1.0]),
        )


def test_validate_rejects_bad_row_ptr():
    with pytest.raises(ValueError):
        SparseMatrix(
            2, 2,
            np.array([0, 2, 1], dtype=np.int64),
            np.array([0, 1], dtype=np.int64),
            np.array([1.0, 1.0]),
        )


def test_validate_rejects_out_of_range_column():
    with pytest.raises(ValueError):
        SparseMatrix(
            1, 2,
            np.array([0, 1], dtype=np.int64),
            np.array([5], dtype=np.int64),
            np.array([1.0]),
        )


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    a, _ = random_csr(rng, 23, 11)
    path = tmp_path / "a.csr"
    save_csr(path, a)
    b = load_csr(path)
    assert (b.n_rows, b.n_cols) == (a.n_rows, a.n_cols)
    npt.assert_array_equal(b.row_ptr, a.row_ptr)
    npt.assert_array_equal(b.col_idx, a.col_idx)
    assert np.array_equal(b.values, a.values)


def test_load_rejects_wrong_magic(tmp_path):
    path = tmp_path / "junk.csr"
    path.write_bytes(b"NOTACSR\x00" + b"\x00" * 64)
    with pytest.raises(ValueError):
        load_csr(path)


def test_nbytes_counts_all_arrays():
    a = SparseMatrix.from_dense([[0.0, 2.0], [3.0, 0.0]])
    # row_ptr 3*8 + col_idx 2*8 + values 2*8
    assert a.nbytes == 24 + 16 + 16
