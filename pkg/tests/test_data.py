import gzip

import numpy as np
import numpy.testing as npt
import pytest

from binfeat.data import (
    Dataset,
    ScalingParams,
    Task,
    apply_scaling,
    canonicalize_labels,
    fit_scaling,
    load_libsvm,
    save_libsvm,
    scale_features,
)
from binfeat.synthetic import gp_regression, load_any, make_synthetic, two_class_mixture


def write(path, text):
    path.write_text(text)
    return str(path)


def test_basic_line_with_dim_hint(tmp_path):
    p = write(tmp_path / "a.txt", "1 1:0.5 3:2\n")
    ds = load_libsvm(p, dim_hint=3)
    npt.assert_array_equal(ds.x, [[0.5, 0.0, 2.0]])
    assert ds.dim == 3


def test_zero_one_labels_become_signs(tmp_path):
    p = write(tmp_path / "b.txt", "0 1:1\n1 1:2\n0 1:3\n")
    ds = load_libsvm(p)
    assert ds.task is Task.BINARY
    npt.assert_array_equal(ds.y, [-1.0, 1.0, -1.0])
    npt.assert_array_equal(ds.classes, [0.0, 1.0])


def test_plus_minus_labels_preserved(tmp_path):
    p = write(tmp_path / "c.txt", "-1 1:1\n+1 1:2\n")
    ds = load_libsvm(p)
    assert ds.task is Task.BINARY
    npt.assert_array_equal(ds.y, [-1.0, 1.0])


def test_multiclass_mapped_to_consecutive(tmp_path):
    p = write(tmp_path / "d.txt", "7 1:1\n3 1:2\n9 1:3\n3 1:4\n")
    ds = load_libsvm(p)
    assert ds.task is Task.MULTICLASS
    npt.assert_array_equal(ds.y, [1.0, 0.0, 2.0, 0.0])
    npt.assert_array_equal(ds.classes, [3.0, 7.0, 9.0])


def test_real_labels_mean_regression(tmp_path):
    p = write(tmp_path / "e.txt", "0.25 1:1\n-1.5 1:2\n3.75 1:3\n")
    ds = load_libsvm(p)
    assert ds.task is Task.REGRESSION
    npt.assert_array_equal(ds.y, [0.25, -1.5, 3.75])
    assert ds.classes is None


def test_dimension_from_max_index(tmp_path):
    p = write(tmp_path / "f.txt", "1 2:1\n2 5:1\n")
    ds = load_libsvm(p)
    assert ds.dim == 5
    assert ds.x.shape == (2, 5)


def test_malformed_feature_reports_line(tmp_path):
    p = write(tmp_path / "g.txt", "1 1:1\n1 nonsense\n")
    with pytest.raises(ValueError, match=":2:"):
        load_libsvm(p)


def test_bad_label_reports_line(tmp_path):
    p = write(tmp_path / "h.txt", "ok 1:1\n")
    with pytest.raises(ValueError, match=":1:"):
        load_libsvm(p)


def test_zero_index_rejected(tmp_path):
    p = write(tmp_path / "i.txt", "1 0:5\n")
    with pytest.raises(ValueError, match="1-based"):
        load_libsvm(p)


def test_empty_file_rejected(tmp_path):
    p = write(tmp_path / "j.txt", "")
    with pytest.raises(ValueError, match="no data"):
        load_libsvm(p)
    p2 = write(tmp_path / "k.txt", "\n  \n")
    with pytest.raises(ValueError):
        load_libsvm(p2)


def test_gzip_by_extension(tmp_path):
    p = tmp_path / "l.txt.gz"
    with gzip.open(p, "wt") as fh:
        fh.write("1 1:0.5\n0 2:1.5\n")
    ds = load_libsvm(str(p))
    assert ds.n == 2 and ds.dim == 2


def test_large_file_shape(tmp_path):
    # shaped like the 35000 x 22 benchmark set
    n, d = 35_000, 22
    rng = np.random.default_rng(80)
    lines = []
    for i in range(n):
        label = "1" if rng.random() < 0.1 else "-1"
        feats = f"1:{rng.random():.4f} {d}:{rng.random():.4f}"
        lines.append(f"{label} {feats}")
    p = write(tmp_path / "m.txt", "\n".join(lines) + "\n")
    ds = load_libsvm(p)
    assert ds.n == n
    assert ds.dim == d
    assert ds.task is Task.BINARY


def test_round_trip_within_tolerance(tmp_path):
    rng = np.random.default_rng(81)
    x = rng.standard_normal((12, 5))
    x[rng.random((12, 5)) > 0.7] = 0.0
    y = rng.standard_normal(12)
    ds = Dataset(x, y, 5, Task.REGRESSION)
    p = tmp_path / "n.txt"
    save_libsvm(p, ds)
    back = load_libsvm(str(p), dim_hint=5)
    npt.assert_allclose(back.x, ds.x, atol=1e-12)
    npt.assert_allclose(back.y, ds.y, atol=1e-12)


def test_canonicalize_explicit_task_mismatch():
    with pytest.raises(ValueError):
        canonicalize_labels([1.0, 2.0, 3.0], Task.BINARY)


def test_scaling_basic_range(tmp_path):
    train = Dataset(np.array([[0.0], [5.0], [10.0]]), np.zeros(3), 1, Task.REGRESSION)
    test = Dataset(np.array([[20.0]]), np.zeros(1), 1, Task.REGRESSION)
    tr, te, params = scale_features(train, test)
    npt.assert_allclose(tr.x[:, 0], [0.0, 0.5, 1.0])
    npt.assert_allclose(te.x[:, 0], [2.0])  # unclipped


def test_scaling_constant_column_zeroed():
    train = Dataset(np.array([[1.0, 3.0], [1.0, 4.0]]), np.zeros(2), 2, Task.REGRESSION)
    test = Dataset(np.array([[1.0, 3.5], [9.0, 5.0]]), np.zeros(2), 2, Task.REGRESSION)
    tr, te, _ = scale_features(train, test)
    npt.assert_array_equal(tr.x[:, 0], [0.0, 0.0])
    npt.assert_array_equal(te.x[:, 0], [0.0, 0.0])
    npt.assert_allclose(te.x[:, 1], [0.5, 2.0])


def test_scaling_identity_on_unit_range():
    x = np.array([[0.0, 0.25], [1.0, 1.0], [0.5, 0.0]])
    train = Dataset(x.copy(), np.zeros(3), 2, Task.REGRESSION)
    tr, _, _ = scale_features(train)
    npt.assert_allclose(tr.x, x)


def test_scaling_order_preserving():
    rng = np.random.default_rng(82)
    x = rng.standard_normal((30, 3)) * 7 + 2
    train = Dataset(x, np.zeros(30), 3, Task.REGRESSION)
    tr, _, _ = scale_features(train)
    for j in range(3):
        npt.assert_array_equal(np.argsort(tr.x[:, j]), np.argsort(x[:, j]))


def test_scaling_params_round_trip():
    params = fit_scaling(np.array([[0.0, 2.0], [4.0, 2.0]]))
    p2 = ScalingParams.from_dict(params.to_dict())
    x = np.array([[2.0, 2.0]])
    npt.assert_array_equal(apply_scaling(params, x), apply_scaling(p2, x))


def test_gp_regression_shapes_and_determinism():
    a = gp_regression(50, 3, sigma=0.5, noise=0.1, rng=83)
    b = gp_regression(50, 3, sigma=0.5, noise=0.1, rng=83)
    assert a.x.shape == (50, 3) and a.task is Task.REGRESSION
    npt.assert_array_equal(a.x, b.x)
    npt.assert_array_equal(a.y, b.y)
    assert np.all(a.x >= 0) and np.all(a.x <= 1)


def test_mixture_labels_and_determinism():
    a = two_class_mixture(80, 2, sep=2.0, rng=84)
    b = two_class_mixture(80, 2, sep=2.0, rng=84)
    assert set(np.unique(a.y)) == {-1.0, 1.0}
    npt.assert_array_equal(a.x, b.x)
    assert a.task is Task.BINARY


def test_synth_descriptor_parsing():
    ds = make_synthetic("synth:gp:n=40,d=2,sigma=0.3,noise=0.05,seed=9")
    assert ds.n == 40 and ds.dim == 2
    ds2 = load_any("synth:mix:n=30,d=3,sep=1.5,seed=4")
    assert ds2.n == 30 and ds2.task is Task.BINARY


def test_synth_descriptor_errors():
    with pytest.raises(ValueError):
        make_synthetic("synth:unknown:n=5")
    with pytest.raises(ValueError):
        make_synthetic("synth:gp:n")
    with pytest.raises(ValueError):
        make_synthetic("file.txt")


def test_load_any_falls_back_to_file(tmp_path):
    p = write(tmp_path / "o.txt", "1.5 1:2\n0.5 2:1\n")
    ds = load_any(p)
    assert ds.n == 2
