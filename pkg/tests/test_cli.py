import csv

import numpy as np
import pytest

from binfeat.cli import build_parser, main

GP = "synth:gp:n=80,d=3,sigma=0.5,noise=0.1,seed=6"


def test_transform_and_stats(tmp_path, capsys):
    out = tmp_path / "t.json"
    rc = main(["transform", "--data", GP, "--sigma", "0.3", "--r", "8",
               "--out", str(out)])
    assert rc == 0
    assert out.exists()
    captured = capsys.readouterr()
    assert "D=" in captured.out

    rc = main(["stats", "--data", GP, "--sigma", "0.3", "--r", "8",
               "--out", str(tmp_path / "stats.csv")])
    assert rc == 0
    rows = list(csv.reader(open(tmp_path / "stats.csv")))
    assert rows[0] == ["grid", "nu", "kappa"]
    assert len(rows) == 9


def test_train_predict_round_trip(tmp_path, capsys):
    model = tmp_path / "model.json"
    rc = main(["train", "--data", GP, "--method", "rb", "--sigma", "0.3",
               "--r", "16", "--lambda", "1e-4", "--solver", "cg",
               "--tol", "1e-8", "--out", str(model)])
    assert rc == 0
    assert model.exists()

    pred = tmp_path / "pred.csv"
    rc = main(["predict", "--model", str(model), "--data",
               "synth:gp:n=25,d=3,seed=9", "--out", str(pred)])
    assert rc == 0
    captured = capsys.readouterr()
    assert "rmse=" in captured.out
    assert len(open(pred).read().splitlines()) == 26


def test_train_on_libsvm_file(tmp_path, capsys):
    rng = np.random.default_rng(3)
    lines = []
    for _ in range(60):
        x = rng.random(2)
        label = 1 if x[0] + x[1] > 1.0 else 0
        lines.append(f"{label} 1:{x[0]:.6f} 2:{x[1]:.6f}")
    data = tmp_path / "toy.svm"
    data.write_text("\n".join(lines) + "\n")
    model = tmp_path / "model.json"
    rc = main(["train", "--data", str(data), "--sigma", "0.5", "--r", "8",
               "--lambda", "1e-4", "--out", str(model)])
    assert rc == 0
    captured = capsys.readouterr()
    assert "accuracy=" in captured.out
    rc = main(["predict", "--model", str(model), "--data", str(data)])
    assert rc == 0
    captured = capsys.readouterr()
    assert "60 predictions" in captured.out


def test_sweep_sigma_writes_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    rc = main(["sweep-sigma", "--data", GP, "--r", "8", "--lambda", "1e-4",
               "--tol", "1e-8", "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 9
    assert rows[0]["mode"] == "sweep-sigma"


def test_sweep_r_multiple_methods(tmp_path, capsys):
    out = tmp_path / "rsweep.csv"
    rc = main(["sweep-r", "--data", GP, "--sigma", "0.3",
               "--method", "rb", "--method", "nystrom",
               "--r-grid", "4,8", "--lambda", "1e-4", "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(open(out)))
    assert {r["method"] for r in rows} == {"rb", "nystrom"}
    assert len(rows) == 4


def test_compare_prints_table(tmp_path, capsys):
    table_out = tmp_path / "table.csv"
    rc = main(["compare", "--data", "synth:gp:n=90,d=3,sigma=0.5,noise=0.1,seed=6",
               "--sigma", "0.3", "--r-grid", "4,16,64", "--lambda", "1e-4",
               "--tol", "1e-8", "--table-out", str(table_out)])
    assert rc == 0
    captured = capsys.readouterr()
    assert "target" in captured.out
    assert "method" in captured.out
    rows = list(csv.DictReader(open(table_out)))
    assert {r["method"] for r in rows} == {"rb", "rf"}


def test_parallel_bench_cli(tmp_path, capsys):
    out = tmp_path / "pb.csv"
    rc = main(["parallel-bench", "--data", GP, "--sigma", "0.3", "--r", "4",
               "--lambda", "1e-4", "--epochs", "2", "--tau-grid", "1,2",
               "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(open(out)))
    assert rows[0]["measured_speedup"] == "1.0"
    assert rows[0]["tau"] == "1"


def test_config_error_exits_one(capsys):
    with pytest.raises(SystemExit) as err:
        main(["sweep-sigma", "--data", GP, "--sigma-grid", "0.5,1"])
    assert err.value.code == 1
    assert "sigma grid" in capsys.readouterr().err


def test_missing_data_exits_one(tmp_path, capsys):
    with pytest.raises(SystemExit) as err:
        main(["train", "--data", str(tmp_path / "nope.svm"),
              "--out", str(tmp_path / "m.json")])
    assert err.value.code == 1


def test_unknown_choice_exits_two(capsys):
    with pytest.raises(SystemExit) as err:
        main(["train", "--data", GP, "--method", "fourier", "--out", "m.json"])
    assert err.value.code == 2


def test_parser_has_all_subcommands():
    parser = build_parser()
    text = parser.format_help()
    for name in ("transform", "train", "predict", "stats", "sweep-sigma",
                 "sweep-r", "compare", "parallel-bench", "serve"):
        assert name in text
