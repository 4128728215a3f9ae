import json

import numpy as np
import pytest

from ghmloss import cli
from ghmloss.data import synth_dataset
from ghmloss.model import MLP, MLPConfig
from ghmloss.train import TrainingError

TINY = ["--classes", "2", "--per-class", "6", "--dim", "3", "--epochs", "2", "--folds", "2",
        "--embed-dim", "8", "--hidden", "16", "--grid-size", "64"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def strip_clock(doc):
    doc = dict(doc)
    doc.pop("wall_clock_seconds")
    return doc


# -- prox / fit -----------------------------------------------------------------


def test_prox_identical_vectors(capsys):
    code, out, _ = run(capsys, "prox", "--a", "1,2,3,4", "--b", "1,2,3,4", "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["cosine"] == pytest.approx(1.0) and doc["js_proximity"] == 0.0


def test_prox_orthogonal_vectors(capsys):
    code, out, _ = run(capsys, "prox", "--a", "1,0,0,0,0.2,0.1", "--b", "0,1,0.5,0.3,0,0", "--json")
    assert code == 0
    assert out.count("\n") == 1
    doc = json.loads(out)
    assert doc["cosine"] == pytest.approx(0.0, abs=1e-12)
    assert 0.0 <= doc["js_proximity"] <= 1.0
    assert doc["blend"] == pytest.approx(0.5 * doc["cosine"] + 0.5 * (1 - doc["js_proximity"]))


def test_prox_human_output(capsys):
    code, out, _ = run(capsys, "prox", "--a", "1,2,3", "--b", "3,2,1", "--lambda", "0.25")
    assert code == 0 and "cosine" in out and "js_proximity" in out and "lambda=0.25" in out


@pytest.mark.parametrize(
    "argv, message",
    [
        (["--a", "1,x,3", "--b", "1,2,3"], "--a: 'x'"),
        (["--a", "1,2,3", "--b", "1,2"], "different lengths"),
        (["--a", "0,0,0", "--b", "1,2,3"], "zero"),
        (["--a", "1,2,3"], "--a/--b"),
        (["--a", "1,2,3", "--b", "1,2,3", "--lambda", "2"], "lambda"),
    ],
)
def test_prox_errors(capsys, argv, message):
    code, _, err = run(capsys, "prox", *argv)
    assert code == 2
    assert message in err


def test_prox_from_csv_rows(capsys, tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("0,1,2,3\n1,1,2,3\n")
    code, out, _ = run(capsys, "prox", "--csv", str(path), "--rows", "0", "1", "--json")
    assert code == 0 and json.loads(out)["js_proximity"] == 0.0
    code, _, err = run(capsys, "prox", "--csv", str(path), "--rows", "0", "7")
    assert code == 2 and "row 7" in err


def test_fit_reports_two_clusters(capsys):
    code, out, _ = run(capsys, "fit", "--a", "0.1,0.2,0.15,3,3.1,2.9", "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["means"] == pytest.approx([0.15, 3.0])
    assert doc["weights"] == pytest.approx([0.5, 0.5])


# -- train ------------------------------------------------------------------------


def test_train_writes_results_document(capsys, tmp_path):
    out_path = tmp_path / "r.json"
    code, out, _ = run(capsys, "train", *TINY, "--folds", "3", "--out", str(out_path))
    assert code == 0 and "3 fold(s)" in out
    doc = json.loads(out_path.read_text())
    assert doc["version"] == cli.RESULTS_VERSION
    assert doc["config"]["folds"] == 3 and doc["config"]["lambda"] == 0.5
    assert len(doc["folds"]) == 3
    assert set(doc["summary"]) == {"auc", "accuracy", "precision", "recall", "f1"}
    assert all(len(f["trajectory"]) == 2 for f in doc["folds"])
    assert doc["wall_clock_seconds"] >= 0


def test_train_is_byte_identical_apart_from_clock(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "train", *TINY, "--out", str(a))
    run(capsys, "train", *TINY, "--out", str(b))
    text_a = a.read_text().splitlines()
    text_b = b.read_text().splitlines()
    diff = [(x, y) for x, y in zip(text_a, text_b) if x != y]
    assert len(text_a) == len(text_b)
    assert all("wall_clock_seconds" in x for x, _ in diff)


def test_rerun_from_results_document(capsys, tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "train", *TINY, "--seed", "3", "--out", str(first))
    code, _, _ = run(capsys, "train", "--config", str(first), "--out", str(second))
    assert code == 0
    a, b = json.loads(first.read_text()), json.loads(second.read_text())
    assert a["config"] == b["config"]
    for name, stats in a["summary"].items():
        assert b["summary"][name]["mean"] == pytest.approx(stats["mean"], abs=1e-9)


def test_flags_override_config_file(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"epochs": 1, "folds": 2, "classes": 2, "per_class": 6, "dim": 3,
                               "embed_dim": 8, "hidden": [16], "lambda": 0.25}))
    code, out, _ = run(capsys, "train", "--config", str(cfg), "--lambda", "0.75", "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["lambda"] == 0.75 and doc["config"]["epochs"] == 1


def test_unknown_config_keys_rejected(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"epochs": 1, "learning_rate": 0.1}))
    code, _, err = run(capsys, "train", "--config", str(cfg))
    assert code == 2 and "learning_rate" in err


@pytest.mark.parametrize(
    "extra, message",
    [
        (["--lambda", "1.5"], "lambda"),
        (["--beta", "-1"], "beta"),
        (["--lambda", "0.1,0.2"], "single value"),
        (["--batch", "1"], "batch_size"),
        (["--folds", "7"], "fewer than 7 folds"),
        (["--sign-mode", "similarity", "--gmm-k", "0"], "K must be"),
    ],
)
def test_invalid_train_config(capsys, extra, message):
    code, _, err = run(capsys, "train", *TINY, *extra)
    assert code == 2
    assert message in err


def test_bad_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["train", "--epochs", "many"])
    assert exc.value.code == 2


def test_missing_csv_names_path(capsys, tmp_path):
    missing = tmp_path / "absent.csv"
    code, _, err = run(capsys, "train", "--data", str(missing))
    assert code == 2
    assert str(missing) in err


def test_train_on_csv(capsys, tmp_path):
    ds = synth_dataset(classes=2, per_class=6, dim=3, seed=1)
    path = tmp_path / "d.csv"
    path.write_text("label,a,b,c\n" + "\n".join(
        ",".join([str(y), *(repr(float(v)) for v in x)]) for x, y in zip(ds.features, ds.labels)))
    code, out, _ = run(capsys, "train", *TINY, "--data", str(path), "--json")
    assert code == 0 and json.loads(out)["config"]["data"] == str(path)


def test_runtime_failure_exit_code(capsys, monkeypatch):
    def boom(*a, **k):
        raise TrainingError("non-finite loss at epoch 1, batch 0")

    monkeypatch.setattr(cli, "k_fold_cv", boom)
    code, _, err = run(capsys, "train", *TINY)
    assert code == 3 and "epoch 1" in err


def test_single_fold_trains_on_everything(capsys):
    code, out, _ = run(capsys, "train", *TINY, "--folds", "1", "--json")
    doc = json.loads(out)
    assert code == 0 and len(doc["folds"]) == 1 and len(doc["folds"][0]["held_out"]) == 12


# -- grid -------------------------------------------------------------------------


def test_grid_outputs(capsys, caplog, tmp_path):
    code, _, _ = run(capsys, "grid", *TINY, "--beta", "0,1,1", "--lambda", "0,0.5,1", "--out", str(tmp_path))
    assert code == 0
    assert "duplicate beta" in caplog.text
    doc = json.loads((tmp_path / "results.json").read_text())
    assert doc["config"]["beta"] == [0.0, 1.0]
    assert len(doc["cells"]) == 6 and all(c["status"] == "ok" for c in doc["cells"])
    rows = (tmp_path / "auc_matrix.csv").read_text().splitlines()
    assert len(rows) == 3 and rows[0].split(",")[1:] == ["0.0", "0.5", "1.0"]
    table = (tmp_path / "beta_table.csv").read_text().splitlines()
    assert table[0] == "beta,auc,accuracy,precision,recall,f1" and len(table) == 3


def test_grid_records_failed_cells(capsys, tmp_path, monkeypatch):
    real = cli.run_experiment

    def flaky(cfg, ds, beta, lam):
        if beta == 1.0 and lam == 0.5:
            raise TrainingError("non-finite loss at epoch 1, batch 0")
        return real(cfg, ds, beta, lam)

    monkeypatch.setattr(cli, "run_experiment", flaky)
    code, _, _ = run(capsys, "grid", *TINY, "--beta", "0,1", "--lambda", "0.5,1", "--out", str(tmp_path))
    assert code == 0
    doc = json.loads((tmp_path / "results.json").read_text())
    failed = [c for c in doc["cells"] if c["status"] == "failed"]
    assert len(failed) == 1 and "TrainingError" in failed[0]["error"]
    assert doc["auc_matrix"][1][0] is None
    assert "failed" in (tmp_path / "auc_matrix.csv").read_text()


def test_single_cell_grid_matches_train(capsys, tmp_path):
    run(capsys, "grid", *TINY, "--beta", "1", "--lambda", "0.5", "--out", str(tmp_path / "g"))
    run(capsys, "train", *TINY, "--out", str(tmp_path / "t.json"))
    grid = json.loads((tmp_path / "g" / "results.json").read_text())
    single = json.loads((tmp_path / "t.json").read_text())
    assert grid["cells"][0]["folds"] == single["folds"]


def test_parallel_grid_matches_serial(capsys, tmp_path):
    run(capsys, "grid", *TINY, "--beta", "0,1", "--lambda", "0.5", "--out", str(tmp_path / "s"))
    run(capsys, "grid", *TINY, "--beta", "0,1", "--lambda", "0.5", "--jobs", "2", "--out", str(tmp_path / "p"))
    s = strip_clock(json.loads((tmp_path / "s" / "results.json").read_text()))
    p = strip_clock(json.loads((tmp_path / "p" / "results.json").read_text()))
    assert s == p


# -- density ------------------------------------------------------------------------


def test_density_exports_four_records(capsys, tmp_path):
    path = tmp_path / "d.jsonl"
    code, out, _ = run(capsys, "density", *TINY, "--pair", "0", "3", "--out", str(path), "--json")
    assert code == 0
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert [(r["sample"], r["epoch"]) for r in records] == [(0, "before"), (3, "before"), (0, "after"), (3, "after")]
    for r in records:
        assert abs(sum(r["masses"]) - 1.0) < 1e-9
        assert len(r["points"]) == len(r["masses"]) == 64
        assert set(r["gmm"]) == {"weights", "means", "stds", "collapsed"}
    summary = json.loads(out)
    assert summary["pair"] == [0, 3] and 0 <= summary["js_after"] <= 1


def test_density_default_pair_is_positive(capsys, tmp_path):
    path = tmp_path / "d.jsonl"
    run(capsys, "density", *TINY, "--out", str(path))
    labels = {json.loads(line)["label"] for line in path.read_text().splitlines()}
    assert len(labels) == 1


def test_density_from_checkpoint(capsys, tmp_path):
    model = MLP(MLPConfig(3, 2, hidden_dims=(16,), embed_dim=8, seed=4))
    model.save(tmp_path / "m.json")
    code, _, _ = run(capsys, "density", *TINY, "--checkpoint", str(tmp_path / "m.json"),
                     "--out", str(tmp_path / "d.jsonl"))
    assert code == 0
    records = [json.loads(line) for line in (tmp_path / "d.jsonl").read_text().splitlines()]
    # The checkpoint was never trained, so before and after coincide.
    np.testing.assert_array_equal(records[0]["masses"], records[2]["masses"])


def test_density_index_out_of_range(capsys):
    code, _, err = run(capsys, "density", *TINY, "--pair", "0", "99")
    assert code == 2 and "99" in err
