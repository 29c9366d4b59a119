import json

import numpy as np
import pytest

from localtune.cli import main
from localtune.dataset import load_dataset


def run(*argv):
    return main([str(a) for a in argv])


def synth_file(tmp_path, name="data.csv", n=120, dim=3, classes=2, blobs=2,
               sigma=0.05, seed=0, blob_classes="one"):
    path = tmp_path / name
    assert run("synth", "--n", n, "--dim", dim, "--classes", classes,
               "--blobs", blobs, "--sigma", sigma, "--seed", seed,
               "--blob-classes", blob_classes, "--out", path) == 0
    return path


BENCH_FAST = ["--folds", "3", "--repeats", "1", "--de-frontier", "4",
              "--de-lives", "2", "--fixed-k", "2", "--min-tune-size", "12"]


class TestSynth:
    def test_writes_loadable_file(self, tmp_path):
        path = synth_file(tmp_path)
        ds = load_dataset(path)
        assert len(ds) == 120 and ds.d == 3 and ds.n_classes == 2

    def test_deterministic_bytes(self, tmp_path):
        a = synth_file(tmp_path, name="a.csv", seed=9)
        b = synth_file(tmp_path, name="b.csv", seed=9)
        assert a.read_bytes() == b.read_bytes()

    def test_sigma_zero_exact_recovery(self, tmp_path):
        path = synth_file(tmp_path, name="z.csv", sigma=0.0, n=40, blobs=2)
        ds = load_dataset(path)
        assert len(np.unique(ds.X, axis=0)) <= 2

    def test_inconsistent_arguments(self, tmp_path):
        assert run("synth", "--n", 3, "--dim", 2, "--classes", 2, "--blobs", 2,
                   "--out", tmp_path / "x.csv") == 2

    def test_benchmark_shape(self, tmp_path):
        # 6,400 instances of dimension 200 in 4 balanced classes
        path = tmp_path / "bench.csv"
        assert run("synth", "--n", 6400, "--dim", 200, "--classes", 4,
                   "--blobs", 13, "--out", path) == 0
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "#dim=200 classes=4"
        assert len(lines) == 1 + 6400
        labels = np.array([int(ln.split(",")[1]) for ln in lines[1:]])
        assert np.bincount(labels, minlength=5)[1:].tolist() == [1600] * 4


class TestBench:
    def test_outputs_written(self, tmp_path):
        data = synth_file(tmp_path)
        out = tmp_path / "report"
        rc = run("bench", "--data", data, "--modes", "KNN", "KMeans_KNN",
                 "--seed", "1", "--out", out, *BENCH_FAST)
        assert rc == 0
        for name in ("metrics.csv", "paper_table.txt", "timings.csv",
                     "plot_data.csv", "results.json"):
            assert (out / name).exists()
        metrics = (out / "metrics.csv").read_text().strip().splitlines()
        assert metrics[0] == "mode,class,precision,recall,f1,rank,train_seconds"
        # one row per (mode, class) plus an overall row per mode
        assert len(metrics) == 1 + 2 * 3
        results = json.loads((out / "results.json").read_text())
        assert set(results["modes"]) == {"KNN", "KMeans_KNN"}
        plot = (out / "plot_data.csv").read_text().strip().splitlines()
        assert len(plot) == 1 + 2 * 3  # per fold per mode

    def test_metric_determinism_excluding_timings(self, tmp_path):
        data = synth_file(tmp_path)
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            assert run("bench", "--data", data, "--modes", "KNN",
                       "--seed", "3", "--out", out, *BENCH_FAST) == 0
            outs.append(out)

        def strip_timing(path):
            rows = path.read_text().strip().splitlines()
            return [",".join(r.split(",")[:-1]) for r in rows]

        assert strip_timing(outs[0] / "metrics.csv") == \
            strip_timing(outs[1] / "metrics.csv")
        assert (outs[0] / "paper_table.txt").read_bytes() == \
            (outs[1] / "paper_table.txt").read_bytes()

    def test_unknown_mode_usage_error(self, tmp_path):
        data = synth_file(tmp_path)
        out = tmp_path / "report"
        assert run("bench", "--data", data, "--modes", "CNN",
                   "--out", out, *BENCH_FAST) == 2
        assert not (out / "metrics.csv").exists()

    def test_empty_modes_usage_error(self, tmp_path):
        data = synth_file(tmp_path)
        with pytest.raises(SystemExit) as exc:
            run("bench", "--data", data, "--modes", "--out", tmp_path / "r")
        assert exc.value.code == 2

    def test_missing_data_file(self, tmp_path):
        assert run("bench", "--data", tmp_path / "nope.csv", "--modes", "KNN",
                   "--out", tmp_path / "r", *BENCH_FAST) == 2

    def test_reference_times_annotation(self, tmp_path):
        data = synth_file(tmp_path)
        ref = tmp_path / "ref.json"
        ref.write_text(json.dumps({"CNN": 50700.0}))
        out = tmp_path / "report"
        assert run("bench", "--data", data, "--modes", "KNN", "--seed", "1",
                   "--out", out, "--reference-times", ref, *BENCH_FAST) == 0
        rows = (out / "timings.csv").read_text().strip().splitlines()
        annotations = [r for r in rows if r.endswith("false,reference")]
        assert annotations == [f"CNN,{50700.0!r},false,reference"]


class TestFitPredict:
    def test_knn_k1_self_accuracy(self, tmp_path, capsys):
        data = synth_file(tmp_path, blob_classes="all", sigma=0.2)
        model_dir = tmp_path / "model"
        assert run("fit", "--data", data, "--mode", "KMeans_KNN",
                   "--fixed-k", "2", "--out", model_dir) == 0
        pred_file = tmp_path / "pred.csv"
        assert run("predict", "--model", model_dir, "--data", data,
                   "--out", pred_file) == 0
        out = capsys.readouterr().out
        lines = pred_file.read_text().strip().splitlines()
        ds = load_dataset(data)
        # KMeans_KNN default k=5 is not self-perfect, but the file is aligned
        assert len(lines) == len(ds)
        assert all(len(ln.split(",")) == 2 for ln in lines)

    def test_fit_predict_exact_self_labels_with_global_knn(self, tmp_path):
        data = synth_file(tmp_path, blob_classes="one")
        model_dir = tmp_path / "gmodel"
        assert run("fit", "--data", data, "--mode", "KNN", "--out", model_dir) == 0
        pred_file = tmp_path / "pred.csv"
        assert run("predict", "--model", model_dir, "--data", data,
                   "--out", pred_file) == 0
        ds = load_dataset(data)
        got = [int(ln.split(",")[1]) for ln in
               pred_file.read_text().strip().splitlines()]
        assert (np.array(got) == ds.y).mean() == 1.0

    def test_predict_dimension_mismatch(self, tmp_path):
        data = synth_file(tmp_path)
        other = synth_file(tmp_path, name="wide.csv", dim=5)
        model_dir = tmp_path / "model2"
        assert run("fit", "--data", data, "--mode", "KNN", "--out", model_dir) == 0
        assert run("predict", "--model", model_dir, "--data", other,
                   "--out", tmp_path / "p.csv") == 2

    def test_fit_tuned_local_writes_per_cluster_configs(self, tmp_path):
        data = synth_file(tmp_path, n=160, blob_classes="all", sigma=0.15)
        model_dir = tmp_path / "model3"
        assert run("fit", "--data", data, "--mode", "KMeans_DE_KNN",
                   "--fixed-k", "2", "--de-frontier", "4", "--de-lives", "2",
                   "--min-tune-size", "10", "--out", model_dir) == 0
        manifest = json.loads((model_dir / "pipeline.json").read_text())
        assert len(manifest["records"]) == 2
        assert all(r["config"]["learner"] == "knn" for r in manifest["records"])


class TestTune:
    def test_tune_writes_config(self, tmp_path):
        data = synth_file(tmp_path, n=100, blob_classes="all", sigma=0.2)
        out = tmp_path / "best.json"
        assert run("tune", "--data", data, "--learner", "knn",
                   "--de-frontier", "4", "--de-lives", "2", "--out", out) == 0
        payload = json.loads(out.read_text())
        assert payload["learner"] == "knn"
        assert 2 <= payload["config"]["n_neighbors"] <= 10
