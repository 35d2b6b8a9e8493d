import csv
import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from specem.cli import main
from specem.io import load_schema


def run(*args):
    return main([str(a) for a in args])


def load(path):
    return json.loads(path.read_text())


def validate(path, schema):
    jsonschema.validate(load(path), load_schema(schema))


def drop_timestamps(obj):
    if isinstance(obj, dict):
        return {k: drop_timestamps(v) for k, v in obj.items() if k != "timestamp"}
    if isinstance(obj, list):
        return [drop_timestamps(v) for v in obj]
    return obj


@pytest.fixture(scope="module")
def small_sim(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    spec = d / "spec.json"
    spec.write_text(
        json.dumps(
            {
                "classes": [{"kind": "ar1", "phi": 0.8}, {"kind": "noisy_sine", "freq": 0.3}],
                "n": 15,
                "T": 32,
            }
        )
    )
    assert run("simulate", "--spec", spec, "--out", d / "data.csv", "--labels", d / "labels.csv", "--seed", 3) == 0
    return d


class TestSimulateAndCluster:
    def test_outputs(self, small_sim):
        rows = list(csv.reader((small_sim / "labels.csv").open()))
        assert rows[0] == ["series", "class", "class_name"]
        assert len(rows) == 31
        manifest = load(small_sim / "data.csv.manifest.json")
        assert manifest["config"]["seed"] == 3
        jsonschema.validate(manifest, load_schema("manifest"))

    def test_cluster_k1(self, small_sim, tmp_path):
        out = tmp_path / "c.json"
        assert run("cluster", small_sim / "data.csv", "--k", 1, "--restarts", 2, "--out", out) == 0
        d = load(out)
        assert np.array_equal(np.array(d["gamma"]), np.ones((30, 1)))
        validate(out, "cluster")

    def test_cluster_separates(self, small_sim, tmp_path):
        out = tmp_path / "c.json"
        assert run("cluster", small_sim / "data.csv", "--k", 2, "--out", out) == 0
        d = load(out)
        labels = [int(r["class"]) for r in csv.DictReader((small_sim / "labels.csv").open())]
        hard = d["hard_assignment"]
        assert len({h for h, c in zip(hard, labels) if c == 0}) == 1
        assert len(set(hard)) == 2
        assert d["manifest"]["config"]["likelihood_scale"] == "auto"
        assert len(d["cluster_spectra"][0]) == 16
        validate(out, "cluster")

    def test_deterministic_except_timestamp(self, small_sim, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            assert run("cluster", small_sim / "data.csv", "--k", 2, "--seed", 5, "--out", out) == 0
        assert drop_timestamps(load(a)) == drop_timestamps(load(b))

    def test_env_seed(self, small_sim, tmp_path, monkeypatch):
        monkeypatch.setenv("SPECEM_SEED", "17")
        out = tmp_path / "c.json"
        assert run("cluster", small_sim / "data.csv", "--k", 2, "--restarts", 1, "--out", out) == 0
        assert load(out)["manifest"]["config"]["seed"] == 17

    def test_options(self, small_sim, tmp_path):
        out = tmp_path / "c.json"
        args = ["--k", 2, "--scale", "3.5", "--mixing-weights", "false", "--tol", "1e-6", "--max-iter", 20]
        assert run("cluster", small_sim / "data.csv", *args, "--out", out) == 0
        cfg = load(out)["manifest"]["config"]
        assert cfg["likelihood_scale"] == 3.5
        assert cfg["use_mixing_weights_in_estep"] is False
        assert cfg["max_iter"] == 20

    def test_select_k(self, small_sim, tmp_path):
        out, table = tmp_path / "s.json", tmp_path / "s.csv"
        assert run("select-k", small_sim / "data.csv", "--k-max", 4, "--restarts", 3, "--out", out, "--out-csv", table) == 0
        validate(out, "select_k")
        rows = list(csv.reader(table.open()))
        assert rows[0] == ["K", "loglik", "NEC"]
        assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4"]
        assert rows[1][2] == ""

    def test_periodogram(self, small_sim, tmp_path):
        out = tmp_path / "p.csv"
        assert run("periodogram", small_sim / "data.csv", "--out", out) == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["series", "j", "omega", "power"]
        assert len(rows) == 1 + 30 * 16
        assert rows[1][1:3] == ["1", "0.03125"]


@pytest.fixture(scope="module")
def recording(tmp_path_factory):
    d = tmp_path_factory.mktemp("rec")
    spec = d / "rec.json"
    spec.write_text(json.dumps({"templates": "demo", "count_per_template": 15, "snr": 5}))
    assert run("simulate-recording", "--spec", spec, "--out", d / "rec.csv", "--truth", d / "truth.csv") == 0
    return d


class TestSpikes:
    def test_detect_then_gmm(self, recording, tmp_path):
        cat, onsets = tmp_path / "spikes.csv", tmp_path / "onsets.csv"
        assert run("detect-spikes", recording / "rec.csv", "--out-catalog", cat, "--out-onsets", onsets) == 0
        truth = np.array([int(r["onset"]) for r in csv.DictReader((recording / "truth.csv").open())])
        found = np.array([int(r["onset"]) for r in csv.DictReader(onsets.open())])
        assert np.mean(np.abs(truth[:, None] - found[None, :]).min(axis=1) <= 3) >= 0.95
        header = cat.read_text().splitlines()[0].split(",")
        assert len(header) == found.size

        out, assign = tmp_path / "gmm.json", tmp_path / "assign.csv"
        args = ["--k-max", 4, "--restarts", 5, "--out", out, "--out-assignments", assign]
        assert run("gmm-slowness", cat, *args) == 0
        validate(out, "gmm_slowness")
        rows = list(csv.DictReader(assign.open()))
        assert len(rows) == found.size
        assert {int(r["component"]) for r in rows} <= set(range(load(out)["best_k"]))

    def test_noise_only(self, tmp_path):
        rec = tmp_path / "noise.csv"
        rec.write_text("y\n" + "\n".join(map(str, np.random.default_rng(0).standard_normal(2000))))
        cat, onsets = tmp_path / "spikes.csv", tmp_path / "onsets.csv"
        assert run("detect-spikes", rec, "--out-catalog", cat, "--out-onsets", onsets) == 0
        assert onsets.read_text().strip() == "onset,slowness"


class TestExitCodes:
    def test_usage_errors(self, tmp_path):
        assert run() == 1
        assert run("cluster") == 1
        assert run("cluster", "x.csv", "--k", "two", "--out", "o.json") == 1
        assert run("cluster", "x.csv", "--k", 2, "--scale", "-1", "--out", "o.json") == 1
        assert run("frobnicate") == 1

    def test_config_error_is_usage(self, small_sim, tmp_path):
        assert run("cluster", small_sim / "data.csv", "--k", 0, "--out", tmp_path / "o.json") == 1
        assert run("select-k", small_sim / "data.csv", "--k-max", 1, "--out", tmp_path / "o.json") == 1

    def test_bad_env_seed(self, small_sim, tmp_path, monkeypatch):
        monkeypatch.setenv("SPECEM_SEED", "abc")
        assert run("cluster", small_sim / "data.csv", "--k", 1, "--out", tmp_path / "o.json") == 1

    def test_data_errors(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n3,x\n")
        assert run("cluster", bad, "--k", 1, "--out", tmp_path / "o.json") == 2
        assert "row 2, col 2" in capsys.readouterr().err
        assert run("cluster", tmp_path / "missing.csv", "--k", 1, "--out", tmp_path / "o.json") == 2
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        assert run("periodogram", empty, "--out", tmp_path / "p.csv") == 2

    def test_too_many_clusters(self, small_sim, tmp_path):
        assert run("cluster", small_sim / "data.csv", "--k", 31, "--out", tmp_path / "o.json") == 2

    def test_bad_spec(self, tmp_path):
        spec = tmp_path / "s.json"
        spec.write_text('{"classes": [{"kind": "ar1", "phi": 2}]}')
        assert run("simulate", "--spec", spec, "--out", tmp_path / "d.csv") == 2
        spec.write_text("{not json")
        assert run("simulate", "--spec", spec, "--out", tmp_path / "d.csv") == 2

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "specem", "cluster"], capture_output=True, text=True)
        assert proc.returncode == 1
        assert "usage" in proc.stderr


def test_repro_sim4(tmp_path, capsys):
    out, table = tmp_path / "r.json", tmp_path / "r.csv"
    assert run("repro-sim4", "--seed", 0, "--out", out, "--out-csv", table) == 0
    validate(out, "repro_sim4")
    d = load(out)
    assert d["class_purity"]["sine_0.1"] >= 0.99
    assert d["class_purity"]["sine_0.2"] >= 0.99
    assert len(d["selection"]["records"]) == 6
    assert "sine_0.2" in capsys.readouterr().out
    assert list(csv.reader(table.open()))[0] == ["class"] + [f"cluster_{j}" for j in range(5)]
