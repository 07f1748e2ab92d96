import json
import subprocess
import sys

import pytest

from fogxray import cli, data, metrics
from fogxray.nn import HISTORY_COLUMNS, format_summary, summarize_variant

TOPOLOGY = {
    "nodes": [
        {"id": "dev0", "tier": "device"},
        {"id": "ing0", "tier": "ingestion"},
        {"id": "fog0", "tier": "fog", "compute_rate": 20},
        {"id": "cloud0", "tier": "cloud", "compute_rate": 10},
    ],
    "links": [
        {"from": "dev0", "to": "ing0", "delay_s": 0.002, "bandwidth_Bps": 1e6},
        {"from": "ing0", "to": "fog0", "delay_s": 0.005, "bandwidth_Bps": 2e6},
        {"from": "fog0", "to": "cloud0", "delay_s": 0.04, "bandwidth_Bps": 5e5},
    ],
}

WORKLOAD_CSV = ("request_id,device_id,creation_time_s,payload_bytes\n"
                "r0,dev0,0.0,100000\n"
                "r1,dev0,0.25,100000\n"
                "r2,dev0,0.5,100000\n")


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    data.generate_synthetic_dataset(root, per_class=12, hw=8, seed=3)
    rc = cli.main(["split", str(root), "--seed", "3"])
    assert rc == 0
    return root


@pytest.fixture(scope="module")
def trained_dir(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("trained")
    rc = cli.main(["train", "--manifest", str(corpus / "manifest.csv"),
                   "--variant", "three_block", "--epochs", "2",
                   "--batch-size", "8", "--seed", "3", "--patience", "0",
                   "--image-size", "8", "--out", str(out)])
    assert rc == 0
    return out


# ------------------------------------------------------------ model-summary

def test_model_summary_prints_parameter_table(capsys):
    assert cli.main(["model-summary", "three_block"]) == 0
    out = capsys.readouterr().out
    assert out == format_summary(summarize_variant("three_block")) + "\n"
    assert "83402945" in out


def test_model_summary_space_form_is_accepted(capsys):
    assert cli.main(["model-summary", "two_block"]) == 0
    hyphen = capsys.readouterr().out
    assert cli.main(["model", "summary", "two_block"]) == 0
    assert capsys.readouterr().out == hyphen


def test_model_summary_rejects_unknown_variant(capsys):
    with pytest.raises(SystemExit) as err:
        cli.main(["model-summary", "four_block"])
    assert err.value.code == 2


def test_model_summary_rejects_indivisible_image_size(capsys):
    rc = cli.main(["model-summary", "three_block", "--image-size", "20"])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:")


def test_missing_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        cli.main([])
    assert err.value.code == 2


# -------------------------------------------------------------------- split

def test_split_writes_manifest_and_table(corpus, capsys, tmp_path):
    out = tmp_path / "m.csv"
    rc = cli.main(["split", str(corpus), "--seed", "7", "--out", str(out)])
    assert rc == 0
    stdout = capsys.readouterr().out
    assert stdout.splitlines()[0].split() == [
        "Classes", "Training", "Set", "Validation", "Set", "Testing", "Set", "Total"]
    manifest = data.load_manifest(out)
    counts = manifest.class_counts()
    assert counts["train"][data.LABEL_COVID] == 10
    assert counts["val"][data.LABEL_COVID] == 1
    assert counts["test"][data.LABEL_NORMAL] == 1
    # paths were rewritten relative to the manifest location
    assert all(manifest.resolve(r).is_file() for r in manifest.records)


def test_split_reruns_byte_identical(corpus, capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["split", str(corpus), "--seed", "5", "--out", str(a)]) == 0
    assert cli.main(["split", str(corpus), "--seed", "5", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_split_missing_class_directory(tmp_path, capsys):
    (tmp_path / "normal").mkdir()
    rc = cli.main(["split", str(tmp_path)])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


# -------------------------------------------------------------------- train

def test_train_zero_epochs_writes_initialized_model(corpus, tmp_path, capsys):
    out = tmp_path / "run"
    rc = cli.main(["train", "--manifest", str(corpus / "manifest.csv"),
                   "--variant", "three_block", "--epochs", "0",
                   "--image-size", "8", "--out", str(out)])
    assert rc == 0
    assert "epochs 0" in capsys.readouterr().out
    assert (out / "checkpoint.fcnn").is_file()
    history = (out / "history.csv").read_text().splitlines()
    assert history == [",".join(HISTORY_COLUMNS)]
    run = json.loads((out / "run.json").read_text())
    assert set(run) == {"command", "manifest", "variant", "epochs", "batch_size",
                        "lr", "seed", "patience", "image_size", "out"}
    assert run["command"] == "train"
    assert run["epochs"] == 0


def test_train_rerun_is_deterministic(corpus, trained_dir, tmp_path, capsys):
    out = tmp_path / "again"
    rc = cli.main(["train", "--manifest", str(corpus / "manifest.csv"),
                   "--variant", "three_block", "--epochs", "2",
                   "--batch-size", "8", "--seed", "3", "--patience", "0",
                   "--image-size", "8", "--out", str(out)])
    assert rc == 0
    assert (out / "checkpoint.fcnn").read_bytes() == \
        (trained_dir / "checkpoint.fcnn").read_bytes()
    assert (out / "history.csv").read_bytes() == \
        (trained_dir / "history.csv").read_bytes()


def test_train_history_has_expected_shape(trained_dir):
    lines = (trained_dir / "history.csv").read_text().splitlines()
    assert lines[0] == ",".join(HISTORY_COLUMNS)
    assert len(lines) == 3  # header + 2 epochs
    assert lines[1].split(",")[0] == "1"


def test_train_bad_image_size_is_usage_error(corpus, capsys):
    rc = cli.main(["train", "--manifest", str(corpus / "manifest.csv"),
                   "--epochs", "1", "--image-size", "50", "--out", "/tmp/x"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_train_missing_manifest_is_runtime_error(tmp_path, capsys):
    rc = cli.main(["train", "--manifest", str(tmp_path / "none.csv"),
                   "--epochs", "1", "--image-size", "8",
                   "--out", str(tmp_path / "out")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


# --------------------------------------------------------------------- eval

def test_eval_prints_metrics_csv(corpus, trained_dir, tmp_path, capsys):
    out = tmp_path / "metrics.csv"
    rc = cli.main(["eval", "--checkpoint", str(trained_dir / "checkpoint.fcnn"),
                   "--manifest", str(corpus / "manifest.csv"),
                   "--split", "val", "--out", str(out)])
    assert rc == 0
    stdout = capsys.readouterr().out
    lines = stdout.splitlines()
    assert lines[0] == metrics.CSV_HEADER
    assert lines[1].startswith("val,")
    assert out.read_text() == stdout


def test_eval_corrupt_checkpoint(tmp_path, corpus, capsys):
    bad = tmp_path / "bad.fcnn"
    bad.write_bytes(b"not a checkpoint at all")
    rc = cli.main(["eval", "--checkpoint", str(bad),
                   "--manifest", str(corpus / "manifest.csv")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_eval_missing_checkpoint(tmp_path, corpus, capsys):
    rc = cli.main(["eval", "--checkpoint", str(tmp_path / "nope.fcnn"),
                   "--manifest", str(corpus / "manifest.csv")])
    assert rc == 1


# ----------------------------------------------------------------- simulate

@pytest.fixture()
def sim_inputs(tmp_path):
    topo = tmp_path / "topology.json"
    topo.write_text(json.dumps(TOPOLOGY))
    work = tmp_path / "workload.csv"
    work.write_text(WORKLOAD_CSV)
    return topo, work


def test_simulate_both_policies(sim_inputs, tmp_path, capsys):
    topo, work = sim_inputs
    out = tmp_path / "sim"
    rc = cli.main(["simulate", "--topology", str(topo), "--workload", str(work),
                   "--policy", "both", "--out", str(out)])
    assert rc == 0
    for name in ("comparison.json", "report_fog.csv", "report_cloud.csv",
                 "summary_fog.json", "summary_cloud.json"):
        assert (out / name).is_file(), name
    stdout = capsys.readouterr().out
    assert "fog:" in stdout and "cloud:" in stdout and "fog - cloud:" in stdout
    comparison = json.loads((out / "comparison.json").read_text())
    assert comparison["delta_fog_minus_cloud"]["cloud_bytes"] < 0


def test_simulate_single_policy(sim_inputs, tmp_path, capsys):
    topo, work = sim_inputs
    out = tmp_path / "sim"
    rc = cli.main(["simulate", "--topology", str(topo), "--workload", str(work),
                   "--policy", "fog", "--out", str(out)])
    assert rc == 0
    assert (out / "report_fog.csv").is_file()
    assert (out / "summary_fog.json").is_file()
    assert not (out / "comparison.json").exists()
    assert not (out / "report_cloud.csv").exists()


def test_simulate_bad_topology_is_usage_error(tmp_path, capsys):
    config = json.loads(json.dumps(TOPOLOGY))
    config["nodes"].append({"id": "cloud1", "tier": "cloud", "compute_rate": 1})
    topo = tmp_path / "topology.json"
    topo.write_text(json.dumps(config))
    work = tmp_path / "workload.csv"
    work.write_text(WORKLOAD_CSV)
    rc = cli.main(["simulate", "--topology", str(topo), "--workload", str(work),
                   "--out", str(tmp_path / "sim")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_simulate_empty_workload_is_usage_error(sim_inputs, tmp_path, capsys):
    topo, work = sim_inputs
    work.write_text("request_id,device_id,creation_time_s,payload_bytes\n")
    rc = cli.main(["simulate", "--topology", str(topo), "--workload", str(work),
                   "--out", str(tmp_path / "sim")])
    assert rc == 2


def test_simulate_missing_topology_file(tmp_path, capsys):
    work = tmp_path / "workload.csv"
    work.write_text(WORKLOAD_CSV)
    rc = cli.main(["simulate", "--topology", str(tmp_path / "none.json"),
                   "--workload", str(work), "--out", str(tmp_path / "sim")])
    assert rc == 1


# ---------------------------------------------------------------- gradcheck

def test_gradcheck_passes(capsys):
    rc = cli.main(["gradcheck"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "gradient check passed" in out
    assert "FAIL" not in out


def test_gradcheck_detects_corrupted_gradient(capsys):
    rc = cli.main(["gradcheck", "--corrupt-param", "dense_1/weights"])
    assert rc == 1
    out = capsys.readouterr().out
    assert "FAIL" in out


# ------------------------------------------------------------- entry points

def test_module_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "fogxray.cli",
                           "model-summary", "two_block"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == format_summary(summarize_variant("two_block")) + "\n"
