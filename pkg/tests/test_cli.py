import io
import json
import math
import os

import numpy as np
import pandas as pd
import pytest

from cli.checkpoint import load_checkpoint, save_checkpoint
from cli.config import RunConfig, resolve_config
from core.errors import CheckpointError, ConfigurationError, DataError
from core.network import AdamState, build_affine_network, build_paper_network, forward, initialize_parameters
from main import main

from .idx_files import digit_images, write_mnist


@pytest.fixture
def mnist_dir(tmp_path, rng):
    train_labels = np.array([0, 1] * 6)
    test_labels = np.array([1, 0, 0, 1])
    directory = tmp_path / "mnist"
    directory.mkdir()
    return write_mnist(directory, digit_images(train_labels, rng), train_labels,
                       digit_images(test_labels, rng), test_labels)


# ---------- configuration ----------
def test_config_precedence(tmp_path):
    config_file = tmp_path / "run.json"
    config_file.write_text(json.dumps({"batch": 10, "iterations": 7, "seed": 3}))
    env = {"QDNN_ITERATIONS": "9", "QDNN_SEED": "4"}
    cfg = resolve_config({"seed": 5, "engine": None}, str(config_file), env)
    assert cfg.batch == 10
    assert cfg.iterations == 9
    assert cfg.seed == 5
    assert cfg.engine == "adjoint"


def test_config_rejects_unknown_and_invalid(tmp_path):
    config_file = tmp_path / "run.json"
    config_file.write_text(json.dumps({"learning_rate": 0.1}))
    with pytest.raises(ConfigurationError):
        resolve_config({}, str(config_file), {})
    with pytest.raises(ConfigurationError):
        resolve_config({"threads": "many"}, None, {})
    with pytest.raises(ConfigurationError):
        RunConfig(engine="backprop")


def test_schedule_from_flags():
    assert RunConfig().lr_schedule() == ((0, 0.01), (200, 0.001))
    assert RunConfig(switch_at=0, eta2=0.5).lr_schedule() == ((0, 0.5),)


@pytest.mark.parametrize("value", [2.7, -0.5, 1e-3])
def test_config_rejects_fractional_integers(tmp_path, value):
    with pytest.raises(ConfigurationError, match="expected an integer"):
        resolve_config({"threads": value}, None, {})
    config_file = tmp_path / "run.json"
    config_file.write_text(json.dumps({"batch": value}))
    with pytest.raises(ConfigurationError, match="expected an integer"):
        resolve_config({}, str(config_file), {})


def test_config_accepts_integral_floats():
    assert resolve_config({"threads": 2.0}, None, {}).threads == 2


# ---------- checkpoints ----------
def test_checkpoint_round_trip_is_bit_exact(tmp_path):
    net = build_paper_network()
    initialize_parameters(net, 11)
    opt = AdamState(step=3, m={k: v * 0.1 for k, v in net.parameters().items()},
                    v={k: v * v for k, v in net.parameters().items()})
    path = tmp_path / "ckpt.json"
    save_checkpoint(path, net, 3, opt)
    restored = load_checkpoint(path)
    assert restored.step == 3
    assert restored.optimizer.step == 3
    for name, p in net.parameters().items():
        assert np.array_equal(restored.network.parameters()[name], p)
        assert np.array_equal(restored.optimizer.m[name], opt.m[name])
    for x in np.random.default_rng(0).uniform(0, math.pi, size=(10, 64)):
        assert np.array_equal(forward(restored.network, x)[0], forward(net, x)[0])


def test_checkpoint_of_affine_network(tmp_path):
    net = build_affine_network([3, 2])
    initialize_parameters(net, 0)
    save_checkpoint(tmp_path / "a.json", net, 0)
    restored = load_checkpoint(tmp_path / "a.json")
    assert restored.optimizer is None
    assert np.array_equal(restored.network.layers[0].weight, net.layers[0].weight)


def test_checkpoint_version_mismatch(tmp_path):
    path = tmp_path / "ckpt.json"
    save_checkpoint(path, build_affine_network([2, 2]), 0)
    doc = json.loads(path.read_text())
    doc["format_version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(CheckpointError, match="format version 99"):
        load_checkpoint(path)


def test_corrupted_checkpoint(tmp_path):
    path = tmp_path / "ckpt.json"
    path.write_text("{not json")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    save_checkpoint(path, build_affine_network([2, 2]), 0)
    doc = json.loads(path.read_text())
    del doc["parameters"]["layers.0.bias"]
    path.write_text(json.dumps(doc))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


# ---------- commands ----------
def test_train_without_data_dir_exits_2(monkeypatch, capsys):
    monkeypatch.delenv("QDNN_DATA_DIR", raising=False)
    assert main(["train", "-q"]) == 2
    assert "--data-dir is required" in capsys.readouterr().err


def test_train_then_eval(mnist_dir, tmp_path, capsys):
    out = tmp_path / "run"
    args = ["--data-dir", str(mnist_dir), "--out-dir", str(out), "--seed", "1", "-q"]
    assert main(["train", *args, "--iterations", "2", "--batch", "4", "--eval-every", "1",
                 "--checkpoint-every", "1"]) == 0
    metrics = pd.read_csv(out / "metrics.csv")
    assert metrics["iteration"].tolist() == [0, 1, 2]
    assert (out / "checkpoint_00001.json").exists()
    assert (out / "checkpoint_final.json").exists()
    assert "final test accuracy" in capsys.readouterr().out

    assert main(["eval", *args, "--checkpoint", str(out / "checkpoint_final.json"), "--split", "test"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "checkpoint,step,split,samples,loss,accuracy"
    assert lines[1].startswith("checkpoint_final.json,2,test,4,")
    scored = pd.read_csv(io.StringIO("\n".join(lines))).iloc[0]
    assert scored["loss"] == metrics["test_loss"].iloc[-1]
    assert scored["accuracy"] == metrics["test_accuracy"].iloc[-1]


def test_zero_iterations_writes_initial_checkpoint(mnist_dir, tmp_path):
    out = tmp_path / "run"
    assert main(["train", "--data-dir", str(mnist_dir), "--out-dir", str(out), "--iterations", "0", "-q"]) == 0
    assert load_checkpoint(out / "checkpoint_final.json").step == 0
    assert pd.read_csv(out / "metrics.csv")["iteration"].tolist() == [0]


def test_training_runs_are_byte_identical(mnist_dir, tmp_path):
    outputs = []
    for name, threads in (("a", "1"), ("b", "2")):
        out = tmp_path / name
        assert main(["train", "--data-dir", str(mnist_dir), "--out-dir", str(out), "--iterations", "2",
                     "--batch", "4", "--threads", threads, "-q"]) == 0
        outputs.append(((out / "metrics.csv").read_bytes(), (out / "checkpoint_final.json").read_bytes()))
    assert outputs[0] == outputs[1]


def test_resume_continues_from_checkpoint(mnist_dir, tmp_path):
    out = tmp_path / "run"
    common = ["--data-dir", str(mnist_dir), "--out-dir", str(out), "--batch", "4", "-q"]
    assert main(["train", *common, "--iterations", "1"]) == 0
    assert main(["train", *common, "--iterations", "2", "--resume", str(out / "checkpoint_final.json")]) == 0
    metrics = pd.read_csv(out / "metrics.csv")
    assert metrics["iteration"].tolist() == [0, 1, 2]
    assert load_checkpoint(out / "checkpoint_final.json").step == 2


def test_eval_with_corrupted_checkpoint_exits_1(mnist_dir, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[]")
    assert main(["eval", "--data-dir", str(mnist_dir), "--checkpoint", str(bad), "-q"]) == 1


def test_approx_demo_passes(capsys):
    assert main(["approx-demo", "-q"]) == 0
    out = capsys.readouterr().out
    assert "x1^2*x2^1" in out
    assert "max polynomial error" in out


def test_gradcheck_small_run(capsys):
    assert main(["gradcheck", "--jobs", "5", "--max-qubits", "3", "--layers", "none", "-q"]) == 0
    assert "max |shift - adjoint|" in capsys.readouterr().out


def test_gradcheck_output_is_deterministic(capsys):
    main(["gradcheck", "--jobs", "3", "--max-qubits", "3", "--layers", "none", "--seed", "8", "-q"])
    first = capsys.readouterr().out
    main(["gradcheck", "--jobs", "3", "--max-qubits", "3", "--layers", "none", "--seed", "8", "-q"])
    assert capsys.readouterr().out == first



def test_metrics_survive_a_failed_run(mnist_dir, tmp_path, monkeypatch):
    import cli.train

    out = tmp_path / "run"
    failed = []

    def failing_save(path, *args, **kwargs):
        if str(path).endswith("checkpoint_00002.json") and not failed:
            failed.append(path)
            raise DataError("disk full")
        return save_checkpoint(path, *args, **kwargs)

    monkeypatch.setattr(cli.train, "save_checkpoint", failing_save)
    common = ["--data-dir", str(mnist_dir), "--out-dir", str(out), "--batch", "4", "--checkpoint-every", "1", "-q"]
    assert main(["train", *common, "--iterations", "2"]) == 1
    assert not (out / "checkpoint_final.json").exists()
    assert pd.read_csv(out / "metrics.csv")["iteration"].tolist() == [0, 1]

    assert main(["train", *common, "--iterations", "2", "--resume", str(out / "checkpoint_00001.json")]) == 0
    assert pd.read_csv(out / "metrics.csv")["iteration"].tolist() == [0, 1, 2]
    assert load_checkpoint(out / "checkpoint_final.json").step == 2


def test_resume_warns_when_schedule_flags_are_ignored(mnist_dir, tmp_path, capsys):
    out = tmp_path / "run"
    common = ["--data-dir", str(mnist_dir), "--out-dir", str(out), "--batch", "4", "-q"]
    assert main(["train", *common, "--iterations", "1"]) == 0
    capsys.readouterr()
    assert main(["train", *common, "--iterations", "2", "--eta", "0.5",
                 "--resume", str(out / "checkpoint_final.json")]) == 0
    assert "keeping the learning-rate schedule" in capsys.readouterr().err
    assert load_checkpoint(out / "checkpoint_final.json").optimizer.lr_schedule == ((0, 0.01), (200, 0.001))


def test_resume_with_matching_schedule_is_quiet(mnist_dir, tmp_path, capsys):
    out = tmp_path / "run"
    common = ["--data-dir", str(mnist_dir), "--out-dir", str(out), "--batch", "4", "-q"]
    assert main(["train", *common, "--iterations", "1"]) == 0
    assert main(["train", *common, "--iterations", "2", "--resume", str(out / "checkpoint_final.json")]) == 0
    assert "keeping the learning-rate schedule" not in capsys.readouterr().err


def test_gradcheck_fails_on_loose_network_shift_gradients(monkeypatch):
    import cli.gradcheck

    loose = pd.DataFrame([{"parameter": "layers.0.weights", "size": 136, "vs_fd_abs": 1e-5, "vs_fd_rel": 1e-5,
                           "failing": 0, "shift_vs_fd": 1e-5, "shift_vs_adjoint": 1e-12}],
                         columns=cli.gradcheck.NETWORK_COLUMNS)
    monkeypatch.setattr(cli.gradcheck, "network_report", lambda seed, engine: loose)
    assert main(["gradcheck", "--jobs", "0", "--layers", "paper", "-q"]) == 1

    tight = loose.assign(shift_vs_fd=1e-9)
    monkeypatch.setattr(cli.gradcheck, "network_report", lambda seed, engine: tight)
    assert main(["gradcheck", "--jobs", "0", "--layers", "paper", "-q"]) == 0


# ---------- real MNIST ----------
needs_mnist = pytest.mark.skipif(not os.environ.get("QDNN_DATA_DIR"), reason="QDNN_DATA_DIR not set")


@pytest.fixture(scope="module")
def sanity_run(tmp_path_factory):
    # 50 iterations with the switch scaled from 200/400 to 25/50
    out = tmp_path_factory.mktemp("sanity")
    status = main(["train", "--out-dir", str(out), "--iterations", "50", "--batch", "64", "--switch-at", "25",
                   "--eval-every", "25", "--seed", "0", "-q"])
    return status, out


@pytest.mark.slow
@needs_mnist
def test_sanity_run_reaches_95_percent(sanity_run):
    status, out = sanity_run
    assert status == 0
    metrics = pd.read_csv(out / "metrics.csv")
    assert metrics["iteration"].iloc[-1] == 50
    assert metrics["test_accuracy"].iloc[-1] >= 0.95


@pytest.mark.slow
@needs_mnist
def test_eval_reproduces_final_metrics_row(sanity_run, capsys):
    _, out = sanity_run
    capsys.readouterr()
    assert main(["eval", "--checkpoint", str(out / "checkpoint_final.json"), "--split", "test", "-q"]) == 0
    scored = pd.read_csv(io.StringIO(capsys.readouterr().out)).iloc[0]
    last = pd.read_csv(out / "metrics.csv").iloc[-1]
    assert scored["loss"] == last["test_loss"]
    assert scored["accuracy"] == last["test_accuracy"]


@pytest.mark.slow
@needs_mnist
@pytest.mark.skipif(not os.environ.get("QDNN_FULL_RUN"), reason="QDNN_FULL_RUN not set")
def test_full_run_reproduces_reported_accuracy(tmp_path):
    threads = str(os.cpu_count() or 1)
    passing = 0
    for seed in (0, 1, 2):
        out = tmp_path / f"seed{seed}"
        assert main(["train", "--out-dir", str(out), "--seed", str(seed), "--threads", threads, "-q"]) == 0
        metrics = pd.read_csv(out / "metrics.csv").set_index("iteration")
        final = metrics.loc[400]
        if final["test_accuracy"] >= 0.98 and final["train_loss"] <= 0.05:
            passing += 1
            assert final["train_loss"] <= 0.25 * metrics.loc[1, "train_loss"]
    assert passing >= 2
