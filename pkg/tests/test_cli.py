import json
import socket
import subprocess
import sys

import numpy as np
import pytest

from skywriter import cli
from skywriter.simflight import parse_ppm
from skywriter.synth import SynthParams, synth_gesture


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_stream(path, label, seed):
    frames = synth_gesture(label, SynthParams(seed=seed))
    with open(path, "w") as f:
        for fr in frames:
            f.write(
                json.dumps(
                    {"t": fr.t, "ax": fr.accel[0], "ay": fr.accel[1], "az": fr.accel[2], "flex": fr.flex}
                )
                + "\n"
            )


@pytest.fixture(scope="module")
def dataset_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "corpus.jsonl"
    code = cli.main(["gen-data", "--out", str(path), "--per-class", "25", "--seed", "42"])
    assert code == 0
    return str(path)


class TestGenData:
    def test_counts_and_output(self, capsys, tmp_path):
        out = tmp_path / "ds.jsonl"
        code, stdout, _ = run_cli(capsys, "gen-data", "--out", str(out), "--per-class", "25", "--seed", "42")
        assert code == 0
        assert f"wrote 125 samples to {out}" in stdout
        assert "S=25 K=25 O=25 L=25 J=25" in stdout
        assert len(out.read_text().splitlines()) == 126

    def test_single_per_class(self, capsys, tmp_path):
        out = tmp_path / "tiny.jsonl"
        code, stdout, _ = run_cli(capsys, "gen-data", "--out", str(out), "--per-class", "1", "--seed", "1")
        assert code == 0
        assert len(out.read_text().splitlines()) == 6

    def test_same_seed_same_bytes(self, capsys, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        run_cli(capsys, "gen-data", "--out", str(a), "--per-class", "3", "--seed", "9")
        run_cli(capsys, "gen-data", "--out", str(b), "--per-class", "3", "--seed", "9")
        assert a.read_bytes() == b.read_bytes()


class TestTrain:
    def test_report_shape_and_determinism(self, capsys, tmp_path, dataset_file):
        model_path = tmp_path / "model.json"
        argv = [
            "train", "--data", dataset_file, "--out", str(model_path),
            "--split", "75/50", "--k", "5", "--seed", "42",
            "--trees-grid", "10,20", "--depth-grid", "2,3",
        ]
        code, out1, _ = run_cli(capsys, *argv)
        assert code == 0
        table_rows = [l for l in out1.splitlines() if l and l[0] == " " and l.lstrip()[0].isdigit()]
        assert len(table_rows) == 4  # 2 x 2 grid
        assert "best config: n_trees=" in out1
        assert "test evaluation (50 samples)" in out1
        assert "confusion matrix (rows=true, cols=predicted):" in out1
        assert model_path.exists()

        code, out2, _ = run_cli(capsys, *argv)
        assert out2 == out1  # same seed, same bytes

    def test_full_grid_has_16_rows(self, capsys, tmp_path, dataset_file):
        model_path = tmp_path / "model16.json"
        code, out, _ = run_cli(
            capsys, "train", "--data", dataset_file, "--out", str(model_path),
            "--seed", "42",
        )
        assert code == 0
        rows = [l for l in out.splitlines() if l and l[0] == " " and l.lstrip()[0].isdigit()]
        assert len(rows) == 16

    def test_json_mode(self, capsys, tmp_path, dataset_file):
        model_path = tmp_path / "modelj.json"
        code, out, _ = run_cli(
            capsys, "train", "--data", dataset_file, "--out", str(model_path),
            "--trees-grid", "10", "--depth-grid", "2", "--json",
        )
        assert code == 0
        doc = json.loads(out)
        assert len(doc["grid"]) == 1
        assert sum(sum(row) for row in doc["metrics"]["confusion"]) == 50

    def test_unstratifiable_split(self, capsys, tmp_path, dataset_file):
        code, _, err = run_cli(
            capsys, "train", "--data", dataset_file, "--out", str(tmp_path / "m.json"),
            "--split", "74/50",
        )
        assert code == 2
        assert "not stratifiable" in err

    def test_missing_data_file(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "train", "--data", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "m.json")
        )
        assert code == 1


class TestEvaluate:
    def test_perfect_on_training_excerpt(self, capsys, tmp_path, dataset_file, model_file):
        code, out, _ = run_cli(capsys, "evaluate", "--model", model_file, "--data", dataset_file)
        assert code == 0
        assert "accuracy: 1.0000" in out

    def test_missing_model(self, capsys, dataset_file):
        code, _, err = run_cli(capsys, "evaluate", "--model", "/no/such/model.json", "--data", dataset_file)
        assert code == 1


class TestPaint:
    def test_paints_letter(self, capsys, tmp_path):
        out = tmp_path / "o.ppm"
        code, stdout, _ = run_cli(capsys, "paint", "--letter", "O", "--out", str(out))
        assert code == 0
        assert "max tracking error:" in stdout
        w, h, pixels = parse_ppm(out.read_bytes())
        assert (w, h) == (512, 512)
        assert pixels.max() == 255

    def test_deterministic_bytes(self, capsys, tmp_path):
        a, b = tmp_path / "a.ppm", tmp_path / "b.ppm"
        run_cli(capsys, "paint", "--letter", "K", "--out", str(a))
        run_cli(capsys, "paint", "--letter", "K", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_letter(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "paint", "--letter", "X", "--out", str(tmp_path / "x.ppm"))
        assert code == 2
        assert "valid letters: S K O L J" in err

    def test_model_label_check(self, capsys, tmp_path, model_file):
        code, _, _ = run_cli(
            capsys, "paint", "--letter", "S", "--out", str(tmp_path / "s.ppm"), "--model", model_file
        )
        assert code == 0


class TestClassify:
    def test_synthetic_k_stream(self, capsys, tmp_path, model_file):
        stream = tmp_path / "k.jsonl"
        write_stream(stream, "K", seed=3)
        code, out, _ = run_cli(capsys, "classify", "--model", model_file, "--input", str(stream))
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "K"
        posteriors = dict(part.split("=") for part in lines[1].split())
        assert abs(sum(float(v) for v in posteriors.values()) - 1.0) < 1e-9

    def test_no_gesture_exit_2(self, capsys, tmp_path, model_file):
        stream = tmp_path / "flat.jsonl"
        with open(stream, "w") as f:
            for i in range(40):
                f.write(json.dumps({"t": i * 0.02, "ax": 0.0, "ay": 0.0, "az": 9.81, "flex": 0.0}) + "\n")
        code, _, err = run_cli(capsys, "classify", "--model", model_file, "--input", str(stream))
        assert code == 2
        assert "no gesture detected" in err

    def test_json_mode(self, capsys, tmp_path, model_file):
        stream = tmp_path / "s.jsonl"
        write_stream(stream, "S", seed=8)
        code, out, _ = run_cli(capsys, "classify", "--model", model_file, "--input", str(stream), "--json")
        assert code == 0
        doc = json.loads(out)
        assert doc["label"] == "S"
        assert len(doc["posteriors"]) == 5


class TestSharedConfig:
    def test_config_seeds_defaults_without_overriding_flags(self, capsys, tmp_path):
        config = tmp_path / "defaults.json"
        config.write_text(json.dumps({"seed": 9, "per_class": 3}))
        from_config = tmp_path / "a.jsonl"
        explicit = tmp_path / "b.jsonl"
        run_cli(capsys, "gen-data", "--out", str(from_config), "--config", str(config))
        run_cli(capsys, "gen-data", "--out", str(explicit), "--per-class", "3", "--seed", "9")
        assert from_config.read_bytes() == explicit.read_bytes()

        # explicit flag beats the config default
        override = tmp_path / "c.jsonl"
        run_cli(capsys, "gen-data", "--out", str(override), "--config", str(config), "--per-class", "1")
        assert len(override.read_text().splitlines()) == 6

    def test_missing_config_file(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "gen-data", "--out", str(tmp_path / "x.jsonl"), "--config", str(tmp_path / "none.json")
        )
        assert code == 1


class TestReportLayout:
    def test_metrics_text_is_frozen(self):
        import numpy as np

        from skywriter.forest import Metrics

        confusion = np.zeros((5, 5), dtype=np.int64)
        confusion[0, 0] = 9
        confusion[0, 2] = 1
        for i in range(1, 5):
            confusion[i, i] = 10
        metrics = Metrics(
            accuracy=0.98, precision_macro=0.9818181818, recall_macro=0.98, confusion=confusion
        )
        expected = (
            "test evaluation (50 samples)\n"
            "accuracy: 0.9800\n"
            "precision_macro: 0.9818\n"
            "recall_macro: 0.9800\n"
            "confusion matrix (rows=true, cols=predicted):\n"
            "         S    K    O    L    J\n"
            "    S    9    0    1    0    0\n"
            "    K    0   10    0    0    0\n"
            "    O    0    0   10    0    0\n"
            "    L    0    0    0   10    0\n"
            "    J    0    0    0    0   10"
        )
        assert cli.format_metrics(metrics, 50) == expected


class TestServe:
    def test_graceful_shutdown_with_connected_client(self, tmp_path, model_file):
        import asyncio
        import signal as posix_signal
        import time

        import websockets

        config = tmp_path / "serve.json"
        config.write_text(json.dumps({"port": 0, "model_path": model_file}))
        proc = subprocess.Popen(
            [sys.executable, "-m", "skywriter.cli", "serve", "--config", str(config)],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
        )
        try:
            line = proc.stdout.readline()
            port = json.loads(line)["port"]

            async def poke_then_linger():
                async with websockets.connect(f"ws://127.0.0.1:{port}") as ws:
                    await ws.send(json.dumps({"type": "config", "time_scale": 10.0}))
                    assert json.loads(await ws.recv())["type"] == "state"
                    proc.send_signal(posix_signal.SIGTERM)  # shut down under an open connection
                    deadline = time.monotonic() + 20
                    while proc.poll() is None and time.monotonic() < deadline:
                        await asyncio.sleep(0.05)

            asyncio.run(asyncio.wait_for(poke_then_linger(), timeout=40))
            assert proc.wait(timeout=20) == 0
        finally:
            proc.kill()

    def test_missing_model_exits_1(self, tmp_path):
        config = tmp_path / "serve.json"
        config.write_text(json.dumps({"port": 0, "model_path": str(tmp_path / "ghost.json")}))
        proc = subprocess.run(
            [sys.executable, "-m", "skywriter.cli", "serve", "--config", str(config)],
            capture_output=True, text=True, timeout=60,
        )
        assert proc.returncode == 1
        assert "file not found" in proc.stderr

    def test_busy_port_exits_1(self, tmp_path, model_file):
        blocker = socket.socket()
        blocker.bind(("127.0.0.1", 0))
        blocker.listen(1)
        port = blocker.getsockname()[1]
        config = tmp_path / "serve.json"
        config.write_text(json.dumps({"port": port, "model_path": model_file}))
        try:
            proc = subprocess.run(
                [sys.executable, "-m", "skywriter.cli", "serve", "--config", str(config)],
                capture_output=True, text=True, timeout=60,
            )
        finally:
            blocker.close()
        assert proc.returncode == 1
        assert "port in use" in proc.stderr
