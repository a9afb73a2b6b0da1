import json

import pytest

from dronewatch.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_train") / "run"
    code = main(
        [
            "train",
            "--seed",
            "3",
            "--total-samples",
            "2048",
            "--batch-size",
            "1024",
            "--n-envs",
            "8",
            "--out",
            str(out),
            "--quiet",
        ]
    )
    assert code == 0
    return out


class TestTrainCommand:
    def test_writes_checkpoint_log_and_figures(self, trained_dir):
        assert (trained_dir / "checkpoint.json").exists()
        assert (trained_dir / "training_log.jsonl").exists()
        assert (trained_dir / "training_curve.png").exists()
        assert (trained_dir / "training_curve.csv").exists()

    def test_repeat_run_byte_identical(self, trained_dir, tmp_path, capsys):
        out2 = tmp_path / "run2"
        code, _, _ = run_cli(
            capsys,
            "train",
            "--seed",
            "3",
            "--total-samples",
            "2048",
            "--batch-size",
            "1024",
            "--n-envs",
            "8",
            "--out",
            str(out2),
            "--quiet",
        )
        assert code == 0
        assert (out2 / "checkpoint.json").read_bytes() == (
            trained_dir / "checkpoint.json"
        ).read_bytes()
        assert (out2 / "training_log.jsonl").read_bytes() == (
            trained_dir / "training_log.jsonl"
        ).read_bytes()

    def test_config_file_driving(self, tmp_path, capsys):
        cfg = {
            "schema": "train/1",
            "scenario": "static",
            "ppo": {"total_samples": 1024, "batch_size": 1024, "n_envs": 8, "seed": 9},
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        out = tmp_path / "run"
        code, _, _ = run_cli(
            capsys, "train", "--config", str(cfg_path), "--out", str(out), "--quiet"
        )
        assert code == 0
        ckpt = json.loads((out / "checkpoint.json").read_text())
        assert ckpt["config"]["scenario"] == "static"
        assert ckpt["config"]["ppo"]["seed"] == 9


class TestEvalCommand:
    def test_never_on_static_reports_zero(self, tmp_path, capsys):
        out = tmp_path / "eval"
        code, stdout, _ = run_cli(
            capsys,
            "eval",
            "--policy",
            "never",
            "--scenario",
            "static",
            "--episodes",
            "2",
            "--out",
            str(out),
        )
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["mean_episode_reward"] == 0.0
        assert (out / "metrics.csv").exists()
        assert (out / "report.png").exists()
        assert len(list((out / "traces").glob("*.jsonl"))) == 2

    def test_checkpoint_policy_evaluates(self, trained_dir, tmp_path, capsys):
        out = tmp_path / "eval_ckpt"
        code, stdout, _ = run_cli(
            capsys,
            "eval",
            "--policy",
            str(trained_dir / "checkpoint.json"),
            "--episodes",
            "1",
            "--out",
            str(out),
        )
        assert code == 0
        assert (out / "report.json").exists()

    def test_eval_determinism(self, tmp_path, capsys):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            code, _, _ = run_cli(
                capsys,
                "eval",
                "--policy",
                "rule",
                "--episodes",
                "2",
                "--seed",
                "4",
                "--out",
                str(out),
            )
            assert code == 0
            outs.append(out)
        assert (outs[0] / "report.json").read_bytes() == (outs[1] / "report.json").read_bytes()
        for t in (outs[0] / "traces").iterdir():
            assert t.read_bytes() == (outs[1] / "traces" / t.name).read_bytes()


class TestReplayCommand:
    @pytest.fixture()
    def trace_path(self, tmp_path, capsys):
        out = tmp_path / "eval"
        run_cli(
            capsys,
            "eval",
            "--policy",
            "rule",
            "--episodes",
            "1",
            "--out",
            str(out),
        )
        return next((out / "traces").glob("*.jsonl"))

    def test_step_prints_stored_record(self, trace_path, capsys):
        code, stdout, _ = run_cli(capsys, "replay", "--trace", str(trace_path), "--step", "42")
        assert code == 0
        printed = json.loads(stdout)
        stored = [
            json.loads(line)
            for line in trace_path.read_text().splitlines()
            if '"step": 42' in line or json.loads(line).get("step") == 42
        ]
        stored = [r for r in stored if r.get("type") == "step"][0]
        assert printed == stored

    def test_walkthrough_prints_every_step(self, trace_path, capsys):
        code, stdout, _ = run_cli(capsys, "replay", "--trace", str(trace_path))
        assert code == 0
        lines = [l for l in stdout.splitlines() if l.startswith("step")]
        assert len(lines) == 240
        assert "fixation=" in lines[0]

    def test_missing_step_errors(self, trace_path, capsys):
        code, _, err = run_cli(capsys, "replay", "--trace", str(trace_path), "--step", "9999")
        assert code == 2
        assert json.loads(err)["error"]["type"] == "SchemaError"


class TestExportCommand:
    def test_trace_to_csv(self, tmp_path, capsys):
        out = tmp_path / "eval"
        run_cli(capsys, "eval", "--policy", "never", "--scenario", "static", "--episodes", "1", "--out", str(out))
        trace = next((out / "traces").glob("*.jsonl"))
        csv_out = tmp_path / "trace.csv"
        code, _, _ = run_cli(capsys, "export", "--input", str(trace), "--output", str(csv_out))
        assert code == 0
        lines = csv_out.read_text().splitlines()
        assert len(lines) == 241  # header + 240 steps
        assert lines[0].startswith("step,t,reward")

    def test_training_log_to_csv(self, trained_dir, tmp_path, capsys):
        csv_out = tmp_path / "log.csv"
        code, _, _ = run_cli(
            capsys,
            "export",
            "--input",
            str(trained_dir / "training_log.jsonl"),
            "--output",
            str(csv_out),
        )
        assert code == 0
        assert csv_out.read_text().startswith("update,")

    def test_checkpoint_reexport(self, trained_dir, tmp_path, capsys):
        out = tmp_path / "ckpt2.json"
        code, _, _ = run_cli(
            capsys,
            "export",
            "--input",
            str(trained_dir / "checkpoint.json"),
            "--output",
            str(out),
        )
        assert code == 0
        assert json.loads(out.read_text())["schema"] == "checkpoint/1"


class TestErrors:
    def test_missing_scenario_file_structured_error(self, capsys):
        code, _, err = run_cli(
            capsys, "eval", "--policy", "never", "--scenario", "/nope/missing.json"
        )
        assert code == 2
        doc = json.loads(err)
        assert doc["error"]["type"] == "SchemaError"
        assert "missing.json" in doc["error"]["detail"]

    def test_unknown_policy_spec_errors(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "eval", "--policy", "telepathy", "--out", str(tmp_path)
        )
        assert code == 2
        assert json.loads(err)["error"]["type"] == "SchemaError"
