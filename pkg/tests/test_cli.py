import csv
import json
import logging
from pathlib import Path

import pytest

from qaoa_rl.chain import load_instance, make_uniform
from qaoa_rl.commands.io import AbstractOutputHandler
from qaoa_rl.config_loader import THREADS_ENV_VAR
from qaoa_rl.main import main, run_command
from qaoa_rl.utils.artifacts import MANIFEST_FILE, RESULT_FIELDS, load_schedule


class RecordingOutput(AbstractOutputHandler):
    def __init__(self):
        self.messages = []
        self.errors = []
        self.data = []

    async def send_message(self, message, style=None):
        self.messages.append(message)

    async def send_error(self, message, details=None, style="bold red"):
        self.errors.append(message)

    async def send_data(self, data, format_hint=None, style=None):
        self.data.append(data)


@pytest.fixture(autouse=True)
def isolated_run(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)


def cli(*argv):
    output = RecordingOutput()
    run_command([str(a) for a in argv], output=output, config_path=None)
    return output


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def last_error(capsys):
    lines = [line for line in capsys.readouterr().err.splitlines() if line.strip()]
    return json.loads(lines[-1])


@pytest.fixture
def u8(tmp_path):
    path = tmp_path / "u8.json"
    cli("instance", "--n", 8, "--uniform", "--out", path)
    return path


@pytest.fixture
def trained_ckpt(tmp_path, u8):
    ckpt = tmp_path / "u8_p2.json"
    cli("train", "--instance", u8, "--p", 2, "--out-ckpt", ckpt, "--epochs", 2, "--episodes", 4, "--threads", 2)
    return ckpt


def test_instance_command(tmp_path, u8):
    assert load_instance(u8) == make_uniform(8, 1.0)
    cli("instance", "--n", 8, "--seed", 3, "--out", tmp_path / "d8.json")
    disordered = load_instance(tmp_path / "d8.json")
    assert disordered.seed == 3 and not disordered.is_uniform
    manifests = (tmp_path / MANIFEST_FILE).read_text().splitlines()
    assert len(manifests) == 2
    last = json.loads(manifests[-1])
    assert last["command"] == "instance"
    assert last["master_seed"] == 3
    assert last["outputs"] == [str(tmp_path / "d8.json")]
    assert last["finished_at"] is not None


def test_train_command(tmp_path, trained_ckpt):
    log_rows = read_rows(tmp_path / "u8_p2.log.csv")
    assert [row["epoch"] for row in log_rows] == ["0", "1"]
    ckpt = json.loads(trained_ckpt.read_text())
    assert ckpt["arch"] == [2, 32, 16, 2]
    assert ckpt["obs_mode"] == "intensive"
    manifest = json.loads((tmp_path / MANIFEST_FILE).read_text().splitlines()[-1])
    assert manifest["command"] == "train"
    assert manifest["instances"] == [str(tmp_path / "u8.json")]
    assert str(trained_ckpt) in manifest["outputs"]
    assert manifest["config"]["threads"] == 2


def test_deterministic_test_is_reproducible(tmp_path, u8, trained_ckpt):
    out = tmp_path / "results" / "test.csv"
    args = ("test", "--ckpt", trained_ckpt, "--instance", u8, "--out-csv", out, "--runs", 3, "--deterministic")
    cli(*args)
    first = out.read_bytes()
    cli(*args)
    assert out.read_bytes() == first
    rows = read_rows(out)
    assert list(rows[0]) == RESULT_FIELDS
    assert len(rows) == 3
    assert all(row["eps_refined"] == "" for row in rows)
    assert load_schedule(rows[0]["schedule_path"]).p == 2


def test_test_with_local_optimization_and_traces(tmp_path, u8, trained_ckpt):
    out = tmp_path / "refined.csv"
    output = cli(
        "test", "--ckpt", trained_ckpt, "--instance", u8, "--out-csv", out, "--runs", 2,
        "--localopt", "--trace-dir", tmp_path / "traces",
    )
    rows = read_rows(out)
    for row in rows:
        assert float(row["eps_refined"]) <= float(row["eps"]) + 1e-12
    assert (tmp_path / "schedules" / "refined_run000_refined.json").exists()
    reports = read_rows(tmp_path / "refined.localopt.csv")
    assert [row["run_id"] for row in reports] == ["0", "1"]
    assert [row["eps_final"] for row in reports] == [row["eps_refined"] for row in rows]
    trace_lines = (tmp_path / "traces" / "refined_run001.jsonl").read_text().splitlines()
    assert [json.loads(line)["t"] for line in trace_lines] == [1, 2]
    assert any("Best refined eps" in str(m) for m in output.messages)


def test_transfer_to_longer_chain(tmp_path, trained_ckpt):
    cli("instance", "--n", 32, "--uniform", "--out", tmp_path / "u32.json")
    out = tmp_path / "transfer.csv"
    cli("transfer", "--ckpt", trained_ckpt, "--instance", tmp_path / "u32.json", "--out", out, "--runs", 2)
    rows = read_rows(out)
    assert {row["n"] for row in rows} == {"32"}
    assert all(row["eps_refined"] != "" for row in rows)


def test_transfer_rejects_size_dependent_policy(tmp_path, u8, capsys):
    local_ckpt = tmp_path / "local.json"
    cli("train", "--instance", u8, "--p", 1, "--out-ckpt", local_ckpt, "--epochs", 1, "--episodes", 2,
        "--obs-mode", "local")
    code = main(["transfer", "--ckpt", str(local_ckpt), "--instance", str(u8), "--out", str(tmp_path / "t.csv")])
    assert code == 2
    error = last_error(capsys)
    assert error["error"] == "CheckpointError"
    assert error["exit_code"] == 2
    assert not (tmp_path / "t.csv").exists()


def test_baseline_command(tmp_path, u8):
    out = tmp_path / "baseline.csv"
    cli("baseline", "--instance", u8, "--p-max", 2, "--out", out)
    rows = read_rows(out)
    assert [(row["p"], row["t"]) for row in rows] == [("1", "1"), ("2", "1"), ("2", "2")]
    assert float(rows[0]["eps"]) == pytest.approx(0.25, abs=1e-6)
    assert float(rows[1]["eps"]) == pytest.approx(1 / 6, abs=1e-5)
    assert load_schedule(tmp_path / "baseline_p02.json").p == 2


def test_sweep_command(tmp_path, u8):
    out = tmp_path / "sweep.csv"
    output = cli(
        "sweep", "--instance", u8, "--p-list", "1,2", "--seeds", "0,1", "--out", out,
        "--epochs", 1, "--episodes", 4, "--runs", 2,
    )
    rows = read_rows(out)
    assert [row["p"] for row in rows] == ["1", "2"]
    assert [row["n_runs"] for row in rows] == ["4", "4"]
    assert float(rows[0]["bound"]) == pytest.approx(0.25)
    assert all(float(row["eps_best"]) >= float(row["bound"]) - 1e-9 for row in rows)
    assert (tmp_path / "sweep_checkpoints" / "p02_seed1.json").exists()
    assert output.data[-1][0]["p"] == 1


def test_flag_file_supplies_values(tmp_path, u8):
    flags = tmp_path / "flags.yaml"
    flags.write_text("epochs: 1\nepisodes: 3\np: 1\n")
    ckpt = tmp_path / "from_flags.json"
    cli("train", "--instance", u8, "--out-ckpt", ckpt, "--config", flags, "--epochs", 2)
    assert len(read_rows(tmp_path / "from_flags.log.csv")) == 2
    assert json.loads(ckpt.read_text())["meta"]["p_steps"] == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["nonsense"],
        ["instance", "--n", "7", "--out", "x.json"],
        ["instance", "--out", "x.json"],
        ["train", "--instance", "missing.json", "--p", "2", "--out-ckpt", "c.json"],
        ["instance", "--n", "8", "--out", "x.json", "--threads", "0"],
    ],
)
def test_invalid_input_exits_with_two(argv, capsys):
    assert main(argv) == 2
    error = last_error(capsys)
    assert error["exit_code"] == 2
    assert error["message"]


def test_threads_environment_variable_is_validated(monkeypatch, capsys):
    monkeypatch.setenv(THREADS_ENV_VAR, "none")
    assert main(["instance", "--n", "8", "--out", "x.json"]) == 2
    assert last_error(capsys)["error"] == "InvalidInputError"


def test_help(capsys):
    assert main([]) == 0
    assert "baseline" in capsys.readouterr().out


def test_periodic_checkpoints_are_in_manifest(tmp_path, u8):
    ckpt = tmp_path / "c.json"
    cli("train", "--instance", u8, "--p", 1, "--out-ckpt", ckpt, "--epochs", 4, "--episodes", 2,
        "--checkpoint-every", 2)
    manifest = json.loads((tmp_path / MANIFEST_FILE).read_text().splitlines()[-1])
    written = {p.name for p in tmp_path.glob("c.*")}
    assert written == {"c.json", "c.epoch2.json", "c.log.csv"}
    assert {Path(p).name for p in manifest["outputs"]} == written


def test_nonzero_target_field_is_rejected_at_evaluation(tmp_path, capsys):
    field = tmp_path / "h.json"
    cli("instance", "--n", 8, "--uniform", "--h", 0.5, "--out", field)
    ckpt = tmp_path / "h_ckpt.json"
    cli("train", "--instance", field, "--p", 1, "--out-ckpt", ckpt, "--epochs", 1, "--episodes", 2)
    code = main(["test", "--ckpt", str(ckpt), "--instance", str(field), "--out-csv", str(tmp_path / "h.csv")])
    assert code == 2
    assert last_error(capsys)["error"] == "InvalidInputError"
