"""Command-line interface tests: exit codes, artifacts, and rerun determinism."""
import json
import re
import subprocess
import sys

import pytest

from lumpband.cli import main
from lumpband.harness import COLUMNS, read_results


def _write_json(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


@pytest.fixture()
def instance_path(tmp_path):
    spec = _write_json(tmp_path / "spec.json",
                       {"kind": "lumpable", "S": 6, "K": 3, "r": 2, "seed": 1})
    out = tmp_path / "model.json"
    assert main(["gen-instance", "--spec", spec, "--out", str(out)]) == 0
    return str(out)


def test_gen_instance_writes_model(instance_path):
    doc = json.loads(open(instance_path, encoding="utf-8").read())
    assert len(doc["mu"]) == 2 and len(doc["mu"][0]) == 3


def test_gen_instance_bad_spec_exit_2(tmp_path, capsys):
    spec = _write_json(tmp_path / "bad.json", {"kind": "nope"})
    assert main(["gen-instance", "--spec", spec, "--out",
                 str(tmp_path / "x.json")]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_gen_instance_missing_file_exit_2(tmp_path):
    assert main(["gen-instance", "--spec", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "x.json")]) == 2


def test_pac_run_writes_csv(instance_path, tmp_path, capsys):
    out = tmp_path / "pac.csv"
    rc = main(["pac", "--instance", instance_path, "--algo", "uniform",
               "--eps", "0.25", "--delta", "0.1", "--r", "2",
               "--seed", "0", "1", "--scale", "0.02", "--out", str(out)])
    assert rc == 0
    assert re.search(r"determinism-hash: [0-9a-f]{64}", capsys.readouterr().out)
    rows = read_results(out)
    assert len(rows) == 2 and all(r.algorithm == "pac-uniform" for r in rows)


def test_regret_run_checkpoints(instance_path, tmp_path, capsys):
    out = tmp_path / "reg.csv"
    rc = main(["regret", "--instance", instance_path, "--algo", "ucb",
               "--steps", "3000", "--seed", "0", "--checkpoint-every", "1000",
               "--out", str(out)])
    assert rc == 0
    rows = read_results(out)
    assert [r.checkpoint for r in rows] == [1000, 2000, 3000]


def test_rerun_hash_identical(instance_path, tmp_path, capsys):
    args = ["regret", "--instance", instance_path, "--algo", "uniform",
            "--r", "2", "--steps", "2000", "--seed", "0", "1", "--scale",
            "0.01", "--out", str(tmp_path / "a.csv")]
    assert main(args) == 0
    h1 = re.search(r"determinism-hash: ([0-9a-f]{64})",
                   capsys.readouterr().out).group(1)
    args[-1] = str(tmp_path / "b.csv")
    assert main(args) == 0
    h2 = re.search(r"determinism-hash: ([0-9a-f]{64})",
                   capsys.readouterr().out).group(1)
    assert h1 == h2
    assert (tmp_path / "a.csv").read_bytes().splitlines()[0].decode() == \
        ",".join(COLUMNS)


def test_bench_config_summary(instance_path, tmp_path, capsys):
    cfgp = _write_json(tmp_path / "bench.json", {
        "experiment_id": "demo", "instance": instance_path,
        "algorithm": "exp3", "seeds": [0, 1],
        "params": {"steps": 1500}, "checkpoints": [500, 1500]})
    out = tmp_path / "bench.csv"
    rc = main(["bench", "--config", cfgp, "--out", str(out), "--summary"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    summaries = [json.loads(l) for l in lines if l.startswith("{")]
    assert {s["checkpoint"] for s in summaries} == {500, 1500}
    assert all("median_regret" in s for s in summaries)


def test_bench_bad_algorithm_exit_2(instance_path, tmp_path):
    cfgp = _write_json(tmp_path / "bad.json", {
        "experiment_id": "demo", "instance": instance_path,
        "algorithm": "wizardry", "seeds": [0]})
    assert main(["bench", "--config", cfgp, "--out",
                 str(tmp_path / "o.csv")]) == 2


def test_console_entry_point(instance_path, tmp_path):
    out = tmp_path / "cli.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "lumpband.cli", "pac", "--instance",
         instance_path, "--algo", "naive", "--eps", "0.4", "--delta", "0.2",
         "--seed", "0", "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "determinism-hash:" in proc.stdout
