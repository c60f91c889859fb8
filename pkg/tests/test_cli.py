import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from uncertrack import cli
from uncertrack.config import default_config


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(default_config()))
    return p


def run(*args):
    return cli.main([str(a) for a in args])


def test_validate_exit_codes(tmp_path, cfg_path, capsys):
    assert run("validate", "--config", cfg_path) == 0
    bad = default_config()
    bad["grasp"]["sigma_d"] = -1.0
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(bad))
    assert run("validate", "--config", p) == 3
    assert "grasp.sigma_d" in capsys.readouterr().out
    assert run("validate", "--config", tmp_path / "missing.json") == 2


def test_run_errors_leave_no_output(tmp_path):
    out = tmp_path / "out" / "r.jsonl"
    assert run("run", "--scenario", "spiral-bench", "--config", tmp_path / "nope.json", "--out", out) == 2
    p = tmp_path / "bad.json"
    p.write_text('{"scene": {}}')
    assert run("run", "--scenario", "spiral-bench", "--config", p, "--out", out) == 3
    assert not (tmp_path / "out").exists()


def test_summary_matches_rows(tmp_path, cfg_path):
    out = tmp_path / "bench.jsonl"
    assert run("run", "--scenario", "spiral-bench", "--config", cfg_path, "--seed", 5, "--trials", 40,
               "--out", out) == 0
    rows = [json.loads(s) for s in out.read_text().splitlines()]
    assert [r["seed"] for r in rows] == list(range(5, 45))
    with open(tmp_path / "bench.summary.csv") as fh:
        summ = {r["scenario"]: r for r in csv.DictReader(fh)}
    s = np.array([r["seconds"] for r in rows])
    main = summ["spiral-bench"]
    assert int(main["n"]) == 40
    assert float(main["mean_s"]) == s.mean() and float(main["std_s"]) == s.std()
    assert float(main["success_rate"]) == np.mean([r["success"] for r in rows])
    c = np.array([r["metrics"]["circular_seconds"] for r in rows])
    assert float(summ["spiral-bench/circular"]["mean_s"]) == c.mean()


def test_rerun_is_byte_identical(tmp_path, cfg_path, monkeypatch):
    outs = []
    for i, workers in enumerate(("1", "2")):
        monkeypatch.setenv(cli.WORKERS_ENV, workers)
        out = tmp_path / f"r{i}.jsonl"
        assert run("run", "--scenario", "double-pin", "--config", cfg_path, "--trials", 4, "--out", out) == 0
        outs.append((out.read_bytes(), (tmp_path / f"r{i}.summary.csv").read_bytes()))
    assert outs[0] == outs[1]


def test_worker_env(monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "3")
    assert cli.worker_count(10) == 3 and cli.worker_count(2) == 2
    monkeypatch.setenv(cli.WORKERS_ENV, "zero")
    assert cli.worker_count(10) == 1


def test_emit_svg(tmp_path, cfg_path):
    out = tmp_path / "sp.jsonl"
    assert run("run", "--scenario", "single-pin", "--config", cfg_path, "--out", out, "--emit-svg") == 0
    text = (tmp_path / "sp.svg").read_text()
    assert text.startswith("<svg") and text.count("<polygon") == 3


def test_isotropic_bench_summary(tmp_path):
    cfg = default_config()
    cfg["search"]["bench_cov"] = [[1e-6, 0.0], [0.0, 1e-6]]
    p = tmp_path / "iso.json"
    p.write_text(json.dumps(cfg))
    out = tmp_path / "iso.jsonl"
    assert run("run", "--scenario", "spiral-bench", "--config", p, "--trials", 300, "--out", out) == 0
    with open(tmp_path / "iso.summary.csv") as fh:
        summ = {r["scenario"]: float(r["mean_s"]) for r in csv.DictReader(fh)}
    assert abs(summ["spiral-bench"] - summ["spiral-bench/circular"]) <= 0.1 * summ["spiral-bench/circular"]


def test_module_entry_point(cfg_path):
    res = subprocess.run([sys.executable, "-m", "uncertrack.cli", "validate", "--config", str(cfg_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == ""
