import json

import pytest

from parksense.cli import main

SMALL = {"lot": {"aisles": 2, "spaces_per_aisle_side": 3}, "horizon": 1.0}


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL))
    return path


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_run_is_deterministic(capsys, small_config):
    argv = ("run", "--config", small_config, "--policy", "near-optimal", "--gamma", "0.5",
            "--mode", "two-way", "--seed", "7")
    code, first, _ = run_cli(capsys, *argv)
    assert code == 0
    _, second, _ = run_cli(capsys, *argv)
    assert first == second
    summary = json.loads(first)
    assert summary["seed"] == 7 and 0.0 <= summary["mean_error"] <= 1.0


def test_gamma_out_of_range(capsys):
    code, _, err = run_cli(capsys, "run", "--gamma", "1.5")
    assert code == 2
    assert "gamma out of range" in err


def test_malformed_config_names_key(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"beta": "fast"}))
    code, _, err = run_cli(capsys, "run", "--config", path)
    assert code == 2 and "beta" in err
    path.write_text(json.dumps({"no_such_key": 1}))
    code, _, err = run_cli(capsys, "run", "--config", path)
    assert code == 2 and "no_such_key" in err
    path.write_text("{not json")
    assert run_cli(capsys, "run", "--config", path)[0] == 2


def test_trace_line_count(capsys, small_config, tmp_path):
    out = tmp_path / "trace.jsonl"
    code, stdout, _ = run_cli(capsys, "run", "--config", small_config, "--trace", "--out", out)
    assert code == 0
    counters = json.loads(stdout)["counters"]
    lines = out.read_text().splitlines()
    assert len(lines) >= counters["arrivals_probe"] + counters["arrivals_normal"] \
        + counters["departures_probe"] + counters["departures_normal"]
    records = [json.loads(line) for line in lines]
    assert all(r["schema"] == 1 for r in records)
    assert records[-1]["kind"] == "end"
    assert (tmp_path / "trace.jsonl.manifest.json").exists()


def test_trace_beliefs(capsys, small_config, tmp_path):
    out = tmp_path / "t.jsonl"
    run_cli(capsys, "run", "--config", small_config, "--trace-beliefs", "--out", out)
    first = json.loads(out.read_text().splitlines()[0])
    assert len(first["beliefs"]) == 12


def test_sweep_filter_rows(capsys, small_config):
    code, out, _ = run_cli(capsys, "sweep", "--config", small_config, "--reps", "10",
                           "--policies", "near-optimal")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "policy,route_mode,gamma,replications,mean_error,stderr"
    assert len(lines) - 1 == 18
    assert all(line.split(",")[3] == "10" for line in lines[1:])


def test_sweep_manifest_replay_is_byte_identical(capsys, small_config, tmp_path):
    first = tmp_path / "a.csv"
    code, _, _ = run_cli(capsys, "sweep", "--config", small_config, "--reps", "2",
                         "--gammas", "0.1,0.9", "--seed", "11", "--out", first)
    assert code == 0
    manifest = tmp_path / "a.csv.manifest.json"
    doc = json.loads(manifest.read_text())
    assert doc["seed"] == 11 and doc["config"]["replications"] == 2
    second = tmp_path / "b.csv"
    assert run_cli(capsys, "sweep", "--config", manifest, "--out", second)[0] == 0
    assert first.read_bytes() == second.read_bytes()


def test_validate_passes_and_perturbation_fails(capsys, tmp_path):
    report = tmp_path / "report.json"
    code, out, _ = run_cli(capsys, "validate", "--reps", "2", "--out", report)
    assert code == 0
    assert "[FAIL]" not in out
    assert {r["name"] for r in json.loads(report.read_text())} >= {
        "bayes-grid", "queue-blocking", "submodularity"}
    code, out, _ = run_cli(capsys, "validate", "--reps", "2", "--perturb-sensor", "0.01")
    assert code == 1
    assert "[FAIL] bayes-grid" in out
