import json

from latrisk.cli import main


def test_run_single_trial(capsys):
    rc = main(["run", "--scenario", "merge", "--policy", "lavqa",
               "--latency-ms", "200", "--seed", "42"])
    assert rc == 0
    data = json.loads(capsys.readouterr().out)
    assert data["seed"] == 42
    assert "collided" in data and "decisions" in data


def test_batch_writes_reports(tmp_path, capsys):
    rc = main(["batch", "--scenario", "merge", "--trials", "2",
               "--latencies", "200", "--seed", "5", "--workers", "1",
               "--out-dir", str(tmp_path)])
    assert rc == 0
    summary = tmp_path / "summary.csv"
    assert summary.exists()
    lines = summary.read_text().strip().splitlines()
    assert lines[0].startswith("scenario,latency_ms,method")
    assert len(lines) == 3  # header + baseline + lavqa
    jsons = list(tmp_path.glob("batch_merge_200ms_*.json"))
    assert len(jsons) == 2
    report = json.loads(jsons[0].read_text())
    assert report["trials"] == 2


def test_trace_csv(tmp_path, capsys):
    rc = main(["trace", "--scenario", "merge", "--latencies", "100,200",
               "--seed", "2024", "--trial", "1", "--out-dir", str(tmp_path)])
    assert rc == 0
    csvs = list(tmp_path.glob("trace_merge_*.csv"))
    assert len(csvs) == 1
    header = csvs[0].read_text().splitlines()[0]
    assert header == "t,ground_truth,perceived_100ms,perceived_200ms"


def test_licom_sweep(tmp_path, capsys):
    rc = main(["licom", "--scenario", "merge", "--taus", "0.5,1.0",
               "--samples", "1500", "--extent", "30", "--out-dir", str(tmp_path)])
    assert rc == 0
    pngs = sorted(tmp_path.glob("licom_merge_tau*.png"))
    assert len(pngs) == 2
    assert pngs[0].read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    counts = (tmp_path / "licom_merge_counts.csv").read_text().splitlines()
    assert counts[0] == "tau,unsafe_cells"


def test_config_file_round_trip(tmp_path, capsys):
    from latrisk.scenarios import ScenarioConfig

    cfg = ScenarioConfig(scenario="right-turn", latency_human=0.3, trials=1)
    path = tmp_path / "config.json"
    path.write_text(cfg.to_json())
    rc = main(["run", "--config", str(path), "--scenario", "right-turn",
               "--policy", "baseline", "--latency-ms", "300", "--seed", "9"])
    assert rc == 0
    data = json.loads(capsys.readouterr().out)
    assert data["policy"] == "baseline"
