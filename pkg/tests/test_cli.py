import json

from stosym.cli import main


def _write(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
    return p


def test_list(capsys):
    assert main(["list"]) == 0
    assert "sec6-determining" in capsys.readouterr().out


def test_run_writes_deterministic_report(tmp_path):
    cfg = _write(tmp_path, {"experiment": "sec6-determining", "seed": 1, "params": {"n_points": 50}})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes()
    report = json.loads(a)
    assert report["passed"] and report["experiments"][0]["seed"] == 1


def test_seed_override(tmp_path):
    cfg = _write(tmp_path, {"experiment": "sec6-determining", "seed": 1, "params": {"n_points": 20}})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path), "--seed-override", "9"]) == 0
    assert json.loads((tmp_path / "report.json").read_text())["experiments"][0]["seed"] == 9


def test_artifacts_written(tmp_path):
    cfg = _write(tmp_path, {"experiment": "sec6-pathwise", "params": {"n_paths": 2, "steps": 20}})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert list((tmp_path / "sec6-pathwise").glob("*.csv"))


def test_usage_errors(tmp_path, capsys):
    assert main(["run", "--config", str(_write(tmp_path, "{not json"))]) == 2
    assert main(["run", "--config", str(_write(tmp_path, {"experiment": "nope"})), "--out", str(tmp_path)]) == 2
    assert "valid names" in capsys.readouterr().err
    assert main(["run", "--config", str(_write(tmp_path, {"experiment": "sec6-determining", "params": {"bogus": 1}})), "--out", str(tmp_path)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["frobnicate"]) == 2


def test_failing_check_exit_code(tmp_path):
    cfg = _write(tmp_path, {"experiment": "euler-determining", "params": {"n_points": 20}})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 1
