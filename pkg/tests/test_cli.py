import json
import subprocess
import sys

import pytest

from ssid.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, main


@pytest.fixture(scope="module")
def stream(tmp_path_factory):
    out = tmp_path_factory.mktemp("syn")
    cfg = out / "synth.json"
    cfg.write_text(json.dumps({"duration": 90, "attacks": [{"start": 60, "duration": 30}]}))
    assert main(["synth", "--config", str(cfg), "--out", str(out), "--seed", "4"]) == EXIT_OK
    return out / "stream.csv"


def test_synth_copies_config(stream):
    doc = json.loads((stream.parent / "config.json").read_text())
    assert doc["seed"] == 4 and doc["attacks"][0]["start"] == 60


def test_replay_eval_baseline(stream, tmp_path):
    run, ev, bl = tmp_path / "run", tmp_path / "ev", tmp_path / "bl"
    assert main(["replay", str(stream), "--out", str(run), "--seed", "1"]) == EXIT_OK
    assert {p.name for p in run.iterdir()} == {"config.json", "events.jsonl", "scores.csv", "trust.csv", "model.json"}
    assert json.loads((run / "config.json").read_text())["seed"] == 1
    assert main(["eval", str(stream), "--run", str(run), "--out", str(ev)]) == EXIT_OK
    report = json.loads((ev / "report.json").read_text())
    assert report["overall"]["tp"] > 0
    assert main(["baseline", str(stream), "--mode", "offline", "--train-packets", "200", "--out", str(bl)]) == EXIT_OK
    assert (bl / "roc_window.csv").exists()


def test_replay_is_reproducible_across_processes(stream, tmp_path):
    for name in ("a", "b"):
        cmd = [sys.executable, "-m", "ssid", "replay", str(stream), "--out", str(tmp_path / name), "--seed", "9"]
        subprocess.run(cmd, check=True)
    for f in ("events.jsonl", "model.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


@pytest.mark.parametrize("doc", ['{"theta": 5}', '{"unknown": 1}', "[1, 2]", "not json"])
def test_config_errors_exit_2(stream, tmp_path, doc):
    cfg = tmp_path / "c.json"
    cfg.write_text(doc)
    assert main(["replay", str(stream), "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_missing_config_exits_2(stream, tmp_path):
    assert main(["replay", str(stream), "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_bad_synth_config_exits_2(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"hosts": ["only"]}')
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_data_errors_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("timestamp,src,dst,length\n2,a,b,1\n1,a,b,1\n")
    assert main(["replay", str(bad), "--out", str(tmp_path / "o")]) == EXIT_DATA
    assert "non-monotone" in capsys.readouterr().err
    assert main(["replay", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o")]) == EXIT_DATA


def test_eval_without_labels_exits_3(tmp_path):
    s = tmp_path / "s.csv"
    s.write_text("timestamp,src,dst,length\n0,a,b,1\n")
    assert main(["replay", str(s), "--out", str(tmp_path / "run")]) == EXIT_OK
    assert main(["eval", str(s), "--run", str(tmp_path / "run"), "--out", str(tmp_path / "ev")]) == EXIT_DATA


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["replay"])
    assert exc.value.code == 2
