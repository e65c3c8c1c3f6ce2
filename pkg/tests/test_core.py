import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssid import core, ingest, synth
from ssid.core import BENIGN, MALICIOUS, REJECTED, ConfigError, SsidConfig, SsidEngine, select_packet


def _records(rows):
    return [ingest.PacketRecord(i, t, s, d, ln) for i, (t, s, d, ln, _) in enumerate(rows)]


def test_config_defaults():
    cfg = SsidConfig()
    assert (cfg.theta, cfg.k_min, cfg.window_i, cfg.gamma) == (0.95, 100, 10, 0.25)
    assert cfg.m == 3 and SsidConfig(task="device").m == 6


@pytest.mark.parametrize(
    "bad",
    [{"theta": 1.0}, {"gamma": 0.0}, {"k_min": 0}, {"detector": "svm"}, {"task": "x"},
     {"p": 0.05, "r": 0.01, "lam_plus": 0.1}, {"nonsense": 1}, {"theta": "high"}],
)
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        SsidConfig.from_dict(bad)


def test_config_round_trip(tmp_path):
    cfg = SsidConfig(seed=7, detector="mlp")
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert SsidConfig.load(p) == cfg
    with pytest.raises(ConfigError):
        SsidConfig.load(tmp_path / "missing.json")


@given(st.floats(0, 1), st.floats(0, 1))
def test_selection_probabilities_sum_to_one(gamma, y):
    p_benign, p_mal, q = gamma * (1 - y), gamma * y, 1 - gamma
    assert p_benign + p_mal + q == pytest.approx(1.0, abs=1e-15)


def test_selection_frequencies():
    rng = np.random.default_rng(0)
    gamma, y, n = 0.8, 0.3, 100_000
    draws = [select_packet(y, gamma, rng) for _ in range(n)]
    freq = {k: draws.count(k) / n for k in (BENIGN, MALICIOUS, REJECTED)}
    assert freq[BENIGN] == pytest.approx(gamma * (1 - y), abs=0.01)
    assert freq[MALICIOUS] == pytest.approx(gamma * y, abs=0.01)
    assert freq[REJECTED] == pytest.approx(1 - gamma, abs=0.01)


def test_first_packet_forced_and_zero_trust_rejects():
    rng = np.random.default_rng(0)
    assert select_packet(0.9, 0.0, rng, first=True) == BENIGN
    assert all(select_packet(0.1, 0.0, rng) == REJECTED for _ in range(100))


@pytest.fixture(scope="module")
def stationary():
    return _records(synth.generate(synth.SynthSpec(duration=60, seed=0)))


def test_first_packet_triggers_first_fit(stationary):
    eng = SsidEngine(SsidConfig(seed=0))
    rec = eng.step(next(core.build_samples(stationary[:1], eng.config)))
    assert rec.selection == BENIGN
    assert [e["event"] for e in eng.events] == ["select", "fit"]


def test_initial_learning_completes_on_stationary_traffic(stationary):
    res = core.replay(stationary, SsidConfig(seed=0))
    assert res.completion_index == 514
    complete = [e for e in res.events if e["event"] == "phase_complete"]
    assert len(complete) == 1 and complete[0]["gamma"] >= 0.95


def test_sparse_retraining_still_bootstraps(stationary):
    res = core.replay(stationary, SsidConfig(seed=0, retrain_every=25))
    fits = [e for e in res.events if e["event"] == "fit"]
    assert fits and fits[0]["ref"] == 0


def test_trust_and_phase_invariants(desk_records):
    res = core.replay(desk_records, SsidConfig(seed=0))
    for s in res.steps:
        assert s.gamma == pytest.approx(s.c_rep * s.c_gen)
        assert 0 <= s.kappa <= 1 and 0 <= s.y <= 1
    phases = [s.phase for s in res.steps]
    assert phases == sorted(phases)


def test_no_update_while_attack_detected(desk_records):
    cfg = SsidConfig(seed=0)
    eng = SsidEngine(cfg)
    for sample in core.build_samples(desk_records, cfg):
        before = eng.n_updates
        rec = eng.step(sample)
        if rec.window_mean > cfg.gamma:
            assert eng.n_updates == before
            if rec.phase >= 1:
                assert eng.batch == []


def test_detected_attack_clears_batch(desk_records):
    res = core.replay(desk_records, SsidConfig(seed=0))
    assert any(e["event"] == "clear" for e in res.events)


def test_adapts_to_benign_drift():
    before = synth.generate(synth.SynthSpec(duration=100, seed=1))
    after = synth.generate(synth.SynthSpec(rate=20, mean_length=120, duration=100, seed=2))
    rows = before + [(t + 100, s, d, ln, lab) for t, s, d, ln, lab in after]
    res = core.replay(_records(rows), SsidConfig(seed=0))
    updates = [e for e in res.events if e["event"] == "update" and e["time"] > 100]
    assert updates
    late = [s.is_attack for s in res.steps if s.time > updates[0]["time"]]
    assert np.mean(late) <= 0.05


def test_replay_is_deterministic(stationary, tmp_path):
    for name in ("a", "b"):
        core.replay(stationary, SsidConfig(seed=3)).write(tmp_path / name)
    for f in ("events.jsonl", "model.json", "scores.csv", "trust.csv", "config.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_different_seeds_differ(stationary):
    a = core.replay(stationary, SsidConfig(seed=1)).model
    b = core.replay(stationary, SsidConfig(seed=2)).model
    assert a != b


def test_malicious_selections_are_audited(desk_records):
    res = core.replay(desk_records, SsidConfig(seed=0))
    picked = [e for e in res.events if e["event"] == "select" and e["selection"] == MALICIOUS]
    assert len(picked) == len(res.malicious_selected) > 0


def test_device_task_runs_with_mlp():
    rows = synth.generate(synth.SynthSpec(duration=200, seed=0))
    res = core.replay(_records(rows), SsidConfig(seed=0, task="device", detector="mlp", mlp_epochs=2))
    assert {s.key for s in res.steps} == {"h0", "h1", "h2", "h3"}
    assert all(isinstance(s.ref, tuple) for s in res.steps)
