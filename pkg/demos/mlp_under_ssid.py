"""Swap the detector: the same online loop driving a small sigmoid MLP.

Both models are put through the same 90-second scenario, next to the two
label-assisted references: one model trained once on the benign prefix,
and one retrained every 750 packets on what it called normal itself.

    python demos/mlp_under_ssid.py
"""

import numpy as np

from ssid import core, evalkit, ingest, synth

rows = synth.generate(synth.desk_scenario(0))
records = [ingest.PacketRecord(i, t, s, d, ln) for i, (t, s, d, ln, _) in enumerate(rows)]
labels = np.array([r[4] for r in rows])


def segment_rates(steps):
    benign = np.mean([s.is_attack for s in steps if s.time < 60])
    attack = np.mean([s.is_attack for s in steps if s.time >= 60])
    return benign, attack


print("detector               done at   false alarms   flagged in flood   AUC(window)")
for name, cfg in [
    ("AADRNN", core.SsidConfig(seed=0)),
    ("MLP (Adam, 20 epochs)", core.SsidConfig(seed=0, detector="mlp")),
]:
    res = core.replay(records, cfg)
    fa, det = segment_rates(res.steps)
    done = res.completion_index
    done_t = f"{res.steps[done].time:5.1f}s" if done is not None else "  never"
    auc = evalkit.evaluate_steps(res.steps, records, labels, cfg).roc_window.auc
    print(f"{name:22s} {done_t:>8s}   {fa:12.2%}   {det:16.2%}   {auc:.3f}")

cfg = core.SsidConfig(seed=0)
offline = evalkit.baseline_offline(records, labels, cfg)
periodic = evalkit.baseline_incremental(records, labels, cfg)
print("\nlabel-assisted references (per-packet, scored after their training prefix):")
for name, rep in [("offline", offline), ("retrain every 750", periodic)]:
    c = rep.confusion
    print(f"  {name:18s} TPR {c.tpr:.3f}  FPR {c.fpr:.3f}  AUC(window) {rep.roc_window.auc:.3f}")
