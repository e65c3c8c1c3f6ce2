"""Per-endpoint scoring for compromised-device identification.

Each endpoint gets a six-metric vector every ten seconds describing what it
received (grouped by sender) and what it sent. One shared model scores all
endpoints, each with its own decision window. Host h4 starts flooding h0
for the last ten minutes.

The six-metric model has 252 weights, so initial learning needs thousands
of windows; this demo refits every 25 selections to keep it quick.

    python demos/device_identification.py [duration_seconds]
"""

import sys
import time

import numpy as np

from ssid import core, evalkit, ingest, synth

duration = float(sys.argv[1]) if len(sys.argv) > 1 else 15000.0
spec = synth.SynthSpec(
    rate=10.0,
    duration=duration,
    hosts=("h0", "h1", "h2", "h3", "h4"),
    attacks=[synth.AttackSpec(start=duration - 600, duration=600, rate=50, src="h4", dst="h0")],
    seed=0,
)
rows = synth.generate(spec)
records = [ingest.PacketRecord(i, t, s, d, ln) for i, (t, s, d, ln, _) in enumerate(rows)]
labels = np.array([r[4] for r in rows])

cfg = core.SsidConfig(seed=0, task="device", retrain_every=25)
t0 = time.perf_counter()
result = core.replay(records, cfg)
print(f"{len(records)} packets -> {len(result.steps)} endpoint windows in {time.perf_counter() - t0:.1f}s")

last = result.steps[-1]
print(f"trust at the end: {last.gamma:.3f} (adequacy {last.delta:.3f}, knowledge {last.kappa:.3f}); "
      f"initial learning {'finished' if result.completion_index is not None else 'still running'}")

# A window counts as compromised for an endpoint when any flood packet
# involves it, so both the attacker and its target should light up.
report = evalkit.evaluate_steps(result.steps, records, labels, cfg)
print("\nendpoint   TP   FP    TN   FN  balanced accuracy")
for ep, c in report.endpoints.items():
    print(f"{ep:8s} {c.tp:4d} {c.fp:4d} {c.tn:5d} {c.fn:4d}  {evalkit.endpoint_balanced_accuracy(c):.3f}")
