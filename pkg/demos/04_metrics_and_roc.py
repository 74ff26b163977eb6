#!/usr/bin/env python3
"""Scoring detections: confusion-matrix metrics and threshold sweeps.

Shows the full derived-metric report from raw cell counts, the composite
columns from percentage rates, and a threshold sweep tracing out an ROC
curve on a synthetic scene.
"""

import numpy as np

from bprt import (
    CellParams,
    ConfusionCounts,
    VoltageFrame,
    composites_from_rates,
    detect,
    metrics_from_counts,
    roc_sweep,
    train_detector,
)

# ---------------------------------------------------------------------------
# From raw counts to the full report.
counts = ConfusionCounts(tp=923, fp=32, tn=968, fn=77)
report = metrics_from_counts(counts)
print("metrics from counts (tp=923, fp=32, tn=968, fn=77):")
for key, value in report.as_dict().items():
    print(f"  {key:22s} {value:.6g}")

# ---------------------------------------------------------------------------
# From percentage rates to the composite columns.
print("\ncomposites from (sensitivity%, specificity%, precision%):")
for rates in [(92.3, 96.8, 99.0), (100.0, 100.0, 100.0), (89.8, 92.4, 92.2)]:
    c = composites_from_rates(*rates)
    print(
        f"  {rates}: youden={c.youden:.4f} PLR={c.positive_likelihood:.4g} "
        f"NLR={c.negative_likelihood:.4g} F={c.f_measure:.2f}%"
    )

# ---------------------------------------------------------------------------
# Threshold sweep.  The detector is retrained at each t_a; raising the
# threshold monotonically shrinks the set of flagged cells, so the curve
# walks from (1, 1) down to (0, 0).
rng = np.random.default_rng(3)
template = VoltageFrame(v=rng.uniform(0.1, 0.9, size=(16, 16)))
test_pixels = template.v.copy()
test_pixels[0:6, 0:6] = 0.98  # a bright intruder
truth = np.zeros((8, 8), dtype=bool)
truth[0:3, 0:3] = True

grid = [0.0, 0.2, 0.35, 0.5, 0.65, 0.8, 1.0, 2.0]
points = roc_sweep(
    template, [(VoltageFrame(v=test_pixels), truth)], grid, 2, CellParams(), 1.0
)
print("\nthreshold sweep:")
for pt in points:
    print(f"  t_a = {pt.t_a:4.2f} V -> fpr = {pt.fpr:.3f}, tpr = {pt.tpr:.3f}")

changed = [
    int(detect(train_detector(template, 2, CellParams(t_a=t), 1.0),
               VoltageFrame(v=test_pixels)).sum())
    for t in (0.5, 0.65)
]
print(f"\nchanged cells at t_a=0.5: {changed[0]}, at t_a=0.65: {changed[1]}")
