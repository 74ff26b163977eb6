#!/usr/bin/env python3
"""End-to-end change detection on a synthetic moving-object sequence.

Builds a static background template, slides a bright square across it,
trains the dual-module detector on the first frame, and writes per-frame
change maps (PGM) and red-tinted overlays (PPM) to demos/output/.
"""

from pathlib import Path

import numpy as np

from bprt import (
    GrayFrame,
    VoltageFrame,
    detect,
    export_netlist,
    extract_blobs,
    global_similarity,
    load_model,
    merged_output_grid,
    normalize,
    overlay,
    save_model,
    train_detector,
    write_change_map,
    write_pgm,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)
rng = np.random.default_rng(7)

# ---------------------------------------------------------------------------
# Scene: a 64x48 textured background; a 10x10 bright square enters at t >= 1.
H, W, BLOCK = 48, 64, 2
background = rng.integers(40, 90, size=(H, W), dtype=np.uint8)

frames = [background.copy()]
for t in range(1, 6):
    frame = background.copy()
    x = 4 + 9 * t
    frame[18:28, x : x + 10] = 235
    frames.append(frame)

for i, pixels in enumerate(frames):
    (OUT / f"frame_{i:03d}.pgm").write_bytes(write_pgm(GrayFrame(pixels=pixels)))
print(f"wrote {len(frames)} synthetic frames to {OUT}")

# ---------------------------------------------------------------------------
# Train on the object-free first frame; module 2 internally trains on the
# inverted template so bright-to-dark changes are caught too.
template = normalize(GrayFrame(pixels=frames[0]), 1.0)
model = train_detector(template, BLOCK, v_ref=1.0)
print(
    f"trained: {model.module1.cells_w}x{model.module1.cells_h} cells, "
    f"x_a = {model.module1.x_a:.4f} / {model.module2.x_a:.4f}"
)

# ---------------------------------------------------------------------------
# Detect on every subsequent frame.
for i, pixels in enumerate(frames):
    gray = GrayFrame(pixels=pixels)
    change = detect(model, normalize(gray, 1.0))
    s_g = global_similarity(merged_output_grid(model, normalize(gray, 1.0)))
    blobs = extract_blobs(change)
    (OUT / f"frame_{i:03d}_map.pgm").write_bytes(write_change_map(change))
    (OUT / f"frame_{i:03d}_overlay.ppm").write_bytes(overlay(change, gray))
    summary = ", ".join(
        f"{b.size} cells @ rows {b.bbox[0]}-{b.bbox[2]} cols {b.bbox[1]}-{b.bbox[3]}"
        for b in blobs
    )
    print(
        f"frame {i}: s_g = {s_g:.4f}, changed cells = {int(change.sum()):3d}"
        + (f", blobs: {summary}" if blobs else "")
    )

# ---------------------------------------------------------------------------
# The trained model round-trips through its text format, and the whole
# resistor network can be dumped as SPICE-style text.
model_path = OUT / "scene.bprt"
model_path.write_bytes(save_model(model))
reloaded = load_model(model_path.read_bytes())
assert save_model(reloaded) == model_path.read_bytes()
netlist = export_netlist(model)
(OUT / "scene.cir").write_text(netlist)
print(f"model saved to {model_path.name}; netlist has {len(netlist.splitlines())} lines")
