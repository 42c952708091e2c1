"""
Where did the page change?
==========================

Compares the tampered sample (logo moved, fields shifted) with its template
using windowed SSIM, turns the low-similarity windows into boxes and writes
an overlay with the boxes drawn in red.

    python demos/02_tamper_evidence.py [out_dir]
"""
import sys
import tempfile
from pathlib import Path

import numpy as np

from veridoc import load_manifest
from veridoc.cli import draw_boxes
from veridoc.imgproc import load_png, save_png, to_grayscale
from veridoc.ssim import difference_evidence, ssim_global, ssim_windowed
from veridoc.synth import build_corpus

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="veridoc-"))
paths = build_corpus(out)
template = load_manifest(paths["manifest"]).get("yashoda").image

for name in ("real", "tampered"):
    sample = to_grayscale(load_png(paths[name]))
    print(f"{name:<9} global ssim {ssim_global(sample, template):.4f}")

sample = to_grayscale(load_png(paths["tampered"]))

# %% local scores: 8x8 windows every 4 px
report = ssim_windowed(sample, template, window=8, stride=4)
low = report.local_map < 0.5
print(f"\n{report.local_map.size} windows, {int(low.sum())} below 0.5")
print(f"window scores: min {report.local_map.min():.3f}  median {np.median(report.local_map):.3f}")

# %% evidence boxes come from connected groups of flagged windows
evidence = difference_evidence(report, 0.5)
for b in evidence.boxes:
    print(f"  box x={b.x:<4} y={b.y:<4} w={b.w:<4} h={b.h}")

save_png(out / "tampered.diff.png", evidence.diff_image)
save_png(out / "tampered.overlay.png", draw_boxes(sample, evidence.boxes))
print(f"\noverlay written to {out / 'tampered.overlay.png'}")
