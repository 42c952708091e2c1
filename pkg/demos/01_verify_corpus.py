"""
Verifying a small synthetic corpus
==================================

Builds five form templates, a reference patient table and four sample pages,
then runs the full pipeline on each sample and prints what it decided and why.

    python demos/01_verify_corpus.py [out_dir]
"""
import sys
import tempfile
from pathlib import Path

from veridoc import load_manifest
from veridoc.fraud import load_dataset, verify
from veridoc.imgproc import load_png
from veridoc.synth import build_corpus

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="veridoc-"))
paths = build_corpus(out)
print(f"corpus written to {out}")

manifest = load_manifest(paths["manifest"])
dataset = load_dataset(paths["dataset"])
print(f"{len(manifest.templates)} templates, {len(dataset)} reference rows\n")

# %% each sample goes through match -> SSIM -> OCR -> dataset lookup
for name in ("real", "tampered", "wrong_name", "unrelated"):
    rep = verify(load_png(paths[name]), manifest, dataset)
    print(f"== {name}")
    ranked = sorted(rep.scores.items(), key=lambda kv: -(kv[1] if kv[1] is not None else -2))
    for tid, score in ranked[:3]:
        print(f"   zncc {tid:<12} {score:.4f}")
    if rep.ssim is not None:
        print(f"   ssim {rep.ssim:.4f}")
    if rep.text:
        print(f"   ocr  {rep.text!r}")
    for c in rep.checks:
        print(f"   {c.column:<8} {'found' if c.found else 'MISSING'} ({c.expected!r})")
    print(f"   cumulative confidence {rep.confidence.cumulative:.3f}")
    print(f"   -> {rep.verdict.display()}\n")
