"""
Growing a template library from a scanned page
==============================================

Finds candidate regions on a clean form, promotes the largest block (the
thin horizontal rules are skipped) to a template of its own and shows that the sliding matcher relocates it on a
filled-in sample.

    python demos/03_template_library.py [out_dir]
"""
import sys
import tempfile
from pathlib import Path

from veridoc.templates import TemplateManifest, load_manifest, save_manifest
from veridoc.imgproc import load_png, to_grayscale
from veridoc.matching import detect_keypoints, histogram_similarity, sliding_match
from veridoc.synth import build_corpus
from veridoc.templates import extract_roi_candidates, promote_candidate

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="veridoc-"))
paths = build_corpus(out)
page = load_manifest(paths["manifest"]).get("yashoda").image

# %% blur -> adaptive threshold -> close -> edges -> outer contours
cands = extract_roi_candidates(page)
print(f"{len(cands)} ROI candidates (largest first)")
for i, c in enumerate(cands[:6]):
    b = c.bounding_box
    print(f"  [{i}] area {c.area:>6}  box {b.x},{b.y} {b.w}x{b.h}")

# rules are flat strips; a useful sub-template needs some height and texture
pick = next(i for i, c in enumerate(cands) if min(c.bounding_box.w, c.bounding_box.h) >= 16)
lib = out / "library"
rec = promote_candidate(cands[pick], "yashoda-head", "Medical report", lib)
save_manifest(TemplateManifest(1, (rec,)), lib / "manifest.json")
print(f"\npromoted candidate {pick} to {lib / rec.image_file}")

# %% the crop is found again on a filled-in page
sample = to_grayscale(load_png(paths["real"]))
(dx, dy), score = sliding_match(rec.image, sample)
b = cands[pick].bounding_box
print(f"sliding match at ({dx}, {dy}), zncc {score:.4f}; extracted at ({b.x}, {b.y})")

# %% two cheap side signals that end up in report diagnostics
print(f"histogram correlation page vs sample: {histogram_similarity(page, sample):.4f}")
print(f"Harris keypoints on the template: {len(detect_keypoints(page))}")
