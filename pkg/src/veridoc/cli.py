"""Command-line frontend.

``veridoc verify`` prints, in order::

    Best Template: <file>, Matching Score: <score>
    Match Found                      (matched only)
    Type of document:<label>         (matched only)
    <ssim>                           (matched only)
    <verdict line>

Exit status: 0 real document, 2 structural fraud, 3 data fraud, 4 no
template match, 1 operational or usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig, auto_tune, load_config
from .errors import DuplicateTemplateIdError, VeridocError
from .fraud import Verdict, VerificationReport, load_dataset, verify
from .imgproc import Box, load_png, resize_bilinear, save_png, to_grayscale
from .ocr import ExternalOcrEngine, FixtureOcrEngine
from .ssim import SsimConstants, difference_evidence, ssim_global, ssim_windowed
from .templates import (
    MANIFEST_VERSION,
    TemplateManifest,
    TemplateRecord,
    extract_roi_candidates,
    load_manifest,
    promote_candidate,
    save_manifest,
)

log = logging.getLogger("veridoc")

CONFIG_ENV = "VERIDOC_CONFIG"
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}
EXIT_ERROR = 1
EXIT_CODES = {
    Verdict.REAL_DOCUMENT: 0,
    Verdict.POTENTIAL_FRAUD_STRUCTURAL: 2,
    Verdict.POTENTIAL_FRAUD_DATA: 3,
    Verdict.NO_TEMPLATE_MATCH: 4,
}
BATCH_KEYS = (
    ("real", Verdict.REAL_DOCUMENT),
    ("structural", Verdict.POTENTIAL_FRAUD_STRUCTURAL),
    ("data", Verdict.POTENTIAL_FRAUD_DATA),
)


def exit_code(verdict: Verdict) -> int:
    return EXIT_CODES[verdict]


def format_score(value: float) -> str:
    """Shortest decimal that round-trips to the same double."""
    return repr(float(value))


def verdict_lines(report: VerificationReport, cfg: PipelineConfig) -> list[str]:
    lines = [f"Best Template: {report.template_file}, Matching Score: {format_score(report.best.score)}"]
    if report.best.matched:
        lines.append("Match Found")
        lines.append(f"Type of document:{report.doc_type_label}")
        lines.append(format_score(report.ssim))
    lines.append(report.verdict.display(cfg.no_match_message))
    return lines


# -- configuration ---------------------------------------------------------

def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--templates", required=True, help="template manifest (JSON)")
    p.add_argument("--dataset", required=True, help="reference dataset (CSV)")
    p.add_argument("--config", help=f"config file (JSON); falls back to ${CONFIG_ENV}")
    p.add_argument("--ocr", default="fixture", help="'fixture' or 'external:<command>'")
    p.add_argument("--match-mode", choices=("row", "any"))
    p.add_argument("--adaptive", action="store_true", default=None, help="auto-tune preprocessing")
    p.add_argument("--match-threshold", type=float)
    p.add_argument("--ssim-threshold", type=float)
    p.add_argument("--confidence-threshold", type=float)


def resolve_config(args) -> PipelineConfig:
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    cfg = load_config(path) if path else PipelineConfig()
    overrides = {
        "match_mode": getattr(args, "match_mode", None),
        "adaptive_parameters": getattr(args, "adaptive", None),
        "match_threshold": getattr(args, "match_threshold", None),
        "ssim_threshold": getattr(args, "ssim_threshold", None),
        "confidence_threshold": getattr(args, "confidence_threshold", None),
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return cfg.replace(**overrides) if overrides else cfg


def make_engine(spec: str):
    if spec == "fixture":
        return FixtureOcrEngine()
    if spec.startswith("external:") and spec[len("external:"):].strip():
        return ExternalOcrEngine(spec[len("external:"):])
    raise VeridocError(f"unknown OCR engine {spec!r}; use 'fixture' or 'external:<command>'")


# -- evidence --------------------------------------------------------------

def draw_boxes(img: np.ndarray, boxes, color=(255, 0, 0)) -> np.ndarray:
    """Copy of ``img`` (as RGB) with a one-pixel outline around each box."""
    out = np.stack([img] * 3, axis=-1) if img.ndim == 2 else img.copy()
    h, w = out.shape[:2]
    for b in boxes:
        x0, y0 = max(0, b.x), max(0, b.y)
        x1, y1 = min(w, b.x2) - 1, min(h, b.y2) - 1
        if x1 < x0 or y1 < y0:
            continue
        out[y0, x0:x1 + 1] = color
        out[y1, x0:x1 + 1] = color
        out[y0:y1 + 1, x0] = color
        out[y0:y1 + 1, x1] = color
    return out


def _write_evidence(directory: Path, stem: str, report: VerificationReport, sample_gray, manifest) -> None:
    if report.evidence is None:
        return
    tmpl = manifest.get(report.best.template_id).image
    resized = resize_bilinear(sample_gray, tmpl.shape[1], tmpl.shape[0])
    save_png(directory / f"{stem}.diff.png", report.evidence.diff_image)
    save_png(directory / f"{stem}.overlay.png", draw_boxes(resized, report.evidence.boxes))


def _write_report(path: Path, report: VerificationReport, sample: str) -> None:
    data = report.to_dict()
    data["sample"] = sample
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n")


# -- commands --------------------------------------------------------------

def cmd_verify(args) -> int:
    cfg = resolve_config(args)
    manifest = load_manifest(args.templates)
    dataset = load_dataset(args.dataset)
    engine = make_engine(args.ocr)
    sample_path = Path(args.sample)
    sample = load_png(sample_path)
    report = verify(sample, manifest, dataset, engine, cfg)
    for line in verdict_lines(report, report.config or cfg):
        print(line)
    evidence_dir = Path(args.evidence) if args.evidence else None
    if evidence_dir:
        _write_evidence(evidence_dir, sample_path.stem, report, to_grayscale(sample), manifest)
    report_path = Path(args.report) if args.report else (
        evidence_dir / f"{sample_path.stem}.report.json" if evidence_dir else None)
    if report_path:
        _write_report(report_path, report, str(sample_path))
    return exit_code(report.verdict)


def _batch_one(path: Path, manifest, dataset, cfg, ocr_spec, out_dir: Path):
    try:
        report = verify(load_png(path), manifest, dataset, make_engine(ocr_spec), cfg)
        _write_report(out_dir / f"{path.stem}.report.json", report, str(path))
        return report.verdict, None
    except Exception as exc:  # one bad file must not sink the batch
        return None, f"{type(exc).__name__}: {exc}"


def cmd_batch(args) -> int:
    cfg = resolve_config(args)
    manifest = load_manifest(args.templates)
    dataset = load_dataset(args.dataset)
    make_engine(args.ocr)  # reject a bad engine spec before fanning out
    src = Path(args.directory)
    if not src.is_dir():
        raise VeridocError(f"not a directory: {src}")
    out_dir = Path(args.out) if args.out else src / "reports"
    files = sorted(p for p in src.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    jobs = max(1, args.jobs)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(
            lambda p: _batch_one(p, manifest, dataset, cfg, args.ocr, out_dir), files))
    counts = {v: 0 for v in Verdict}
    errors = 0
    for path, (verdict, err) in zip(files, results):
        if verdict is None:
            errors += 1
            print(f"{path.name}\terror: {err}")
        else:
            counts[verdict] += 1
            print(f"{path.name}\t{verdict.value}")
    summary = [f"{key}:{counts[v]}" for key, v in BATCH_KEYS]
    if counts[Verdict.NO_TEMPLATE_MATCH]:
        summary.append(f"nomatch:{counts[Verdict.NO_TEMPLATE_MATCH]}")
    if errors:
        summary.append(f"errors:{errors}")
    print(" ".join(summary))
    return 0


def cmd_extract_template(args) -> int:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    manifest_path = Path(args.out)
    if manifest_path.exists():
        manifest = load_manifest(manifest_path)
    else:
        manifest = TemplateManifest(MANIFEST_VERSION, (), manifest_path)
    if args.id in manifest.ids:
        raise DuplicateTemplateIdError(args.id)
    base = manifest_path.parent
    page = to_grayscale(load_png(args.doc))
    cfg = auto_tune(cfg.replace(adaptive_parameters=True) if args.adaptive else cfg, page.shape[1], page.shape[0])
    candidates = extract_roi_candidates(page, cfg)
    if args.roi_index is not None:
        if not 0 <= args.roi_index < len(candidates):
            raise VeridocError(f"ROI index {args.roi_index} out of range ({len(candidates)} candidates)")
        record = promote_candidate(candidates[args.roi_index], args.id, args.label, base, manifest.ids)
        suggestions = ()
    else:
        file = f"{args.id}.png"
        if (base / file).exists():
            raise DuplicateTemplateIdError(args.id)
        save_png(base / file, page)
        suggestions = tuple(c.bounding_box for c in candidates)
        record = TemplateRecord(args.id, file, args.label, base_dir=base, roi_suggestions=suggestions)
        for k, c in enumerate(candidates):
            save_png(base / f"{args.id}.roi{k}.png", c.crop)
    if args.roi_index is None and not candidates:
        log.warning("no ROI candidates found on %s; template saved without suggestions", args.doc)
    save_manifest(TemplateManifest(manifest.version, manifest.templates + (record,), manifest_path),
                  manifest_path)
    print(f"Added template {args.id} ({record.image_file}) with {len(suggestions)} ROI suggestion(s)")
    return 0


def cmd_inspect(args) -> int:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    manifest = load_manifest(args.templates)
    try:
        record = manifest.get(args.template_id)
    except KeyError:
        raise VeridocError(f"unknown template id {args.template_id!r}") from None
    tmpl = record.image
    sample = to_grayscale(load_png(args.sample))
    if sample.shape != tmpl.shape:
        print(f"Sample resized from {sample.shape[1]}x{sample.shape[0]} to {tmpl.shape[1]}x{tmpl.shape[0]}")
        sample = resize_bilinear(sample, tmpl.shape[1], tmpl.shape[0])
    k = SsimConstants(cfg.ssim_k1, cfg.ssim_k2)
    score = ssim_global(tmpl, sample, k)
    window = min(cfg.ssim_window, *tmpl.shape)
    evidence = difference_evidence(ssim_windowed(tmpl, sample, window, cfg.ssim_stride, k),
                                   cfg.dissimilarity_threshold)
    out = Path(args.out)
    stem = Path(args.sample).stem
    save_png(out / f"{stem}.diff.png", evidence.diff_image)
    save_png(out / f"{stem}.overlay.png", draw_boxes(sample, evidence.boxes))
    print(f"SSIM: {format_score(score)}")
    print(f"Boxes: {len(evidence.boxes)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="veridoc", description="Verify document images against a template library and a reference dataset.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="verify one sample document")
    p.add_argument("sample")
    _add_pipeline_flags(p)
    p.add_argument("--evidence", help="directory for difference/overlay PNGs and the report")
    p.add_argument("--report", help="path of the JSON report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("batch", help="verify every image in a directory")
    p.add_argument("directory")
    _add_pipeline_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="report directory (default: <directory>/reports)")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("extract-template", help="add a template to a manifest")
    p.add_argument("doc")
    p.add_argument("--out", required=True, help="manifest to create or extend")
    p.add_argument("--id", required=True)
    p.add_argument("--label", required=True, help="document type label")
    p.add_argument("--roi-index", type=int, help="promote this ROI candidate instead of the whole page")
    p.add_argument("--config")
    p.add_argument("--adaptive", action="store_true")
    p.set_defaults(func=cmd_extract_template)

    p = sub.add_parser("inspect", help="render SSIM evidence for a sample against one template")
    p.add_argument("sample")
    p.add_argument("template_id")
    p.add_argument("--templates", required=True)
    p.add_argument("--out", required=True, help="directory for diff and overlay PNGs")
    p.add_argument("--config")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved for a verdict here
        return EXIT_ERROR if exc.code else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (VeridocError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
