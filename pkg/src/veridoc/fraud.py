"""Reference dataset checks, confidence combination and the verdict pipeline."""
from __future__ import annotations

import csv
import enum
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import PipelineConfig, auto_tune
from .errors import DatasetError, ParameterError
from .imgproc import Box, resize_bilinear, to_grayscale
from .matching import (
    MatchResult,
    histogram_similarity,
    keypoint_agreement,
    select_best,
    template_scores,
)
from .ocr import FixtureOcrEngine, OcrSegment, localize_text_regions, normalize_text
from .ssim import DifferenceEvidence, SsimConstants, difference_evidence, ssim_global, ssim_windowed
from .templates import TemplateManifest

log = logging.getLogger(__name__)

__all__ = [
    "REPORT_VERSION",
    "Verdict",
    "ReferenceDataset",
    "AttributeCheck",
    "AttributeResult",
    "ConfidenceBundle",
    "VerificationReport",
    "load_dataset",
    "parse_dataset",
    "dump_dataset",
    "check_attributes",
    "cumulative_confidence",
    "decide",
    "verify",
]

REPORT_VERSION = 1
DATASET_COLUMNS = ("Name", "IP.No", "Address", "Date of Admission", "Date of Discharge")


class Verdict(enum.Enum):
    NO_TEMPLATE_MATCH = "NoTemplateMatch"
    POTENTIAL_FRAUD_STRUCTURAL = "PotentialFraudStructural"
    POTENTIAL_FRAUD_DATA = "PotentialFraudData"
    REAL_DOCUMENT = "RealDocument"

    def display(self, no_match_message: str = "No Template Match") -> str:
        return {
            Verdict.NO_TEMPLATE_MATCH: no_match_message,
            Verdict.POTENTIAL_FRAUD_STRUCTURAL: "Potential Fraud",
            Verdict.POTENTIAL_FRAUD_DATA: "Error in data: Potential Fraud",
            Verdict.REAL_DOCUMENT: "REAL DOCUMENT",
        }[self]


@dataclass(frozen=True)
class ReferenceDataset:
    columns: tuple[str, ...]
    rows: tuple[dict[str, str], ...]
    lowered: tuple[dict[str, str], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for i, row in enumerate(self.rows):
            missing = [c for c in self.columns if c not in row]
            if missing:
                raise DatasetError(f"row {i} lacks columns {missing}")
        object.__setattr__(
            self, "lowered", tuple({c: row[c].lower() for c in self.columns} for row in self.rows)
        )

    def __len__(self) -> int:
        return len(self.rows)


def parse_dataset(text: str) -> ReferenceDataset:
    """Parse comma-separated text with a header row; blank lines are skipped."""
    reader = csv.reader(io.StringIO(text))
    header = None
    rows = []
    for record in reader:
        if not record or (len(record) == 1 and not record[0].strip()):
            continue
        if header is None:
            header = tuple(record)
            if len(set(header)) != len(header):
                raise DatasetError("duplicate column names in header", line=reader.line_num)
            continue
        if len(record) != len(header):
            raise DatasetError(
                f"expected {len(header)} fields, found {len(record)}", line=reader.line_num
            )
        rows.append(dict(zip(header, record)))
    if header is None:
        raise DatasetError("dataset has no header row")
    return ReferenceDataset(header, tuple(rows))


def load_dataset(path) -> ReferenceDataset:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except FileNotFoundError as exc:
        raise DatasetError(f"dataset not found: {path}") from exc
    return parse_dataset(text)


def dump_dataset(ds: ReferenceDataset, path=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ds.columns)
    for row in ds.rows:
        writer.writerow([row[c] for c in ds.columns])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


@dataclass(frozen=True)
class AttributeCheck:
    column: str
    expected: str
    found: bool


@dataclass(frozen=True)
class AttributeResult:
    passed: bool
    checks: tuple[AttributeCheck, ...]
    matched_row: int | None


def _present(value: str, text: str) -> bool:
    # a blank cell cannot corroborate anything
    return bool(value.strip()) and value in text


def check_attributes(text: str, ds: ReferenceDataset, required, mode: str = "row") -> AttributeResult:
    """Validate normalized document text against the reference rows.

    ``row`` mode passes only if one single row has every required value
    present in ``text``; ``any`` mode lets each value come from any row.
    Checks describe the best row (most values found, earliest on ties).
    """
    required = list(required)
    unknown = [c for c in required if c not in ds.columns]
    if unknown:
        raise DatasetError(f"required columns not in dataset header: {unknown}")
    if mode not in ("row", "any"):
        raise ParameterError(f"unknown match mode {mode!r}")
    if not required:
        return AttributeResult(True, (), None)
    if not ds.rows:
        checks = tuple(AttributeCheck(c, "", False) for c in required)
        return AttributeResult(False, checks, None)

    hits = [[_present(row[c], text) for c in required] for row in ds.lowered]
    best = max(range(len(hits)), key=lambda i: (sum(hits[i]), -i))
    best_full = all(hits[best])
    if mode == "row":
        checks = tuple(
            AttributeCheck(c, ds.lowered[best][c], hits[best][k]) for k, c in enumerate(required)
        )
        passed = best_full
    else:
        checks = []
        for k, c in enumerate(required):
            src = next((i for i in range(len(hits)) if hits[i][k]), best)
            checks.append(AttributeCheck(c, ds.lowered[src][c], hits[src][k]))
        checks = tuple(checks)
        passed = all(ch.found for ch in checks)
    return AttributeResult(passed, checks, best if best_full else None)


def _clamp01(v) -> float:
    return 0.0 if v is None else min(1.0, max(0.0, float(v)))


def cumulative_confidence(match_score, ssim_score, ocr_confidence, weights=(0.4, 0.4, 0.2)) -> float:
    """Weighted mean of the three components, each clamped to [0, 1].

    Components that were never computed (``None``) count as 0.
    """
    w = [float(x) for x in weights]
    if len(w) != 3 or any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
        raise ParameterError(f"invalid confidence weights {weights}")
    comps = (_clamp01(match_score), _clamp01(ssim_score), _clamp01(ocr_confidence))
    return sum(wi * ci for wi, ci in zip(w, comps))


@dataclass(frozen=True)
class ConfidenceBundle:
    match_score: float
    ssim_score: float | None
    ocr_confidence: float
    cumulative: float


def decide(match_score: float, ssim: float | None, attributes_passed: bool,
           cumulative: float, cfg: PipelineConfig) -> Verdict:
    """The verdict table, evaluated top to bottom.

    Passing a threshold means ``>=``; structural fraud needs ``ssim < threshold``.
    """
    if match_score < cfg.match_threshold:
        return Verdict.NO_TEMPLATE_MATCH
    if ssim is None:
        raise ParameterError("a matched document needs an SSIM score")
    if ssim < cfg.ssim_threshold:
        return Verdict.POTENTIAL_FRAUD_STRUCTURAL
    if not attributes_passed or cumulative < cfg.confidence_threshold:
        return Verdict.POTENTIAL_FRAUD_DATA
    return Verdict.REAL_DOCUMENT


def _plain(obj):
    # numpy scalars leak in from score arithmetic; json wants builtins
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


@dataclass
class VerificationReport:
    best: MatchResult
    template_file: str
    doc_type_label: str
    verdict: Verdict
    confidence: ConfidenceBundle
    ssim: float | None = None
    checks: tuple[AttributeCheck, ...] = ()
    matched_row_index: int | None = None
    text: str = ""
    segments: list[OcrSegment] = field(default_factory=list)
    scores: dict[str, float | None] = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    evidence: DifferenceEvidence | None = None
    sample_size: tuple[int, int] = (0, 0)
    config: PipelineConfig | None = None

    def to_dict(self) -> dict:
        """JSON-ready form; evidence pixels are left out (only boxes)."""
        def box(b: Box) -> dict:
            return {"x": b.x, "y": b.y, "w": b.w, "h": b.h}

        return _plain({
            "report_version": REPORT_VERSION,
            "verdict": self.verdict.value,
            "verdict_display": self.verdict.display(
                self.config.no_match_message if self.config else "No Template Match"),
            "best": {
                "template_id": self.best.template_id,
                "template_file": self.template_file,
                "score": self.best.score,
                "offset": list(self.best.offset),
                "matched": self.best.matched,
            },
            "doc_type_label": self.doc_type_label,
            "ssim": self.ssim,
            "scores": dict(self.scores),
            "confidence": {
                "match_score": self.confidence.match_score,
                "ssim_score": self.confidence.ssim_score,
                "ocr_confidence": self.confidence.ocr_confidence,
                "cumulative": self.confidence.cumulative,
            },
            "checks": [{"column": c.column, "expected": c.expected, "found": c.found} for c in self.checks],
            "matched_row_index": self.matched_row_index,
            "text": self.text,
            "segments": [
                {"field": s.region.field_name, "box": box(s.region.box), "text": s.text,
                 "confidence": s.confidence}
                for s in self.segments
            ],
            "diagnostics": dict(self.diagnostics),
            "evidence": None if self.evidence is None else {"boxes": [box(b) for b in self.evidence.boxes]},
            "sample_size": {"width": self.sample_size[0], "height": self.sample_size[1]},
            "config": None if self.config is None else self.config.to_dict(),
        })


def verify(sample, manifest: TemplateManifest, dataset: ReferenceDataset, engine=None,
           cfg: PipelineConfig | None = None, evidence: bool = True,
           diagnostics: bool = True) -> VerificationReport:
    """Run template matching, the SSIM gate, OCR and the dataset check.

    ``sample`` is an RGB raster (or grayscale array). The verdict follows
    :func:`decide`; every score computed along the way is kept on the report.
    """
    cfg = cfg or PipelineConfig()
    if not manifest.templates:
        raise ParameterError("manifest holds no templates")
    gray = to_grayscale(sample)
    h, w = gray.shape
    cfg = auto_tune(cfg, w, h)

    scores = template_scores(gray, manifest)
    best = select_best(scores, cfg.match_threshold)
    record = manifest.get(best.template_id)
    report = VerificationReport(
        best=best,
        template_file=record.image_file,
        doc_type_label=record.doc_type_label,
        verdict=Verdict.NO_TEMPLATE_MATCH,
        confidence=ConfidenceBundle(best.score, None, 1.0, 0.0),
        scores=scores,
        sample_size=(w, h),
        config=cfg,
    )
    if not best.matched:
        cum = cumulative_confidence(best.score, None, 1.0, cfg.confidence_weights)
        report.confidence = ConfidenceBundle(best.score, None, 1.0, cum)
        report.verdict = decide(best.score, None, False, cum, cfg)
        return report

    tmpl = record.image
    resized = resize_bilinear(gray, tmpl.shape[1], tmpl.shape[0])
    k = SsimConstants(cfg.ssim_k1, cfg.ssim_k2)
    ssim = ssim_global(tmpl, resized, k)
    report.ssim = ssim
    if diagnostics:
        report.diagnostics = {"histogram_similarity": histogram_similarity(tmpl, resized)}
        if min(tmpl.shape) >= 16:
            report.diagnostics["keypoints"] = keypoint_agreement(tmpl, resized, cfg, cfg.descriptor_ratio)

    if ssim < cfg.ssim_threshold:
        cum = cumulative_confidence(best.score, ssim, 1.0, cfg.confidence_weights)
        report.confidence = ConfidenceBundle(best.score, ssim, 1.0, cum)
        report.verdict = decide(best.score, ssim, False, cum, cfg)
        if evidence:
            window = min(cfg.ssim_window, *tmpl.shape)
            local = ssim_windowed(tmpl, resized, window, cfg.ssim_stride, k)
            report.evidence = difference_evidence(local, cfg.dissimilarity_threshold)
        return report

    engine = engine or FixtureOcrEngine()
    regions = localize_text_regions(gray, record, best)
    segments = engine.extract(gray, regions)
    text = normalize_text(segments)
    attrs = check_attributes(text, dataset, record.required_fields, cfg.match_mode)
    ocr_conf = float(np.mean([s.confidence for s in segments])) if segments else 1.0
    cum = cumulative_confidence(best.score, ssim, ocr_conf, cfg.confidence_weights)
    report.segments = segments
    report.text = text
    report.checks = attrs.checks
    report.matched_row_index = attrs.matched_row
    report.confidence = ConfidenceBundle(best.score, ssim, ocr_conf, cum)
    report.verdict = decide(best.score, ssim, attrs.passed, cum, cfg)
    log.debug("verified against %s: %s", record.id, report.verdict.value)
    return report
