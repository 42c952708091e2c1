"""Template library (manifest files) and ROI-based template extraction.

A manifest is a JSON document::

    {
      "version": 1,
      "templates": [
        {
          "id": "yashoda",
          "file": "YASHODA-HOSPITALS.png",
          "doc_type_label": "Medical report; Hospital:Yashoda",
          "text_regions": [{"field": "Name", "x": 120, "y": 200, "w": 160, "h": 16}],
          "required_fields": ["Name", "IP.No", "Address"]
        }
      ]
    }

Image paths are resolved relative to the manifest's directory. Records may
also carry ``roi_suggestions`` (boxes found by :func:`extract_roi_candidates`)
to help whoever annotates ``text_regions`` by hand.
"""
from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .errors import (
    DuplicateTemplateIdError,
    ManifestError,
    ParameterError,
    RegionOutOfBoundsError,
    TemplateFileMissingError,
)
from .imgproc import (
    Box,
    StructuringElement,
    adaptive_threshold,
    find_contours,
    gaussian_blur,
    image_size,
    load_png,
    morphology,
    save_png,
    sobel_magnitude,
)

__all__ = [
    "MANIFEST_VERSION",
    "TextRegionSpec",
    "TemplateRecord",
    "TemplateManifest",
    "RoiCandidate",
    "load_manifest",
    "save_manifest",
    "extract_roi_candidates",
    "promote_candidate",
]

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class TextRegionSpec:
    field: str
    box: Box

    def to_dict(self) -> dict:
        return {"field": self.field, "x": self.box.x, "y": self.box.y, "w": self.box.w, "h": self.box.h}


@dataclass(frozen=True)
class TemplateRecord:
    id: str
    image_file: str
    doc_type_label: str
    text_regions: tuple[TextRegionSpec, ...] = ()
    required_fields: tuple[str, ...] = ()
    base_dir: Path = field(default=Path("."), compare=False, repr=False)
    roi_suggestions: tuple[Box, ...] = field(default=(), compare=False, repr=False)

    @property
    def path(self) -> Path:
        return self.base_dir / self.image_file

    @functools.cached_property
    def image(self) -> np.ndarray:
        """Grayscale template pixels, loaded on first access."""
        img = load_png(self.path, mode="L")
        img.setflags(write=False)
        return img

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "file": self.image_file,
            "doc_type_label": self.doc_type_label,
            "text_regions": [r.to_dict() for r in self.text_regions],
            "required_fields": list(self.required_fields),
        }
        if self.roi_suggestions:
            d["roi_suggestions"] = [dict(zip("xywh", b)) for b in self.roi_suggestions]
        return d


@dataclass(frozen=True)
class TemplateManifest:
    version: int
    templates: tuple[TemplateRecord, ...]
    path: Path | None = field(default=None, compare=False)

    def get(self, template_id: str) -> TemplateRecord:
        for rec in self.templates:
            if rec.id == template_id:
                return rec
        raise KeyError(template_id)

    @property
    def ids(self) -> list[str]:
        return [t.id for t in self.templates]

    def to_dict(self) -> dict:
        return {"version": self.version, "templates": [t.to_dict() for t in self.templates]}


@dataclass(frozen=True)
class RoiCandidate:
    bounding_box: Box
    area: int
    crop: np.ndarray = field(repr=False)


def _box_from(d: dict, where: str) -> Box:
    try:
        return Box(int(d["x"]), int(d["y"]), int(d["w"]), int(d["h"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{where}: malformed rectangle {d!r}") from exc


def _parse_record(raw: dict, base_dir: Path) -> TemplateRecord:
    try:
        tid = str(raw["id"])
        file = str(raw["file"])
    except KeyError as exc:
        raise ManifestError(f"template entry missing {exc.args[0]!r}: {raw!r}") from exc
    regions = []
    for reg in raw.get("text_regions", []):
        if "field" not in reg:
            raise ManifestError(f"template {tid!r}: text region without 'field'")
        regions.append(TextRegionSpec(str(reg["field"]), _box_from(reg, f"template {tid!r}")))
    return TemplateRecord(
        id=tid,
        image_file=file,
        doc_type_label=str(raw.get("doc_type_label", "")),
        text_regions=tuple(regions),
        required_fields=tuple(str(f) for f in raw.get("required_fields", [])),
        base_dir=base_dir,
        roi_suggestions=tuple(_box_from(b, f"template {tid!r}") for b in raw.get("roi_suggestions", [])),
    )


def load_manifest(path) -> TemplateManifest:
    """Parse and validate a manifest; template pixels load lazily.

    Raises :class:`TemplateFileMissingError` for a missing manifest or image,
    :class:`DuplicateTemplateIdError` and :class:`RegionOutOfBoundsError` for
    the corresponding invariant violations.
    """
    path = Path(path)
    if not path.is_file():
        raise TemplateFileMissingError(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict) or not isinstance(data.get("templates"), list):
        raise ManifestError(f"{path}: expected an object with a 'templates' list")
    version = data.get("version", MANIFEST_VERSION)
    if not isinstance(version, int) or version > MANIFEST_VERSION:
        raise ManifestError(f"{path}: unsupported manifest version {version!r}")

    base = path.parent
    records, seen = [], set()
    for raw in data["templates"]:
        rec = _parse_record(raw, base)
        if rec.id in seen:
            raise DuplicateTemplateIdError(rec.id)
        seen.add(rec.id)
        if not rec.path.is_file():
            raise TemplateFileMissingError(rec.path)
        w, h = image_size(rec.path)
        for reg in rec.text_regions:
            b = reg.box
            if b.w <= 0 or b.h <= 0 or b.x < 0 or b.y < 0 or b.x2 > w or b.y2 > h:
                raise RegionOutOfBoundsError(rec.id, reg.field, b, (w, h))
        records.append(rec)
    return TemplateManifest(version, tuple(records), path)


def save_manifest(manifest: TemplateManifest, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")
    return path


def extract_roi_candidates(doc, cfg: PipelineConfig | None = None) -> list[RoiCandidate]:
    """Find candidate regions of interest on a grayscale page.

    Blur, adaptive threshold and a morphological close clean the page; Sobel
    edges binarized at ``cfg.edge_threshold`` are grouped into contours.
    Edge components nested inside another component's hole (the inner rim
    of a drawn box, say) are dropped. Survivors with at least
    ``cfg.min_roi_area`` edge pixels are cropped from the original page and
    returned largest first.
    """
    cfg = cfg or PipelineConfig()
    doc = np.asarray(doc)
    if doc.ndim != 2:
        raise ParameterError("extract_roi_candidates expects a grayscale page")
    if doc.shape[0] < 3 or doc.shape[1] < 3:
        return []
    blurred = gaussian_blur(doc, cfg.blur_sigma, cfg.blur_kernel)
    binary = adaptive_threshold(blurred, cfg.block_size, cfg.threshold_offset)
    closed = morphology(binary, "close", StructuringElement.rect(cfg.se_size))
    edges = sobel_magnitude(closed)
    edge_mask = np.where(edges >= cfg.edge_threshold, 255, 0).astype(np.uint8)
    contours = find_contours(edge_mask, external_only=True)
    ranked = sorted(
        (c for c in contours if c.area >= cfg.min_roi_area),
        key=lambda c: -c.area,  # stable: ties keep scan order
    )
    out = []
    for c in ranked:
        b = c.bounding_box
        crop = doc[b.y:b.y2, b.x:b.x2].copy()
        out.append(RoiCandidate(b, c.area, crop))
    return out


def promote_candidate(candidate: RoiCandidate, template_id: str, doc_type_label: str,
                      out_dir, existing_ids=()) -> TemplateRecord:
    """Persist a candidate crop as ``<out_dir>/<template_id>.png`` and wrap it.

    Text regions and required fields start empty; they are annotated later.
    """
    if not template_id:
        raise ParameterError("template id must be non-empty")
    out_dir = Path(out_dir)
    file = f"{template_id}.png"
    if template_id in set(existing_ids) or (out_dir / file).exists():
        raise DuplicateTemplateIdError(template_id)
    save_png(out_dir / file, candidate.crop)
    return TemplateRecord(template_id, file, doc_type_label, base_dir=out_dir)
