"""Text localization, the OCR engine interface and the fixture engine."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Protocol, runtime_checkable

import numpy as np
from scipy import ndimage

from ..errors import ParameterError
from ..imgproc import Box, adaptive_threshold, round_half_away
from .atlas import GlyphAtlas, default_atlas

if TYPE_CHECKING:
    from ..matching import MatchResult
    from ..templates import TemplateRecord

__all__ = [
    "TextRegion",
    "OcrSegment",
    "OcrEngine",
    "FixtureOcrEngine",
    "localize_text_regions",
    "fixture_extract",
    "normalize_text",
]

PAGE_FIELD = "page"
MIN_GLYPH_INK = 3
UNRECOGNIZED = "?"
_RECOGNITION_FLOOR = 0.5


@dataclass(frozen=True)
class TextRegion:
    field_name: str
    box: Box


@dataclass(frozen=True)
class OcrSegment:
    region: TextRegion
    text: str
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ParameterError(f"confidence must lie in [0, 1], got {self.confidence}")


@runtime_checkable
class OcrEngine(Protocol):
    """Anything that turns image regions into text segments."""

    metadata: dict

    def extract(self, image: np.ndarray, regions: list[TextRegion]) -> list[OcrSegment]:
        ...


def _scaled_span(start: int, length: int, scale: float) -> tuple[int, int]:
    a = int(round_half_away(start * scale))
    b = int(round_half_away((start + length) * scale))
    return a, b - a


def localize_text_regions(sample, template: "TemplateRecord", match: "MatchResult") -> list[TextRegion]:
    """Map a template's annotated text regions into sample coordinates.

    Regions are scaled by the sample/template size ratio, shifted by the
    match offset and clipped to the sample. A template without annotations
    yields one region covering the whole page.
    """
    if not match.matched:
        raise ParameterError("text regions can only be localized for a matched template")
    sample = np.asarray(sample)
    sh, sw = sample.shape[:2]
    if not template.text_regions:
        return [TextRegion(PAGE_FIELD, Box(0, 0, sw, sh))]
    th, tw = template.image.shape[:2]
    sx, sy = sw / tw, sh / th
    dx, dy = match.offset
    out = []
    for reg in template.text_regions:
        x, w = _scaled_span(reg.box.x, reg.box.w, sx)
        y, h = _scaled_span(reg.box.y, reg.box.h, sy)
        x0, y0 = max(0, x + dx), max(0, y + dy)
        x1, y1 = min(sw, x + dx + w), min(sh, y + dy + h)
        if x1 > x0 and y1 > y0:
            out.append(TextRegion(reg.field, Box(x0, y0, x1 - x0, y1 - y0)))
    return out


class _Classifier:
    """Vectorized ZNCC of a cell against every glyph in an atlas."""

    def __init__(self, atlas: GlyphAtlas):
        self.chars = [ch for ch in atlas.glyphs]
        g = np.array([atlas.glyphs[ch].ravel() for ch in self.chars], dtype=np.float64)
        g -= g.mean(axis=1, keepdims=True)
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        self.matrix = g

    def scores(self, cells: np.ndarray) -> np.ndarray:
        c = cells.reshape(len(cells), -1).astype(np.float64)
        c -= c.mean(axis=1, keepdims=True)
        norm = np.linalg.norm(c, axis=1, keepdims=True)
        c = np.divide(c, norm, out=np.zeros_like(c), where=norm > 0)
        return c @ self.matrix.T


_CLASSIFIERS: dict[int, _Classifier] = {}


def _classifier(atlas: GlyphAtlas) -> _Classifier:
    key = id(atlas)
    if key not in _CLASSIFIERS:
        _CLASSIFIERS[key] = _Classifier(atlas)
    return _CLASSIFIERS[key]


def _ink_mask(crop: np.ndarray) -> np.ndarray:
    binary = adaptive_threshold(crop, 15, 10)
    ink = binary == 0
    # drop specks of one or two pixels; every glyph stroke is larger
    labels, n = ndimage.label(ink, structure=np.ones((3, 3), dtype=bool))
    if n:
        sizes = np.bincount(labels.ravel())
        ink &= sizes[labels] > 2
    return ink


def _top_candidates(scores: np.ndarray, extra: int = 2) -> list[int]:
    best = scores.max()
    tied = np.flatnonzero(scores == best).tolist()
    ranked = np.argsort(-scores, kind="stable")[:extra].tolist()
    return sorted(set(tied) | set(ranked))


def _read_line(ink: np.ndarray, atlas: GlyphAtlas) -> tuple[str, list[float]]:
    cw, ch = atlas.cell_w, atlas.cell_h
    pad = np.pad(ink, ((ch, ch), (cw, cw)))
    glyph_rows = np.zeros(ch, dtype=bool)
    glyph_cols = np.zeros(cw, dtype=bool)
    for g in atlas.glyphs.values():
        glyph_rows |= g.any(axis=1)
        glyph_cols |= g.any(axis=0)
    rows = pad.sum(axis=1).astype(np.int64)
    top_scores = np.array([rows[oy:oy + ch][glyph_rows].sum() for oy in range(len(rows) - ch + 1)])
    sign = np.where(glyph_cols, 1, -1)

    clf = _classifier(atlas)
    best = None
    for oy in _top_candidates(top_scores):
        cols = pad[oy:oy + ch].sum(axis=0).astype(np.int64)
        xs = np.arange(len(cols))
        phase_scores = np.array([(cols * sign[(xs - ph) % cw]).sum() for ph in range(cw)])
        for ph in _top_candidates(phase_scores):
            n_cells = (pad.shape[1] - ph) // cw
            band = pad[oy:oy + ch, ph:ph + n_cells * cw]
            cells = band.reshape(ch, n_cells, cw).transpose(1, 0, 2)
            inked = np.flatnonzero(cells.reshape(n_cells, -1).sum(axis=1) >= MIN_GLYPH_INK)
            if len(inked) == 0:
                continue
            span = cells[inked[0]:inked[-1] + 1]
            is_glyph = span.reshape(len(span), -1).sum(axis=1) >= MIN_GLYPH_INK
            z = clf.scores(span[is_glyph])
            pick = z.argmax(axis=1)
            top = z[np.arange(len(z)), pick]
            quality = float(top.mean())
            if best is None or quality > best[0]:
                best = (quality, is_glyph, pick, top)
    if best is None:
        return "", []
    _, is_glyph, pick, top = best
    text, confs = [], []
    it = iter(zip(pick, top))
    for glyph in is_glyph:
        if not glyph:
            text.append(" ")
            continue
        k, score = next(it)
        if score < _RECOGNITION_FLOOR:
            text.append(UNRECOGNIZED)
            confs.append(0.0)
        else:
            text.append(clf.chars[k])
            confs.append(min(1.0, (float(score) + 1.0) / 2.0))
    return "".join(text), confs


def fixture_extract(atlas: GlyphAtlas | None, image, regions: Iterable[TextRegion]) -> list[OcrSegment]:
    """Read atlas-rendered text in each region.

    Each region is binarized with a mean-adaptive threshold, cleared of tiny
    specks, aligned to the atlas cell grid by row and column projections and
    split into cells. Cells are classified by best ZNCC against the glyphs.
    A segment's confidence is the mean of ``(zncc + 1) / 2`` over its glyphs,
    with unrecognized cells (best ZNCC below 0.5) emitted as ``?`` scoring 0.
    Regions without ink give an empty segment with confidence 1.
    """
    atlas = atlas or default_atlas()
    image = np.asarray(image)
    segments = []
    for region in regions:
        b = region.box
        crop = image[b.y:b.y2, b.x:b.x2]
        if crop.size == 0:
            segments.append(OcrSegment(region, "", 1.0))
            continue
        text, confs = _read_line(_ink_mask(crop), atlas)
        conf = float(np.mean(confs)) if confs else 1.0
        segments.append(OcrSegment(region, text, conf))
    return segments


class FixtureOcrEngine:
    """Deterministic engine reading text drawn with a :class:`GlyphAtlas`."""

    def __init__(self, atlas: GlyphAtlas | None = None):
        self.atlas = atlas or default_atlas()
        self.metadata = {"name": "fixture", "deterministic": True}

    def extract(self, image, regions) -> list[OcrSegment]:
        return fixture_extract(self.atlas, image, regions)


_WS = re.compile(r"\s+")


def normalize_text(segments) -> str:
    """Join segment texts with spaces, lowercase, collapse whitespace."""
    parts = [s.text if isinstance(s, OcrSegment) else str(s) for s in segments]
    return _WS.sub(" ", " ".join(parts).lower()).strip()
