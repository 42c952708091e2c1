"""Text localization and extraction behind a pluggable engine interface."""
from .atlas import ALPHABET, GlyphAtlas, default_atlas, draw_text, render_text
from .core import (
    FixtureOcrEngine,
    OcrEngine,
    OcrSegment,
    TextRegion,
    fixture_extract,
    localize_text_regions,
    normalize_text,
)
from .external import ExternalOcrEngine, format_segment_line, parse_segment_line

__all__ = [
    "ALPHABET",
    "GlyphAtlas",
    "default_atlas",
    "draw_text",
    "render_text",
    "FixtureOcrEngine",
    "OcrEngine",
    "OcrSegment",
    "TextRegion",
    "fixture_extract",
    "localize_text_regions",
    "normalize_text",
    "ExternalOcrEngine",
    "format_segment_line",
    "parse_segment_line",
]
