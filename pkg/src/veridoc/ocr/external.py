"""Adapter for OCR engines that run as an external command.

The command receives the path of a PNG holding one region crop as its last
argument and prints one line per recognized segment::

    box_x box_y box_w box_h confidence text...

Box coordinates are relative to the crop; the text is the remainder of the
line and may contain spaces.
"""
from __future__ import annotations

import shlex
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from ..errors import OcrEngineError
from ..imgproc import Box, save_png
from .core import OcrSegment, TextRegion

__all__ = ["ExternalOcrEngine", "parse_segment_line", "format_segment_line"]


def parse_segment_line(line: str, region: TextRegion) -> OcrSegment:
    """Parse one wire-format line and translate its box into page coordinates."""
    parts = line.rstrip("\r\n").split(None, 5)
    if len(parts) < 5:
        raise OcrEngineError(f"malformed OCR line: {line!r}")
    try:
        x, y, w, h = (int(v) for v in parts[:4])
        conf = float(parts[4])
    except ValueError as exc:
        raise OcrEngineError(f"malformed OCR line: {line!r}") from exc
    if not 0.0 <= conf <= 1.0:
        raise OcrEngineError(f"confidence out of [0, 1] in OCR line: {line!r}")
    text = parts[5] if len(parts) > 5 else ""
    box = Box(region.box.x + x, region.box.y + y, w, h)
    return OcrSegment(TextRegion(region.field_name, box), text, conf)


def format_segment_line(segment: OcrSegment, origin: tuple[int, int] = (0, 0)) -> str:
    b = segment.region.box
    return f"{b.x - origin[0]} {b.y - origin[1]} {b.w} {b.h} {segment.confidence!r} {segment.text}"


class ExternalOcrEngine:
    """Runs a user-supplied OCR command once per region.

    One extraction may be in flight per instance; create one instance per
    worker for parallel use.
    """

    def __init__(self, command, timeout: float = 60.0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise OcrEngineError("empty OCR command")
        self.timeout = timeout
        self.metadata = {"name": "external", "command": self.command, "deterministic": False}

    def extract(self, image, regions) -> list[OcrSegment]:
        image = np.asarray(image)
        segments: list[OcrSegment] = []
        with tempfile.TemporaryDirectory(prefix="veridoc-ocr-") as tmp:
            for i, region in enumerate(regions):
                b = region.box
                crop_path = save_png(Path(tmp) / f"region-{i}.png", image[b.y:b.y2, b.x:b.x2])
                try:
                    proc = subprocess.run(
                        [*self.command, str(crop_path)],
                        capture_output=True, text=True, timeout=self.timeout, check=False,
                    )
                except (OSError, subprocess.TimeoutExpired) as exc:
                    raise OcrEngineError(f"OCR command failed: {exc}") from exc
                if proc.returncode != 0:
                    raise OcrEngineError(
                        f"OCR command exited with {proc.returncode}: {proc.stderr.strip()[:200]}"
                    )
                for line in proc.stdout.splitlines():
                    if line.strip():
                        segments.append(parse_segment_line(line, region))
        return segments
