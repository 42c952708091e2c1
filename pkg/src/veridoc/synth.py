"""Synthetic document forms for fixtures, tests and demos.

Every form is drawn from a :class:`Layout`: a colored logo block, header
bars, labeled field boxes and the value areas where patient data goes. A
template is the form with empty value areas; a sample is the same form with
values written in, optionally tampered with.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .fraud import DATASET_COLUMNS
from .imgproc import Box, save_png, to_grayscale
from .ocr.atlas import CELL_H, draw_text

__all__ = [
    "Layout",
    "FieldSpec",
    "LAYOUTS",
    "REFERENCE_ROWS",
    "REFERENCE_HEADER",
    "render_form",
    "unrelated_image",
    "write_dataset",
    "build_corpus",
]

PAGE_W, PAGE_H = 1000, 700
VALUE_W, VALUE_H = 8 * 24 + 4, CELL_H + 4

REFERENCE_HEADER = DATASET_COLUMNS
REFERENCE_ROWS = (
    ("JOY", "570", "KURNOOL", "01-07-2022", "03-07-2022"),
    ("JOEL", "571", "GUNTUR", "02-07-2022", "04-07-2022"),
    ("SMITH", "572", "KRISHNA", "03-07-2022", "05-07-2022"),
    ("JORDEN", "573", "GODAVARI", "04-07-2022", "06-07-2022"),
    ("WILLIAM", "574", "SARASWATHI", "05-07-2022", "07-07-2022"),
    ("STONE", "575", "VIZAG", "06-07-2022", "08-07-2022"),
    ("TONY", "576", "KODUMUR", "07-07-2022", "09-07-2022"),
    ("MARK", "577", "NR.PETA", "08-07-2022", "10-07-2022"),
    ("JOHN DOE", "372758", "HYDERABAD", "18.07.23", "23.08.23"),
)


@dataclass(frozen=True)
class FieldSpec:
    name: str
    label: str
    x: int
    y: int

    @property
    def value_box(self) -> Box:
        # value area sits right of the label, inside the drawn field box
        return Box(self.x + 8 * (len(self.label) + 1) + 6, self.y + 4, VALUE_W, VALUE_H)


@dataclass(frozen=True)
class Layout:
    id: str
    file: str
    doc_type_label: str
    title: str
    logo: Box
    logo_color: tuple[int, int, int]
    bars: tuple[Box, ...]
    fields: tuple[FieldSpec, ...]
    title_at: tuple[int, int] = (300, 150)
    size: tuple[int, int] = (PAGE_W, PAGE_H)

    def text_regions(self) -> list[dict]:
        return [{"field": f.name, **dict(zip("xywh", f.value_box))} for f in self.fields]


def _fields(x: int, y0: int, step: int, names_labels) -> tuple[FieldSpec, ...]:
    return tuple(FieldSpec(n, lab, x, y0 + i * step) for i, (n, lab) in enumerate(names_labels))


_PATIENT = (("Name", "NAME:"), ("IP.No", "IP.NO:"), ("Address", "ADDRESS:"))

LAYOUTS: dict[str, Layout] = {
    lay.id: lay
    for lay in (
        Layout(
            "yashoda", "YASHODA-HOSPITALS.png", "Medical report; Hospital:Yashoda",
            "YASHODA HOSPITALS - MEDICAL REPORT",
            Box(40, 30, 150, 110), (200, 30, 40),
            (Box(0, 170, PAGE_W, 24), Box(0, 640, PAGE_W, 36), Box(560, 230, 24, 380)),
            _fields(60, 250, 90, _PATIENT), (240, 80),
        ),
        Layout(
            "bill", "bill.png", " BILL", "HOSPITAL BILL - INVOICE",
            Box(800, 40, 160, 90), (30, 90, 200),
            (Box(0, 150, 700, 40), Box(60, 560, 880, 20), Box(60, 600, 880, 20)),
            _fields(80, 230, 80, _PATIENT + (("Amount", "AMOUNT:"),)), (80, 70),
        ),
        Layout(
            "doc", "doc.png", "Medical report; Hospital:Apollo", "APOLLO CLINIC - CONSULTATION",
            Box(420, 20, 160, 120), (40, 160, 60),
            (Box(0, 160, PAGE_W, 16), Box(0, 180, PAGE_W, 16), Box(40, 600, 300, 60)),
            _fields(540, 260, 100, _PATIENT), (40, 220),
        ),
        Layout(
            "lab", "lab.png", "Lab report; Hospital:Care", "CARE DIAGNOSTICS - LAB REPORT",
            Box(40, 560, 220, 110), (120, 40, 160),
            (Box(0, 0, PAGE_W, 60), Box(300, 520, 660, 30), Box(940, 60, 40, 460)),
            _fields(320, 120, 110, _PATIENT), (320, 80),
        ),
        Layout(
            "discharge", "discharge.png", "Discharge summary; Hospital:KIMS", "KIMS - DISCHARGE SUMMARY",
            Box(780, 520, 180, 140), (220, 140, 20),
            (Box(0, 0, 60, PAGE_H), Box(60, 100, 900, 28), Box(60, 470, 600, 28)),
            _fields(120, 170, 95, _PATIENT), (120, 60),
        ),
    )
}


def _draw_logo(img: np.ndarray, box: Box, color) -> None:
    img[box.y:box.y2, box.x:box.x2] = color
    # emblem: light cross inside the block
    cx, cy = box.x + box.w // 2, box.y + box.h // 2
    arm = min(box.w, box.h) // 3
    t = max(4, arm // 3)
    img[cy - arm:cy + arm, cx - t // 2:cx + t // 2] = 255
    img[cy - t // 2:cy + t // 2, cx - arm:cx + arm] = 255


def _frame(img: np.ndarray, box: Box, thickness: int = 3, color=(0, 0, 0)) -> None:
    img[box.y:box.y + thickness, box.x:box.x2] = color
    img[box.y2 - thickness:box.y2, box.x:box.x2] = color
    img[box.y:box.y2, box.x:box.x + thickness] = color
    img[box.y:box.y2, box.x2 - thickness:box.x2] = color


def render_form(layout: Layout, values: dict[str, str] | None = None, *,
                logo_at: tuple[int, int] | None = None,
                field_shift: tuple[int, int] = (0, 0)) -> np.ndarray:
    """Draw a form as an RGB raster.

    ``values`` maps field names to text written in the value areas.
    ``logo_at`` relocates the logo block and ``field_shift`` moves every
    field box, the two tampering moves used for structural-fraud fixtures.
    """
    w, h = layout.size
    img = np.full((h, w, 3), 255, dtype=np.uint8)
    logo = layout.logo if logo_at is None else Box(logo_at[0], logo_at[1], layout.logo.w, layout.logo.h)
    _draw_logo(img, logo, layout.logo_color)
    for bar in layout.bars:
        img[bar.y:bar.y2, bar.x:bar.x2] = (60, 60, 60)
    draw_text(img, layout.title_at[0], layout.title_at[1], layout.title, ink=(0, 0, 0))
    dx, dy = field_shift
    for f in layout.fields:
        f = replace(f, x=f.x + dx, y=f.y + dy)
        vb = f.value_box
        _frame(img, Box(f.x - 10, f.y - 10, vb.x2 - f.x + 20, vb.h + 20))
        draw_text(img, f.x, vb.y + 2, f.label, ink=(0, 0, 0))
        if values and values.get(f.name):
            draw_text(img, vb.x + 2, vb.y + 2, values[f.name], ink=(0, 0, 0))
    return img


def unrelated_image(size: tuple[int, int] = (PAGE_W, PAGE_H), seed: int = 7) -> np.ndarray:
    """A photo-like RGB image sharing no structure with the forms."""
    w, h = size
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:h, 0:w]
    base = 128 + 60 * np.sin(xx / 37.0) * np.cos(yy / 23.0)
    for _ in range(25):
        cx, cy, r = rng.integers(0, w), rng.integers(0, h), rng.integers(10, 60)
        base[(xx - cx) ** 2 + (yy - cy) ** 2 < r * r] = rng.integers(0, 256)
    base += rng.normal(0, 8, size=base.shape)
    g = np.clip(base, 0, 255).astype(np.uint8)
    return np.stack([g, np.roll(g, 5, axis=1), np.roll(g, 9, axis=0)], axis=-1)


def write_dataset(path, rows=REFERENCE_ROWS, header=REFERENCE_HEADER) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


REAL_VALUES = {"Name": "JOHN DOE", "IP.No": "372758", "Address": "HYDERABAD"}
WRONG_NAME_VALUES = {"Name": "JANE ROE", "IP.No": "372758", "Address": "HYDERABAD"}


def build_corpus(out_dir, kinds=None) -> dict[str, Path]:
    """Write templates, a manifest, the reference dataset and four samples.

    Samples: ``real.png`` (in-dataset patient), ``tampered.png`` (relocated
    logo and shifted fields), ``wrong_name.png`` (patient absent from the
    dataset) and ``unrelated.png``. Returns the written paths by role.
    """
    out = Path(out_dir)
    (out / "templates").mkdir(parents=True, exist_ok=True)
    (out / "samples").mkdir(parents=True, exist_ok=True)
    kinds = list(kinds or LAYOUTS)
    entries = []
    for kind in kinds:
        lay = LAYOUTS[kind]
        save_png(out / "templates" / lay.file, to_grayscale(render_form(lay)))
        entries.append({
            "id": lay.id,
            "file": lay.file,
            "doc_type_label": lay.doc_type_label,
            "text_regions": lay.text_regions(),
            "required_fields": ["Name", "IP.No", "Address"],
        })
    manifest = out / "templates" / "manifest.json"
    manifest.write_text(json.dumps({"version": 1, "templates": entries}, indent=2) + "\n")
    dataset = write_dataset(out / "dataset.csv")

    main = LAYOUTS[kinds[0]]
    paths = {"manifest": manifest, "dataset": dataset}
    samples = {
        "real": render_form(main, REAL_VALUES),
        "tampered": render_form(main, REAL_VALUES, logo_at=(main.size[0] - main.logo.x2, main.logo.y),
                                field_shift=(40, 25)),
        "wrong_name": render_form(main, WRONG_NAME_VALUES),
        "unrelated": unrelated_image(main.size),
    }
    for name, img in samples.items():
        paths[name] = save_png(out / "samples" / f"{name}.png", img)
    return paths
