"""Monospace bitmap glyph atlas used by the fixture OCR engine.

Each glyph is a 5x7 bitmap placed at column 1, row 2 of an 8x12 cell, so
neighboring glyphs are always separated by at least two blank columns.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError

__all__ = ["GlyphAtlas", "default_atlas", "render_text", "draw_text", "ALPHABET"]

CELL_W, CELL_H = 8, 12
_GLYPH_X, _GLYPH_Y = 1, 2

_GLYPHS_5X7 = {
    "A": ".###. #...# #...# ##### #...# #...# #...#",
    "B": "####. #...# #...# ####. #...# #...# ####.",
    "C": ".###. #...# #.... #.... #.... #...# .###.",
    "D": "####. #...# #...# #...# #...# #...# ####.",
    "E": "##### #.... #.... ####. #.... #.... #####",
    "F": "##### #.... #.... ####. #.... #.... #....",
    "G": ".###. #...# #.... #.### #...# #...# .####",
    "H": "#...# #...# #...# ##### #...# #...# #...#",
    "I": ".###. ..#.. ..#.. ..#.. ..#.. ..#.. .###.",
    "J": "..### ...#. ...#. ...#. ...#. #..#. .##..",
    "K": "#...# #..#. #.#.. ##... #.#.. #..#. #...#",
    "L": "#.... #.... #.... #.... #.... #.... #####",
    "M": "#...# ##.## #.#.# #.#.# #...# #...# #...#",
    "N": "#...# #...# ##..# #.#.# #..## #...# #...#",
    "O": ".###. #...# #...# #...# #...# #...# .###.",
    "P": "####. #...# #...# ####. #.... #.... #....",
    "Q": ".###. #...# #...# #...# #.#.# #..#. .##.#",
    "R": "####. #...# #...# ####. #.#.. #..#. #...#",
    "S": ".#### #.... #.... .###. ....# ....# ####.",
    "T": "##### ..#.. ..#.. ..#.. ..#.. ..#.. ..#..",
    "U": "#...# #...# #...# #...# #...# #...# .###.",
    "V": "#...# #...# #...# #...# #...# .#.#. ..#..",
    "W": "#...# #...# #...# #.#.# #.#.# #.#.# .#.#.",
    "X": "#...# #...# .#.#. ..#.. .#.#. #...# #...#",
    "Y": "#...# #...# .#.#. ..#.. ..#.. ..#.. ..#..",
    "Z": "##### ....# ...#. ..#.. .#... #.... #####",
    "0": ".###. #...# #..## #.#.# ##..# #...# .###.",
    "1": "..#.. .##.. ..#.. ..#.. ..#.. ..#.. .###.",
    "2": ".###. #...# ....# ...#. ..#.. .#... #####",
    "3": "##### ...#. ..#.. ...#. ....# #...# .###.",
    "4": "...#. ..##. .#.#. #..#. ##### ...#. ...#.",
    "5": "##### #.... ####. ....# ....# #...# .###.",
    "6": "..##. .#... #.... ####. #...# #...# .###.",
    "7": "##### ....# ...#. ..#.. .#... .#... .#...",
    "8": ".###. #...# #...# .###. #...# #...# .###.",
    "9": ".###. #...# #...# .#### ....# ...#. .##..",
    ".": "..... ..... ..... ..... ..... .##.. .##..",
    ",": "..... ..... ..... ..... .##.. ..#.. .#...",
    "-": "..... ..... ..... ##### ..... ..... .....",
    ":": "..... .##.. .##.. ..... .##.. .##.. .....",
    "/": "..... ....# ...#. ..#.. .#... #.... .....",
}

ALPHABET = "".join(_GLYPHS_5X7) + " "


def _cell(pattern: str) -> np.ndarray:
    cell = np.zeros((CELL_H, CELL_W), dtype=bool)
    for r, row in enumerate(pattern.split()):
        for c, ch in enumerate(row):
            cell[_GLYPH_Y + r, _GLYPH_X + c] = ch == "#"
    return cell


@dataclass(frozen=True)
class GlyphAtlas:
    """Equal-size boolean glyph cells keyed by character (True = ink)."""

    glyphs: dict[str, np.ndarray] = field(repr=False)
    cell_w: int = CELL_W
    cell_h: int = CELL_H

    def __post_init__(self):
        for ch, g in self.glyphs.items():
            if len(ch) != 1:
                raise ParameterError(f"atlas keys must be single characters, got {ch!r}")
            if g.shape != (self.cell_h, self.cell_w):
                raise ParameterError(f"glyph {ch!r} has shape {g.shape}, expected {(self.cell_h, self.cell_w)}")

    @property
    def alphabet(self) -> str:
        return "".join(self.glyphs) + " "

    def glyph(self, ch: str) -> np.ndarray:
        if ch == " ":
            return np.zeros((self.cell_h, self.cell_w), dtype=bool)
        try:
            return self.glyphs[ch]
        except KeyError:
            raise ParameterError(f"character {ch!r} is not in the atlas") from None


_DEFAULT = None


def default_atlas() -> GlyphAtlas:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = GlyphAtlas({ch: _cell(p) for ch, p in _GLYPHS_5X7.items()})
    return _DEFAULT


def render_text(text: str, atlas: GlyphAtlas | None = None, margin: int = 0,
                ink: int = 0, background: int = 255) -> np.ndarray:
    """Render one line of text as a grayscale image, one cell per character."""
    atlas = atlas or default_atlas()
    h = atlas.cell_h + 2 * margin
    w = atlas.cell_w * len(text) + 2 * margin
    img = np.full((h, max(w, 1)), background, dtype=np.uint8)
    draw_text(img, margin, margin, text, atlas, ink=ink)
    return img


def draw_text(canvas: np.ndarray, x: int, y: int, text: str, atlas: GlyphAtlas | None = None,
              ink: int | tuple = 0) -> np.ndarray:
    """Stamp text in place onto ``canvas`` with its first cell at ``(x, y)``.

    Works on grayscale and RGB canvases; glyph pixels falling outside the
    canvas are clipped.
    """
    atlas = atlas or default_atlas()
    H, W = canvas.shape[:2]
    for i, ch in enumerate(text.upper()):
        g = atlas.glyph(ch)
        cx = x + i * atlas.cell_w
        ys, xs = np.nonzero(g)
        ys = ys + y
        xs = xs + cx
        keep = (ys >= 0) & (ys < H) & (xs >= 0) & (xs < W)
        canvas[ys[keep], xs[keep]] = ink
    return canvas
