"""Raster primitives: color conversion, smoothing, thresholding, morphology,
edges, contours and resizing.

Images are plain numpy arrays: ``(H, W, 3)`` uint8 for RGB rasters and
``(H, W)`` uint8 for grayscale. Binary images are grayscale images holding
only 0 and 255, with 255 as foreground. No function here mutates its input.

Neighborhood operations replicate edge pixels outside the image, except
morphology, where out-of-image pixels simply do not take part (see
:func:`morphology`). Whenever integers are produced, values are rounded half
away from zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ParameterError

__all__ = [
    "Box",
    "Contour",
    "StructuringElement",
    "to_grayscale",
    "gaussian_kernel",
    "gaussian_blur",
    "adaptive_threshold",
    "morphology",
    "sobel_gradients",
    "sobel_magnitude",
    "label_components",
    "find_contours",
    "resize_bilinear",
    "round_half_away",
    "load_png",
    "save_png",
]

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = _SOBEL_X.T.copy()
_EIGHT = np.ones((3, 3), dtype=bool)
_FOUR = ndimage.generate_binary_structure(2, 1)


class Box(NamedTuple):
    """Axis-aligned rectangle ``(x, y, w, h)`` in pixel units."""

    x: int
    y: int
    w: int
    h: int

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def contains(self, other: "Box") -> bool:
        return (self.x <= other.x and self.y <= other.y
                and other.x2 <= self.x2 and other.y2 <= self.y2)

    def intersection(self, other: "Box") -> int:
        w = min(self.x2, other.x2) - max(self.x, other.x)
        h = min(self.y2, other.y2) - max(self.y, other.y)
        return max(w, 0) * max(h, 0)


@dataclass(frozen=True)
class Contour:
    """Outer boundary of one 8-connected foreground component.

    ``area`` is the component's foreground pixel count, so contour areas
    of one image never sum past the image area.
    """

    points: list[tuple[int, int]] = field(repr=False)
    bounding_box: Box
    area: int


@dataclass(frozen=True)
class StructuringElement:
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] % 2 == 0 or mask.shape[1] % 2 == 0:
            raise ParameterError(f"structuring element must have odd dimensions, got {mask.shape}")
        cy, cx = mask.shape[0] // 2, mask.shape[1] // 2
        if not mask[cy, cx]:
            raise ParameterError("structuring element anchor (center) must be set")
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def rect(cls, width: int = 3, height: int | None = None) -> "StructuringElement":
        return cls(np.ones((height or width, width), dtype=bool))

    @classmethod
    def cross(cls, size: int = 3) -> "StructuringElement":
        m = np.zeros((size, size), dtype=bool)
        m[size // 2, :] = True
        m[:, size // 2] = True
        return cls(m)

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    def reflected(self) -> "StructuringElement":
        return StructuringElement(self.mask[::-1, ::-1])

    def offsets(self):
        """Yield ``(dy, dx)`` of set cells relative to the anchor."""
        cy, cx = self.height // 2, self.width // 2
        for dy, dx in zip(*np.nonzero(self.mask)):
            yield int(dy) - cy, int(dx) - cx


def round_half_away(values):
    """Round to the nearest integer, ties away from zero (numpy-aware)."""
    values = np.asarray(values, dtype=np.float64)
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def _to_uint8(values) -> np.ndarray:
    return np.clip(round_half_away(values), 0, 255).astype(np.uint8)


def _require_gray(img) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2 or img.size == 0:
        raise ParameterError(f"expected a non-empty 2-D grayscale image, got shape {img.shape}")
    return img


def _require_odd(name: str, value: int, minimum: int = 1) -> int:
    if int(value) != value or value < minimum or value % 2 == 0:
        raise ParameterError(f"{name} must be an odd integer >= {minimum}, got {value!r}")
    return int(value)


def to_grayscale(img) -> np.ndarray:
    """BT.601 luma of an RGB raster. Grayscale input is returned as a copy."""
    img = np.asarray(img)
    if img.ndim == 2:
        return img.astype(np.uint8, copy=True)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] == 0 or img.shape[1] == 0:
        raise ParameterError(f"expected an (H, W, 3) RGB image, got shape {img.shape}")
    rgb = img.astype(np.float64)
    luma = LUMA_WEIGHTS[0] * rgb[..., 0] + LUMA_WEIGHTS[1] * rgb[..., 1] + LUMA_WEIGHTS[2] * rgb[..., 2]
    return _to_uint8(luma)


def gaussian_kernel(sigma: float, size: int) -> np.ndarray:
    """1-D Gaussian weights of odd length ``size``, normalized to sum 1."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma!r}")
    size = _require_odd("kernel_size", size)
    r = size // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _correlate_1d(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = len(kernel) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    padded = np.pad(arr, pad, mode="edge")
    n = arr.shape[axis]
    out = np.zeros(arr.shape, dtype=np.float64)
    for i, w in enumerate(kernel):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(i, i + n)
        out += w * padded[tuple(sl)]
    return out


def smooth(img, sigma: float, size: int) -> np.ndarray:
    """Separable Gaussian smoothing in float64, edge-clamped, no rounding."""
    k = gaussian_kernel(sigma, size)
    tmp = _correlate_1d(np.asarray(img, dtype=np.float64), k, axis=1)
    return _correlate_1d(tmp, k, axis=0)


def gaussian_blur(img, sigma: float, kernel_size: int) -> np.ndarray:
    """Gaussian blur of a grayscale image; output is rounded back to uint8."""
    img = _require_gray(img)
    return _to_uint8(smooth(img, sigma, kernel_size))


def _box_sums(img: np.ndarray, size: int) -> np.ndarray:
    """Exact integer sums over ``size x size`` edge-clamped neighborhoods."""
    r = size // 2
    padded = np.pad(img.astype(np.int64), r, mode="edge")
    integral = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
    integral[1:, 1:] = padded.cumsum(axis=0).cumsum(axis=1)
    h, w = img.shape
    return (integral[size:size + h, size:size + w] - integral[:h, size:size + w]
            - integral[size:size + h, :w] + integral[:h, :w])


def adaptive_threshold(img, block_size: int, c: float) -> np.ndarray:
    """Mean-adaptive binarization: 255 where ``pixel > local_mean - c``.

    The local mean covers a ``block_size`` square, edge-clamped. The
    comparison is carried out on exact integer block sums.
    """
    img = _require_gray(img)
    block_size = _require_odd("block_size", block_size, minimum=3)
    n = block_size * block_size
    sums = _box_sums(img, block_size)
    src = img.astype(np.int64) * n
    out = np.where(src > sums - c * n, 255, 0)
    return out.astype(np.uint8)


def _shifted(mask: np.ndarray, dy: int, dx: int, fill: bool) -> np.ndarray:
    """Return ``s`` with ``s[y, x] = mask[y + dy, x + dx]`` (``fill`` outside)."""
    h, w = mask.shape
    out = np.full((h, w), fill, dtype=bool)
    ys, ye = max(0, -dy), min(h, h - dy)
    xs, xe = max(0, -dx), min(w, w - dx)
    if ys < ye and xs < xe:
        out[ys:ye, xs:xe] = mask[ys + dy:ye + dy, xs + dx:xe + dx]
    return out


def _dilate(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    out = np.zeros_like(mask)
    for dy, dx in se.offsets():
        out |= _shifted(mask, -dy, -dx, False)
    return out


def _erode(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    out = np.ones_like(mask)
    for dy, dx in se.offsets():
        out &= _shifted(mask, dy, dx, True)
    return out


def morphology(img, op: str, se: StructuringElement | None = None) -> np.ndarray:
    """Binary morphology on the 255-valued foreground.

    ``op`` is one of ``erode``, ``dilate``, ``open`` (erode then dilate) or
    ``close`` (dilate then erode). Pixels outside the image never contribute:
    dilation sees no foreground there and erosion is not constrained by it,
    which keeps ``dilate(A, B) == ~erode(~A, reflect(B))`` exact everywhere.
    """
    img = _require_gray(img)
    se = se or StructuringElement.rect(3)
    mask = img > 0
    if op == "dilate":
        out = _dilate(mask, se)
    elif op == "erode":
        out = _erode(mask, se)
    elif op == "open":
        out = _dilate(_erode(mask, se), se)
    elif op == "close":
        out = _erode(_dilate(mask, se), se)
    else:
        raise ParameterError(f"unknown morphology op {op!r}")
    return np.where(out, 255, 0).astype(np.uint8)


def sobel_gradients(img) -> tuple[np.ndarray, np.ndarray]:
    """Float 3x3 Sobel responses ``(gx, gy)`` with edge-clamped borders."""
    img = _require_gray(img)
    if img.shape[0] < 3 or img.shape[1] < 3:
        raise ParameterError(f"Sobel needs at least a 3x3 image, got {img.shape[1]}x{img.shape[0]}")
    padded = np.pad(np.asarray(img, dtype=np.float64), 1, mode="edge")
    h, w = img.shape
    gx = np.zeros((h, w))
    gy = np.zeros((h, w))
    for i in range(3):
        for j in range(3):
            win = padded[i:i + h, j:j + w]
            if _SOBEL_X[i, j]:
                gx += _SOBEL_X[i, j] * win
            if _SOBEL_Y[i, j]:
                gy += _SOBEL_Y[i, j] * win
    return gx, gy


def sobel_magnitude(img) -> np.ndarray:
    gx, gy = sobel_gradients(img)
    return _to_uint8(np.minimum(255.0, np.hypot(gx, gy)))


def label_components(img) -> tuple[np.ndarray, int]:
    """8-connected labeling of the foreground (nonzero) pixels."""
    img = _require_gray(img)
    labels, n = ndimage.label(img > 0, structure=_EIGHT)
    return labels, int(n)


# Moore neighborhood, clockwise in image coordinates (y grows downward),
# starting from the west neighbor.
_MOORE = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))
_MOORE_INDEX = {d: i for i, d in enumerate(_MOORE)}


def _trace_boundary(mask: np.ndarray, sx: int, sy: int) -> list[tuple[int, int]]:
    """Moore-neighbor tracing from the raster-first pixel of a component.

    ``mask`` must be padded so that every neighbor lookup stays in range.
    Points are returned in ``mask`` coordinates.
    """
    rows = mask.tolist()
    p = (sx, sy)
    back = 0  # west of the raster-first pixel is background
    points = [p]
    seen = {(p, back)}
    while True:
        for k in range(1, 9):
            idx = (back + k) % 8
            nx, ny = p[0] + _MOORE[idx][0], p[1] + _MOORE[idx][1]
            if rows[ny][nx]:
                break
        else:
            return points  # isolated pixel
        prev = _MOORE[(back + k - 1) % 8]
        back = _MOORE_INDEX[(p[0] + prev[0] - nx, p[1] + prev[1] - ny)]
        p = (nx, ny)
        if (p, back) in seen:
            break
        seen.add((p, back))
        points.append(p)
    if len(points) > 1 and points[-1] == points[0]:
        points.pop()
    return points


def _exterior_labels(labels: np.ndarray) -> set[int]:
    """Labels of components that touch the background surrounding the image."""
    background = np.pad(labels == 0, 1, constant_values=True)
    bg_labels, _ = ndimage.label(background, structure=_FOUR)
    exterior = (bg_labels == bg_labels[0, 0])
    near = ndimage.binary_dilation(exterior, structure=_FOUR)[1:-1, 1:-1]
    return set(np.unique(labels[near & (labels > 0)]).tolist())


def find_contours(img, external_only: bool = False) -> list[Contour]:
    """Outer boundary of every 8-connected foreground component.

    Contours are ordered top-to-bottom, then left-to-right, by bounding-box
    origin. With ``external_only`` components that sit inside a hole of
    another component are dropped.
    """
    img = _require_gray(img)
    labels, n = label_components(img)
    if n == 0:
        return []
    keep = _exterior_labels(labels) if external_only else None
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    contours = []
    for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None or (keep is not None and lab not in keep):
            continue
        ys, xs = sl
        comp = np.pad(labels[sl] == lab, 1)
        first = int(np.argmax(comp[1:-1, 1:-1].ravel()))
        fy, fx = divmod(first, xs.stop - xs.start)
        pts = _trace_boundary(comp, fx + 1, fy + 1)
        pts = [(x - 1 + xs.start, y - 1 + ys.start) for x, y in pts]
        box = Box(xs.start, ys.start, xs.stop - xs.start, ys.stop - ys.start)
        contours.append(((box.y, box.x, ys.start + fy, xs.start + fx),
                         Contour(pts, box, int(areas[lab]))))
    contours.sort(key=lambda item: item[0])
    return [c for _, c in contours]


def _bilinear_axis(n_in: int, n_out: int):
    scale = n_in / n_out
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    return i0, i1, frac


def resize_bilinear(img, new_w: int, new_h: int) -> np.ndarray:
    """Bilinear resize of a grayscale or RGB image.

    Integer images come back rounded to the same dtype; float images stay
    float so that intensity transforms commute with resizing.
    """
    img = np.asarray(img)
    if img.ndim not in (2, 3) or img.shape[0] == 0 or img.shape[1] == 0:
        raise ParameterError(f"expected a non-empty image, got shape {img.shape}")
    if new_w < 1 or new_h < 1:
        raise ParameterError(f"target size must be positive, got {new_w}x{new_h}")
    h, w = img.shape[:2]
    if (h, w) == (new_h, new_w):
        return img.copy()
    x0, x1, fx = _bilinear_axis(w, new_w)
    y0, y1, fy = _bilinear_axis(h, new_h)
    data = img.astype(np.float64)
    extra = (1,) if img.ndim == 3 else ()
    fx = fx.reshape((1, -1) + extra)
    rows = data[:, x0] * (1.0 - fx) + data[:, x1] * fx
    fy = fy.reshape((-1, 1) + extra)
    out = rows[y0] * (1.0 - fy) + rows[y1] * fy
    if np.issubdtype(img.dtype, np.integer):
        info = np.iinfo(img.dtype)
        return np.clip(round_half_away(out), info.min, info.max).astype(img.dtype)
    return out.astype(img.dtype)


def load_png(path, mode: str = "RGB") -> np.ndarray:
    """Read an image file as an ``RGB`` raster or ``L`` grayscale array."""
    with Image.open(path) as im:
        return np.asarray(im.convert(mode), dtype=np.uint8).copy()


def save_png(path, img) -> Path:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        img = _to_uint8(img)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img).save(path, format="PNG")
    return path


def image_size(path) -> tuple[int, int]:
    """``(width, height)`` of an image file without decoding its pixels."""
    with Image.open(path) as im:
        return im.size


def nearest_odd(value: float, minimum: int = 1) -> int:
    """Nearest odd integer to ``value``; exact ties go to the smaller one."""
    k = math.ceil((value - 1) / 2 - 0.5)
    return max(minimum, 2 * k + 1)
