"""Structural similarity (global and windowed) and difference-map evidence.

Moments use the population (divide-by-N) convention. For integer images
every window sum is accumulated exactly in int64, so the windowed score of a
full-image window is bit-identical to :func:`ssim_global`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, ParameterError
from .imgproc import Box, find_contours, round_half_away

__all__ = [
    "SsimConstants",
    "SsimComponents",
    "SsimReport",
    "DifferenceEvidence",
    "ssim_components",
    "ssim_global",
    "ssim_windowed",
    "difference_evidence",
]


@dataclass(frozen=True)
class SsimConstants:
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0 and self.dynamic_range > 0):
            raise ParameterError("SSIM constants k1, k2 and dynamic range must be positive")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


@dataclass(frozen=True)
class SsimComponents:
    mu_x: float
    mu_y: float
    sigma_x2: float
    sigma_y2: float
    sigma_xy: float


@dataclass(frozen=True)
class SsimReport:
    global_score: float
    local_map: np.ndarray = field(repr=False)
    window: int
    stride: int
    shape: tuple[int, int]
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class DifferenceEvidence:
    diff_image: np.ndarray = field(repr=False)
    boxes: list[Box]


def _pair(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim != 2 or y.ndim != 2:
        raise ParameterError("SSIM expects 2-D grayscale images")
    if x.shape != y.shape:
        raise DimensionMismatchError(f"image sizes differ: {x.shape[::-1]} vs {y.shape[::-1]}")
    exact = np.issubdtype(x.dtype, np.integer) and np.issubdtype(y.dtype, np.integer)
    dtype = np.int64 if exact else np.float64
    return x.astype(dtype), y.astype(dtype)


def _moments(n, sx, sy, sxx, syy, sxy):
    """Means, variances and covariance from raw sums (array-friendly)."""
    n2 = n * n
    mu_x = sx / n
    mu_y = sy / n
    # n*sxx - sx*sx is exact for integer sums; cast only afterwards
    var_x = (n * sxx - sx * sx) / n2
    var_y = (n * syy - sy * sy) / n2
    cov = (n * sxy - sx * sy) / n2
    return mu_x, mu_y, var_x, var_y, cov


def _ssim_formula(mu_x, mu_y, var_x, var_y, cov, c1, c2):
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return np.clip(num / den, -1.0, 1.0)


def ssim_components(x, y) -> SsimComponents:
    x, y = _pair(x, y)
    n = x.size
    # python scalars: int sums stay exact however large the image is
    raw = [a.sum().item() for a in (x, y, x * x, y * y, x * y)]
    m = _moments(n, *raw)
    return SsimComponents(*(float(v) for v in m))


def ssim_global(x, y, k: SsimConstants | None = None) -> float:
    """Single-window SSIM over the whole image pair."""
    k = k or SsimConstants()
    x = np.asarray(x)
    if x.size < 4:
        raise ParameterError("SSIM needs at least 4 pixels")
    c = ssim_components(x, y)
    return float(_ssim_formula(c.mu_x, c.mu_y, c.sigma_x2, c.sigma_y2, c.sigma_xy, k.c1, k.c2))


def _positions(length: int, window: int, stride: int) -> np.ndarray:
    pos = list(range(0, length - window + 1, stride))
    if pos[-1] != length - window:
        pos.append(length - window)
    return np.asarray(pos, dtype=np.intp)


def _integral(a: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=a.dtype)
    out[1:, 1:] = a.cumsum(axis=0).cumsum(axis=1)
    return out


def ssim_windowed(x, y, window: int = 8, stride: int = 4, k: SsimConstants | None = None) -> SsimReport:
    """Local SSIM on a grid of uniform square windows.

    Window origins step by ``stride``; a final origin flush with the right
    and bottom edges is added when the stride does not land there, so every
    pixel is covered. The global score is the mean of the local map.
    """
    k = k or SsimConstants()
    xi, yi = _pair(x, y)
    h, w = xi.shape
    if window < 1 or stride < 1:
        raise ParameterError("window and stride must be positive")
    if window > min(h, w):
        raise ParameterError(f"window {window} exceeds image size {w}x{h}")
    rows = _positions(h, window, stride)
    cols = _positions(w, window, stride)
    r0, r1 = rows[:, None], rows[:, None] + window
    c0, c1 = cols[None, :], cols[None, :] + window

    def sums(a):
        ii = _integral(a)
        return ii[r1, c1] - ii[r0, c1] - ii[r1, c0] + ii[r0, c0]

    n = window * window
    mom = _moments(n, sums(xi), sums(yi), sums(xi * xi), sums(yi * yi), sums(xi * yi))
    local = _ssim_formula(*mom, k.c1, k.c2).astype(np.float64)
    return SsimReport(float(local.mean()), local, window, stride, (h, w), rows, cols)


def difference_evidence(report: SsimReport, dissimilarity_threshold: float = 0.5) -> DifferenceEvidence:
    """Turn a local SSIM map into a difference image plus tamper boxes.

    A window is flagged when ``1 - local > dissimilarity_threshold``. Each
    pixel of the difference image shows the largest ``255 * (1 - local)``
    among the windows covering it (clamped to 255). Boxes are the bounding
    boxes of connected unions of flagged windows.
    """
    h, w = report.shape
    win = report.window
    dissim = 1.0 - report.local_map
    hot = dissim > dissimilarity_threshold
    # max over covering windows, separably: first along x per window row,
    # then along y
    strip = np.full((len(report.rows), w), -np.inf)
    strip_hot = np.zeros((len(report.rows), w), dtype=bool)
    for j, c in enumerate(report.cols):
        np.maximum(strip[:, c:c + win], dissim[:, j:j + 1], out=strip[:, c:c + win])
        strip_hot[:, c:c + win] |= hot[:, j:j + 1]
    diff = np.full((h, w), -np.inf)
    flagged = np.zeros((h, w), dtype=bool)
    for i, r in enumerate(report.rows):
        np.maximum(diff[r:r + win], strip[i], out=diff[r:r + win])
        flagged[r:r + win] |= strip_hot[i]
    diff_image = np.clip(round_half_away(255.0 * diff), 0, 255).astype(np.uint8)
    boxes = [c.bounding_box for c in find_contours(np.where(flagged, 255, 0).astype(np.uint8))]
    return DifferenceEvidence(diff_image, boxes)
