"""Template comparison: zero-normalized cross-correlation, whole-document
template selection, Harris keypoints with patch descriptors, and luminance
histogram correlation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy import signal

from .errors import DegenerateInputError, DimensionMismatchError, ParameterError
from .imgproc import resize_bilinear, smooth, sobel_gradients

if TYPE_CHECKING:
    from .templates import TemplateManifest

log = logging.getLogger(__name__)

__all__ = [
    "MatchResult",
    "Keypoint",
    "Descriptor",
    "Histogram",
    "zncc_score",
    "sliding_match",
    "template_scores",
    "best_template",
    "harris_response",
    "detect_keypoints",
    "describe_keypoints",
    "match_descriptors",
    "histogram",
    "histogram_similarity",
    "keypoint_agreement",
]

DEFAULT_MATCH_THRESHOLD = 0.6
PATCH = 8


@dataclass(frozen=True)
class MatchResult:
    template_id: str
    score: float
    offset: tuple[int, int] = (0, 0)
    matched: bool = False


@dataclass(frozen=True)
class Keypoint:
    x: int
    y: int
    response: float


@dataclass(frozen=True)
class Descriptor:
    vector: np.ndarray = field(repr=False)
    keypoint: Keypoint


@dataclass(frozen=True)
class Histogram:
    bins: np.ndarray
    total: int


def zncc_score(template, sample) -> float:
    """Zero-normalized cross-correlation of two equally sized images."""
    t = np.asarray(template, dtype=np.float64)
    s = np.asarray(sample, dtype=np.float64)
    if t.shape != s.shape:
        raise DimensionMismatchError(f"zncc needs equal sizes, got {t.shape[::-1]} and {s.shape[::-1]}")
    tc = t - t.mean()
    sc = s - s.mean()
    vt = float(np.sum(tc * tc))
    vs = float(np.sum(sc * sc))
    if vt == 0.0 or vs == 0.0:
        raise DegenerateInputError("zncc undefined: an input has zero variance")
    score = float(np.sum(tc * sc)) / np.sqrt(vt * vs)
    return min(1.0, max(-1.0, score))


def _window_sums(a: np.ndarray, th: int, tw: int) -> np.ndarray:
    ii = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=a.dtype)
    ii[1:, 1:] = a.cumsum(axis=0).cumsum(axis=1)
    return ii[th:, tw:] - ii[:-th, tw:] - ii[th:, :-tw] + ii[:-th, :-tw]


def _cross_sums(scene: np.ndarray, tmpl: np.ndarray) -> np.ndarray:
    """``sum(t * window)`` at every valid offset."""
    n_out = (scene.shape[0] - tmpl.shape[0] + 1) * (scene.shape[1] - tmpl.shape[1] + 1)
    if n_out * tmpl.size <= 4_000_000:
        win = np.lib.stride_tricks.sliding_window_view(scene, tmpl.shape)
        return np.einsum("ijkl,kl->ij", win, tmpl)
    out = signal.fftconvolve(scene.astype(np.float64), tmpl[::-1, ::-1].astype(np.float64), mode="valid")
    if np.issubdtype(scene.dtype, np.integer):
        # true values are integers well inside float64's exact range
        return np.rint(out).astype(np.int64)
    return out


def sliding_match(template, scene) -> tuple[tuple[int, int], float]:
    """Best ZNCC placement of ``template`` inside ``scene``.

    Returns ``((dx, dy), score)``. Ties go to the smallest ``dy``, then
    ``dx``; windows with zero variance are skipped. For integer images all
    sums are exact, so equal windows score identically.
    """
    t = np.asarray(template)
    s = np.asarray(scene)
    if t.ndim != 2 or s.ndim != 2:
        raise ParameterError("sliding_match expects 2-D images")
    th, tw = t.shape
    if th > s.shape[0] or tw > s.shape[1]:
        raise ParameterError(f"template {tw}x{th} larger than scene {s.shape[1]}x{s.shape[0]}")
    exact = np.issubdtype(t.dtype, np.integer) and np.issubdtype(s.dtype, np.integer)
    dtype = np.int64 if exact else np.float64
    t = t.astype(dtype)
    s = s.astype(dtype)
    n = t.size
    st = t.sum()
    var_t = n * (t * t).sum() - st * st
    if var_t == 0:
        raise DegenerateInputError("template has zero variance")
    ss = _window_sums(s, th, tw)
    var_s = n * _window_sums(s * s, th, tw) - ss * ss
    num = n * _cross_sums(s, t) - st * ss
    valid = var_s > 0
    if not valid.any():
        raise DegenerateInputError("every scene window has zero variance")
    score = np.full(num.shape, -np.inf)
    score[valid] = num[valid] / np.sqrt(float(var_t) * var_s[valid].astype(np.float64))
    idx = int(np.argmax(score))  # first maximum in row-major order
    dy, dx = divmod(idx, score.shape[1])
    return (dx, dy), float(min(1.0, max(-1.0, score[dy, dx])))


def template_scores(sample, manifest: "TemplateManifest") -> dict[str, float | None]:
    """ZNCC of the sample against every template (``None`` when degenerate).

    The sample is resized to each template's dimensions before scoring.
    """
    sample = np.asarray(sample)
    scores: dict[str, float | None] = {}
    for rec in manifest.templates:
        tmpl = rec.image
        resized = resize_bilinear(sample, tmpl.shape[1], tmpl.shape[0])
        try:
            scores[rec.id] = zncc_score(tmpl, resized)
        except DegenerateInputError:
            log.warning("template %s or resized sample is degenerate; skipped", rec.id)
            scores[rec.id] = None
    return scores


def select_best(scores: dict[str, float | None], threshold: float = DEFAULT_MATCH_THRESHOLD) -> MatchResult:
    """Highest score wins; equal scores resolve to the lexicographically first id."""
    usable = [(tid, sc) for tid, sc in scores.items() if sc is not None]
    if not usable:
        raise DegenerateInputError("no template produced a usable matching score")
    tid, score = min(usable, key=lambda item: (-item[1], item[0]))
    return MatchResult(tid, float(score), (0, 0), bool(score >= threshold))


def best_template(sample, manifest: "TemplateManifest", cfg=None) -> MatchResult:
    if not manifest.templates:
        raise ParameterError("manifest holds no templates")
    threshold = getattr(cfg, "match_threshold", DEFAULT_MATCH_THRESHOLD)
    return select_best(template_scores(sample, manifest), threshold)


def harris_response(img, k: float = 0.04, sigma: float = 1.0) -> np.ndarray:
    """Harris corner measure on intensities scaled to [0, 1]."""
    gx, gy = sobel_gradients(np.asarray(img, dtype=np.float64) / 255.0)
    size = 2 * int(np.ceil(3 * sigma)) + 1
    sxx = smooth(gx * gx, sigma, size)
    syy = smooth(gy * gy, sigma, size)
    sxy = smooth(gx * gy, sigma, size)
    return sxx * syy - sxy * sxy - k * (sxx + syy) ** 2


def detect_keypoints(img, cfg=None) -> list[Keypoint]:
    """Harris corners after 3x3 non-maximum suppression.

    Only responses strictly above ``cfg.corner_threshold`` survive; at most
    ``cfg.max_keypoints`` are returned, strongest first (scan order on ties).
    """
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] < 16 or img.shape[1] < 16:
        raise ParameterError(f"keypoint detection needs at least 16x16, got shape {img.shape}")
    threshold = getattr(cfg, "corner_threshold", 1e-3)
    limit = getattr(cfg, "max_keypoints", 500)
    r = harris_response(img)
    padded = np.pad(r, 1, constant_values=-np.inf)
    h, w = r.shape
    neigh = np.max(
        [padded[i:i + h, j:j + w] for i in range(3) for j in range(3) if (i, j) != (1, 1)],
        axis=0,
    )
    peaks = (r > threshold) & (r >= neigh)
    ys, xs = np.nonzero(peaks)
    vals = r[ys, xs]
    order = np.lexsort((xs, ys, -vals))[:limit]
    return [Keypoint(int(xs[i]), int(ys[i]), float(vals[i])) for i in order]


def describe_keypoints(img, keypoints) -> list[Descriptor]:
    """8x8 intensity patches (edge-clamped), zero-mean and unit L2 norm."""
    img = np.asarray(img, dtype=np.float64)
    half = PATCH // 2
    padded = np.pad(img, half, mode="edge")
    out = []
    for kp in keypoints:
        patch = padded[kp.y:kp.y + PATCH, kp.x:kp.x + PATCH].ravel()
        v = patch - patch.mean()
        norm = np.linalg.norm(v)
        v = v / norm if norm > 1e-12 else np.zeros_like(v)
        out.append(Descriptor(v, kp))
    return out


def _vectors(descs) -> np.ndarray:
    return np.array([np.asarray(getattr(d, "vector", d), dtype=np.float64) for d in descs])


def match_descriptors(a, b, ratio: float = 0.75) -> list[tuple[int, int, float]]:
    """Ratio-test matching with mutual-best filtering.

    Returns ``(index_in_a, index_in_b, distance)`` triples. A pair is kept
    when the nearest neighbor in ``b`` beats the second nearest by the ratio
    and the two descriptors are each other's nearest neighbor.
    """
    if not 0 < ratio <= 1:
        raise ParameterError(f"ratio must lie in (0, 1], got {ratio}")
    if len(a) == 0 or len(b) == 0:
        return []
    va, vb = _vectors(a), _vectors(b)
    d2 = (va * va).sum(1)[:, None] + (vb * vb).sum(1)[None, :] - 2.0 * va @ vb.T
    dist = np.sqrt(np.maximum(d2, 0.0))
    nearest_b = np.argmin(dist, axis=1)
    nearest_a = np.argmin(dist, axis=0)
    matches = []
    for i, j in enumerate(nearest_b):
        d1 = dist[i, j]
        if len(b) > 1:
            d_second = np.partition(dist[i], 1)[1]
            if not d1 < ratio * d_second:
                continue
        if nearest_a[j] != i:
            continue
        matches.append((i, int(j), float(d1)))
    return matches


def histogram(img) -> Histogram:
    img = np.asarray(img)
    bins = np.bincount(img.astype(np.uint8).ravel(), minlength=256).astype(np.int64)
    return Histogram(bins, int(img.size))


def histogram_similarity(a, b) -> float:
    """Pearson correlation of the two normalized 256-bin luminance histograms."""
    ha = histogram(a)
    hb = histogram(b)
    pa = ha.bins / ha.total
    pb = hb.bins / hb.total
    ca = pa - pa.mean()
    cb = pb - pb.mean()
    va = float(ca @ ca)
    vb = float(cb @ cb)
    if va == 0.0 or vb == 0.0:
        return 1.0 if np.array_equal(pa, pb) else 0.0
    return float(max(-1.0, min(1.0, (ca @ cb) / np.sqrt(va * vb))))


def keypoint_agreement(template, sample, cfg=None, ratio: float = 0.75) -> dict:
    """Diagnostic keypoint statistics for an aligned template/sample pair."""
    kt = detect_keypoints(template, cfg)
    ks = detect_keypoints(sample, cfg)
    matches = match_descriptors(describe_keypoints(template, kt), describe_keypoints(sample, ks), ratio)
    denom = min(len(kt), len(ks))
    return {
        "template_keypoints": len(kt),
        "sample_keypoints": len(ks),
        "matches": len(matches),
        "match_ratio": (len(matches) / denom) if denom else 0.0,
    }
