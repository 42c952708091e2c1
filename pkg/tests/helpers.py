"""Small utilities shared by several test modules."""
import numpy as np


def flip_pixels(img: np.ndarray, fraction: float, seed: int) -> np.ndarray:
    """Salt-and-pepper noise: invert ``fraction`` of the pixels, chosen by ``seed``."""
    out = img.copy()
    rng = np.random.default_rng(seed)
    n = int(round(fraction * img.size))
    idx = rng.choice(img.size, size=n, replace=False)
    flat = out.reshape(-1)
    flat[idx] = 255 - flat[idx]
    return out


def edit_distance(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def char_accuracy(truth: str, read: str) -> float:
    """1 - edit distance / len(truth), floored at 0."""
    if not truth:
        return 1.0 if not read else 0.0
    return max(0.0, 1.0 - edit_distance(truth, read) / len(truth))
