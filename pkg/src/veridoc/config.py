"""Pipeline configuration and resolution-dependent auto-tuning."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ParameterError
from .imgproc import nearest_odd

__all__ = ["PipelineConfig", "auto_tune", "load_config"]


@dataclass(frozen=True)
class PipelineConfig:
    # decision thresholds
    match_threshold: float = 0.6
    ssim_threshold: float = 0.8
    confidence_threshold: float = 0.7
    confidence_weights: tuple[float, float, float] = (0.4, 0.4, 0.2)
    match_mode: str = "row"
    # SSIM
    ssim_k1: float = 0.01
    ssim_k2: float = 0.03
    ssim_window: int = 8
    ssim_stride: int = 4
    dissimilarity_threshold: float = 0.5
    # preprocessing / ROI extraction
    blur_sigma: float = 1.0
    blur_kernel: int = 3
    block_size: int = 25
    threshold_offset: float = 10.0
    se_size: int = 3
    edge_threshold: int = 128
    min_roi_area: float = 50.0
    adaptive_parameters: bool = False
    # keypoint diagnostics
    corner_threshold: float = 1e-3
    max_keypoints: int = 500
    descriptor_ratio: float = 0.75
    # display
    no_match_message: str = "No Template Match"

    def __post_init__(self):
        for name in ("match_threshold", "ssim_threshold", "confidence_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {v}")
        w = tuple(float(x) for x in self.confidence_weights)
        if len(w) != 3 or any(x < 0 for x in w) or not math.isclose(sum(w), 1.0, abs_tol=1e-9):
            raise ParameterError(f"confidence_weights must be 3 non-negative values summing to 1, got {w}")
        object.__setattr__(self, "confidence_weights", w)
        if self.match_mode not in ("row", "any"):
            raise ParameterError(f"match_mode must be 'row' or 'any', got {self.match_mode!r}")
        for name in ("blur_kernel", "block_size", "se_size"):
            v = getattr(self, name)
            if v < 1 or v % 2 == 0:
                raise ParameterError(f"{name} must be a positive odd integer, got {v}")

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["confidence_weights"] = list(self.confidence_weights)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {', '.join(sorted(unknown))}")
        data = dict(data)
        if "confidence_weights" in data:
            data["confidence_weights"] = tuple(data["confidence_weights"])
        return cls(**data)


def load_config(path) -> PipelineConfig:
    return PipelineConfig.from_dict(json.loads(Path(path).read_text()))


def auto_tune(cfg: PipelineConfig, width: int, height: int) -> PipelineConfig:
    """Scale preprocessing parameters to the sample's resolution.

    Blur kernel and adaptive block follow the shorter side; the minimum ROI
    area is a thousandth of the page. Returns ``cfg`` itself when adaptive
    parameters are switched off.
    """
    if not cfg.adaptive_parameters:
        return cfg
    shorter = min(width, height)
    return cfg.replace(
        blur_kernel=nearest_odd(max(3.0, shorter / 256)),
        block_size=nearest_odd(shorter / 32, minimum=3),
        min_roi_area=math.floor(0.001 * width * height + 0.5),
    )
