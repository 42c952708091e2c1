import json

import pytest

from veridoc.config import PipelineConfig, auto_tune, load_config
from veridoc.errors import ParameterError


def test_defaults():
    cfg = PipelineConfig()
    assert (cfg.match_threshold, cfg.ssim_threshold, cfg.confidence_threshold) == (0.6, 0.8, 0.7)
    assert cfg.confidence_weights == (0.4, 0.4, 0.2)
    assert cfg.match_mode == "row"


@pytest.mark.parametrize("changes", [
    {"match_threshold": 1.2},
    {"ssim_threshold": -0.1},
    {"confidence_weights": (0.5, 0.5, 0.5)},
    {"confidence_weights": (1.2, -0.2, 0.0)},
    {"match_mode": "fuzzy"},
    {"block_size": 24},
])
def test_invalid_values_rejected(changes):
    with pytest.raises(ParameterError):
        PipelineConfig(**changes)


def test_auto_tune_1024x768():
    cfg = auto_tune(PipelineConfig(adaptive_parameters=True), 1024, 768)
    assert cfg.blur_kernel == 3
    assert cfg.block_size == 23
    assert cfg.min_roi_area == 786


def test_auto_tune_tiny_and_large():
    assert auto_tune(PipelineConfig(adaptive_parameters=True), 64, 64).block_size == 3
    big = auto_tune(PipelineConfig(adaptive_parameters=True), 4000, 3000)
    assert big.blur_kernel == 11  # 3000/256 = 11.7
    assert big.block_size == 93  # 3000/32 = 93.75


def test_auto_tune_disabled_is_identity():
    cfg = PipelineConfig()
    assert auto_tune(cfg, 1024, 768) is cfg


def test_auto_tune_leaves_input_and_other_fields():
    cfg = PipelineConfig(adaptive_parameters=True, ssim_threshold=0.75)
    tuned = auto_tune(cfg, 800, 600)
    assert cfg.block_size == 25
    assert tuned.ssim_threshold == 0.75 and tuned.match_threshold == cfg.match_threshold


def test_dict_roundtrip(tmp_path):
    cfg = PipelineConfig(ssim_threshold=0.85, confidence_weights=(0.5, 0.3, 0.2))
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert load_config(path) == cfg


def test_unknown_key_rejected():
    with pytest.raises(ParameterError, match="bogus"):
        PipelineConfig.from_dict({"bogus": 1})
