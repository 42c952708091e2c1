"""Template-based verification of scanned documents.

Match a sample against a library of known layouts, compare structure with
SSIM, read the annotated fields and cross-check them against a reference
dataset.
"""
from .config import PipelineConfig, auto_tune, load_config
from .errors import (
    DatasetError,
    DegenerateInputError,
    DimensionMismatchError,
    DuplicateTemplateIdError,
    ManifestError,
    OcrEngineError,
    ParameterError,
    RegionOutOfBoundsError,
    TemplateFileMissingError,
    VeridocError,
)
from .fraud import (
    ReferenceDataset,
    Verdict,
    VerificationReport,
    check_attributes,
    cumulative_confidence,
    decide,
    load_dataset,
    parse_dataset,
    verify,
)
from .matching import MatchResult, best_template, sliding_match, zncc_score
from .ssim import ssim_global, ssim_windowed
from .templates import TemplateManifest, TemplateRecord, load_manifest

__version__ = "0.1.0"
