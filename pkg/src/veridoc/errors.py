"""Exception hierarchy shared by all veridoc modules."""
from pathlib import Path


class VeridocError(Exception):
    """Base class for every error raised by veridoc."""


class ParameterError(VeridocError, ValueError):
    """An argument violates an operation's precondition."""


class DegenerateInputError(VeridocError, ValueError):
    """Input has no usable signal (e.g. zero intensity variance)."""


class DimensionMismatchError(ParameterError):
    """Two images that must share dimensions do not."""


class ManifestError(VeridocError):
    """Base class for template manifest problems."""


class TemplateFileMissingError(ManifestError, FileNotFoundError):
    """A manifest, or an image it references, does not exist."""

    def __init__(self, path):
        self.path = Path(path)
        super().__init__(f"file not found: {self.path}")


class DuplicateTemplateIdError(ManifestError):
    def __init__(self, template_id):
        self.template_id = template_id
        super().__init__(f"duplicate template id: {template_id!r}")


class RegionOutOfBoundsError(ManifestError):
    def __init__(self, template_id, field, box, size):
        self.template_id = template_id
        self.field = field
        super().__init__(
            f"template {template_id!r}: region {field!r} {tuple(box)} "
            f"lies outside image of size {size[0]}x{size[1]}"
        )


class DatasetError(VeridocError):
    """Reference dataset could not be parsed or used."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OcrEngineError(VeridocError):
    """An external OCR engine failed or produced unreadable output."""
