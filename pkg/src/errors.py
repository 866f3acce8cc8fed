from __future__ import annotations


class HwrError(ValueError):
    """Base class for every error raised by the toolkit."""


# ---- dataset ---------------------------------------------------------------
class DatasetError(HwrError):
    pass


class WrongMagic(DatasetError):
    pass


class TruncatedFile(DatasetError):
    pass


class TrailingData(DatasetError):
    pass


class LabelOutOfRange(DatasetError):
    pass


class EmptySplit(DatasetError):
    pass


class MissingDatasetFile(DatasetError):
    pass


# ---- shapes ----------------------------------------------------------------
class ShapeError(HwrError):
    pass


class WrongDimensions(ShapeError):
    pass


class DimensionMismatch(ShapeError):
    pass


class EmptyMatrix(ShapeError):
    pass


class LengthMismatch(ShapeError):
    pass


class EmptyInput(ShapeError):
    pass


# ---- training --------------------------------------------------------------
class TrainingError(HwrError):
    pass


class SingleClass(TrainingError):
    pass


class NonFiniteFeature(TrainingError):
    pass


# ---- images ----------------------------------------------------------------
class ImageError(HwrError):
    pass


class DegenerateRoi(ImageError):
    pass


class ImageFormatError(ImageError):
    pass


class UnknownGlyph(ImageError):
    pass


# ---- model files -----------------------------------------------------------
class ModelFormatError(HwrError):
    pass


class BadMagic(ModelFormatError):
    pass


class UnsupportedVersion(ModelFormatError):
    pass


class CorruptSection(ModelFormatError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
