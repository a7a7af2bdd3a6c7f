"""Exception hierarchy shared by all pseudoforge modules."""


class PseudoforgeError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(PseudoforgeError):
    """Grids that must share a shape do not."""


class InvalidThreshold(PseudoforgeError):
    """Binarization threshold outside the open interval (0, 1)."""


class CountMismatch(PseudoforgeError):
    """RLE run lengths do not sum to height * width."""


class NoBoundary(PseudoforgeError):
    """Distance field requested for a mask with no boundary pixels."""


class EmptyDataset(PseudoforgeError):
    """An annotation document with zero images."""


class NoRetainedDetections(PseudoforgeError):
    """Pixel-threshold calibration called with nothing retained."""


class UnknownImage(PseudoforgeError):
    """A detection references an image id with no recorded size."""


class EmptyBox(PseudoforgeError):
    """A box that does not intersect its image."""


class NonFinite(PseudoforgeError):
    """A loss input contains NaN or infinity."""


class SchemaError(PseudoforgeError):
    """A document failed structural validation; message carries the field path."""


class ConfigError(PseudoforgeError):
    """A config file failed parsing or validation."""


class ImageSetMismatch(PseudoforgeError):
    """Prediction and ground-truth documents cover different image ids."""


# Errors that indicate bad input rather than an internal bug. The CLI maps
# these (and plain OSError) to exit code 2.
INPUT_ERRORS = (
    CountMismatch,
    InvalidThreshold,
    EmptyDataset,
    NoRetainedDetections,
    UnknownImage,
    SchemaError,
    ConfigError,
    ImageSetMismatch,
)
