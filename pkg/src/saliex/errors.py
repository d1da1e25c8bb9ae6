"""Exception types raised across the package."""


class SaliexError(Exception):
    """Base class for all saliex errors."""


class InvalidDimension(SaliexError):
    """A requested width or height is not a positive integer."""


class ImageTooSmall(SaliexError):
    """The input image is below the minimum size an operation supports."""


class DimensionMismatch(SaliexError):
    """Two buffers that must share dimensions do not."""


class InvalidRegion(SaliexError):
    """A rectangle query falls outside the image bounds."""


class InvalidValue(SaliexError):
    """A numeric input contains NaN or infinity."""


class NotNeighbors(SaliexError):
    """Two pixels passed to a pairwise operation are not 4-adjacent."""


class InvalidShift(SaliexError):
    """A horizontal parallax shift is as wide as the image or wider."""


class EmptyMask(SaliexError):
    """A mask with no foreground pixels where at least one is required."""


class EmptyDataset(SaliexError):
    """An evaluation run was started with zero ground-truth records."""


class ParseError(SaliexError):
    """A ground-truth file or annotation could not be parsed."""


class ConfigError(SaliexError):
    """A run configuration file contains unknown keys or bad values."""


class MapError(SaliexError):
    """A saliency map computation failed; carries the map name."""

    def __init__(self, map_name: str, message: str):
        super().__init__(f"{map_name}: {message}")
        self.map_name = map_name
