"""Exception types shared across the toolkit.

The CLI maps these onto its exit-code contract: ConfigError family -> 2,
data/format mismatches -> 3, OSError -> 1.
"""


class ParcelDenoiseError(Exception):
    """Base class for all toolkit errors."""


class FormatError(ParcelDenoiseError):
    """Malformed container, mask, or report data."""


class CorruptionError(FormatError):
    """A file whose payload does not match its own header."""


class GridTypeError(ParcelDenoiseError):
    """A grid file holds a different kind of grid than the caller expects."""


class ShapeError(ParcelDenoiseError):
    """Grid dimensions do not line up."""


class MappingError(ParcelDenoiseError):
    """A class id has no entry in the class map."""


class ConfigError(ParcelDenoiseError):
    """Invalid configuration or scene specification."""


class InsufficientPointsError(ConfigError):
    """Fewer data points than the clustering configuration requires."""


class EmptyInputError(ParcelDenoiseError):
    """An operation received no valid pixels to work with."""
