"""Exception hierarchy shared across the package."""


class EcgAlignError(Exception):
    """Base class for every error raised by ecgalign."""


class ParameterError(EcgAlignError, ValueError):
    """A configuration value or argument is out of its valid range."""


class InputError(EcgAlignError, ValueError):
    """The data handed to an operation does not satisfy its preconditions."""


class LeadNotFoundError(EcgAlignError, KeyError):
    """Requested lead is not present in the record."""


class DetectionError(EcgAlignError):
    """R-peak detection did not produce enough peaks.

    The partially detected annotation is kept on ``partial`` so callers can
    inspect what was found.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class AlignmentError(EcgAlignError):
    """A record could not be mapped onto the template."""


class MetricError(EcgAlignError, ValueError):
    """A metric is undefined for the supplied labels."""


class FormatError(EcgAlignError):
    """A file does not follow the expected container layout."""


class UnsupportedFormatError(FormatError):
    """WFDB storage format other than 16."""


class CorruptFileError(FormatError):
    """Signal data is inconsistent with its header."""


class ParseError(FormatError):
    """Text input could not be parsed; ``row`` is 1-based when known."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row
