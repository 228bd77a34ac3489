#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
from typing import List, Optional


def render_context(file: Optional[str], channel: Optional[str], operation: Optional[str]) -> str:
    parts = [f'{key}={value}' for key, value in (('file', file), ('channel', channel), ('operation', operation))
             if value is not None]
    return ' [{}]'.format(', '.join(parts)) if parts else ''


class GearscopeException(Exception):
    """The base exception class for all gearscope exceptions.

    Carries optional ``file``, ``channel`` and ``operation`` context that is rendered into the message,
    so an error surfaced by the CLI always names where it happened.
    """

    def __init__(self, msg: str = '', file: Optional[str] = None, channel: Optional[str] = None,
                 operation: Optional[str] = None):
        self.msg = msg
        self.file = file
        self.channel = channel
        self.operation = operation
        super().__init__(msg)

    def add_context(self, file: Optional[str] = None, channel: Optional[str] = None,
                    operation: Optional[str] = None) -> 'GearscopeException':
        """Fill in context fields that are still unset; context set closer to the fault wins."""
        self.file = self.file if self.file is not None else file
        self.channel = self.channel if self.channel is not None else channel
        self.operation = self.operation if self.operation is not None else operation
        return self

    def __str__(self):
        return f'{self.msg}{render_context(self.file, self.channel, self.operation)}'


class IngestError(GearscopeException):
    """Raised when a data file cannot be turned into a Recording."""


class MalformedName(GearscopeException, ValueError):
    """Raised when a file name does not follow the ``Day<NNN>_<tag>_<YYYYMMDD>_<HHMMSS>`` grammar."""


class UnsupportedMatFeature(IngestError):
    """Raised for MAT content outside the supported subset (v5, real double matrices)."""


class MissingVariable(IngestError):
    """Raised when a mapped variable or column is absent from the file."""


class CorruptFile(IngestError):
    """Raised when a MAT file is truncated or a compressed element fails to inflate."""


class RaggedRows(IngestError):
    """Raised when CSV rows disagree in length, or the file holds no data rows."""


class NonNumericCell(IngestError):

    def __init__(self, row: int, column: int, value: str = '', **kwargs):
        """
        Args:
            row (int): 1-based physical line number in the file
            column (int): 1-based column number
            value (str): the offending cell text
        """
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f'non-numeric cell {value!r} at row {row}, column {column}', **kwargs)


class InvalidChannelMap(GearscopeException, ValueError):
    """Raised when a channel map repeats a label or a source."""


class TooShort(GearscopeException, ValueError):
    """Raised when a signal or series is shorter than an operation needs."""


class InconsistentChannels(GearscopeException, ValueError):
    """Raised when recordings or feature rows disagree on the channel label set."""


class InvalidSpec(GearscopeException, ValueError):

    def __init__(self, field_errors: List[str], **kwargs):
        self.field_errors = list(field_errors)
        super().__init__('invalid filter bank spec: ' + '; '.join(self.field_errors), **kwargs)


class LengthMismatch(GearscopeException, ValueError):
    """Raised when a segment length differs from the filter bank length."""


class EmptyInput(GearscopeException, ValueError):
    """Raised when an empty magnitude matrix is rasterized."""


class SegmentOutOfRange(GearscopeException, IndexError):
    """Raised when a requested segment index is outside the valid range."""


class InsufficientBaseline(GearscopeException, ValueError):
    """Raised when fewer files exist than the baseline window needs."""


class InvalidDetectionConfig(GearscopeException, ValueError):
    """Raised when detection thresholds violate ``B >= 2`` or ``1 < kappa < kappa_all``."""


class InvalidOrder(GearscopeException, ValueError):
    """Raised when an ARIMA order is outside the supported search space."""


class NonFinite(GearscopeException, ValueError):
    """Raised when a series contains NaN or infinite values."""


class DidNotConverge(GearscopeException, ArithmeticError):

    def __init__(self, msg: str, best_model=None, **kwargs):
        """
        Args:
            msg (str): the exception message
            best_model (ArimaModel): the best-so-far model reached by the minimizer
        """
        self.best_model = best_model
        super().__init__(msg, **kwargs)


class AllFitsFailed(GearscopeException, ArithmeticError):
    """Raised when no candidate order in the selection grid converged."""


class HorizonZero(GearscopeException, ValueError):
    """Raised when a forecast horizon below 1 is requested."""


class ConfigError(GearscopeException, ValueError):
    """Raised when the configuration file, environment or flags hold an invalid value."""
