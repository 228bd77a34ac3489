#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#

from .core.exceptions import GearscopeException, IngestError, MalformedName, UnsupportedMatFeature, \
    MissingVariable, CorruptFile, RaggedRows, NonNumericCell, InvalidChannelMap, TooShort, InconsistentChannels, \
    InvalidSpec, LengthMismatch, EmptyInput, SegmentOutOfRange, InsufficientBaseline, InvalidDetectionConfig, \
    InvalidOrder, NonFinite, DidNotConverge, AllFitsFailed, HorizonZero, ConfigError

__all__ = [
    "GearscopeException",
    "IngestError",
    "MalformedName",
    "UnsupportedMatFeature",
    "MissingVariable",
    "CorruptFile",
    "RaggedRows",
    "NonNumericCell",
    "InvalidChannelMap",
    "TooShort",
    "InconsistentChannels",
    "InvalidSpec",
    "LengthMismatch",
    "EmptyInput",
    "SegmentOutOfRange",
    "InsufficientBaseline",
    "InvalidDetectionConfig",
    "InvalidOrder",
    "NonFinite",
    "DidNotConverge",
    "AllFitsFailed",
    "HorizonZero",
    "ConfigError",
]
