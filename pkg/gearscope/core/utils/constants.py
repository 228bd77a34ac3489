#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#

import enum

from gearscope.core.utils import get_version

PARENT_LOGGER_NAME = 'gearscope'
DEFAULT_PARENT_LOGGER_LEVEL = 'ERROR'

CLIENT_VERSION = get_version()


class ExitCode(enum.IntEnum):
    SUCCESS = 0
    USAGE = 1
    DATA = 2
    PARTIAL = 3


# Sensor labels of the gearbox rig, in column order of the default channel map
DEFAULT_CHANNELS = ('IP-1', 'RF-2', 'RL-3', 'RR-4')

DEFAULT_SEGMENT_LENGTH = 4096
DEFAULT_VOICES_PER_OCTAVE = 12
DEFAULT_CENTER_FREQUENCY = 6.0
DEFAULT_IMAGE_SIZE = (500, 500)

DEFAULT_BASELINE_COUNT = 10
DEFAULT_THRESHOLD_FACTOR = 1.5
DEFAULT_ALL_CHANNEL_FACTOR = 4.0
DEFAULT_CONSECUTIVE_REQUIRED = 1
DEFAULT_ROLLING_WINDOW = 5

DEFAULT_FORECAST_HORIZON = 5
MIN_SELECTION_LENGTH = 20
MAX_AR_ORDER = 5
MAX_MA_ORDER = 5
MAX_DIFFERENCING = 2
SELECTION_MAX_AR_ORDER = 3
SELECTION_MAX_MA_ORDER = 3
SIGMA2_FLOOR = 1e-12
SIMPLEX_XATOL = 1e-8
SIMPLEX_MAX_EVALS = 2000
UNIT_ROOT_ALPHA = 0.01

FEATURE_COLUMNS = ('file_name', 'file_ordinal', 'channel', 'timestamp', 'mean', 'std', 'p2p')
FORECAST_COLUMNS = ('ordinal', 'p2p', 'kind')
DATA_SUFFIXES = ('.mat', '.csv')
