#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
import configparser
import logging
import os
from pathlib import Path
from typing import Any, Dict, NamedTuple, Optional, Tuple

from gearscope.core.exceptions import ConfigError, GearscopeException
from gearscope.core.utils.constants import (DEFAULT_FORECAST_HORIZON, DEFAULT_IMAGE_SIZE, PARENT_LOGGER_NAME,
                                            DEFAULT_PARENT_LOGGER_LEVEL)
from gearscope.cwt import FilterBankSpec
from gearscope.detect import DetectionConfig
from gearscope.features import SegmentationScheme
from gearscope.ingest import ChannelMap
from gearscope.trend import ArimaOrder

__all__ = [
    "PipelineConfig", "load_config"
]

_logger = logging.getLogger(__name__)
_parent_logger = logging.getLogger(PARENT_LOGGER_NAME)
_parent_logger.setLevel(DEFAULT_PARENT_LOGGER_LEVEL)


class PipelineConfig(NamedTuple):
    input_dir: Optional[Path] = None
    output_dir: Path = Path('gearscope-out')
    channel_map: ChannelMap = ChannelMap.default()
    segmentation: SegmentationScheme = SegmentationScheme()
    filterbank: FilterBankSpec = FilterBankSpec()
    detection: DetectionConfig = DetectionConfig()
    forecast_horizon: int = DEFAULT_FORECAST_HORIZON
    order: Optional[ArimaOrder] = None
    jobs: int = 1
    image_size: Tuple[int, int] = DEFAULT_IMAGE_SIZE
    reproducible: bool = False
    show_progress: bool = False


# Flat settings: key -> (INI section, converter). Nested configs are assembled from these at the end.
_SETTINGS = {
    'input_dir': ('pipeline', Path),
    'output_dir': ('pipeline', Path),
    'forecast_horizon': ('pipeline', int),
    'jobs': ('pipeline', int),
    'image_height': ('pipeline', int),
    'image_width': ('pipeline', int),
    'segment_length': ('segmentation', int),
    'max_segments': ('segmentation', int),
    'voices_per_octave': ('filterbank', int),
    'center_frequency': ('filterbank', float),
    'min_period': ('filterbank', float),
    'max_period': ('filterbank', float),
    'baseline_count': ('detection', int),
    'threshold_factor': ('detection', float),
    'all_channel_factor': ('detection', float),
    'consecutive_required': ('detection', int),
    'rolling_window': ('detection', int),
    'order': ('trend', ArimaOrder.parse),
}

_ENVIRONMENT = {
    'input_dir': 'GEARSCOPE_INPUT_DIR',
    'output_dir': 'GEARSCOPE_OUTPUT_DIR',
    'jobs': 'GEARSCOPE_JOBS',
}

_PASSTHROUGH = ('channel_map', 'channel_factors', 'reproducible', 'show_progress')


class _ConfigLoader:
    """

    Order of configs to load:

    - configs specified explicitly as keyword arguments
    - environment variables
    - configs specified in the INI file
    - default configs
    """

    def load(self, config_file: Optional[str] = None, **kwargs) -> PipelineConfig:
        settings = {'jobs': os.cpu_count() or 1}

        file_settings, file_channels, file_factors = self._load_config_file(config_file)
        settings.update(self._preprocess_and_validate_config(file_settings, source=str(config_file)))
        if file_channels:
            settings['channel_map'] = file_channels
        if file_factors:
            settings['channel_factors'] = file_factors

        env_settings = {key: os.getenv(var) for key, var in _ENVIRONMENT.items()}
        settings.update(self._preprocess_and_validate_config(env_settings, source='environment'))

        explicit = {k: v for k, v in kwargs.items() if v is not None}
        for key in _PASSTHROUGH:
            if key in explicit:
                settings[key] = explicit.pop(key)
        settings.update(self._preprocess_and_validate_config(explicit, source='arguments'))
        return self._assemble(settings)

    def _preprocess_and_validate_config(self, config: Dict[str, Any], source: str) -> Dict[str, Any]:
        """Drop unset values, convert text values and raise ConfigError naming the offending key."""
        result = {}
        for key, value in config.items():
            if value is None:
                continue
            if key not in _SETTINGS:
                raise ConfigError(f'unknown setting {key!r} in {source}')
            _, convert = _SETTINGS[key]
            if isinstance(value, str) or convert is Path:
                try:
                    value = convert(value.strip() if isinstance(value, str) else value)
                except (ValueError, TypeError, GearscopeException) as e:
                    raise ConfigError(f'invalid value {value!r} for {key!r} in {source}: {e}') from e
            result[key] = value
        return result

    def _load_config_file(self, config_file: Optional[str]):
        """Load from INI config file; returns (flat settings, channel sources, per-channel factors)."""
        settings, channels, factors = {}, {}, {}
        if not config_file:
            return settings, channels, factors
        full_path = os.path.expanduser(config_file)
        if not os.path.isfile(full_path):
            raise ConfigError(f'config file {config_file} does not exist')
        parser = configparser.ConfigParser()
        parser.optionxform = str  # channel labels and variable names are case sensitive
        try:
            parser.read(full_path, encoding='utf-8')
        except configparser.Error as e:
            raise ConfigError(f'cannot parse {config_file}: {e}') from e

        sections = {section for section, _ in _SETTINGS.values()}
        for section in parser.sections():
            if section == 'channels':
                channels = dict(parser[section])
            elif section == 'detection.channels':
                for label, value in parser[section].items():
                    try:
                        factors[label] = float(value)
                    except ValueError as e:
                        raise ConfigError(f'invalid factor {value!r} for channel {label} in {config_file}') from e
            elif section in sections:
                for key, value in parser[section].items():
                    if key not in _SETTINGS or _SETTINGS[key][0] != section:
                        raise ConfigError(f'unknown setting {key!r} in section [{section}] of {config_file}')
                    settings[key] = value
            else:
                _logger.warning(f'Ignoring unknown section [{section}] in {config_file}')
        return settings, channels, factors

    @staticmethod
    def _assemble(settings: Dict[str, Any]) -> PipelineConfig:
        defaults = PipelineConfig()
        try:
            channel_map = settings.get('channel_map', defaults.channel_map)
            if isinstance(channel_map, str):
                channel_map = ChannelMap.from_spec(channel_map)
            elif isinstance(channel_map, dict):
                channel_map = ChannelMap.from_mapping(channel_map)

            segmentation = SegmentationScheme(
                segment_length=settings.get('segment_length', defaults.segmentation.segment_length),
                max_segments=settings.get('max_segments', defaults.segmentation.max_segments),
            ).validate()

            period_range = None
            if 'min_period' in settings or 'max_period' in settings:
                min_period = settings.get('min_period', 4.0)
                max_period = settings.get('max_period', segmentation.segment_length / 4.0)
                period_range = (min_period, max_period)
            filterbank = FilterBankSpec(
                voices_per_octave=settings.get('voices_per_octave', defaults.filterbank.voices_per_octave),
                segment_length=segmentation.segment_length,
                center_frequency=settings.get('center_frequency', defaults.filterbank.center_frequency),
                period_range=period_range,
            ).validate()

            detection = DetectionConfig(
                baseline_count=settings.get('baseline_count', defaults.detection.baseline_count),
                threshold_factor=settings.get('threshold_factor', defaults.detection.threshold_factor),
                all_channel_factor=settings.get('all_channel_factor', defaults.detection.all_channel_factor),
                consecutive_required=settings.get('consecutive_required', defaults.detection.consecutive_required),
                channel_factors=settings.get('channel_factors') or None,
                rolling_window=settings.get('rolling_window', defaults.detection.rolling_window),
            ).validate()
        except (ValueError, GearscopeException) as e:
            raise ConfigError(str(e)) from e

        horizon = settings.get('forecast_horizon', defaults.forecast_horizon)
        jobs = settings.get('jobs', defaults.jobs)
        height = settings.get('image_height', defaults.image_size[0])
        width = settings.get('image_width', defaults.image_size[1])
        if horizon < 1:
            raise ConfigError(f'forecast_horizon must be >= 1, got {horizon}')
        if jobs < 1:
            raise ConfigError(f'jobs must be >= 1, got {jobs}')
        if height < 1 or width < 1:
            raise ConfigError(f'image size must be at least 1x1, got {height}x{width}')

        return PipelineConfig(
            input_dir=settings.get('input_dir'),
            output_dir=settings.get('output_dir', defaults.output_dir),
            channel_map=channel_map,
            segmentation=segmentation,
            filterbank=filterbank,
            detection=detection,
            forecast_horizon=horizon,
            order=settings.get('order'),
            jobs=jobs,
            image_size=(height, width),
            reproducible=bool(settings.get('reproducible', False)),
            show_progress=bool(settings.get('show_progress', False)),
        )


_loader = _ConfigLoader()


def load_config(config_file: Optional[str] = None, **overrides) -> PipelineConfig:
    """Build the pipeline configuration.

    :param config_file: Optional. An INI configuration file.
    :param overrides: Optional. Explicit settings (flat keys such as ``threshold_factor`` or ``jobs``, plus
        ``channel_map``, ``channel_factors``, ``reproducible`` and ``show_progress``); these win over the
        environment (``GEARSCOPE_INPUT_DIR``, ``GEARSCOPE_OUTPUT_DIR``, ``GEARSCOPE_JOBS``) and the file.
    """
    return _loader.load(config_file, **overrides)
