#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
import enum
import logging
from collections import OrderedDict
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from gearscope.core.exceptions import InconsistentChannels, InsufficientBaseline, InvalidDetectionConfig, TooShort
from gearscope.core.utils.constants import (DEFAULT_ALL_CHANNEL_FACTOR, DEFAULT_BASELINE_COUNT,
                                            DEFAULT_CONSECUTIVE_REQUIRED, DEFAULT_ROLLING_WINDOW,
                                            DEFAULT_THRESHOLD_FACTOR)
from gearscope.core.utils.error_handling import with_error_context
from gearscope.features import FeatureRow, channel_series

__all__ = [
    "Tier", "Trend", "DetectionConfig", "TierResult", "Onset", "DetectionReport", "baseline", "classify",
    "trend_verdict", "channel_trend", "detection_report"
]

_logger = logging.getLogger(__name__)


class Tier(str, enum.Enum):
    HEALTHY = 'Healthy'
    T1_SINGLE_CHANNEL = 'T1_SingleChannel'
    T2_TWO_CHANNEL = 'T2_TwoChannel'
    T3_ALL_CHANNEL_CLEAR = 'T3_AllChannelClear'

    @property
    def level(self) -> int:
        return list(Tier).index(self)


class Trend(str, enum.Enum):
    NONE = 'None'
    T4_INCREASING = 'T4_Increasing'
    T5_ACCELERATING = 'T5_Accelerating'


class DetectionConfig(NamedTuple):
    """
    :param baseline_count: number of initial files defining the healthy baseline (B)
    :param threshold_factor: a channel is above threshold when p2p > threshold_factor * baseline median
    :param all_channel_factor: factor every channel must exceed for the clear multi-channel tier
    :param consecutive_required: files in a row a channel must stay above threshold to be flagged (M)
    :param channel_factors: optional per-channel override of threshold_factor
    :param rolling_window: window of the rolling mean used by the trend verdicts (W)
    """
    baseline_count: int = DEFAULT_BASELINE_COUNT
    threshold_factor: float = DEFAULT_THRESHOLD_FACTOR
    all_channel_factor: float = DEFAULT_ALL_CHANNEL_FACTOR
    consecutive_required: int = DEFAULT_CONSECUTIVE_REQUIRED
    channel_factors: Optional[Mapping[str, float]] = None
    rolling_window: int = DEFAULT_ROLLING_WINDOW

    def kappa(self, channel: str) -> float:
        return float((self.channel_factors or {}).get(channel, self.threshold_factor))

    def validate(self) -> 'DetectionConfig':
        errors = []
        if self.baseline_count < 2:
            errors.append(f'baseline_count must be >= 2, got {self.baseline_count}')
        factors = {'threshold_factor': self.threshold_factor}
        factors.update({f'channel_factors[{k}]': v for k, v in (self.channel_factors or {}).items()})
        for name, value in factors.items():
            if not 1 < value < self.all_channel_factor:
                errors.append(f'{name} must satisfy 1 < {name} < all_channel_factor '
                              f'({self.all_channel_factor}), got {value}')
        if self.consecutive_required < 1:
            errors.append(f'consecutive_required must be >= 1, got {self.consecutive_required}')
        if self.rolling_window < 1:
            errors.append(f'rolling_window must be >= 1, got {self.rolling_window}')
        if errors:
            raise InvalidDetectionConfig('; '.join(errors))
        return self


class TierResult(NamedTuple):
    file_name: str
    file_ordinal: int
    per_channel_flag: Dict[str, bool]
    tier: Tier
    trend: Trend = Trend.NONE


class Onset(NamedTuple):
    ordinal: int
    file_name: str
    channels: Tuple[str, ...]


class DetectionReport(NamedTuple):
    results: List[TierResult]
    onsets: Dict[str, Optional[Onset]]
    baselines: Dict[str, Tuple[float, float]]
    config: DetectionConfig

    def to_json_dict(self) -> dict:
        return {
            'files': [{
                'file_name': r.file_name,
                'ordinal': r.file_ordinal,
                'flags': dict(r.per_channel_flag),
                'tier': r.tier.value,
                'trend': r.trend.value,
            } for r in self.results],
            'summary': {key: (onset._asdict() if onset is not None else None) for key, onset in self.onsets.items()},
            'baselines': {channel: {'median': median, 'spread': spread, 'kappa': self.config.kappa(channel)}
                          for channel, (median, spread) in self.baselines.items()},
            'config': {
                'baseline_count': self.config.baseline_count,
                'threshold_factor': self.config.threshold_factor,
                'all_channel_factor': self.config.all_channel_factor,
                'consecutive_required': self.config.consecutive_required,
                'channel_factors': dict(sorted((self.config.channel_factors or {}).items())),
                'rolling_window': self.config.rolling_window,
            },
        }


@with_error_context('baseline')
def baseline(rows: Sequence[FeatureRow], baseline_count: int) -> Tuple[float, float]:
    """Median and interquartile range of p2p over the first ``baseline_count`` files of one channel."""
    ordered = sorted(rows, key=lambda r: r.file_ordinal)
    if len(ordered) < baseline_count:
        raise InsufficientBaseline(f'{len(ordered)} files available, baseline needs {baseline_count}',
                                   channel=ordered[0].channel if ordered else None)
    values = np.array([r.p2p for r in ordered[:baseline_count]], dtype=np.float64)
    q75, q25 = np.percentile(values, [75, 25])
    return float(np.median(values)), float(q75 - q25)


def _consecutive_runs(mask: np.ndarray) -> np.ndarray:
    """Length of the run of True values ending at each position."""
    runs = np.zeros(len(mask), dtype=np.int64)
    count = 0
    for i, value in enumerate(mask):
        count = count + 1 if value else 0
        runs[i] = count
    return runs


def _grouped(table: Iterable[FeatureRow]) -> Tuple['OrderedDict[str, List[FeatureRow]]', List[int]]:
    grouped = channel_series(table)
    if not grouped:
        raise InsufficientBaseline('feature table is empty')
    ordinals = [r.file_ordinal for r in next(iter(grouped.values()))]
    for channel, rows in grouped.items():
        if [r.file_ordinal for r in rows] != ordinals:
            raise InconsistentChannels('channel does not cover the same files as the others', channel=channel)
    return grouped, ordinals


@with_error_context('classify')
def classify(table: Iterable[FeatureRow], cfg: DetectionConfig = DetectionConfig()) -> List[TierResult]:
    """Assign each file its detection tier from the per-channel p2p indicators.

    A channel is flagged at a file when its p2p has exceeded ``kappa * baseline median`` for
    ``consecutive_required`` files in a row ending at that file. T1 needs one flagged channel, T2 two, and T3
    needs every channel (at least two) above ``all_channel_factor * baseline median`` under the same run rule.
    Files are additionally tagged with the corpus-wide trend verdict once its onset is reached.
    """
    return _classify(table, cfg)[0]


def _classify(table: Iterable[FeatureRow],
              cfg: DetectionConfig) -> Tuple[List[TierResult], Mapping[str, List[FeatureRow]], Dict[str, tuple]]:
    """Tier results plus the grouped table and the per-channel (T4, T5) onsets they were derived from."""
    cfg.validate()
    grouped, ordinals = _grouped(table)
    if len(ordinals) < cfg.baseline_count:
        raise InsufficientBaseline(f'{len(ordinals)} files available, baseline needs {cfg.baseline_count}')

    flags, strong = OrderedDict(), OrderedDict()
    for channel, rows in grouped.items():
        median, _ = baseline(rows, cfg.baseline_count)
        p2p = np.array([r.p2p for r in rows], dtype=np.float64)
        flags[channel] = _consecutive_runs(p2p > cfg.kappa(channel) * median) >= cfg.consecutive_required
        strong[channel] = _consecutive_runs(p2p > cfg.all_channel_factor * median) >= cfg.consecutive_required

    per_channel_trend = {}
    if len(ordinals) >= cfg.baseline_count + 3:
        series = OrderedDict((channel, [r.p2p for r in rows]) for channel, rows in grouped.items())
        per_channel_trend = _channel_trends(series, cfg)
    else:
        _logger.debug(f'Trend verdict skipped: {len(ordinals)} files, needs {cfg.baseline_count + 3}')
    t4_onset, t5_onset = _earliest(per_channel_trend)

    file_names = [r.file_name for r in next(iter(grouped.values()))]
    results = []
    for i, ordinal in enumerate(ordinals):
        per_channel = OrderedDict((channel, bool(flags[channel][i])) for channel in grouped)
        flagged = sum(per_channel.values())
        if len(grouped) >= 2 and all(strong[channel][i] for channel in grouped):
            tier = Tier.T3_ALL_CHANNEL_CLEAR
        elif flagged >= 2:
            tier = Tier.T2_TWO_CHANNEL
        elif flagged >= 1:
            tier = Tier.T1_SINGLE_CHANNEL
        else:
            tier = Tier.HEALTHY
        if t5_onset is not None and ordinal >= t5_onset:
            trend = Trend.T5_ACCELERATING
        elif t4_onset is not None and ordinal >= t4_onset:
            trend = Trend.T4_INCREASING
        else:
            trend = Trend.NONE
        results.append(TierResult(file_name=file_names[i], file_ordinal=ordinal, per_channel_flag=per_channel,
                                  tier=tier, trend=trend))
    return results, grouped, per_channel_trend


def _nondecreasing_onset(step: np.ndarray, tol: float, min_points: int) -> Optional[int]:
    """Index into the smoothed series where its final non-decreasing stretch starts rising, or None."""
    last = len(step)  # smoothed points are 0..last, step[i] = smoothed[i+1] - smoothed[i]
    start = last
    while start > 0 and step[start - 1] >= -tol:
        start -= 1
    if last - start + 1 < min_points:
        return None
    # a flat lead-in is not part of the trend
    while start < last and step[start] <= tol:
        start += 1
    return start if start < last else None


def _convex_onset(step: np.ndarray, tol: float, min_points: int) -> Optional[int]:
    """Index into ``step`` where its final strictly increasing stretch starts, or None."""
    if len(step) == 0:
        return None
    start = len(step) - 1
    while start > 0 and step[start] > step[start - 1] + tol:
        start -= 1
    if len(step) - start < min_points:
        return None
    return start


@with_error_context('trend_verdict')
def channel_trend(p2p: Sequence[float], cfg: DetectionConfig = DetectionConfig(),
                  kappa: Optional[float] = None) -> Tuple[Optional[int], Optional[int]]:
    """(T4 onset, T5 onset) ordinals for one channel's p2p series.

    T4: the rolling mean (window W, trailing) is non-decreasing from the onset to the end and its final value
    exceeds ``kappa * baseline median``. T5: the first difference of the rolling mean is strictly increasing from
    the onset to the end and the final rolling mean exceeds ``all_channel_factor * baseline median``. Both need
    at least W smoothed points in the qualifying stretch.
    """
    x = np.asarray(p2p, dtype=np.float64)
    w = cfg.rolling_window
    if len(x) < cfg.baseline_count + 3 or len(x) < w + 2:
        raise TooShort(f'series has {len(x)} values, trend verdict needs {max(cfg.baseline_count + 3, w + 2)}')
    kappa = cfg.threshold_factor if kappa is None else kappa
    median = float(np.median(x[:cfg.baseline_count]))
    smoothed = np.convolve(x, np.ones(w) / w, mode='valid')  # smoothed[i] is the mean ending at ordinal i+w-1
    step = (x[w:] - x[:-w]) / w  # smoothed[i+1] - smoothed[i], computed without cancellation
    tol = 1e-9 * float(np.max(np.abs(x))) if len(x) else 0.0

    t4 = t5 = None
    if smoothed[-1] > kappa * median:
        start = _nondecreasing_onset(step, tol, w)
        if start is not None:
            t4 = start + w - 1
    if t4 is not None and smoothed[-1] > cfg.all_channel_factor * median:
        start = _convex_onset(step, tol, w)
        if start is not None:
            # step[i] lands on ordinal i+w; an accelerating trend is also an increasing one
            t5 = max(start + w, t4)
    return t4, t5


def trend_verdict(p2p_series: Mapping[str, Sequence[float]],
                  cfg: DetectionConfig = DetectionConfig()) -> Tuple[Optional[int], Optional[int]]:
    """Corpus-wide (T4 onset, T5 onset): the earliest onset over all channels."""
    return _earliest(_channel_trends(p2p_series, cfg))


def _channel_trends(p2p_series: Mapping[str, Sequence[float]],
                    cfg: DetectionConfig) -> Dict[str, Tuple[Optional[int], Optional[int]]]:
    return OrderedDict((channel, channel_trend(series, cfg, cfg.kappa(channel)))
                       for channel, series in p2p_series.items())


def _earliest(per_channel: Mapping[str, Tuple[Optional[int], Optional[int]]]) -> Tuple[Optional[int], Optional[int]]:
    t4 = [v[0] for v in per_channel.values() if v[0] is not None]
    t5 = [v[1] for v in per_channel.values() if v[1] is not None]
    return (min(t4) if t4 else None), (min(t5) if t5 else None)


def _onset(results: List[TierResult], predicate, channels_at) -> Optional[Onset]:
    for r in results:
        if predicate(r):
            return Onset(ordinal=r.file_ordinal, file_name=r.file_name, channels=tuple(channels_at(r)))
    return None


@with_error_context('detection_report')
def detection_report(table: Iterable[FeatureRow], cfg: DetectionConfig = DetectionConfig()) -> DetectionReport:
    """Classify the corpus and collect the five tier/trend onsets."""
    results, grouped, per_channel_trend = _classify(table, cfg)
    baselines = OrderedDict((channel, baseline(rows, cfg.baseline_count)) for channel, rows in grouped.items())

    def flagged(r):
        return [c for c, f in r.per_channel_flag.items() if f]

    def trend_channels(index):
        def channels_at(r):
            return [c for c, v in per_channel_trend.items() if v[index] == r.file_ordinal]
        return channels_at

    onsets = OrderedDict([
        ('t1_onset', _onset(results, lambda r: r.tier.level >= Tier.T1_SINGLE_CHANNEL.level, flagged)),
        ('t2_onset', _onset(results, lambda r: r.tier.level >= Tier.T2_TWO_CHANNEL.level, flagged)),
        ('t3_onset', _onset(results, lambda r: r.tier is Tier.T3_ALL_CHANNEL_CLEAR, lambda r: list(grouped))),
        ('t4_onset', _onset(results, lambda r: r.trend is not Trend.NONE, trend_channels(0))),
        ('t5_onset', _onset(results, lambda r: r.trend is Trend.T5_ACCELERATING, trend_channels(1))),
    ])
    return DetectionReport(results=results, onsets=onsets, baselines=baselines, config=cfg)
