#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
import json
import logging
from collections import OrderedDict
from datetime import datetime
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from gearscope.core.exceptions import InconsistentChannels, TooShort
from gearscope.core.utils.constants import DEFAULT_SEGMENT_LENGTH, FEATURE_COLUMNS
from gearscope.core.utils.error_handling import with_error_context
from gearscope.ingest import Recording

__all__ = [
    "SegmentationScheme", "FeatureRow", "FileSummary", "segment", "channel_features", "summarize",
    "table_from_summaries", "feature_table", "channel_series",
    "top_p2p", "write_feature_csv", "write_feature_json", "read_feature_table"
]

_logger = logging.getLogger(__name__)


class SegmentationScheme(NamedTuple):
    segment_length: int = DEFAULT_SEGMENT_LENGTH
    max_segments: Optional[int] = None

    def validate(self) -> 'SegmentationScheme':
        if self.segment_length < 2:
            raise ValueError(f'segment_length must be >= 2, got {self.segment_length}')
        if self.max_segments is not None and self.max_segments < 1:
            raise ValueError(f'max_segments must be >= 1 when set, got {self.max_segments}')
        return self


class FeatureRow(NamedTuple):
    file_name: str
    file_ordinal: int
    channel: str
    timestamp: datetime
    mean: float
    std: float
    p2p: float


@with_error_context('segment')
def segment(channel: Sequence[float], scheme: SegmentationScheme = SegmentationScheme()) -> List[np.ndarray]:
    """Split a channel into consecutive, non-overlapping segments starting at sample 0.

    The trailing ``len % segment_length`` samples are dropped; e.g. 405405 samples at 4096 give 98 segments
    and 3997 discarded samples.
    """
    scheme.validate()
    x = np.asarray(channel, dtype=np.float64)
    if len(x) < scheme.segment_length:
        raise TooShort(f'channel has {len(x)} samples, segment length is {scheme.segment_length}')
    count = len(x) // scheme.segment_length
    if scheme.max_segments is not None:
        count = min(count, scheme.max_segments)
    return [x[k * scheme.segment_length:(k + 1) * scheme.segment_length] for k in range(count)]


@with_error_context('channel_features')
def channel_features(channel: Sequence[float]) -> Tuple[float, float, float]:
    """Returns (mean, sample standard deviation, peak-to-peak) over the whole channel."""
    x = np.asarray(channel, dtype=np.float64)
    if len(x) < 2:
        raise TooShort(f'channel has {len(x)} samples, features need at least 2')
    p2p = float(np.ptp(x))
    if p2p == 0.0:
        return float(x[0]), 0.0, 0.0
    return float(np.mean(x)), float(np.std(x, ddof=1)), p2p


class FileSummary(NamedTuple):
    """Per-file features kept once a recording's samples are no longer needed."""
    file_name: str
    sort_key: tuple
    timestamp: datetime
    stats: Dict[str, Tuple[float, float, float]]


@with_error_context('feature_table')
def summarize(recording: Recording) -> FileSummary:
    stats = OrderedDict()
    for label in recording.labels:
        try:
            stats[label] = channel_features(recording.channels[label])
        except TooShort as e:
            raise e.add_context(file=recording.file_name, channel=label)
    return FileSummary(file_name=recording.file_name, sort_key=recording.sort_key, timestamp=recording.timestamp,
                       stats=stats)


@with_error_context('feature_table')
def table_from_summaries(summaries: Iterable[FileSummary]) -> List[FeatureRow]:
    summaries = sorted(summaries, key=lambda s: s.sort_key)
    if not summaries:
        return []
    expected = sorted(summaries[0].stats)
    rows = []
    for ordinal, summary in enumerate(summaries):
        if sorted(summary.stats) != expected:
            raise InconsistentChannels(f'channels {sorted(summary.stats)} differ from {expected}',
                                       file=summary.file_name)
        for label in expected:
            mean, std, p2p = summary.stats[label]
            rows.append(FeatureRow(file_name=summary.file_name, file_ordinal=ordinal, channel=label,
                                   timestamp=summary.timestamp, mean=mean, std=std, p2p=p2p))
    return rows


def feature_table(recordings: Iterable[Recording]) -> List[FeatureRow]:
    """One FeatureRow per (file, channel), ordered by (file ordinal, channel label)."""
    return table_from_summaries(summarize(r) for r in recordings)


def channel_series(rows: Iterable[FeatureRow]) -> Dict[str, List[FeatureRow]]:
    """Group rows by channel, each group ordered by file ordinal."""
    grouped = OrderedDict()
    for row in sorted(rows, key=lambda r: (r.channel, r.file_ordinal)):
        grouped.setdefault(row.channel, []).append(row)
    return grouped


def top_p2p(rows: Iterable[FeatureRow], n: int = 3) -> Dict[str, Tuple[FeatureRow, List[FeatureRow]]]:
    """Per channel: the first file's row (the reference value) and the ``n`` highest-p2p rows, highest first."""
    result = OrderedDict()
    for channel, series in channel_series(rows).items():
        ranked = sorted(series, key=lambda r: (-r.p2p, r.file_ordinal))
        result[channel] = (series[0], ranked[:n])
    return result


def _to_records(rows: Iterable[FeatureRow]) -> List[dict]:
    return [{**row._asdict(), 'timestamp': row.timestamp.isoformat()} for row in rows]


def write_feature_csv(rows: Iterable[FeatureRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    df = pd.DataFrame(_to_records(rows), columns=list(FEATURE_COLUMNS))
    df.to_csv(path, index=False, lineterminator='\n')
    return path


def write_feature_json(rows: Iterable[FeatureRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    records = [{key: record[key] for key in FEATURE_COLUMNS} for record in _to_records(rows)]
    path.write_text(json.dumps(records, indent=2) + '\n', encoding='utf-8')
    return path


@with_error_context('read_feature_table')
def read_feature_table(path: Union[str, Path]) -> List[FeatureRow]:
    """Load a table written by write_feature_csv or write_feature_json."""
    path = Path(path)
    if path.suffix.lower() == '.json':
        df = pd.DataFrame(json.loads(path.read_text(encoding='utf-8')), columns=list(FEATURE_COLUMNS))
    else:
        df = pd.read_csv(path, float_precision='round_trip', dtype={'file_name': str, 'channel': str})
    missing = set(FEATURE_COLUMNS) - set(df.columns)
    if missing:
        raise InconsistentChannels(f'feature table lacks columns {sorted(missing)}', file=path.name)
    return [FeatureRow(file_name=r.file_name, file_ordinal=int(r.file_ordinal), channel=r.channel,
                       timestamp=datetime.fromisoformat(r.timestamp), mean=float(r.mean), std=float(r.std),
                       p2p=float(r.p2p))
            for r in df.itertuples(index=False)]
