#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
import csv
import logging
import math
import re
from collections import OrderedDict
from datetime import datetime
from pathlib import Path
from typing import Iterable, List, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np

from gearscope.core.exceptions import (CorruptFile, InvalidChannelMap, MalformedName, MissingVariable, NonNumericCell,
                                       RaggedRows, UnsupportedMatFeature)
from gearscope.core.matfile import read_variables
from gearscope.core.utils import as_float_vector, is_finite
from gearscope.core.utils.constants import DATA_SUFFIXES, DEFAULT_CHANNELS
from gearscope.core.utils.error_handling import with_error_context

__all__ = [
    "Recording", "ChannelSource", "ChannelMap", "parse_filename", "read_mat", "read_csv", "read_recording",
    "discover_corpus", "corpus_sort_key"
]

_logger = logging.getLogger(__name__)

# The tag may itself contain underscores; the date and time are always the last two fields.
_NAME_PATTERN = re.compile(r'^Day(?P<day>\d+)_(?P<tag>.+)_(?P<date>\d{8})_(?P<time>\d{6})\.(?P<ext>mat|csv)$',
                           re.IGNORECASE)


class ChannelSource(NamedTuple):
    """Where a channel lives in a file.

    ``key`` is a MAT variable name, a CSV column name, or a CSV column index.
    ``column`` optionally selects one column of a 2-D MAT matrix variable.
    """
    key: Union[str, int]
    column: Optional[int] = None

    @classmethod
    def parse(cls, text: str) -> 'ChannelSource':
        """Parse ``"3"``, ``"ch1"`` or ``"data:2"``."""
        text = str(text).strip()
        if not text:
            raise InvalidChannelMap('empty channel source')
        name, sep, column = text.rpartition(':')
        if sep and column.strip().isdigit() and name.strip():
            return cls(key=name.strip(), column=int(column))
        if text.isdigit():
            return cls(key=int(text))
        return cls(key=text)

    def __str__(self):
        return f'{self.key}:{self.column}' if self.column is not None else str(self.key)


class ChannelMap(object):
    """Ordered mapping of file sources to channel labels."""

    def __init__(self, entries: Iterable[Tuple[Union[ChannelSource, str, int], str]]):
        normalized = []
        for source, label in entries:
            if not isinstance(source, ChannelSource):
                source = ChannelSource.parse(str(source))
            label = str(label).strip()
            if not label:
                raise InvalidChannelMap(f'channel source {source} has an empty label')
            normalized.append((source, label))
        labels = [label for _, label in normalized]
        sources = [source for source, _ in normalized]
        duplicated_labels = sorted({label for label in labels if labels.count(label) > 1})
        if duplicated_labels:
            raise InvalidChannelMap(f'channel labels must be unique, repeated: {duplicated_labels}')
        duplicated_sources = sorted({str(s) for s in sources if sources.count(s) > 1})
        if duplicated_sources:
            raise InvalidChannelMap(f'channel sources must be mapped once, repeated: {duplicated_sources}')
        if not normalized:
            raise InvalidChannelMap('channel map is empty')
        self.entries = tuple(normalized)

    @classmethod
    def default(cls) -> 'ChannelMap':
        return cls([(ChannelSource(i), label) for i, label in enumerate(DEFAULT_CHANNELS)])

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> 'ChannelMap':
        """Build from ``{source: label}`` as found in the ``[channels]`` config section."""
        return cls([(ChannelSource.parse(source), label) for source, label in mapping.items()])

    @classmethod
    def from_spec(cls, text: str) -> 'ChannelMap':
        """Build from ``"ch1=IP-1,ch2=RF-2"``."""
        pairs = []
        for item in filter(None, (part.strip() for part in text.split(','))):
            source, sep, label = item.partition('=')
            if not sep:
                raise InvalidChannelMap(f'expected source=label, got {item!r}')
            pairs.append((ChannelSource.parse(source), label))
        return cls(pairs)

    @property
    def labels(self) -> List[str]:
        return [label for _, label in self.entries]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        return isinstance(other, ChannelMap) and self.entries == other.entries

    def __repr__(self):
        return 'ChannelMap({})'.format(', '.join(f'{source}={label}' for source, label in self.entries))


class Recording(object):
    """One data file: equal-length, read-only channel vectors plus the day/timestamp parsed from its name."""

    def __init__(self, file_name: str, day: int, timestamp: datetime,
                 channels: Mapping[str, Iterable[float]]):
        vectors = OrderedDict((str(label), as_float_vector(values)) for label, values in channels.items())
        lengths = {len(v) for v in vectors.values()}
        if len(lengths) > 1:
            raise RaggedRows(f'channels have unequal lengths {sorted(lengths)}', file=file_name)
        if day < 0:
            raise MalformedName(f'day must be >= 0, got {day}', file=file_name)
        self.file_name = file_name
        self.day = day
        self.timestamp = timestamp
        self.channels = vectors
        self.sample_count = lengths.pop() if lengths else 0

    @property
    def labels(self) -> List[str]:
        return list(self.channels)

    @property
    def sort_key(self):
        return self.day, self.timestamp, self.file_name

    def __eq__(self, other):
        if not isinstance(other, Recording):
            return NotImplemented
        return (self.file_name, self.day, self.timestamp, self.labels) == \
               (other.file_name, other.day, other.timestamp, other.labels) and \
            all(np.array_equal(self.channels[k], other.channels[k]) for k in self.channels)

    def __repr__(self):
        return f'Recording({self.file_name!r}, day={self.day}, channels={self.labels}, samples={self.sample_count})'


@with_error_context('parse_filename')
def parse_filename(name: str) -> Tuple[int, datetime]:
    """Parse ``Day<digits>_<tag>_<YYYYMMDD>_<HHMMSS>.mat`` into ``(day, timestamp)``.

    Examples:
        >>> parse_filename('Day022_Hunting_SSA_20211209_124241.mat')
        (22, datetime.datetime(2021, 12, 9, 12, 42, 41))
    """
    base = Path(name).name
    match = _NAME_PATTERN.match(base)
    if not match:
        raise MalformedName(f'{base!r} does not match Day<NNN>_<tag>_<YYYYMMDD>_<HHMMSS>.mat', file=base)
    try:
        timestamp = datetime.strptime(match.group('date') + match.group('time'), '%Y%m%d%H%M%S')
    except ValueError as e:
        raise MalformedName(f'{base!r} has an invalid date/time: {e}', file=base) from e
    return int(match.group('day')), timestamp


def corpus_sort_key(path: Union[str, Path]):
    day, timestamp = parse_filename(Path(path).name)
    return day, timestamp, Path(path).name


def _recording(path: Path, channels: Mapping[str, np.ndarray]) -> Recording:
    day, timestamp = parse_filename(path.name)
    return Recording(path.name, day, timestamp, channels)


@with_error_context('read_mat')
def read_mat(path: Union[str, Path], channel_map: ChannelMap) -> Recording:
    """Read the mapped variables of a MAT v5 file into a Recording.

    Args:
        path: the ``.mat`` file
        channel_map: maps variable names (optionally ``name:column`` for a matrix column) to channel labels

    Returns: Recording with one channel per map entry, in map order.
    """
    path = Path(path)
    variables = read_variables(path.read_bytes())
    channels = OrderedDict()
    for source, label in channel_map:
        if not isinstance(source.key, str):
            raise InvalidChannelMap(f'MAT channel sources must name a variable, got column index {source.key}',
                                    file=path.name, channel=label)
        variable = variables.get(source.key)
        if variable is None:
            raise MissingVariable(f'variable {source.key!r} not found; file holds {sorted(variables)}',
                                  file=path.name, channel=label)
        if variable.data is None:
            raise UnsupportedMatFeature(f'variable {source.key!r}: {variable.unsupported_reason}',
                                        file=path.name, channel=label)
        rows, cols = variable.shape
        if source.column is not None:
            if not 0 <= source.column < cols:
                raise MissingVariable(f'variable {source.key!r} has {cols} columns, no column {source.column}',
                                      file=path.name, channel=label)
            channels[label] = variable.data[:, source.column]
        elif rows == 1 or cols == 1:
            channels[label] = variable.data.ravel(order='F')
        else:
            raise UnsupportedMatFeature(f'variable {source.key!r} is a {rows}x{cols} matrix; '
                                        f'map one column as {source.key}:<column>', file=path.name, channel=label)
        if not is_finite(channels[label]):
            raise CorruptFile(f'variable {source.key!r} holds NaN or infinite samples', file=path.name, channel=label)
    return _recording(path, channels)


def _parse_cell(text: str, row: int, column: int, file_name: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise NonNumericCell(row, column, text, file=file_name) from None
    if not math.isfinite(value):
        raise NonNumericCell(row, column, text, file=file_name)
    return value


def _is_number(text: str) -> bool:
    try:
        return math.isfinite(float(text))
    except ValueError:
        return False


@with_error_context('read_csv')
def read_csv(path: Union[str, Path], channel_map: ChannelMap) -> Recording:
    """Read mapped columns of a comma-separated file into a Recording.

    The first row is a header when none of its cells is numeric. Column-name sources need a header;
    index sources (0-based) work with or without one.
    """
    path = Path(path)
    with open(path, 'r', encoding='utf-8', newline='') as fh:
        lines = [(line_no, row) for line_no, row in enumerate(csv.reader(fh), start=1)
                 if row and any(cell.strip() for cell in row)]
    if not lines:
        raise RaggedRows('file holds no data rows', file=path.name)

    header = None
    if not any(_is_number(cell.strip()) for cell in lines[0][1]):
        header = [cell.strip() for cell in lines[0][1]]
        lines = lines[1:]
    if not lines:
        raise RaggedRows('file holds a header but no data rows', file=path.name)

    width = len(header) if header is not None else len(lines[0][1])
    for line_no, row in lines:
        if len(row) != width:
            raise RaggedRows(f'row {line_no} has {len(row)} fields, expected {width}', file=path.name)

    indices = OrderedDict()
    for source, label in channel_map:
        if isinstance(source.key, int):
            index = source.key
        elif header is not None and source.key in header:
            index = header.index(source.key)
        else:
            raise MissingVariable(f'column {source.key!r} not found', file=path.name, channel=label)
        if not 0 <= index < width:
            raise MissingVariable(f'column index {index} out of range for {width} columns',
                                  file=path.name, channel=label)
        indices[label] = index

    channels = OrderedDict()
    for label, index in indices.items():
        channels[label] = np.array([_parse_cell(row[index].strip(), line_no, index + 1, path.name)
                                    for line_no, row in lines], dtype=np.float64)
    return _recording(path, channels)


def read_recording(path: Union[str, Path], channel_map: ChannelMap) -> Recording:
    """Dispatch on the file suffix."""
    path = Path(path)
    if path.suffix.lower() == '.csv':
        return read_csv(path, channel_map)
    return read_mat(path, channel_map)


def discover_corpus(input_dir: Union[str, Path]) -> Tuple[List[Path], List[Tuple[Path, MalformedName]]]:
    """Find data files under ``input_dir`` sorted by (day, timestamp, name).

    Returns: (sorted files with well-formed names, (file, error) for each file whose name does not parse)
    """
    candidates = sorted(p for p in Path(input_dir).iterdir()
                        if p.is_file() and p.suffix.lower() in DATA_SUFFIXES)
    good, bad = [], []
    for p in candidates:
        try:
            parse_filename(p.name)
        except MalformedName as e:
            _logger.warning(f'Skipping {p.name}: file name does not follow the corpus naming scheme')
            bad.append((p, e))
        else:
            good.append(p)
    return sorted(good, key=corpus_sort_key), bad
