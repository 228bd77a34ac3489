#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
"""Line plots written directly as SVG: trend curves, signal envelopes and the corpus p2p overview."""
import logging
import math
import xml.etree.ElementTree as ET
from datetime import datetime
from pathlib import Path
from typing import List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from gearscope.core.exceptions import EmptyInput

__all__ = ["nice_ticks", "plot_trend", "plot_signal", "plot_corpus_p2p", "envelope"]

_logger = logging.getLogger(__name__)

SVG_NS = 'http://www.w3.org/2000/svg'
WIDTH, HEIGHT = 800, 420
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 20, 40, 50
PALETTE = ('#1f77b4', '#ff7f0e', '#2ca02c', '#d62728', '#9467bd', '#8c564b')
FORECAST_COLOR = '#d62728'
DEFAULT_SIGNAL_COLUMNS = 1000


class _Axes(NamedTuple):
    x_range: Tuple[float, float]
    y_range: Tuple[float, float]

    def px(self, x: float) -> float:
        lo, hi = self.x_range
        return MARGIN_LEFT + (x - lo) / (hi - lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)

    def py(self, y: float) -> float:
        lo, hi = self.y_range
        return HEIGHT - MARGIN_BOTTOM - (y - lo) / (hi - lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)

    def points(self, xs: Sequence[float], ys: Sequence[float]) -> str:
        return ' '.join(f'{self.px(x):.2f},{self.py(y):.2f}' for x, y in zip(xs, ys))


def _padded_range(values: np.ndarray) -> Tuple[float, float]:
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def nice_ticks(lo: float, hi: float, count: int = 5) -> List[float]:
    """Round tick positions (steps of 1, 2 or 5 times a power of ten) covering ``[lo, hi]``."""
    if not hi > lo:
        return [lo]
    raw = (hi - lo) / max(count, 1)
    magnitude = 10 ** math.floor(math.log10(raw))
    step = next(m * magnitude for m in (1, 2, 5, 10) if m * magnitude >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    value = first
    while value <= hi + step * 1e-9:
        ticks.append(round(value, 12))
        value += step
    return ticks


def _format_tick(value: float) -> str:
    return f'{value:.6g}'


def _new_svg(title: str, reproducible: bool) -> ET.Element:
    root = ET.Element('svg', {'xmlns': SVG_NS, 'width': str(WIDTH), 'height': str(HEIGHT),
                              'viewBox': f'0 0 {WIDTH} {HEIGHT}'})
    if not reproducible:
        root.append(ET.Comment(f' generated {datetime.now().isoformat(timespec="seconds")} '))
    ET.SubElement(root, 'rect', {'width': str(WIDTH), 'height': str(HEIGHT), 'fill': 'white'})
    heading = ET.SubElement(root, 'text', {'x': str(WIDTH // 2), 'y': '24', 'text-anchor': 'middle',
                                           'font-family': 'sans-serif', 'font-size': '16', 'class': 'title'})
    heading.text = title
    return root


def _draw_axes(root: ET.Element, axes: _Axes, x_label: str, y_label: str):
    group = ET.SubElement(root, 'g', {'class': 'axes', 'stroke': 'black', 'font-family': 'sans-serif',
                                      'font-size': '11'})
    x0, x1 = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    y0, y1 = HEIGHT - MARGIN_BOTTOM, MARGIN_TOP
    ET.SubElement(group, 'line', {'class': 'x-axis', 'x1': str(x0), 'y1': str(y0), 'x2': str(x1), 'y2': str(y0)})
    ET.SubElement(group, 'line', {'class': 'y-axis', 'x1': str(x0), 'y1': str(y0), 'x2': str(x0), 'y2': str(y1)})
    for tick in nice_ticks(*axes.x_range):
        x = axes.px(tick)
        ET.SubElement(group, 'line', {'x1': f'{x:.2f}', 'y1': str(y0), 'x2': f'{x:.2f}', 'y2': str(y0 + 5)})
        label = ET.SubElement(group, 'text', {'class': 'x-tick', 'x': f'{x:.2f}', 'y': str(y0 + 18),
                                              'text-anchor': 'middle', 'stroke': 'none'})
        label.text = _format_tick(tick)
    for tick in nice_ticks(*axes.y_range):
        y = axes.py(tick)
        ET.SubElement(group, 'line', {'x1': str(x0 - 5), 'y1': f'{y:.2f}', 'x2': str(x0), 'y2': f'{y:.2f}'})
        label = ET.SubElement(group, 'text', {'class': 'y-tick', 'x': str(x0 - 8), 'y': f'{y + 4:.2f}',
                                              'text-anchor': 'end', 'stroke': 'none'})
        label.text = _format_tick(tick)
    x_text = ET.SubElement(group, 'text', {'class': 'x-label', 'x': str((x0 + x1) // 2), 'y': str(HEIGHT - 10),
                                           'text-anchor': 'middle', 'stroke': 'none'})
    x_text.text = x_label
    y_text = ET.SubElement(group, 'text', {'class': 'y-label', 'x': '16', 'y': str((y0 + y1) // 2),
                                           'text-anchor': 'middle', 'stroke': 'none',
                                           'transform': f'rotate(-90 16 {(y0 + y1) // 2})'})
    y_text.text = y_label


def _legend(root: ET.Element, entries: Sequence[Tuple[str, str]]):
    group = ET.SubElement(root, 'g', {'class': 'legend', 'font-family': 'sans-serif', 'font-size': '11'})
    for i, (label, color) in enumerate(entries):
        y = MARGIN_TOP + 6 + 16 * i
        x = WIDTH - MARGIN_RIGHT - 130
        ET.SubElement(group, 'line', {'x1': str(x), 'y1': str(y), 'x2': str(x + 20), 'y2': str(y),
                                      'stroke': color, 'stroke-width': '2'})
        text = ET.SubElement(group, 'text', {'x': str(x + 26), 'y': str(y + 4)})
        text.text = label


def _write(root: ET.Element, path: Union[str, Path]) -> Path:
    path = Path(path)
    ET.indent(root)
    path.write_bytes(ET.tostring(root, encoding='utf-8', xml_declaration=True) + b'\n')
    _logger.debug(f'Wrote {path}')
    return path


def plot_trend(given: Sequence[float], forecast: Sequence[float], channel: str, path: Union[str, Path],
               reproducible: bool = False) -> Path:
    """Given p2p values and their forecast continuation against file ordinal."""
    given = np.asarray(given, dtype=np.float64)
    future = np.asarray(forecast, dtype=np.float64)
    if given.size == 0:
        raise EmptyInput('trend plot needs at least one given value', channel=channel, operation='plot_trend')
    n, h = len(given), len(future)
    axes = _Axes(x_range=(0.0, float(max(n + h - 1, 1))), y_range=_padded_range(np.r_[given, future]))

    root = _new_svg(f'{channel} p2p: {n} given, {h} forecast', reproducible)
    _draw_axes(root, axes, 'file number', 'p2p')
    ET.SubElement(root, 'polyline', {'class': 'given', 'fill': 'none', 'stroke': PALETTE[0], 'stroke-width': '1.5',
                                     'points': axes.points(range(n), given)})
    if h:
        xs = list(range(n - 1, n + h))
        ys = np.r_[given[-1], future]
        ET.SubElement(root, 'polyline', {'class': 'forecast', 'fill': 'none', 'stroke': FORECAST_COLOR,
                                         'stroke-width': '1.5', 'stroke-dasharray': '6,3',
                                         'points': axes.points(xs, ys)})
        markers = ET.SubElement(root, 'g', {'class': 'forecast-points', 'fill': FORECAST_COLOR})
        for x, y in zip(range(n, n + h), future):
            ET.SubElement(markers, 'circle', {'cx': f'{axes.px(x):.2f}', 'cy': f'{axes.py(y):.2f}', 'r': '3'})
    _legend(root, [('given', PALETTE[0]), ('forecast', FORECAST_COLOR)])
    return _write(root, path)


def envelope(signal: Sequence[float], columns: int = DEFAULT_SIGNAL_COLUMNS) -> Tuple[np.ndarray, np.ndarray,
                                                                                      np.ndarray]:
    """Min/max decimation: (column centre sample index, column min, column max) over at most ``columns`` bins."""
    x = np.asarray(signal, dtype=np.float64)
    if x.size == 0:
        raise EmptyInput('signal is empty')
    bins = min(columns, len(x))
    edges = np.linspace(0, len(x), bins + 1).astype(np.int64)
    starts = edges[:-1]
    lows = np.minimum.reduceat(x, starts)
    highs = np.maximum.reduceat(x, starts)
    centres = (edges[:-1] + edges[1:] - 1) / 2.0
    return centres, lows, highs


def plot_signal(signal: Sequence[float], channel: str, file_name: str, path: Union[str, Path],
                columns: int = DEFAULT_SIGNAL_COLUMNS, reproducible: bool = False) -> Path:
    """Amplitude against sample index, drawn as the min/max envelope of each pixel column."""
    centres, lows, highs = envelope(signal, columns)
    axes = _Axes(x_range=(0.0, float(max(len(signal) - 1, 1))), y_range=_padded_range(np.r_[lows, highs]))
    root = _new_svg(f'{file_name} {channel}', reproducible)
    _draw_axes(root, axes, 'sample', 'amplitude')
    outline = axes.points(centres, highs) + ' ' + axes.points(centres[::-1], lows[::-1])
    ET.SubElement(root, 'polygon', {'class': 'signal', 'fill': PALETTE[0], 'stroke': PALETTE[0],
                                    'stroke-width': '0.5', 'points': outline})
    return _write(root, path)


def plot_corpus_p2p(series: Mapping[str, Sequence[float]], path: Union[str, Path], reproducible: bool = False,
                    title: Optional[str] = None) -> Path:
    """p2p of every file, one line per channel, on shared axes."""
    if not series:
        raise EmptyInput('no channels to plot', operation='plot_corpus_p2p')
    values = np.concatenate([np.asarray(v, dtype=np.float64) for v in series.values()])
    longest = max(len(v) for v in series.values())
    axes = _Axes(x_range=(0.0, float(max(longest - 1, 1))), y_range=_padded_range(values))
    root = _new_svg(title or f'p2p per file, {len(series)} channels', reproducible)
    _draw_axes(root, axes, 'file number', 'p2p')
    legend = []
    for i, (channel, ys) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        ET.SubElement(root, 'polyline', {'class': 'channel', 'data-channel': channel, 'fill': 'none',
                                         'stroke': color, 'stroke-width': '1.2',
                                         'points': axes.points(range(len(ys)), ys)})
        legend.append((channel, color))
    _legend(root, legend)
    return _write(root, path)
