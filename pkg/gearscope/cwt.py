#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
"""Analytic Morlet continuous wavelet transform and scalogram rasterization.

The wavelet is defined in the frequency domain only: ``exp(-(s*w - w0)**2 / 2)`` on positive frequencies and zero
elsewhere, so every filter row peaks at gain 1 and the transform is computed as one DFT, a product per scale,
and an inverse DFT.
"""
import logging
import math
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft as sp_fft
from scipy import ndimage

from gearscope.core.exceptions import EmptyInput, InvalidSpec, LengthMismatch
from gearscope.core.utils import format_float
from gearscope.core.utils.constants import (DEFAULT_CENTER_FREQUENCY, DEFAULT_IMAGE_SIZE, DEFAULT_SEGMENT_LENGTH,
                                            DEFAULT_VOICES_PER_OCTAVE)
from gearscope.core.utils.error_handling import with_error_context

__all__ = [
    "FilterBankSpec", "FilterBank", "Scalogram", "build_filterbank", "cwt", "rasterize", "scalogram",
    "write_pgm", "read_pgm", "write_magnitudes_csv", "scalogram_file_name"
]

_logger = logging.getLogger(__name__)


class FilterBankSpec(NamedTuple):
    voices_per_octave: int = DEFAULT_VOICES_PER_OCTAVE
    segment_length: int = DEFAULT_SEGMENT_LENGTH
    center_frequency: float = DEFAULT_CENTER_FREQUENCY
    period_range: Optional[Tuple[float, float]] = None

    @property
    def periods(self) -> Tuple[float, float]:
        """(min_period, max_period) in samples; defaults to (4, N/4)."""
        if self.period_range is None:
            return 4.0, self.segment_length / 4.0
        return float(self.period_range[0]), float(self.period_range[1])

    def validate(self) -> 'FilterBankSpec':
        errors = []
        if self.voices_per_octave < 1:
            errors.append(f'voices_per_octave must be >= 1, got {self.voices_per_octave}')
        if self.segment_length < 2:
            errors.append(f'segment_length must be >= 2, got {self.segment_length}')
        if not self.center_frequency > 0:
            errors.append(f'center_frequency must be > 0, got {self.center_frequency}')
        min_period, max_period = self.periods
        if min_period < 2:
            errors.append(f'min_period must be >= 2, got {min_period}')
        if not min_period < max_period:
            errors.append(f'min_period must be < max_period, got {min_period} >= {max_period}')
        if max_period > self.segment_length:
            errors.append(f'max_period must be <= segment_length {self.segment_length}, got {max_period}')
        if errors:
            raise InvalidSpec(errors)
        return self


class FilterBank(NamedTuple):
    spec: FilterBankSpec
    scales: np.ndarray
    freq_responses: np.ndarray  # (num_scales, N), real and nonnegative

    @property
    def num_scales(self) -> int:
        return len(self.scales)

    @property
    def segment_length(self) -> int:
        return self.freq_responses.shape[1]

    @property
    def periods(self) -> np.ndarray:
        """Period in samples at which each row peaks."""
        return 2 * np.pi * self.scales / self.spec.center_frequency


class Scalogram(NamedTuple):
    magnitudes: np.ndarray
    image: np.ndarray


@with_error_context('build_filterbank')
def build_filterbank(spec: FilterBankSpec = FilterBankSpec()) -> FilterBank:
    """Build the Morlet filter bank at scales ``s0 * 2**(k/v)``.

    ``s0 = w0 * min_period / (2*pi)`` so the smallest scale peaks at the frequency of ``min_period``; the bank
    holds ``floor(v * log2(max_period / min_period)) + 1`` scales.
    """
    spec.validate()
    nu = spec.voices_per_octave
    n = spec.segment_length
    w0 = spec.center_frequency
    min_period, max_period = spec.periods

    # the tolerance keeps exact octave spans from losing their last voice to rounding
    num_scales = int(math.floor(nu * math.log2(max_period / min_period) + 1e-9)) + 1
    s0 = w0 * min_period / (2 * np.pi)
    scales = s0 * np.power(2.0, np.arange(num_scales) / nu)

    positive = np.arange(1, n // 2 + 1)
    omega = 2 * np.pi * positive / n
    responses = np.zeros((num_scales, n), dtype=np.float64)
    responses[:, positive] = np.exp(-0.5 * (scales[:, None] * omega[None, :] - w0) ** 2)

    scales.setflags(write=False)
    responses.setflags(write=False)
    _logger.debug(f'Built filter bank: {num_scales} scales, N={n}, periods {min_period}..{max_period}')
    return FilterBank(spec=spec, scales=scales, freq_responses=responses)


@with_error_context('cwt')
def cwt(segment: Sequence[float], bank: FilterBank) -> np.ndarray:
    """|CWT| magnitudes, one row per scale (smallest scale first), with circular boundary handling."""
    x = np.asarray(segment, dtype=np.float64)
    if x.ndim != 1 or len(x) != bank.segment_length:
        raise LengthMismatch(f'segment has {x.size} samples, filter bank expects {bank.segment_length}')
    spectrum = sp_fft.fft(x)
    coefficients = sp_fft.ifft(spectrum[None, :] * bank.freq_responses, axis=1)
    return np.abs(coefficients)


@with_error_context('rasterize')
def rasterize(magnitudes: np.ndarray, out_size: Tuple[int, int] = DEFAULT_IMAGE_SIZE) -> np.ndarray:
    """Bilinear resample to ``(H, W)`` and min-max normalize to uint8 with round-half-up.

    Row 0 of the image is the smallest scale; corner pixels map onto corner samples. A constant input gives an
    all-zero image.
    """
    m = np.asarray(magnitudes, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise EmptyInput(f'magnitude matrix must be a nonempty 2-D array, got shape {m.shape}')
    height, width = int(out_size[0]), int(out_size[1])
    if height < 1 or width < 1:
        raise EmptyInput(f'output size must be at least 1x1, got {height}x{width}')

    rows = np.linspace(0, m.shape[0] - 1, height) if height > 1 else np.zeros(1)
    cols = np.linspace(0, m.shape[1] - 1, width) if width > 1 else np.zeros(1)
    grid_rows, grid_cols = np.meshgrid(rows, cols, indexing='ij')
    resampled = ndimage.map_coordinates(m, [grid_rows, grid_cols], order=1, mode='nearest')

    lo, hi = float(resampled.min()), float(resampled.max())
    if hi == lo:
        return np.zeros((height, width), dtype=np.uint8)
    scaled = (resampled - lo) / (hi - lo) * 255.0
    return np.clip(np.floor(scaled + 0.5), 0, 255).astype(np.uint8)


def scalogram(segment: Sequence[float], bank: FilterBank,
              out_size: Tuple[int, int] = DEFAULT_IMAGE_SIZE) -> Scalogram:
    magnitudes = cwt(segment, bank)
    return Scalogram(magnitudes=magnitudes, image=rasterize(magnitudes, out_size))


def scalogram_file_name(file_name: str, channel: str, segment_index: int, suffix: str = '.pgm') -> str:
    return f'{Path(file_name).stem}_{channel}_seg{segment_index}{suffix}'


def write_pgm(image: np.ndarray, path: Union[str, Path]) -> Path:
    """Write an 8-bit grayscale image as binary PGM (P5, maxval 255)."""
    path = Path(path)
    pixels = np.ascontiguousarray(image, dtype=np.uint8)
    if pixels.ndim != 2:
        raise EmptyInput(f'PGM image must be 2-D, got shape {pixels.shape}')
    height, width = pixels.shape
    path.write_bytes(f'P5\n{width} {height}\n255\n'.encode('ascii') + pixels.tobytes())
    return path


def read_pgm(path: Union[str, Path]) -> np.ndarray:
    """Read a binary PGM (P5, maxval 255) as written by write_pgm; comment lines are allowed in the header."""
    data = Path(path).read_bytes()
    fields, offset = [], 0
    while len(fields) < 4:
        while offset < len(data) and data[offset:offset + 1].isspace():
            offset += 1
        if data[offset:offset + 1] == b'#':
            offset = data.index(b'\n', offset) + 1
            continue
        start = offset
        while offset < len(data) and not data[offset:offset + 1].isspace():
            offset += 1
        fields.append(data[start:offset])
    magic, width, height, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    if magic != b'P5' or maxval != 255:
        raise EmptyInput(f'{Path(path).name} is not an 8-bit binary PGM')
    offset += 1  # single whitespace byte before the raster
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=offset)
    return pixels.reshape(height, width).copy()


def write_magnitudes_csv(magnitudes: np.ndarray, path: Union[str, Path]) -> Path:
    """Raw |CWT| dump: one row per scale (descending frequency), one column per time sample."""
    path = Path(path)
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        for row in np.asarray(magnitudes, dtype=np.float64):
            fh.write(','.join(format_float(v) for v in row) + '\n')
    return path
