#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
"""Deterministic synthetic gearbox corpus.

Every file holds one CSV column per channel: a gear-mesh tone with two harmonics and seeded noise, rescaled so its
peak-to-peak value equals a prescribed target. Targets follow a period-4 ripple around a per-channel base level,
with an optional transient spike on the first channels and an optional exponential growth of all channels.
"""
import logging
from datetime import datetime, timedelta
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Union

import numpy as np
import pandas as pd

from gearscope.core.utils.constants import DEFAULT_CHANNELS

__all__ = ["SyntheticCorpusSpec", "target_p2p", "synthetic_signal", "synthetic_file_name", "write_corpus"]

_logger = logging.getLogger(__name__)

# First-file p2p of each sensor in the reference run; the synthetic corpus starts from these levels
BASE_LEVELS = (80.8093, 53.6380, 81.292285, 93.0710)
RIPPLE = (0.97, 1.00, 0.98, 1.04)
FIRST_TIMESTAMP = datetime(2021, 12, 8, 9, 0, 0)
FIRST_DAY = 21


class SyntheticCorpusSpec(NamedTuple):
    """
    :param files: number of files in the corpus
    :param samples: samples per channel per file
    :param channels: channel labels, written as CSV header
    :param spike_file: ordinal of the file where the first ``spike_channels`` channels jump; None for no spike
    :param spike_channels: number of channels that jump at ``spike_file``
    :param spike_factor: jump multiplier
    :param growth_start: ordinal from which every channel grows by ``growth_rate`` per file; None for no growth
    :param growth_rate: multiplicative growth per file
    :param seed: seed of the noise generator
    """
    files: int = 30
    samples: int = 4193
    channels: Sequence[str] = DEFAULT_CHANNELS
    spike_file: Optional[int] = 7
    spike_channels: int = 2
    spike_factor: float = 10.0
    growth_start: Optional[int] = 20
    growth_rate: float = 1.5
    seed: int = 2023

    @classmethod
    def healthy(cls, **kwargs) -> 'SyntheticCorpusSpec':
        return cls(spike_file=None, growth_start=None, **kwargs)


def target_p2p(spec: SyntheticCorpusSpec = SyntheticCorpusSpec()) -> np.ndarray:
    """Prescribed p2p per (file, channel)."""
    base = np.array([BASE_LEVELS[c % len(BASE_LEVELS)] for c in range(len(spec.channels))])
    targets = np.empty((spec.files, len(spec.channels)))
    for t in range(spec.files):
        level = RIPPLE[t % len(RIPPLE)]
        if spec.growth_start is not None and t >= spec.growth_start:
            level *= spec.growth_rate ** (t - spec.growth_start)
        targets[t] = base * level
        if spec.spike_file is not None and t == spec.spike_file:
            targets[t, :spec.spike_channels] *= spec.spike_factor
    return targets


def synthetic_signal(rng: np.random.Generator, samples: int, p2p: float, offset: float = 0.0) -> np.ndarray:
    k = np.arange(samples)
    mesh = 1 / 32.0  # cycles per sample
    x = np.sin(2 * np.pi * mesh * k) + 0.4 * np.sin(4 * np.pi * mesh * k + 0.3) + 0.2 * np.sin(6 * np.pi * mesh * k)
    x += 0.3 * rng.standard_normal(samples)
    x = (x - x.min()) / np.ptp(x) - 0.5
    return x * p2p + offset


def synthetic_file_name(ordinal: int, tag: str = 'Synthetic_SSA') -> str:
    timestamp = FIRST_TIMESTAMP + timedelta(hours=4 * ordinal)
    day = FIRST_DAY + (timestamp.date() - FIRST_TIMESTAMP.date()).days
    return f'Day{day:03d}_{tag}_{timestamp:%Y%m%d_%H%M%S}.csv'


def write_corpus(out_dir: Union[str, Path], spec: SyntheticCorpusSpec = SyntheticCorpusSpec()) -> List[Path]:
    """Write the corpus as CSV files named like the challenge data; returns the paths in corpus order."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    targets = target_p2p(spec)
    paths = []
    for t in range(spec.files):
        columns = {label: synthetic_signal(rng, spec.samples, targets[t, c], offset=0.01 * (c + 1))
                   for c, label in enumerate(spec.channels)}
        path = out_dir / synthetic_file_name(t)
        pd.DataFrame(columns).to_csv(path, index=False, float_format='%.6f', lineterminator='\n')
        paths.append(path)
    _logger.info(f'Wrote {len(paths)} synthetic files to {out_dir}')
    return paths
