#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
import math
from pathlib import Path
from typing import Iterable, Sequence, Tuple

import numpy as np


def get_version():
    return Path(__file__).parent.parent.parent.joinpath('__version__').read_text().strip()


def as_float_vector(values: Iterable[float]) -> np.ndarray:
    """Return a read-only 1-D float64 copy of ``values``."""
    arr = np.array(values, dtype=np.float64).ravel()
    arr.setflags(write=False)
    return arr


def is_finite(values: Sequence[float]) -> bool:
    return bool(np.all(np.isfinite(np.asarray(values, dtype=np.float64))))


def parse_triple(text: str) -> Tuple[int, int, int]:
    """Parse ``"p,d,q"`` into a tuple of ints."""
    parts = [p.strip() for p in str(text).split(',')]
    if len(parts) != 3:
        raise ValueError(f'expected three comma-separated integers, got {text!r}')
    return tuple(int(p) for p in parts)


def format_float(value: float) -> str:
    """Shortest round-trip text for ``value`` (``repr`` semantics), ``nan``/``inf`` spelled out."""
    if math.isnan(value):
        return 'nan'
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return repr(float(value))
