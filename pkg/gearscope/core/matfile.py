#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
"""Decoder for the numeric subset of the MAT v5 binary format.

Only top-level ``miMATRIX`` elements of class double, real-valued and two-dimensional, are decoded; they may be
wrapped in ``miCOMPRESSED``. Everything else is reported through typed errors when a caller asks for it.
"""
import logging
import struct
import zlib
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np

from gearscope.core.exceptions import CorruptFile, UnsupportedMatFeature

__all__ = ["MatHeader", "MatVariable", "parse_header", "read_variables"]

_logger = logging.getLogger(__name__)

HEADER_SIZE = 128
TAG_SIZE = 8

MI_INT8 = 1
MI_UINT8 = 2
MI_INT16 = 3
MI_UINT16 = 4
MI_INT32 = 5
MI_UINT32 = 6
MI_SINGLE = 7
MI_DOUBLE = 9
MI_INT64 = 12
MI_UINT64 = 13
MI_MATRIX = 14
MI_COMPRESSED = 15
MI_UTF8 = 16
MI_UTF16 = 17
MI_UTF32 = 18

_NUMERIC_DTYPES = {
    MI_INT8: 'i1',
    MI_UINT8: 'u1',
    MI_INT16: 'i2',
    MI_UINT16: 'u2',
    MI_INT32: 'i4',
    MI_UINT32: 'u4',
    MI_SINGLE: 'f4',
    MI_DOUBLE: 'f8',
    MI_INT64: 'i8',
    MI_UINT64: 'u8',
}

MX_DOUBLE = 6
_MX_CLASS_NAMES = {
    1: 'cell', 2: 'struct', 3: 'object', 4: 'char', 5: 'sparse', 6: 'double', 7: 'single',
    8: 'int8', 9: 'uint8', 10: 'int16', 11: 'uint16', 12: 'int32', 13: 'uint32', 14: 'int64', 15: 'uint64',
}

_FLAG_COMPLEX = 0x0800


class MatHeader(NamedTuple):
    text: str
    version: int
    byte_order: str  # '<' or '>'


class MatVariable(NamedTuple):
    """One top-level variable; ``data`` is None when its class is outside the decoded subset."""
    name: str
    mx_class: str
    shape: Tuple[int, ...]
    data: Optional[np.ndarray]
    unsupported_reason: Optional[str] = None


def parse_header(buffer: bytes) -> MatHeader:
    if len(buffer) < HEADER_SIZE:
        raise CorruptFile(f'file is {len(buffer)} bytes, shorter than the {HEADER_SIZE}-byte MAT header')
    if buffer[:8] == b'\x89HDF\r\n\x1a\n' or buffer[512:520] == b'\x89HDF\r\n\x1a\n':
        raise UnsupportedMatFeature('MAT v7.3 (HDF5) files are not supported')
    indicator = buffer[126:128]
    if indicator == b'IM':
        byte_order = '<'
    elif indicator == b'MI':
        byte_order = '>'
    else:
        if buffer[:4] != b'MATL':
            raise UnsupportedMatFeature('not a MAT v5 file (MAT v4 or unknown format)')
        raise CorruptFile(f'bad endian indicator {indicator!r} in MAT header')
    text = buffer[:116].decode('ascii', errors='replace').rstrip(' \x00')
    version, = struct.unpack(byte_order + 'H', buffer[124:126])
    if version == 0x0200 or '7.3' in text:
        raise UnsupportedMatFeature('MAT v7.3 (HDF5) files are not supported')
    if version != 0x0100:
        raise UnsupportedMatFeature(f'unsupported MAT version 0x{version:04x}')
    return MatHeader(text=text, version=version, byte_order=byte_order)


def _read_tag(buffer: bytes, offset: int, byte_order: str) -> Tuple[int, int, int, int]:
    """Returns (type, byte size, data offset, offset of the next element)."""
    if offset + TAG_SIZE > len(buffer):
        if offset + 4 <= len(buffer):
            first, = struct.unpack_from(byte_order + 'I', buffer, offset)
            if first >> 16:
                # small data element: type and size share one word, data sits in the next four bytes
                raise CorruptFile(f'small data element at offset {offset} is truncated')
        raise CorruptFile(f'data element tag at offset {offset} exceeds file bounds')
    first, second = struct.unpack_from(byte_order + 'II', buffer, offset)
    if first >> 16:
        mi_type, size = first & 0xFFFF, first >> 16
        if size > 4:
            raise CorruptFile(f'small data element at offset {offset} declares {size} bytes')
        return mi_type, size, offset + 4, offset + TAG_SIZE
    data_offset = offset + TAG_SIZE
    if data_offset + second > len(buffer):
        raise CorruptFile(f'data element at offset {offset} declares {second} bytes, beyond the end of file')
    if first == MI_COMPRESSED:
        return first, second, data_offset, data_offset + second
    padded = (second + 7) // 8 * 8
    return first, second, data_offset, min(data_offset + padded, len(buffer))


def _numeric(buffer: bytes, mi_type: int, offset: int, size: int, byte_order: str) -> np.ndarray:
    dtype = _NUMERIC_DTYPES.get(mi_type)
    if dtype is None:
        raise UnsupportedMatFeature(f'unsupported data element type {mi_type}')
    dt = np.dtype(byte_order + dtype)
    if size % dt.itemsize:
        raise CorruptFile(f'{size} bytes is not a whole number of {dt.name} values')
    return np.frombuffer(buffer, dtype=dt, count=size // dt.itemsize, offset=offset)


def _sub_element(buffer: bytes, offset: int, end: int, byte_order: str):
    mi_type, size, data_offset, next_offset = _read_tag(buffer, offset, byte_order)
    if data_offset + size > end:
        raise CorruptFile(f'sub-element at offset {offset} overruns its matrix element')
    return mi_type, size, data_offset, next_offset


def _decode_matrix(buffer: bytes, start: int, end: int, byte_order: str) -> MatVariable:
    offset = start
    mi_type, size, data_offset, offset = _sub_element(buffer, offset, end, byte_order)
    if mi_type != MI_UINT32 or size != 8:
        raise CorruptFile('matrix element does not start with array flags')
    flags, _nzmax = struct.unpack_from(byte_order + 'II', buffer, data_offset)
    mx_class = flags & 0xFF
    class_name = _MX_CLASS_NAMES.get(mx_class, f'class-{mx_class}')

    mi_type, size, data_offset, offset = _sub_element(buffer, offset, end, byte_order)
    if mi_type != MI_INT32:
        raise CorruptFile('matrix dimensions are not stored as int32')
    shape = tuple(int(v) for v in _numeric(buffer, mi_type, data_offset, size, byte_order))

    mi_type, size, data_offset, offset = _sub_element(buffer, offset, end, byte_order)
    name = bytes(buffer[data_offset:data_offset + size]).decode('utf-8', errors='replace')

    if mx_class != MX_DOUBLE:
        return MatVariable(name, class_name, shape, None, f'variable class {class_name!r} is not double')
    if flags & _FLAG_COMPLEX:
        return MatVariable(name, class_name, shape, None, 'complex-valued arrays are not supported')
    if len(shape) != 2:
        return MatVariable(name, class_name, shape, None, f'{len(shape)}-D arrays are not supported')

    mi_type, size, data_offset, offset = _sub_element(buffer, offset, end, byte_order)
    # MATLAB may store a double array with a narrower integer type; the class still says double.
    values = _numeric(buffer, mi_type, data_offset, size, byte_order).astype(np.float64)
    if values.size != shape[0] * shape[1]:
        raise CorruptFile(f'variable {name!r} holds {values.size} values for shape {shape}')
    data = values.reshape(shape, order='F')
    return MatVariable(name, class_name, shape, data)


def _inflate(payload: bytes, offset: int) -> bytes:
    try:
        return zlib.decompress(payload)
    except zlib.error as e:
        raise CorruptFile(f'compressed element at offset {offset} failed to inflate: {e}') from e


def read_variables(buffer: bytes) -> Dict[str, MatVariable]:
    """Decode every top-level matrix element of a MAT v5 file held in ``buffer``."""
    header = parse_header(buffer)
    byte_order = header.byte_order
    variables = {}
    offset = HEADER_SIZE
    while offset < len(buffer):
        if len(buffer) - offset < TAG_SIZE and not any(buffer[offset:]):
            break  # trailing zero padding
        mi_type, size, data_offset, next_offset = _read_tag(buffer, offset, byte_order)
        element, element_offset = buffer, offset
        if mi_type == MI_COMPRESSED:
            element = _inflate(bytes(buffer[data_offset:data_offset + size]), offset)
            element_offset = 0
            mi_type, size, data_offset, _ = _read_tag(element, 0, byte_order)
        if mi_type == MI_MATRIX:
            if size:
                variable = _decode_matrix(element, data_offset, data_offset + size, byte_order)
                variables[variable.name] = variable
        else:
            _logger.debug(f'Skipping top-level element of type {mi_type} at offset {element_offset}')
        offset = next_offset
    return variables
