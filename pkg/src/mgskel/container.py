"""Versioned binary container for float32 tensors.

Layout, all integers little-endian::

    b"SKT1" | u32 version (=1) | u8 dtype (1 = f32) | u8 rank | u64 dim * rank | payload

The payload is the row-major little-endian element data.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Sequence, Union

import numpy as np

MAGIC = b"SKT1"
FORMAT_VERSION = 1
DTYPE_F32 = 1
_DTYPES = {DTYPE_F32: np.dtype("<f4")}
_HEADER = struct.Struct("<4sIBB")
# payload byte counts must fit a signed 64-bit offset
MAX_PAYLOAD_BYTES = 2**63 - 1

PathOrFile = Union[str, os.PathLike, BinaryIO]


class ContainerError(ValueError):
    pass


class BadMagicError(ContainerError):
    pass


class UnsupportedFormatError(ContainerError):
    pass


class TruncatedPayloadError(ContainerError):
    pass


class DimsOverflowError(ContainerError):
    pass


@dataclass(frozen=True, eq=False)
class TensorBlob:
    """Float32 tensor with explicit dims; ``data`` is the flat row-major payload."""

    dims: tuple[int, ...]
    data: np.ndarray
    dtype: int = DTYPE_F32

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if any(d < 0 for d in dims):
            raise ValueError(f"negative dimension in {dims}")
        if self.dtype not in _DTYPES:
            raise ValueError(f"unsupported dtype code {self.dtype}")
        data = np.ascontiguousarray(self.data, dtype=_DTYPES[self.dtype]).reshape(-1)
        if data.size != _product(dims):
            raise ValueError(f"dims {dims} hold {_product(dims)} elements, payload has {data.size}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "TensorBlob":
        array = np.asarray(array)
        return cls(array.shape, array.reshape(-1))

    def to_array(self) -> np.ndarray:
        return self.data.reshape(self.dims)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TensorBlob):
            return NotImplemented
        # bitwise, so NaN payloads compare equal to themselves
        return (
            self.dims == other.dims
            and self.dtype == other.dtype
            and self.data.tobytes() == other.data.tobytes()
        )

    __hash__ = None  # type: ignore[assignment]


def _product(dims: Sequence[int]) -> int:
    n = 1
    for d in dims:
        n *= d
    return n


def encode_tensor(blob: TensorBlob) -> bytes:
    if len(blob.dims) > 255:
        raise DimsOverflowError(f"rank {len(blob.dims)} exceeds 255")
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, blob.dtype, len(blob.dims))
    dims = struct.pack(f"<{len(blob.dims)}Q", *blob.dims)
    return header + dims + blob.data.astype(_DTYPES[blob.dtype], copy=False).tobytes()


def write_tensor(blob: TensorBlob, sink: PathOrFile) -> None:
    payload = encode_tensor(blob)
    if hasattr(sink, "write"):
        sink.write(payload)
    else:
        with open(sink, "wb") as fh:
            fh.write(payload)


def decode_tensor(buf: bytes) -> TensorBlob:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagicError(f"expected magic {MAGIC!r}, got {bytes(buf[:4])!r}")
    if len(buf) < _HEADER.size:
        raise TruncatedPayloadError("header ends before the rank field")
    _, version, dtype, rank = _HEADER.unpack_from(buf, 0)
    if version != FORMAT_VERSION:
        raise UnsupportedFormatError(f"unsupported format version {version}")
    if dtype not in _DTYPES:
        raise UnsupportedFormatError(f"unsupported dtype code {dtype}")
    off = _HEADER.size
    if len(buf) < off + 8 * rank:
        raise TruncatedPayloadError(f"header declares rank {rank} but dims are cut short")
    dims = struct.unpack_from(f"<{rank}Q", buf, off)
    off += 8 * rank
    itemsize = _DTYPES[dtype].itemsize
    count = _product(dims)
    if count * itemsize > MAX_PAYLOAD_BYTES:
        raise DimsOverflowError(f"dims {dims} describe more than {MAX_PAYLOAD_BYTES} bytes")
    need = count * itemsize
    have = len(buf) - off
    if have < need:
        raise TruncatedPayloadError(f"payload has {have} bytes, dims {dims} need {need}")
    if have > need:
        raise ContainerError(f"{have - need} trailing bytes after payload")
    data = np.frombuffer(buf, dtype=_DTYPES[dtype], count=count, offset=off).copy()
    return TensorBlob(dims, data, dtype)


def read_tensor(source: PathOrFile) -> TensorBlob:
    if hasattr(source, "read"):
        buf = source.read()
    else:
        buf = Path(source).read_bytes()
    return decode_tensor(buf)

