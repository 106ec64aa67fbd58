"""Little-endian binary readers shared by the weight and model file formats."""

from __future__ import annotations

import struct

import numpy as np


class ModelFormatError(Exception):
    """Base class for unreadable model files."""


class BadMagicError(ModelFormatError):
    """The payload does not start with the expected magic bytes."""


class TruncatedPayloadError(ModelFormatError):
    """The payload ends before the declared content does."""


class VersionMismatchError(ModelFormatError):
    """The payload declares a format version this code does not read."""


class ByteReader:
    """Sequential reader raising TruncatedPayloadError on short reads."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def read(self, n: int) -> bytes:
        end = self._pos + n
        if end > len(self._data):
            raise TruncatedPayloadError(
                f"need {n} bytes at offset {self._pos}, only {len(self._data) - self._pos} left"
            )
        chunk = self._data[self._pos : end]
        self._pos = end
        return chunk

    def expect_magic(self, magic: bytes) -> None:
        if self._data[: len(magic)] != magic:
            raise BadMagicError(
                f"expected magic {magic!r}, got {self._data[: len(magic)]!r}"
            )
        self._pos = len(magic)

    def read_u8(self) -> int:
        return struct.unpack("<B", self.read(1))[0]

    def read_u32(self) -> int:
        return struct.unpack("<I", self.read(4))[0]

    def read_i32(self) -> int:
        return struct.unpack("<i", self.read(4))[0]

    def read_f64(self) -> float:
        return struct.unpack("<d", self.read(8))[0]

    def read_f64_array(self, shape: tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape)) if shape else 1
        raw = self.read(count * 8)
        return np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)

    def read_str(self) -> str:
        length = self.read_u32()
        return self.read(length).decode("utf-8")

    def expect_end(self) -> None:
        if self._pos != len(self._data):
            raise ModelFormatError(
                f"{len(self._data) - self._pos} unexpected trailing bytes"
            )


def pack_u8(value: int) -> bytes:
    return struct.pack("<B", value)


def pack_u32(value: int) -> bytes:
    return struct.pack("<I", value)


def pack_i32(value: int) -> bytes:
    return struct.pack("<i", value)


def pack_f64(value: float) -> bytes:
    return struct.pack("<d", value)


def pack_f64_array(array: np.ndarray) -> bytes:
    return np.ascontiguousarray(array, dtype="<f8").tobytes()


def pack_str(text: str) -> bytes:
    raw = text.encode("utf-8")
    return pack_u32(len(raw)) + raw
