"""BFS1: bit-packed binary frame stacks, streamed to and from disk.

Layout (little endian):

    bytes 0..3    magic "BFS1"
    bytes 4..23   uint32 width, height, frame_count, arm (0=signal, 1=idler),
                  row stride in bytes (= ceil(width / 8))
    then          frame_count frames of stride * height bytes,
                  row-major, bits packed MSB first.

The writer keeps the header's frame_count current after every frame, so an
aborted run leaves a valid partial file; appending to an existing stack
resumes it.
"""

from __future__ import annotations

import os
import struct
from typing import Iterator

import numpy as np

MAGIC = b"BFS1"
HEADER = struct.Struct("<4s5I")
ARM_NAMES = {0: "signal", 1: "idler"}
ARM_CODES = {v: k for k, v in ARM_NAMES.items()}


class FrameStackWriter:
    def __init__(self, path: str | os.PathLike, width: int, height: int, arm: str):
        self.path = os.fspath(path)
        self.width = width
        self.height = height
        self.arm = arm
        self.stride = (width + 7) // 8
        self.frame_count = 0
        if os.path.exists(self.path) and os.path.getsize(self.path) >= HEADER.size:
            reader = FrameStackReader(self.path)
            if (reader.width, reader.height, reader.arm) != (width, height, arm):
                raise ValueError(f"existing stack {self.path} has incompatible geometry")
            self.frame_count = reader.frame_count
            self._fh = open(self.path, "r+b")
            self._fh.seek(HEADER.size + self.frame_count * self.stride * height)
        else:
            self._fh = open(self.path, "w+b")
            self._write_header()

    def _write_header(self) -> None:
        pos = self._fh.tell()
        self._fh.seek(0)
        self._fh.write(
            HEADER.pack(MAGIC, self.width, self.height, self.frame_count, ARM_CODES[self.arm], self.stride)
        )
        self._fh.seek(max(pos, HEADER.size))

    def append(self, bits: np.ndarray) -> None:
        bits = np.asarray(bits)
        if bits.shape != (self.height, self.width):
            raise ValueError("frame shape does not match stack geometry")
        packed = np.packbits(bits.astype(bool), axis=1)
        self._fh.write(packed.tobytes())
        self.frame_count += 1
        self._write_header()

    def close(self) -> None:
        if not self._fh.closed:
            self._write_header()
            self._fh.close()

    def __enter__(self) -> "FrameStackWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class FrameStackReader:
    def __init__(self, path: str | os.PathLike):
        self.path = os.fspath(path)
        with open(self.path, "rb") as fh:
            header = fh.read(HEADER.size)
        magic, self.width, self.height, self.frame_count, arm_code, self.stride = HEADER.unpack(header)
        if magic != MAGIC:
            raise ValueError(f"not a BFS1 stack: {self.path}")
        if self.stride != (self.width + 7) // 8:
            raise ValueError(f"corrupt stride in {self.path}")
        if arm_code not in ARM_NAMES:
            raise ValueError(f"unknown arm code {arm_code} in {self.path}")
        self.arm = ARM_NAMES[arm_code]
        self._frame_bytes = self.stride * self.height

    def frame(self, index: int) -> np.ndarray:
        if not 0 <= index < self.frame_count:
            raise IndexError(f"frame {index} out of range")
        with open(self.path, "rb") as fh:
            fh.seek(HEADER.size + index * self._frame_bytes)
            raw = fh.read(self._frame_bytes)
        return self._unpack(raw)

    def _unpack(self, raw: bytes) -> np.ndarray:
        packed = np.frombuffer(raw, dtype=np.uint8).reshape(self.height, self.stride)
        return np.unpackbits(packed, axis=1)[:, : self.width]

    def __len__(self) -> int:
        return self.frame_count

    def __iter__(self) -> Iterator[np.ndarray]:
        with open(self.path, "rb") as fh:
            fh.seek(HEADER.size)
            for _ in range(self.frame_count):
                raw = fh.read(self._frame_bytes)
                if len(raw) < self._frame_bytes:
                    raise IOError(f"truncated stack {self.path}")
                yield self._unpack(raw)
