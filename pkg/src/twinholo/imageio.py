"""Minimal on-disk image formats: 1-bit PBM, 16-bit PGM, planar float32 dumps.

All writers are deterministic byte-for-byte for identical inputs (no
timestamps or comments), which the run-manifest reproducibility contract
relies on.
"""

from __future__ import annotations

import os

import numpy as np


def write_pbm(path: str | os.PathLike, bits: np.ndarray) -> None:
    """Write a binary image as raw PBM (P4); nonzero pixels become 1."""
    bits = np.asarray(bits)
    if bits.ndim != 2:
        raise ValueError("PBM expects a 2D image")
    h, w = bits.shape
    packed = np.packbits(bits.astype(bool), axis=1)
    with open(path, "wb") as fh:
        fh.write(f"P4\n{w} {h}\n".encode("ascii"))
        fh.write(packed.tobytes())


def read_pbm(path: str | os.PathLike) -> np.ndarray:
    """Read a raw PBM (P4) image into a uint8 array of 0/1."""
    with open(path, "rb") as fh:
        data = fh.read()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P4":
        raise ValueError(f"not a raw PBM file: {path}")
    w, h = int(fields[1]), int(fields[2])
    pos += 1  # single whitespace after the header
    stride = (w + 7) // 8
    raw = np.frombuffer(data[pos : pos + stride * h], dtype=np.uint8)
    bits = np.unpackbits(raw.reshape(h, stride), axis=1)[:, :w]
    return bits.astype(np.uint8)


def write_pgm16(path: str | os.PathLike, image: np.ndarray) -> None:
    """Write a float image rescaled to the full 16-bit range as raw PGM (P5)."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError("PGM expects a 2D image")
    lo, hi = float(image.min()), float(image.max())
    if hi > lo:
        scaled = (image - lo) / (hi - lo)
    else:
        scaled = np.zeros_like(image)
    pix = np.round(scaled * 65535.0).astype(">u2")
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(pix.tobytes())


def read_pgm16(path: str | os.PathLike) -> np.ndarray:
    """Read a raw 8- or 16-bit PGM (P5) into a float64 array of raw counts."""
    with open(path, "rb") as fh:
        data = fh.read()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P5":
        raise ValueError(f"not a raw PGM file: {path}")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    pos += 1
    dtype = ">u2" if maxval > 255 else np.uint8
    pix = np.frombuffer(data[pos:], dtype=dtype, count=w * h)
    return pix.reshape(h, w).astype(np.float64)


def write_float_planar(path: str | os.PathLike, field_amplitudes: np.ndarray) -> None:
    """Debug dump of a complex field: real plane then imaginary plane, float32.

    Layout: magic 'FPL1', uint32 width, uint32 height (little endian), then
    two row-major float32 planes.
    """
    a = np.asarray(field_amplitudes, dtype=np.complex128)
    h, w = a.shape
    with open(path, "wb") as fh:
        fh.write(b"FPL1")
        fh.write(np.array([w, h], dtype="<u4").tobytes())
        fh.write(a.real.astype("<f4").tobytes())
        fh.write(a.imag.astype("<f4").tobytes())


def read_float_planar(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(4) != b"FPL1":
            raise ValueError(f"not a planar float dump: {path}")
        w, h = np.frombuffer(fh.read(8), dtype="<u4")
        n = int(w) * int(h)
        re = np.frombuffer(fh.read(4 * n), dtype="<f4").reshape(h, w)
        im = np.frombuffer(fh.read(4 * n), dtype="<f4").reshape(h, w)
    return re.astype(np.float64) + 1j * im.astype(np.float64)
