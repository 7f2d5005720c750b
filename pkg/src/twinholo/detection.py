"""Photon-counting detection: complex fields or camera frames to bit images.

The camera model is a thresholding photon counter: at most one count per
pixel per frame.  For stochastic-field inputs the detected intensity is
max(|a|^2 - 1/2, 0); subtracting half a photon removes the mean vacuum
contribution, and clipping negatives is the usual low-flux approximation of
this sampling method (a small known false-count bias, quantified in the
tests).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import ComplexField, FAR_FIELD, Grid2D
from .rng import ARM_IDLER, ARM_SIGNAL, PURPOSE_DETECT, keyed_generator

ARM_CODES = {"signal": ARM_SIGNAL, "idler": ARM_IDLER}


@dataclass(frozen=True)
class DetectorParams:
    """eta: quantum efficiency; dark_prob: per-pixel false-count probability;
    gray_threshold: cut for grayscale camera ingestion (camera units)."""

    eta: float = 0.25
    dark_prob: float = 0.0
    gray_threshold: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must be in [0, 1]")
        if not 0.0 <= self.dark_prob <= 1.0:
            raise ValueError("dark_prob must be in [0, 1]")


@dataclass(frozen=True)
class PhotonFrame:
    """Binary photodetection image for one pulse and one arm."""

    grid: Grid2D
    bits: np.ndarray
    frame_index: int
    arm_tag: str

    def __post_init__(self):
        if self.bits.shape != (self.grid.ny, self.grid.nx):
            raise ValueError("frame shape does not match grid")
        if self.arm_tag not in ARM_CODES:
            raise ValueError(f"unknown arm tag {self.arm_tag!r}")
        if not np.isin(self.bits, (0, 1)).all():
            raise ValueError("photon frame must be strictly binary")

    def count(self) -> int:
        return int(self.bits.sum())


def detection_probability(intensity: np.ndarray, params: DetectorParams) -> np.ndarray:
    """Per-pixel click probability for a given detected intensity."""
    p = 1.0 - np.exp(-params.eta * intensity)
    return 1.0 - (1.0 - p) * (1.0 - params.dark_prob)


def clipped_intensity(amplitudes: np.ndarray) -> np.ndarray:
    """Detected intensity of a stochastic field sample: max(|a|^2 - 1/2, 0)."""
    return np.maximum(np.abs(amplitudes) ** 2 - 0.5, 0.0)


def detect(
    f: ComplexField,
    params: DetectorParams,
    seed: int,
    frame_index: int,
    arm_tag: str = "signal",
) -> PhotonFrame:
    """Bernoulli photon-counting sample of a far-field stochastic field."""
    if f.plane_tag != FAR_FIELD:
        raise ValueError("detection expects a far-field input")
    p = detection_probability(clipped_intensity(f.amplitudes), params)
    rng = keyed_generator(seed, frame_index, ARM_CODES[arm_tag], PURPOSE_DETECT)
    bits = (rng.random(p.shape) < p).astype(np.uint8)
    return PhotonFrame(f.grid, bits, frame_index, arm_tag)


def threshold_grayscale(
    gray_image: np.ndarray,
    params: DetectorParams,
    grid: Grid2D,
    frame_index: int = 0,
    arm_tag: str = "signal",
) -> PhotonFrame:
    """Binarize a grayscale camera frame: 1 where gray > threshold."""
    gray = np.asarray(gray_image, dtype=np.float64)
    if not np.isfinite(gray).all():
        raise ValueError("grayscale frame contains non-finite pixels")
    bits = (gray > params.gray_threshold).astype(np.uint8)
    return PhotonFrame(grid, bits, frame_index, arm_tag)
