"""Coincidence-correlation accumulation and derived statistics.

The correlation map lives on the sum coordinate s = r1 + r2: frame k
contributes sum_r [S_k(r) - mean_S(r)] * [I_k(s - r) - mean_I(s - r)], the
deterministic part (the ensemble mean image of the same run) being removed
exactly.  The accumulator keeps only integer sufficient statistics

    craw(s) = sum_k sum_r S_k(r) I_k(s - r),   sum_k S_k,   sum_k I_k,

so the result is independent of frame order and of how the ensemble is
chunked over workers, bit for bit.  Per-frame products use a direct
photon-coordinate histogram when frames are sparse and an FFT convolution
otherwise; both paths produce identical integers.

The map is normalized per frame; dividing its integral by the geometric
mean of the per-arm photon rates yields the degree of correlation (the
fraction of detected photons that belong to detected pairs).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .detection import PhotonFrame
from .field import Grid2D, nm_to_mm
from .spdc import CrystalParams, PumpParams

# Below this many photon-pair combinations per frame the direct histogram
# beats the padded FFT convolution.
_SPARSE_PAIR_LIMIT = 20_000

FrameStream = Iterable[PhotonFrame | np.ndarray]


@dataclass(frozen=True)
class CorrelationMap:
    """Per-frame coincidence covariance over the sum coordinate.

    values has shape (2*ny, 2*nx); the zero-sum bin is at index (ny, nx) and
    the axes carry the detector's frequency pitch (mm^-1).
    """

    values: np.ndarray
    dnu_x: float
    dnu_y: float
    frames_accumulated: int
    mean_photons_signal: float
    mean_photons_idler: float

    def __post_init__(self):
        if self.frames_accumulated < 1:
            raise ValueError("map must accumulate at least one frame")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def nu_x(self) -> np.ndarray:
        n2 = self.values.shape[1]
        return (np.arange(n2) - n2 // 2) * self.dnu_x

    def nu_y(self) -> np.ndarray:
        n2 = self.values.shape[0]
        return (np.arange(n2) - n2 // 2) * self.dnu_y

    def window(
        self,
        center_mm_inv: tuple[float, float] = (0.0, 0.0),
        half_mm_inv: tuple[float, float] | float = 1.0,
    ) -> tuple[slice, slice]:
        """Slices selecting |nu - center| <= half along each axis."""
        if np.isscalar(half_mm_inv):
            half_mm_inv = (float(half_mm_inv), float(half_mm_inv))
        ny2, nx2 = self.values.shape
        cx = center_mm_inv[0] / self.dnu_x + nx2 // 2
        cy = center_mm_inv[1] / self.dnu_y + ny2 // 2
        hx = half_mm_inv[0] / self.dnu_x
        hy = half_mm_inv[1] / self.dnu_y
        sx = slice(max(0, int(round(cx - hx))), min(nx2, int(round(cx + hx)) + 1))
        sy = slice(max(0, int(round(cy - hy))), min(ny2, int(round(cy + hy)) + 1))
        return sy, sx

    def center_crop(self) -> np.ndarray:
        """Central (ny, nx) block: the sum-coordinate window of the detector."""
        ny2, nx2 = self.values.shape
        ny, nx = ny2 // 2, nx2 // 2
        return self.values[ny - ny // 2 : ny + ny // 2, nx - nx // 2 : nx + nx // 2]


@dataclass(frozen=True)
class CorrelationStats:
    sigma_nu_x: float
    sigma_nu_y: float
    degree: float
    peak_snr: float


@dataclass(frozen=True)
class SchmidtEstimate:
    v_empirical: float
    v_theoretical: float


def _as_bits(frame: PhotonFrame | np.ndarray) -> np.ndarray:
    if isinstance(frame, PhotonFrame):
        return frame.bits
    return np.asarray(frame)


class CorrelationAccumulator:
    """Streaming, order-independent accumulation of twin-frame correlations."""

    def __init__(self, ny: int, nx: int, dnu_x: float, dnu_y: float):
        self.ny, self.nx = ny, nx
        self.dnu_x, self.dnu_y = dnu_x, dnu_y
        self.craw = np.zeros((2 * ny, 2 * nx), dtype=np.int64)
        self.s_sum = np.zeros((ny, nx), dtype=np.int64)
        self.i_sum = np.zeros((ny, nx), dtype=np.int64)
        self.n_frames = 0

    @classmethod
    def for_grid(cls, grid: Grid2D) -> "CorrelationAccumulator":
        return cls(grid.ny, grid.nx, grid.dnu_x, grid.dnu_y)

    def add(self, signal: PhotonFrame | np.ndarray, idler: PhotonFrame | np.ndarray) -> None:
        s = _as_bits(signal)
        i = _as_bits(idler)
        if s.shape != (self.ny, self.nx) or i.shape != (self.ny, self.nx):
            raise ValueError("frame shape does not match accumulator grid")
        ns = int(s.sum())
        ni = int(i.sum())
        if ns and ni:
            if ns * ni <= _SPARSE_PAIR_LIMIT:
                sy, sx = np.nonzero(s)
                iy, ix = np.nonzero(i)
                np.add.at(
                    self.craw,
                    ((sy[:, None] + iy[None, :]).ravel(), (sx[:, None] + ix[None, :]).ravel()),
                    1,
                )
            else:
                conv = _fft_conv_int(s, i)
                self.craw += conv
        self.s_sum += s
        self.i_sum += i
        self.n_frames += 1

    def add_stream(self, signal_frames: FrameStream, idler_frames: FrameStream) -> None:
        sentinel = object()
        for s, i in itertools.zip_longest(signal_frames, idler_frames, fillvalue=sentinel):
            if s is sentinel or i is sentinel:
                raise ValueError("signal and idler streams have different lengths")
            self.add(s, i)

    def merge(self, other: "CorrelationAccumulator") -> None:
        if (self.ny, self.nx) != (other.ny, other.nx):
            raise ValueError("accumulator grids do not match")
        self.craw += other.craw
        self.s_sum += other.s_sum
        self.i_sum += other.i_sum
        self.n_frames += other.n_frames

    def finalize(self) -> CorrelationMap:
        if self.n_frames < 2:
            raise ValueError("need at least 2 frames to subtract the deterministic part")
        k = self.n_frames
        mean_term = _fft_conv_float(self.s_sum / k, self.i_sum / k)
        values = self.craw / k - mean_term
        return CorrelationMap(
            values,
            self.dnu_x,
            self.dnu_y,
            k,
            float(self.s_sum.sum()) / k,
            float(self.i_sum.sum()) / k,
        )


def _fft_conv_int(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ny, nx = a.shape
    fa = np.fft.rfft2(a.astype(np.float64), s=(2 * ny, 2 * nx))
    fb = np.fft.rfft2(b.astype(np.float64), s=(2 * ny, 2 * nx))
    conv = np.fft.irfft2(fa * fb, s=(2 * ny, 2 * nx))
    return np.rint(conv).astype(np.int64)


def _fft_conv_float(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ny, nx = a.shape
    fa = np.fft.rfft2(a, s=(2 * ny, 2 * nx))
    fb = np.fft.rfft2(b, s=(2 * ny, 2 * nx))
    return np.fft.irfft2(fa * fb, s=(2 * ny, 2 * nx))


def _grid_of(frame: PhotonFrame | np.ndarray) -> tuple[int, int, float, float]:
    if isinstance(frame, PhotonFrame):
        g = frame.grid
        return g.ny, g.nx, g.dnu_x, g.dnu_y
    a = np.asarray(frame)
    return a.shape[0], a.shape[1], 1.0, 1.0


def sum_coordinate_correlation(
    signal_frames: FrameStream, idler_frames: FrameStream
) -> CorrelationMap:
    """Mean-subtracted cross-correlation over the sum coordinate, streamed."""
    signal_frames = iter(signal_frames)
    idler_frames = iter(idler_frames)
    try:
        first_s = next(signal_frames)
        first_i = next(idler_frames)
    except StopIteration:
        raise ValueError("need at least 2 frames") from None
    ny, nx, dnux, dnuy = _grid_of(first_s)
    acc = CorrelationAccumulator(ny, nx, dnux, dnuy)
    acc.add(first_s, first_i)
    acc.add_stream(signal_frames, idler_frames)
    return acc.finalize()


def _cyclic_shift(frames: FrameStream, shift: int) -> Iterator[PhotonFrame | np.ndarray]:
    buffer: list = []
    it = iter(frames)
    for _ in range(shift):
        buffer.append(next(it))
    yield from it
    yield from buffer


def shuffled_control(
    signal_frames: FrameStream, idler_frames: FrameStream, shift: int = 1
) -> CorrelationMap:
    """Control correlation between frames that do not share pump pulses.

    The idler stream is cyclically shifted by `shift` frames; shift 0 would
    alias the true correlation and is rejected.
    """
    if int(shift) != shift or shift == 0:
        raise ValueError("shift must be a nonzero integer")
    frames_i = list(idler_frames)
    if len(frames_i) < 3:
        raise ValueError("shuffled control needs at least 3 frames")
    return sum_coordinate_correlation(signal_frames, _cyclic_shift(frames_i, shift % len(frames_i)))


def degree_of_correlation(
    cmap: CorrelationMap, window: tuple[slice, slice] | None = None
) -> float:
    """Integral of the normalized correlation over the window (default: all)."""
    values = cmap.values if window is None else cmap.values[window]
    if values.size == 0:
        raise ValueError("empty window")
    norm = np.sqrt(cmap.mean_photons_signal * cmap.mean_photons_idler)
    if norm == 0:
        raise ValueError("no photons accumulated")
    return float(values.sum() / norm)


def background_stats(
    cmap: CorrelationMap,
    exclude: Iterable[tuple[slice, slice]] = (),
    region: tuple[slice, slice] | None = None,
) -> tuple[float, float]:
    """(median, robust sigma) of the background via median absolute deviation.

    Estimated over the central detector-sized region (where the accidental
    density is approximately uniform) minus the excluded peak windows.
    """
    ny2, nx2 = cmap.values.shape
    if region is None:
        ny, nx = ny2 // 2, nx2 // 2
        region = (
            slice(ny - ny // 2, ny + ny // 2),
            slice(nx - nx // 2, nx + nx // 2),
        )
    mask = np.zeros((ny2, nx2), dtype=bool)
    mask[region] = True
    for w in exclude:
        mask[w] = False
    sample = cmap.values[mask]
    med = float(np.median(sample))
    sigma = 1.4826 * float(np.median(np.abs(sample - med)))
    return med, sigma


def peak_snr(
    cmap: CorrelationMap,
    center_mm_inv: tuple[float, float],
    half_mm_inv: float,
    background: tuple[float, float] | None = None,
    exclude: Iterable[tuple[slice, slice]] = (),
) -> float:
    """Peak height above background, in background standard deviations."""
    if background is None:
        background = background_stats(cmap, exclude=exclude)
    med, sigma = background
    if sigma <= 0:
        raise ValueError("degenerate background estimate")
    w = cmap.window(center_mm_inv, half_mm_inv)
    return float((cmap.values[w].max() - med) / sigma)


def peak_widths(
    cmap: CorrelationMap, window: tuple[slice, slice] | None = None
) -> tuple[float, float]:
    """Background-subtracted second-moment widths (mm^-1) of a single peak.

    Meaningful only for maps with one dominant peak (no-hologram runs); an
    unreliable peak (SNR < 5) is rejected.
    """
    if window is None:
        # momentum anticorrelation confines the peak to a few bins, and a
        # tight window keeps accidental noise out of the second moments
        window = cmap.window((0.0, 0.0), 4.0 * cmap.dnu_x)
    med, sigma = background_stats(cmap, exclude=(window,))
    sub = cmap.values[window] - med
    peak = float(sub.max())
    if sigma > 0 and peak / sigma < 5.0:
        raise ValueError("peak SNR below 5; width estimate unreliable")
    total = sub.sum()
    if total <= 0:
        raise ValueError("no peak mass in window")
    ny2, nx2 = cmap.values.shape
    ix = np.arange(window[1].start, window[1].stop) - nx2 // 2
    iy = np.arange(window[0].start, window[0].stop) - ny2 // 2
    nux = ix * cmap.dnu_x
    nuy = iy * cmap.dnu_y
    px = sub.sum(axis=0) / total
    py = sub.sum(axis=1) / total
    mx = float(np.dot(px, nux))
    my = float(np.dot(py, nuy))
    var_x = float(np.dot(px, (nux - mx) ** 2))
    var_y = float(np.dot(py, (nuy - my) ** 2))
    if var_x <= 0 or var_y <= 0:
        raise ValueError("degenerate peak moments")
    return np.sqrt(var_x), np.sqrt(var_y)


def schmidt_empirical(
    sigma_phi_mm_inv: float, sigma_nu_x_mm_inv: float, sigma_nu_y_mm_inv: float
) -> float:
    """Mode count from the ratio of emission bandwidth to correlation widths."""
    if min(sigma_phi_mm_inv, sigma_nu_x_mm_inv, sigma_nu_y_mm_inv) <= 0:
        raise ValueError("widths must be positive")
    return sigma_phi_mm_inv**2 / (sigma_nu_x_mm_inv * sigma_nu_y_mm_inv)


def schmidt_theoretical(crystal: CrystalParams, pump: PumpParams) -> float:
    """Closed-form mode count from pump size and crystal geometry.

    The numerical factors 0.69 and 1.89 convert between FWHM-based and
    standard-deviation-based bandwidth definitions and are kept verbatim
    from the published expression.
    """
    lam_s = nm_to_mm(crystal.lambda_signal_nm)
    prefactor = (2.0 * np.pi * 0.69 / 1.89) ** 2
    return prefactor * pump.sigma_mm**2 / (
        lam_s * crystal.length_mm * (1.0 / crystal.n_signal + 1.0 / crystal.n_idler)
    )


def bbo_index(wavelength_um: float, ray: str = "o") -> float:
    """Sellmeier refractive index of beta-barium borate at room temperature."""
    lam2 = wavelength_um**2
    if ray == "o":
        n2 = 2.7405 + 0.0184 / (lam2 - 0.0179) - 0.0155 * lam2
    elif ray == "e":
        n2 = 2.3730 + 0.0128 / (lam2 - 0.0156) - 0.0044 * lam2
    else:
        raise ValueError("ray must be 'o' or 'e'")
    return float(np.sqrt(n2))


def to_decibels(values: np.ndarray, floor_db: float = -30.0) -> np.ndarray:
    """10*log10(C / C_max), clipped at floor_db; non-positive bins hit the floor."""
    values = np.asarray(values, dtype=np.float64)
    peak = values.max()
    if peak <= 0:
        raise ValueError("map has no positive peak")
    out = np.full(values.shape, floor_db)
    pos = values > 0
    out[pos] = np.maximum(10.0 * np.log10(values[pos] / peak), floor_db)
    return out
