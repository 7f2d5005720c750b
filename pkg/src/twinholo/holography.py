"""Off-axis binary phase hologram (DOE) design and evaluation.

A hologram here is a two-level phase mask b(r) in {0, 1} engraved with a
phase step (design value pi/2).  Its transmission is t(r) = exp(i*phi(r))
with phi = b * phase_step * (1 + depth_error).  Pair readout sees the
squared transmission t^2, which for a pi/2 step is the real pattern +/-1;
classical single-photon readout sees t itself, hence the pi/2 (not pi)
design step for a biphoton source.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import imageio
from .field import ComplexField, Grid2D, NEAR_FIELD, ifft2_centered_array, nm_to_mm
from .rng import PURPOSE_SPECKLE, keyed_generator

LABEL_DIRAC = "dirac_array"
LABEL_SPECKLE = "speckle_image"
LABEL_CUSTOM = "custom"

# Amplitude fraction below which a target pixel does not count as support.
_SUPPORT_EPS = 1e-6


@dataclass(frozen=True)
class TargetPattern:
    """Far-field target amplitude on the frequency axes of a grid.

    Energy sum(|a|^2) is normalized to 1; support must fit inside half the
    frequency window so the carrier offset can move it off axis.
    """

    grid: Grid2D
    amplitude: np.ndarray
    label: str = LABEL_CUSTOM

    def __post_init__(self):
        if self.amplitude.shape != (self.grid.ny, self.grid.nx):
            raise ValueError("target shape does not match grid")

    def support_radius(self) -> float:
        """Largest |nu| (mm^-1) carrying target amplitude."""
        mag = np.abs(self.amplitude)
        mask = mag > _SUPPORT_EPS * mag.max()
        nux, nuy = self.grid.nu_meshgrid()
        return float(np.sqrt(nux[mask] ** 2 + nuy[mask] ** 2).max())


@dataclass(frozen=True)
class PhaseHologram:
    """Binary level map plus engraving parameters.

    carrier is the off-axis spatial frequency (nu0x, nu0y) in mm^-1;
    depth_error is the relative engraving-depth error (0.10 models a 10%
    deep or shallow etch).
    """

    grid: Grid2D
    bits: np.ndarray
    phase_step: float
    carrier: tuple[float, float]
    depth_error: float = 0.0

    def __post_init__(self):
        if self.bits.shape != (self.grid.ny, self.grid.nx):
            raise ValueError("bit map shape does not match grid")
        if not np.isin(self.bits, (0, 1)).all():
            raise ValueError("hologram level map must be strictly binary")

    def phase_map(self) -> np.ndarray:
        return self.bits * (self.phase_step * (1.0 + self.depth_error))


def _normalize(amplitude: np.ndarray) -> np.ndarray:
    energy = np.sum(np.abs(amplitude) ** 2)
    if energy == 0:
        raise ValueError("target pattern has zero energy")
    return amplitude / np.sqrt(energy)


def _check_half_window(grid: Grid2D, radius: float, what: str) -> None:
    half = 0.5 * min(grid.nu_half_window_x, grid.nu_half_window_y)
    if radius > half:
        raise ValueError(
            f"{what} extends to {radius:.3g} mm^-1, beyond half the "
            f"frequency window ({half:.3g} mm^-1)"
        )


def dirac_array_target(
    n_per_side: int, spacing_mm_inv: float, grid: Grid2D
) -> TargetPattern:
    """Square n x n lattice of unit delta peaks centered on the origin."""
    if n_per_side < 1:
        raise ValueError("n_per_side must be >= 1")
    offsets = (np.arange(n_per_side) - (n_per_side - 1) / 2.0) * spacing_mm_inv
    _check_half_window(grid, abs(offsets).max() * np.sqrt(2.0), "Dirac lattice")
    amp = np.zeros((grid.ny, grid.nx))
    snapped = False
    for fy in offsets:
        for fx in offsets:
            ix = fx / grid.dnu_x + grid.nx // 2
            iy = fy / grid.dnu_y + grid.ny // 2
            jx, jy = int(round(ix)), int(round(iy))
            if abs(ix - jx) > 1e-9 or abs(iy - jy) > 1e-9:
                snapped = True
            amp[jy, jx] = 1.0
    if snapped:
        warnings.warn("Dirac peaks fell off the frequency lattice; snapped to nearest bin")
    return TargetPattern(grid, _normalize(amp), LABEL_DIRAC)


def speckle_field(grid: Grid2D, grain_mm_inv: float, seed: int) -> np.ndarray:
    """Deterministic complex speckle on the frequency axes, unit mean intensity.

    Generated by low-pass filtering keyed white complex Gaussian noise; the
    grain parameter is the intensity correlation width in mm^-1.
    """
    rng = keyed_generator(seed, purpose=PURPOSE_SPECKLE)
    noise = rng.normal(size=(grid.ny, grid.nx)) + 1j * rng.normal(size=(grid.ny, grid.nx))
    # Smooth by a Gaussian in "frequency of the frequency plane" space.
    fx = np.fft.fftfreq(grid.nx, d=grid.dnu_x)
    fy = np.fft.fftfreq(grid.ny, d=grid.dnu_y)
    fxx, fyy = np.meshgrid(fx, fy)
    envelope = np.exp(-2.0 * (np.pi * grain_mm_inv) ** 2 * (fxx**2 + fyy**2))
    smooth = np.fft.ifft2(np.fft.fft2(noise) * envelope)
    rms = np.sqrt(np.mean(np.abs(smooth) ** 2))
    return smooth / rms


def speckle_image_target(
    bitmap: np.ndarray,
    diameter_mm_inv: float,
    speckle_grain_mm_inv: float,
    seed: int,
    grid: Grid2D,
) -> TargetPattern:
    """Binary bitmap scaled to the given far-field diameter, times a speckle.

    speckle_grain_mm_inv = 0 disables the speckle (uniform amplitude).
    The speckle is a pure function of the seed, so runs are reproducible.
    """
    bitmap = np.asarray(bitmap)
    if not np.isin(bitmap, (0, 1)).all():
        raise ValueError("bitmap must be binary")
    if bitmap.max() == 0:
        raise ValueError("bitmap is empty")
    _check_half_window(grid, diameter_mm_inv / 2.0, "target bitmap")
    if 0.0 < speckle_grain_mm_inv < min(grid.dnu_x, grid.dnu_y):
        raise ValueError("speckle grain below one frequency bin")

    # Nearest-neighbor resample of the bitmap onto the frequency grid.
    bh, bw = bitmap.shape
    pitch = diameter_mm_inv / max(bh, bw)  # one bitmap cell in mm^-1
    nux, nuy = grid.nu_meshgrid()
    jx = np.floor(nux / pitch + bw / 2.0).astype(int)
    jy = np.floor(nuy / pitch + bh / 2.0).astype(int)
    inside = (jx >= 0) & (jx < bw) & (jy >= 0) & (jy < bh)
    amp = np.zeros((grid.ny, grid.nx), dtype=np.complex128)
    amp[inside] = bitmap[jy[inside], jx[inside]]

    if speckle_grain_mm_inv > 0.0:
        amp = amp * speckle_field(grid, speckle_grain_mm_inv, seed)
    return TargetPattern(grid, _normalize(amp), LABEL_SPECKLE)


def make_smiley_bitmap(n: int = 64) -> np.ndarray:
    """Built-in round smiley-face test pattern (binary, n x n)."""
    yy, xx = np.mgrid[0:n, 0:n]
    x = (xx - (n - 1) / 2.0) / (n / 2.0)
    y = (yy - (n - 1) / 2.0) / (n / 2.0)
    r = np.sqrt(x**2 + y**2)
    face = (r < 0.95) & (r > 0.78)
    eye_l = np.sqrt((x + 0.32) ** 2 + (y + 0.28) ** 2) < 0.12
    eye_r = np.sqrt((x - 0.32) ** 2 + (y + 0.28) ** 2) < 0.12
    mouth = (np.abs(r - 0.52) < 0.09) & (y > 0.18)
    return (face | eye_l | eye_r | mouth).astype(np.uint8)


def design_offaxis_binary(
    target: TargetPattern,
    carrier: tuple[float, float],
    phase_step: float,
    grid: Grid2D,
) -> PhaseHologram:
    """Single-pass interference binarization of the back-projected target.

    The target is inverse-transformed to the hologram plane, interfered with
    the off-axis carrier wave, and the sign of the interference pattern is
    engraved.  For a pi/2 step the squared transmission then reproduces the
    target at the +1 order and its point reflection at the -1 order.
    """
    if target.grid != grid:
        raise ValueError("target grid does not match hologram grid")
    nu0 = float(np.hypot(*carrier))
    radius = target.support_radius()
    if nu0 + radius > min(grid.nu_half_window_x, grid.nu_half_window_y):
        raise ValueError("carrier plus target support falls outside the frequency window")
    u = ifft2_centered_array(np.asarray(target.amplitude, dtype=np.complex128))
    xx, yy = grid.meshgrid()
    interference = np.real(
        u * np.exp(1j * 2.0 * np.pi * (carrier[0] * xx + carrier[1] * yy))
    )
    bits = (interference > 0).astype(np.uint8)
    return PhaseHologram(grid, bits, phase_step, (float(carrier[0]), float(carrier[1])))


def transmission(
    holo: PhaseHologram, squared: bool = False, wavelength_nm: float = 710.0
) -> ComplexField:
    """Unit-modulus transmission e^{i phi} (or e^{i 2 phi} for pair readout)."""
    phi = holo.phase_map()
    if squared:
        phi = 2.0 * phi
    amp = np.exp(1j * phi)
    return ComplexField(holo.grid, nm_to_mm(wavelength_nm), amp, NEAR_FIELD)


def uniform_hologram(grid: Grid2D, phase_step: float = np.pi / 2.0) -> PhaseHologram:
    """All-zero level map: a plain glass slide (t = 1 everywhere)."""
    return PhaseHologram(grid, np.zeros((grid.ny, grid.nx), dtype=np.uint8), phase_step, (0.0, 0.0))


def save_hologram(path_base: str | os.PathLike, holo: PhaseHologram) -> tuple[str, str]:
    """Write <base>.pbm (level map) and <base>.holo.txt (engraving sidecar)."""
    base = os.fspath(path_base)
    pbm_path = base + ".pbm"
    sidecar_path = base + ".holo.txt"
    imageio.write_pbm(pbm_path, holo.bits)
    lines = [
        f"phase_step_rad={holo.phase_step!r}",
        f"depth_error={holo.depth_error!r}",
        f"carrier_nu_x_mm_inv={holo.carrier[0]!r}",
        f"carrier_nu_y_mm_inv={holo.carrier[1]!r}",
        f"pitch_dx_mm={holo.grid.dx!r}",
        f"pitch_dy_mm={holo.grid.dy!r}",
    ]
    with open(sidecar_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return pbm_path, sidecar_path


def load_hologram(path_base: str | os.PathLike) -> PhaseHologram:
    base = os.fspath(path_base)
    bits = imageio.read_pbm(base + ".pbm")
    meta: dict[str, float] = {}
    with open(base + ".holo.txt") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, value = line.split("=", 1)
            meta[key] = float(value)
    ny, nx = bits.shape
    grid = Grid2D(nx, ny, meta["pitch_dx_mm"], meta["pitch_dy_mm"])
    return PhaseHologram(
        grid,
        bits,
        meta["phase_step_rad"],
        (meta["carrier_nu_x_mm_inv"], meta["carrier_nu_y_mm_inv"]),
        meta["depth_error"],
    )


def with_depth_error(holo: PhaseHologram, depth_error: float) -> PhaseHologram:
    return replace(holo, depth_error=depth_error)
