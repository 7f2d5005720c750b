"""Physical-units 2D complex optical fields and Fourier-optics primitives.

Conventions shared by the whole package:

- lengths in mm, spatial frequencies in mm^-1, wavelengths entered in nm and
  stored in mm,
- square centered grids with power-of-two side: the center pixel sits at
  index n // 2 along each axis, in both the spatial and frequency domains,
- centered unitary FFTs (zero frequency at the center pixel, norm="ortho"),
  so sum(|a|^2) is preserved exactly,
- the constant phase and 1/(i*lambda*f) amplitude factors of an ideal 2-f
  Fourier transformer are dropped: only squared moduli of correlations are
  ever reported, so global factors are unobservable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

NEAR_FIELD = "near_field"
FAR_FIELD = "far_field"

# Angular-spectrum defocus is only ever used for millimeter-scale image-plane
# offsets; larger distances are outside this model's validity.
MAX_PROPAGATION_MM = 100.0


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    """Centered sampling grid: nx x ny pixels of pitch dx x dy (mm)."""

    nx: int
    ny: int
    dx: float
    dy: float

    def __post_init__(self):
        for n in (self.nx, self.ny):
            if not _is_pow2(n) or n < 32:
                raise ValueError(f"grid side must be a power of two >= 32, got {n}")
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError("pixel pitch must be positive")

    @property
    def dnu_x(self) -> float:
        """Frequency-domain pitch along x, mm^-1."""
        return 1.0 / (self.nx * self.dx)

    @property
    def dnu_y(self) -> float:
        return 1.0 / (self.ny * self.dy)

    def x(self) -> np.ndarray:
        """Spatial x coordinates (mm), center pixel at index nx // 2."""
        return (np.arange(self.nx) - self.nx // 2) * self.dx

    def y(self) -> np.ndarray:
        return (np.arange(self.ny) - self.ny // 2) * self.dy

    def nu_x(self) -> np.ndarray:
        """Spatial-frequency x coordinates (mm^-1), zero at index nx // 2."""
        return (np.arange(self.nx) - self.nx // 2) * self.dnu_x

    def nu_y(self) -> np.ndarray:
        return (np.arange(self.ny) - self.ny // 2) * self.dnu_y

    def meshgrid(self):
        """(xx, yy) spatial coordinate arrays of shape (ny, nx)."""
        return np.meshgrid(self.x(), self.y())

    def nu_meshgrid(self):
        return np.meshgrid(self.nu_x(), self.nu_y())

    @property
    def nu_half_window_x(self) -> float:
        """Largest representable |nu_x| (mm^-1)."""
        return (self.nx // 2) * self.dnu_x

    @property
    def nu_half_window_y(self) -> float:
        return (self.ny // 2) * self.dnu_y


@dataclass(frozen=True)
class ComplexField:
    """Sampled complex amplitude with physical units.

    amplitudes has shape (ny, nx); row index is y.  plane_tag tells whether
    the grid pitch is spatial (near_field, mm) or a spatial-frequency axis
    (far_field, mm^-1).  For far fields produced by a 2-f system the focal
    length is recorded so detector positions r = lambda * f * nu can be
    reconstructed.
    """

    grid: Grid2D
    wavelength_mm: float
    amplitudes: np.ndarray
    plane_tag: str = NEAR_FIELD
    focal_length_mm: float | None = field(default=None)

    def __post_init__(self):
        if self.plane_tag not in (NEAR_FIELD, FAR_FIELD):
            raise ValueError(f"unknown plane_tag {self.plane_tag!r}")
        if self.amplitudes.shape != (self.grid.ny, self.grid.nx):
            raise ValueError("amplitude shape does not match grid")
        if self.wavelength_mm <= 0:
            raise ValueError("wavelength must be positive")

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def total_power(self) -> float:
        """Mode-sum power sum(|a|^2); conserved by the unitary transforms here."""
        return float(np.sum(self.intensity))

    def detector_x_mm(self) -> np.ndarray:
        """Physical detector coordinates r = lambda * f * nu for a far field."""
        if self.plane_tag != FAR_FIELD or self.focal_length_mm is None:
            raise ValueError("detector coordinates require a 2-f far field")
        return self.wavelength_mm * self.focal_length_mm * self.grid.nu_x()

    def detector_y_mm(self) -> np.ndarray:
        if self.plane_tag != FAR_FIELD or self.focal_length_mm is None:
            raise ValueError("detector coordinates require a 2-f far field")
        return self.wavelength_mm * self.focal_length_mm * self.grid.nu_y()


def nm_to_mm(wavelength_nm: float) -> float:
    return wavelength_nm * 1e-6


def fft2_centered_array(a: np.ndarray) -> np.ndarray:
    """Unitary centered 2D FFT over the last two axes (zero frequency at n//2)."""
    return np.fft.fftshift(
        np.fft.fft2(np.fft.ifftshift(a, axes=(-2, -1)), norm="ortho"),
        axes=(-2, -1),
    )


def ifft2_centered_array(a: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(
        np.fft.ifft2(np.fft.ifftshift(a, axes=(-2, -1)), norm="ortho"),
        axes=(-2, -1),
    )


def fft2_centered(f: ComplexField) -> ComplexField:
    """Centered unitary FFT of a near-field; output lives on frequency axes."""
    if f.plane_tag != NEAR_FIELD:
        raise ValueError("fft2_centered expects a near-field input")
    return replace(f, amplitudes=fft2_centered_array(f.amplitudes), plane_tag=FAR_FIELD)


def ifft2_centered(f: ComplexField) -> ComplexField:
    if f.plane_tag != FAR_FIELD:
        raise ValueError("ifft2_centered expects a far-field input")
    return replace(
        f,
        amplitudes=ifft2_centered_array(f.amplitudes),
        plane_tag=NEAR_FIELD,
        focal_length_mm=None,
    )


def lens_fourier_2f(f: ComplexField, focal_length_mm: float) -> ComplexField:
    """Ideal 2-f Fourier transform: far field on nu axes, r_det = lambda*f*nu."""
    if focal_length_mm <= 0:
        raise ValueError("focal length must be positive")
    out = fft2_centered(f)
    return replace(out, focal_length_mm=focal_length_mm)


def angular_spectrum_kernel(
    grid: Grid2D, wavelength_mm: float, dz_mm: float
) -> np.ndarray:
    """Free-space transfer function on the centered frequency grid.

    Propagating components get exp(i*2*pi*dz*sqrt(1/lambda^2 - nu^2));
    evanescent ones decay with |dz|.
    """
    nux, nuy = grid.nu_meshgrid()
    nu2 = nux**2 + nuy**2
    inv_lam2 = 1.0 / wavelength_mm**2
    kernel = np.empty(nu2.shape, dtype=np.complex128)
    prop = nu2 < inv_lam2
    kz = np.sqrt(np.where(prop, inv_lam2 - nu2, 0.0))
    kernel[prop] = np.exp(1j * 2.0 * np.pi * dz_mm * kz[prop])
    decay = np.sqrt(np.maximum(nu2 - inv_lam2, 0.0))
    kernel[~prop] = np.exp(-2.0 * np.pi * abs(dz_mm) * decay[~prop])
    return kernel


def propagate_angular_spectrum(f: ComplexField, dz_mm: float) -> ComplexField:
    """Exact scalar free-space propagation of a near-field by dz (mm)."""
    if f.plane_tag != NEAR_FIELD:
        raise ValueError("propagation expects a near-field input")
    if abs(dz_mm) > MAX_PROPAGATION_MM:
        raise ValueError(f"|dz| = {abs(dz_mm)} mm exceeds {MAX_PROPAGATION_MM} mm")
    if dz_mm == 0.0:
        return f
    kernel = angular_spectrum_kernel(f.grid, f.wavelength_mm, dz_mm)
    spectrum = fft2_centered_array(f.amplitudes)
    return replace(f, amplitudes=ifft2_centered_array(spectrum * kernel))


def gaussian_beam(grid: Grid2D, sigma_mm: float, wavelength_nm: float) -> ComplexField:
    """Gaussian beam whose *intensity* has standard deviation sigma_mm.

    Peak amplitude 1 at the grid center; amplitude profile exp(-r^2/(4*sigma^2)).
    """
    if sigma_mm <= 0:
        raise ValueError("sigma must be positive")
    if sigma_mm < 2.0 * max(grid.dx, grid.dy):
        raise ValueError("beam sigma below 2 pixels is unresolvable on this grid")
    xx, yy = grid.meshgrid()
    amp = np.exp(-(xx**2 + yy**2) / (4.0 * sigma_mm**2)).astype(np.complex128)
    return ComplexField(grid, nm_to_mm(wavelength_nm), amp, NEAR_FIELD)


def fwhm_to_sigma(fwhm: float) -> float:
    """Gaussian FWHM -> standard deviation."""
    return fwhm / (2.0 * np.sqrt(2.0 * np.log(2.0)))
