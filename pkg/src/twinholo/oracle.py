"""Analytic coincidence-rate map for the focused, ideal pipeline.

For momentum-anticorrelated pairs traversing a thin phase object t(r) and
ideal 2-f optics, the coincidence rate depends only on the sum coordinate
and equals |FT(E_p(r) * t^2(r))|^2 evaluated at nu = (r1 + r2)/(lambda f).
This module computes that map directly (product then FT, by the convolution
theorem) and is the reference every Monte Carlo engine is validated against.
Defocus has no analytic shortcut here; it lives only in the stochastic
engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import ComplexField, Grid2D, NEAR_FIELD, fft2_centered_array
from .holography import PhaseHologram, transmission


@dataclass(frozen=True)
class OracleMap:
    """Non-negative unit-mass coincidence distribution over the sum coordinate.

    values[iy, ix] is the probability of sum frequency
    (nu_x[ix], nu_y[iy]) on the grid's frequency axes (mm^-1).
    """

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.ny, self.grid.nx):
            raise ValueError("oracle map shape does not match grid")

    def nu_x(self) -> np.ndarray:
        return self.grid.nu_x()

    def nu_y(self) -> np.ndarray:
        return self.grid.nu_y()


def analytic_coincidence_map(pump: ComplexField, holo: PhaseHologram) -> OracleMap:
    """|FT(E_p * t^2)|^2, normalized to unit sum."""
    if pump.grid != holo.grid:
        raise ValueError("pump and hologram grids do not match")
    if pump.plane_tag != NEAR_FIELD:
        raise ValueError("pump must be a near-field amplitude")
    t2 = transmission(holo, squared=True).amplitudes
    spectrum = fft2_centered_array(pump.amplitudes * t2)
    values = np.abs(spectrum) ** 2
    total = values.sum()
    if total == 0:
        raise ValueError("coincidence map has zero mass")
    return OracleMap(pump.grid, values / total)


def compare_maps(
    a: np.ndarray, b: np.ndarray, window: tuple[slice, slice] | None = None
) -> dict[str, float]:
    """Pearson correlation and relative L2 distance between two maps."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("maps have different shapes")
    if window is not None:
        a = a[window]
        b = b[window]
    da = a - a.mean()
    db = b - b.mean()
    na = np.sqrt(np.sum(da**2))
    nb = np.sqrt(np.sum(db**2))
    if na == 0 or nb == 0:
        raise ValueError("zero-variance input")
    pearson = float(np.sum(da * db) / (na * nb))
    ref = np.sqrt(np.sum(b**2))
    l2_rel = float(np.sqrt(np.sum((a - b) ** 2)) / ref) if ref > 0 else float("inf")
    return {"pearson": pearson, "l2_rel": l2_rel}
