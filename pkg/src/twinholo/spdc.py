"""Stochastic generation of twin-photon frames.

Two engines produce (signal, idler) photodetection frames per pump pulse:

- the stochastic-field ("wigner") engine seeds both arms with half a photon
  of complex Gaussian noise per mode, integrates the parametric coupling
  through the crystal with a symmetric split-step scheme, then pushes each
  arm through defocus, hologram and a 2-f lens before photon counting,
- the pair-sampling engine draws photon pairs directly from the analytic
  coincidence distribution over the sum coordinate, with uniform singles
  marginals, Bernoulli detection efficiency and sensor-truncation loss.

Both are pure functions of (configuration, master seed): every random draw
comes from a counter-based stream keyed by frame index, arm and purpose, so
ensembles are reproducible for any batching or worker layout.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .detection import DetectorParams, PhotonFrame, clipped_intensity, detection_probability
from .field import (
    ComplexField,
    Grid2D,
    NEAR_FIELD,
    angular_spectrum_kernel,
    fft2_centered_array,
    ifft2_centered_array,
    nm_to_mm,
)
from .holography import PhaseHologram, transmission
from .oracle import OracleMap
from .rng import (
    ARM_IDLER,
    ARM_SIGNAL,
    ARM_SHARED,
    PURPOSE_BACKGROUND,
    PURPOSE_DETECT,
    PURPOSE_PAIRS,
    PURPOSE_VACUUM,
    keyed_generator,
)

_ARM_CODES = {"signal": ARM_SIGNAL, "idler": ARM_IDLER}

# Per-step parametric gain above which the split-step integration is no
# longer trusted.
MAX_STEP_GAIN = 0.2


@dataclass(frozen=True)
class CrystalParams:
    """Nonlinear crystal constants (degenerate type-II geometry).

    length_mm: crystal thickness; n_signal/n_idler: refractive indices at the
    down-converted wavelength; sigma_phi_mm_inv: phase-matching standard
    deviation (used by the dimensionality analysis); g0: peak dimensionless
    parametric gain, restricted to the photon-counting low-gain regime.
    """

    length_mm: float = 0.8
    n_signal: float = 1.6645
    n_idler: float = 1.5482
    lambda_pump_nm: float = 355.0
    lambda_signal_nm: float = 710.0
    sigma_phi_mm_inv: float = 27.0
    g0: float = 0.2

    def __post_init__(self):
        if abs(self.lambda_signal_nm - 2.0 * self.lambda_pump_nm) > 1e-3 * self.lambda_signal_nm:
            raise ValueError("engine assumes degenerate operation: lambda_s = 2 lambda_p")
        if self.sigma_phi_mm_inv <= 0:
            raise ValueError("sigma_phi must be positive")
        if not 0.0 <= self.g0 <= 0.5:
            raise ValueError("g0 must be in [0, 0.5] (low-gain regime)")
        if self.length_mm <= 0:
            raise ValueError("crystal length must be positive")


@dataclass(frozen=True)
class PumpParams:
    """Gaussian pump envelope: intensity standard deviation in mm, peak 1."""

    sigma_mm: float = 0.68

    def __post_init__(self):
        if self.sigma_mm <= 0:
            raise ValueError("pump sigma must be positive")


@dataclass(frozen=True)
class SimConfig:
    engine: str = "pair_sampling"  # or "wigner"
    frames: int = 1
    master_seed: int = 0
    defocus_dz_mm: float = 0.0
    eta: float = 0.25
    mean_pairs_per_frame: float = 100.0
    background_rate: float = 0.0
    split_steps: int = 8

    def __post_init__(self):
        if self.engine not in ("pair_sampling", "wigner"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must be in [0, 1]")


def generate_vacuum(
    grid: Grid2D, seed: int, frame_index: int, arm_tag: str, wavelength_nm: float = 710.0
) -> ComplexField:
    """Half a photon per mode of circular complex Gaussian noise, keyed stream."""
    rng = keyed_generator(seed, frame_index, _ARM_CODES[arm_tag], PURPOSE_VACUUM)
    shape = (grid.ny, grid.nx)
    amp = rng.normal(scale=0.5, size=shape) + 1j * rng.normal(scale=0.5, size=shape)
    return ComplexField(grid, nm_to_mm(wavelength_nm), amp, NEAR_FIELD)


def _crystal_half_kernel(
    grid: Grid2D, wavelength_mm: float, n_index: float, dz_mm: float
) -> np.ndarray:
    """In-crystal angular-spectrum step with the on-axis carrier removed.

    Removing the carrier n/lambda puts the simulation in the frame where
    collinear degenerate emission is perfectly phase matched; what remains
    is the transverse walk-through phase that builds the phase-matching
    envelope.
    """
    nux, nuy = grid.nu_meshgrid()
    nu2 = nux**2 + nuy**2
    n_over_lam = n_index / wavelength_mm
    kz = np.sqrt(np.maximum(n_over_lam**2 - nu2, 0.0))
    return np.exp(1j * 2.0 * np.pi * dz_mm * (kz - n_over_lam))


def _diffract(a: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return ifft2_centered_array(fft2_centered_array(a) * kernel)


def _wigner_pulse_arrays(
    a_s: np.ndarray,
    a_i: np.ndarray,
    pump_amp: np.ndarray,
    grid: Grid2D,
    crystal: CrystalParams,
    split_steps: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Split-step crystal integration; works on (..., ny, nx) batches."""
    if split_steps < 4:
        raise ValueError("split_steps must be >= 4")
    peak = float(np.abs(pump_amp).max())
    dz = crystal.length_mm / split_steps
    if crystal.g0 * peak / split_steps > MAX_STEP_GAIN:
        raise ValueError("per-step gain exceeds integration accuracy limit; raise split_steps")

    lam = nm_to_mm(crystal.lambda_signal_nm)
    half_s = _crystal_half_kernel(grid, lam, crystal.n_signal, dz / 2.0)
    half_i = _crystal_half_kernel(grid, lam, crystal.n_idler, dz / 2.0)
    full_s = half_s * half_s
    full_i = half_i * half_i

    gamma = (crystal.g0 * dz / crystal.length_mm) * pump_amp
    mag = np.abs(gamma)
    phase = np.where(mag > 0, gamma / np.where(mag > 0, mag, 1.0), 1.0)
    ch = np.cosh(mag)
    sh = np.sinh(mag) * phase

    a_s = _diffract(a_s, half_s)
    a_i = _diffract(a_i, half_i)
    for step in range(split_steps):
        new_s = ch * a_s + sh * np.conj(a_i)
        new_i = ch * a_i + sh * np.conj(a_s)
        a_s, a_i = new_s, new_i
        if step < split_steps - 1:
            a_s = _diffract(a_s, full_s)
            a_i = _diffract(a_i, full_i)
    a_s = _diffract(a_s, half_s)
    a_i = _diffract(a_i, half_i)
    return a_s, a_i


def wigner_pulse(
    vac_s: ComplexField,
    vac_i: ComplexField,
    pump: ComplexField,
    crystal: CrystalParams,
    split_steps: int = 8,
) -> tuple[ComplexField, ComplexField]:
    """One pump pulse through the crystal: vacuum in, squeezed twin fields out."""
    if not (vac_s.grid == vac_i.grid == pump.grid):
        raise ValueError("all fields must share one grid")
    a_s, a_i = _wigner_pulse_arrays(
        vac_s.amplitudes, vac_i.amplitudes, pump.amplitudes, pump.grid, crystal, split_steps
    )
    return replace(vac_s, amplitudes=a_s), replace(vac_i, amplitudes=a_i)


def _arm_far_field_arrays(
    a: np.ndarray,
    grid: Grid2D,
    wavelength_mm: float,
    holo: PhaseHologram | None,
    dz_mm: float,
    focal_length_mm: float,
) -> np.ndarray:
    """Defocus, hologram transmission (t, not t^2), then 2-f transform."""
    if dz_mm != 0.0:
        kernel = angular_spectrum_kernel(grid, wavelength_mm, dz_mm)
        a = ifft2_centered_array(fft2_centered_array(a) * kernel)
    if holo is not None:
        a = a * np.exp(1j * holo.phase_map())
    return fft2_centered_array(a)


def propagate_arm(
    f: ComplexField,
    holo: PhaseHologram | None,
    dz_mm: float,
    focal_length_mm: float,
) -> ComplexField:
    """One detection arm: crystal image plane -> hologram -> far field.

    Each real photon arm sees the transmission t once; the squared
    transmission only shows up in the pair correlation.  The 4-f relay to the
    hologram is ideal (its -1 magnification is absorbed into coordinates);
    dz models the residual defocus between crystal image and hologram.
    """
    if f.plane_tag != NEAR_FIELD:
        raise ValueError("arm input must be the near field at the crystal image plane")
    if holo is not None and holo.grid != f.grid:
        raise ValueError("hologram grid does not match field grid")
    if focal_length_mm <= 0:
        raise ValueError("focal length must be positive")
    if abs(dz_mm) > 100.0:
        raise ValueError("defocus outside model validity")
    amp = _arm_far_field_arrays(
        f.amplitudes, f.grid, f.wavelength_mm, holo, dz_mm, focal_length_mm
    )
    return replace(f, amplitudes=amp, plane_tag="far_field", focal_length_mm=focal_length_mm)


class WignerEngine:
    """Batched stochastic-field frame generator (one instance per run)."""

    def __init__(
        self,
        grid: Grid2D,
        pump: ComplexField,
        crystal: CrystalParams,
        holo: PhaseHologram | None = None,
        defocus_dz_mm: float = 0.0,
        focal_length_mm: float = 50.0,
        split_steps: int = 8,
        master_seed: int = 0,
        batch: int = 64,
    ):
        if pump.grid != grid:
            raise ValueError("pump grid mismatch")
        self.grid = grid
        self.pump = pump
        self.crystal = crystal
        self.holo = holo
        self.defocus_dz_mm = defocus_dz_mm
        self.focal_length_mm = focal_length_mm
        self.split_steps = split_steps
        self.master_seed = master_seed
        self.batch = batch
        self._lambda_mm = nm_to_mm(crystal.lambda_signal_nm)

    def _vacuum_batch(self, indices: np.ndarray, arm_code: int) -> np.ndarray:
        out = np.empty((len(indices), self.grid.ny, self.grid.nx), dtype=np.complex128)
        for j, idx in enumerate(indices):
            rng = keyed_generator(self.master_seed, int(idx), arm_code, PURPOSE_VACUUM)
            out[j] = rng.normal(scale=0.5, size=out.shape[1:]) + 1j * rng.normal(
                scale=0.5, size=out.shape[1:]
            )
        return out

    def far_field_batches(
        self, n_frames: int, start: int = 0
    ) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Yield (frame_indices, signal, idler) far-field amplitude batches."""
        pump_amp = self.pump.amplitudes
        for lo in range(start, start + n_frames, self.batch):
            indices = np.arange(lo, min(lo + self.batch, start + n_frames))
            a_s = self._vacuum_batch(indices, ARM_SIGNAL)
            a_i = self._vacuum_batch(indices, ARM_IDLER)
            a_s, a_i = _wigner_pulse_arrays(
                a_s, a_i, pump_amp, self.grid, self.crystal, self.split_steps
            )
            a_s = _arm_far_field_arrays(
                a_s, self.grid, self._lambda_mm, self.holo, self.defocus_dz_mm, self.focal_length_mm
            )
            a_i = _arm_far_field_arrays(
                a_i, self.grid, self._lambda_mm, self.holo, self.defocus_dz_mm, self.focal_length_mm
            )
            yield indices, a_s, a_i

    def frames(
        self, n_frames: int, detector: DetectorParams, start: int = 0
    ) -> Iterator[tuple[PhotonFrame, PhotonFrame]]:
        for indices, a_s, a_i in self.far_field_batches(n_frames, start):
            for j, idx in enumerate(indices):
                yield (
                    self._detect(a_s[j], int(idx), "signal", detector),
                    self._detect(a_i[j], int(idx), "idler", detector),
                )

    def _detect(
        self, amp: np.ndarray, frame_index: int, arm_tag: str, detector: DetectorParams
    ) -> PhotonFrame:
        p = detection_probability(clipped_intensity(amp), detector)
        rng = keyed_generator(self.master_seed, frame_index, _ARM_CODES[arm_tag], PURPOSE_DETECT)
        bits = (rng.random(p.shape) < p).astype(np.uint8)
        return PhotonFrame(self.grid, bits, frame_index, arm_tag)

    def mean_far_intensity(self, n_frames: int, start: int = 0) -> np.ndarray:
        """Ensemble-mean far-field photon image: <|a|^2> - 1/2 (exact vacuum
        subtraction, no clipping), averaged over both arms."""
        total = np.zeros((self.grid.ny, self.grid.nx))
        count = 0
        for indices, a_s, a_i in self.far_field_batches(n_frames, start):
            total += np.sum(np.abs(a_s) ** 2, axis=0) + np.sum(np.abs(a_i) ** 2, axis=0)
            count += 2 * len(indices)
        return total / count - 0.5


def pair_sample_frame(
    oracle_map: OracleMap,
    mean_pairs: float,
    eta: float,
    grid: Grid2D,
    seed: int,
    frame_index: int,
    background_rate: float = 0.0,
) -> tuple[PhotonFrame, PhotonFrame]:
    """Draw one twin frame directly from the analytic sum-coordinate PDF.

    K ~ Poisson(mean_pairs) pairs; for each, the sum coordinate is sampled
    from the oracle distribution and one photon lands uniformly on the
    sensor, fixing the other at s - r (lost when it falls off the sensor,
    the sensor-truncation loss).  The two roles are swapped at random so the
    arms are statistically symmetric.  Each photon is then detected with
    probability eta; optional unpaired background counts are added per arm.
    """
    if oracle_map.grid.nx != grid.nx or oracle_map.grid.ny != grid.ny:
        raise ValueError("oracle map grid does not match detector grid")
    if mean_pairs <= 0:
        raise ValueError("mean_pairs must be positive")
    pdf = np.asarray(oracle_map.values, dtype=np.float64).ravel()
    total = pdf.sum()
    if total <= 0:
        raise ValueError("empty coincidence distribution")

    nx, ny = grid.nx, grid.ny
    rng = keyed_generator(seed, frame_index, ARM_SHARED, PURPOSE_PAIRS)
    n_pairs = rng.poisson(mean_pairs)
    sig = np.zeros((ny, nx), dtype=np.uint8)
    idl = np.zeros((ny, nx), dtype=np.uint8)
    if n_pairs > 0:
        flat = rng.choice(pdf.size, size=n_pairs, p=pdf / total)
        us_y = flat // nx - ny // 2
        us_x = flat % nx - nx // 2
        iy1 = rng.integers(0, ny, size=n_pairs)
        ix1 = rng.integers(0, nx, size=n_pairs)
        # partner pixel from the sum coordinate, centered-index arithmetic
        iy2 = us_y - (iy1 - ny // 2) + ny // 2
        ix2 = us_x - (ix1 - nx // 2) + nx // 2
        on_sensor = (iy2 >= 0) & (iy2 < ny) & (ix2 >= 0) & (ix2 < nx)
        det1 = rng.random(n_pairs) < eta
        det2 = (rng.random(n_pairs) < eta) & on_sensor
        swap = rng.random(n_pairs) < 0.5

        for bits, mask in ((sig, det1 & ~swap), (idl, det1 & swap)):
            bits[iy1[mask], ix1[mask]] = 1
        for bits, mask in ((idl, det2 & ~swap), (sig, det2 & swap)):
            bits[iy2[mask], ix2[mask]] = 1

    if background_rate > 0:
        for bits, arm_code in ((sig, ARM_SIGNAL), (idl, ARM_IDLER)):
            brng = keyed_generator(seed, frame_index, arm_code, PURPOSE_BACKGROUND)
            n_bg = brng.poisson(background_rate)
            if n_bg:
                bits[brng.integers(0, ny, size=n_bg), brng.integers(0, nx, size=n_bg)] = 1

    return (
        PhotonFrame(grid, sig, frame_index, "signal"),
        PhotonFrame(grid, idl, frame_index, "idler"),
    )


class PairSamplingEngine:
    """Frame generator drawing pairs from an analytic coincidence map."""

    def __init__(
        self,
        oracle_map: OracleMap,
        mean_pairs: float,
        eta: float,
        master_seed: int = 0,
        background_rate: float = 0.0,
    ):
        self.oracle_map = oracle_map
        self.grid = oracle_map.grid
        self.mean_pairs = mean_pairs
        self.eta = eta
        self.master_seed = master_seed
        self.background_rate = background_rate
        # normalized flat pdf cached for the per-frame sampler
        pdf = np.asarray(oracle_map.values, dtype=np.float64)
        if pdf.sum() <= 0:
            raise ValueError("empty coincidence distribution")

    def frames(self, n_frames: int, start: int = 0) -> Iterator[tuple[PhotonFrame, PhotonFrame]]:
        for idx in range(start, start + n_frames):
            yield pair_sample_frame(
                self.oracle_map,
                self.mean_pairs,
                self.eta,
                self.grid,
                self.master_seed,
                idx,
                self.background_rate,
            )
