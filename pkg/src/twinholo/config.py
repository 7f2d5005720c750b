"""Flat key=value run configuration and reproducible run manifests.

Config files are plain text, one `key=value` per line, `#` comments; units
are spelled out in the key names.  CLI flags override file values.  A run
manifest snapshots the full configuration plus SHA-256 hashes of the input
artifacts; re-running a manifest reproduces every output byte for byte.
"""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass, fields

from . import __version__
from .detection import DetectorParams
from .field import ComplexField, Grid2D, gaussian_beam
from .spdc import CrystalParams, PumpParams


@dataclass
class RunConfig:
    # sampling grid
    grid_n: int = 256
    grid_dx_mm: float = 0.03125  # frequency window +/- 16 mm^-1 at n=256

    # light and crystal
    wavelength_signal_nm: float = 710.0
    pump_wavelength_nm: float = 355.0
    pump_sigma_mm: float = 0.68
    crystal_length_mm: float = 0.8
    crystal_n_signal: float = 1.6645
    crystal_n_idler: float = 1.5482
    crystal_sigma_phi_mm_inv: float = 27.0
    gain_g0: float = 0.2

    # simulation run
    engine: str = "pair_sampling"
    frames: int = 1000
    master_seed: int = 1
    defocus_dz_mm: float = 0.0
    split_steps: int = 8
    mean_pairs_per_frame: float = 100.0
    background_rate: float = 0.0
    focal_length_mm: float = 50.0

    # detection
    eta: float = 0.25
    dark_prob: float = 0.0
    gray_threshold: float = 0.0

    # hologram design
    phase_step_rad: float = 1.5707963267948966
    depth_error: float = 0.0
    carrier_nu_x_mm_inv: float = 6.0
    carrier_nu_y_mm_inv: float = 0.0
    dirac_n_per_side: int = 3
    dirac_spacing_mm_inv: float = 1.5
    smiley_diameter_mm_inv: float = 10.0
    speckle_grain_mm_inv: float = 0.5
    speckle_seed: int = 7

    # output rendering
    db_floor: float = -30.0

    def grid(self) -> Grid2D:
        return Grid2D(self.grid_n, self.grid_n, self.grid_dx_mm, self.grid_dx_mm)

    def pump_field(self) -> ComplexField:
        return gaussian_beam(self.grid(), self.pump_sigma_mm, self.wavelength_signal_nm)

    def crystal(self) -> CrystalParams:
        return CrystalParams(
            length_mm=self.crystal_length_mm,
            n_signal=self.crystal_n_signal,
            n_idler=self.crystal_n_idler,
            lambda_pump_nm=self.pump_wavelength_nm,
            lambda_signal_nm=self.wavelength_signal_nm,
            sigma_phi_mm_inv=self.crystal_sigma_phi_mm_inv,
            g0=self.gain_g0,
        )

    def pump_params(self) -> PumpParams:
        return PumpParams(sigma_mm=self.pump_sigma_mm)

    def detector(self) -> DetectorParams:
        return DetectorParams(self.eta, self.dark_prob, self.gray_threshold)

    def items(self) -> dict[str, str]:
        """Canonical string form of every parameter, sorted by key."""
        out = {}
        for f in sorted(fields(self), key=lambda f: f.name):
            out[f.name] = _format_value(getattr(self, f.name))
        return out


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(kind: type, raw: str):
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path: str | os.PathLike | None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Build a RunConfig from an optional file plus CLI overrides."""
    raw: dict[str, str] = {}
    if path is not None:
        with open(path) as fh:
            raw.update(parse_config_text(fh.read()))
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig()
    known = {f.name: f for f in fields(RunConfig)}
    for key, value in raw.items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        setattr(cfg, key, _coerce(type(getattr(cfg, key)), value))
    return cfg


def sha256_file(path: str | os.PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    path: str | os.PathLike,
    config: RunConfig,
    inputs: dict[str, str | os.PathLike] | None = None,
    extra: dict[str, str] | None = None,
) -> None:
    """Canonical-ordered key=value manifest with input hashes and tool version."""
    entries: dict[str, str] = {f"config.{k}": v for k, v in config.items().items()}
    for name, p in (inputs or {}).items():
        entries[f"input.{name}.path"] = os.path.basename(os.fspath(p))
        entries[f"input.{name}.sha256"] = sha256_file(p)
    entries["tool.version"] = __version__
    entries["run.timestamp_utc"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    for k, v in (extra or {}).items():
        entries[k] = v
    with open(path, "w") as fh:
        for key in sorted(entries):
            fh.write(f"{key}={entries[key]}\n")


def load_manifest_config(path: str | os.PathLike) -> RunConfig:
    """Recover the RunConfig snapshot stored in a manifest."""
    with open(path) as fh:
        raw = parse_config_text(fh.read())
    config_raw = {k[len("config.") :]: v for k, v in raw.items() if k.startswith("config.")}
    cfg = RunConfig()
    for key, value in config_raw.items():
        setattr(cfg, key, _coerce(type(getattr(cfg, key)), value))
    return cfg
