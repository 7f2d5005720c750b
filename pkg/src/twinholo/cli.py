"""Command line pipeline: design -> simulate -> analyze -> oracle -> report.

Every command takes `--config file` (flat key=value) and repeatable
`--set key=value` overrides; `simulate` writes a run manifest that pins the
configuration and input hashes so a run can be reproduced bit for bit.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import __version__, analysis, holography, imageio
from .config import RunConfig, load_config, load_manifest_config, write_manifest
from .detection import PhotonFrame
from .framestack import FrameStackReader, FrameStackWriter
from .oracle import analytic_coincidence_map, compare_maps
from .spdc import PairSamplingEngine, WignerEngine


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a single config key (repeatable)",
    )


def _config_from_args(args) -> RunConfig:
    overrides = {}
    for item in args.overrides:
        if "=" not in item:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key] = value
    return load_config(args.config, overrides)


def _design_hologram(cfg: RunConfig, pattern: str, bitmap_path: str | None) -> holography.PhaseHologram:
    grid = cfg.grid()
    carrier = (cfg.carrier_nu_x_mm_inv, cfg.carrier_nu_y_mm_inv)
    if pattern == "dirac9":
        target = holography.dirac_array_target(cfg.dirac_n_per_side, cfg.dirac_spacing_mm_inv, grid)
    elif pattern == "smiley":
        target = holography.speckle_image_target(
            holography.make_smiley_bitmap(),
            cfg.smiley_diameter_mm_inv,
            cfg.speckle_grain_mm_inv,
            cfg.speckle_seed,
            grid,
        )
    elif pattern == "custom":
        if not bitmap_path:
            raise ValueError("custom pattern needs --bitmap")
        target = holography.speckle_image_target(
            imageio.read_pbm(bitmap_path),
            cfg.smiley_diameter_mm_inv,
            cfg.speckle_grain_mm_inv,
            cfg.speckle_seed,
            grid,
        )
    else:
        raise ValueError(f"unknown pattern spec {pattern!r}")
    holo = holography.design_offaxis_binary(target, carrier, cfg.phase_step_rad, grid)
    return holography.with_depth_error(holo, cfg.depth_error)


def cmd_design(args) -> int:
    cfg = _config_from_args(args)
    holo = _design_hologram(cfg, args.pattern, args.bitmap)
    pbm, sidecar = holography.save_hologram(args.out, holo)
    print(f"wrote {pbm} and {sidecar}")
    return 0


def _pair_engine(cfg: RunConfig, holo) -> PairSamplingEngine:
    grid = cfg.grid()
    if holo is None:
        holo = holography.uniform_hologram(grid)
    omap = analytic_coincidence_map(cfg.pump_field(), holo)
    return PairSamplingEngine(
        omap, cfg.mean_pairs_per_frame, cfg.eta, cfg.master_seed, cfg.background_rate
    )


def _wigner_engine(cfg: RunConfig, holo) -> WignerEngine:
    return WignerEngine(
        cfg.grid(),
        cfg.pump_field(),
        cfg.crystal(),
        holo,
        defocus_dz_mm=cfg.defocus_dz_mm,
        focal_length_mm=cfg.focal_length_mm,
        split_steps=cfg.split_steps,
        master_seed=cfg.master_seed,
    )


def cmd_simulate(args) -> int:
    if args.manifest:
        cfg = load_manifest_config(args.manifest)
    else:
        cfg = _config_from_args(args)
    holo = holography.load_hologram(args.hologram) if args.hologram else None
    if holo is not None and holo.grid != cfg.grid():
        raise ValueError("hologram grid does not match configured grid")
    os.makedirs(args.out_dir, exist_ok=True)
    sig_path = os.path.join(args.out_dir, "signal.bfs1")
    idl_path = os.path.join(args.out_dir, "idler.bfs1")
    if not args.resume:
        for p in (sig_path, idl_path):
            if os.path.exists(p):
                os.remove(p)

    n = cfg.grid_n
    with FrameStackWriter(sig_path, n, n, "signal") as sw, FrameStackWriter(
        idl_path, n, n, "idler"
    ) as iw:
        if sw.frame_count != iw.frame_count:
            raise ValueError("cannot resume: signal and idler stacks are out of step")
        start = sw.frame_count
        remaining = cfg.frames - start
        if remaining <= 0:
            print(f"stacks already hold {start} frames; nothing to do")
        else:
            if cfg.engine == "pair_sampling":
                frames = _pair_engine(cfg, holo).frames(remaining, start=start)
            else:
                frames = _wigner_engine(cfg, holo).frames(remaining, cfg.detector(), start=start)
            for sig, idl in frames:
                sw.append(sig.bits)
                iw.append(idl.bits)

    inputs = {}
    if args.hologram:
        inputs = {
            "hologram_bits": os.fspath(args.hologram) + ".pbm",
            "hologram_sidecar": os.fspath(args.hologram) + ".holo.txt",
        }
    write_manifest(os.path.join(args.out_dir, "manifest.txt"), cfg, inputs)
    print(f"wrote {cfg.frames} frames to {sig_path} and {idl_path}")
    return 0


def _write_map_files(out_dir: str, name: str, values: np.ndarray, floor_db: float) -> None:
    imageio.write_pgm16(os.path.join(out_dir, f"{name}.pgm"), values)
    imageio.write_pgm16(
        os.path.join(out_dir, f"{name}_db.pgm"), analysis.to_decibels(np.maximum(values, 0.0), floor_db)
    )
    imageio.write_float_planar(os.path.join(out_dir, f"{name}.fpl"), values.astype(np.complex128))


def _write_stats_csv(path: str, rows: list[dict[str, float | int | str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def cmd_analyze(args) -> int:
    cfg = _config_from_args(args)
    sig = FrameStackReader(args.signal)
    idl = FrameStackReader(args.idler)
    if (sig.width, sig.height, sig.frame_count) != (idl.width, idl.height, idl.frame_count):
        raise ValueError("signal and idler stacks do not match")
    if (sig.arm, idl.arm) != ("signal", "idler"):
        raise ValueError("stacks must be one signal arm and one idler arm")
    if sig.width != cfg.grid_n:
        raise ValueError("stack geometry does not match configured grid")
    grid = cfg.grid()
    os.makedirs(args.out_dir, exist_ok=True)

    frames_s = (PhotonFrame(grid, b, i, "signal") for i, b in enumerate(sig))
    frames_i = (PhotonFrame(grid, b, i, "idler") for i, b in enumerate(idl))
    if args.shuffle:
        cmap = analysis.shuffled_control(frames_s, frames_i)
        name = "corr_shuffled"
    else:
        cmap = analysis.sum_coordinate_correlation(frames_s, frames_i)
        name = "corr"
    _write_map_files(args.out_dir, name, cmap.values, cfg.db_floor)

    degree = analysis.degree_of_correlation(cmap)
    med, sigma = analysis.background_stats(cmap)
    snr = float((cmap.values.max() - med) / sigma) if sigma > 0 else float("nan")
    try:
        wx, wy = analysis.peak_widths(cmap)
    except ValueError:
        wx = wy = float("nan")
    v_emp = (
        analysis.schmidt_empirical(cfg.crystal_sigma_phi_mm_inv, wx, wy)
        if np.isfinite(wx) and np.isfinite(wy)
        else float("nan")
    )
    v_th = analysis.schmidt_theoretical(cfg.crystal(), cfg.pump_params())
    _write_stats_csv(
        os.path.join(args.out_dir, "stats.csv"),
        [
            {
                "frames": cmap.frames_accumulated,
                "mean_photons_signal": cmap.mean_photons_signal,
                "mean_photons_idler": cmap.mean_photons_idler,
                "sigma_nu_x_mm_inv": wx,
                "sigma_nu_y_mm_inv": wy,
                "degree": degree,
                "peak_snr": snr,
                "v_empirical": v_emp,
                "v_theoretical": v_th,
            }
        ],
    )
    print(f"analyzed {cmap.frames_accumulated} frames -> {args.out_dir}")
    return 0


def cmd_oracle(args) -> int:
    cfg = _config_from_args(args)
    grid = cfg.grid()
    holo = holography.load_hologram(args.hologram) if args.hologram else holography.uniform_hologram(grid)
    if holo.grid != grid:
        raise ValueError("hologram grid does not match configured grid")
    omap = analytic_coincidence_map(cfg.pump_field(), holo)
    os.makedirs(args.out_dir, exist_ok=True)
    _write_map_files(args.out_dir, "oracle", omap.values, cfg.db_floor)
    if args.compare:
        other = np.real(imageio.read_float_planar(args.compare))
        if other.shape == tuple(2 * s for s in omap.values.shape):
            # analysis maps live on the doubled sum-coordinate grid
            ny, nx = omap.values.shape
            other = other[ny - ny // 2 : ny + ny // 2, nx - nx // 2 : nx + nx // 2]
        metrics = compare_maps(other, omap.values)
        _write_stats_csv(
            os.path.join(args.out_dir, "compare.csv"),
            [{"pearson": metrics["pearson"], "l2_rel": metrics["l2_rel"]}],
        )
        print(f"pearson={metrics['pearson']:.4f} l2_rel={metrics['l2_rel']:.4g}")
    print(f"wrote oracle map to {args.out_dir}")
    return 0


def cmd_report(args) -> int:
    rows = []
    for root, _dirs, files in os.walk(args.run_dir):
        for fname in sorted(files):
            if fname.endswith(".csv"):
                path = os.path.join(root, fname)
                with open(path, newline="") as fh:
                    for row in csv.DictReader(fh):
                        rows.append((os.path.relpath(path, args.run_dir), row))
    if not rows:
        raise ValueError(f"no stats CSV files under {args.run_dir}")
    for path, row in rows:
        summary = " ".join(f"{k}={v}" for k, v in row.items())
        print(f"{path}: {summary}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twinholo", description=__doc__)
    parser.add_argument("--version", action="version", version=f"twinholo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="design a binary phase hologram")
    _add_common(p)
    p.add_argument("--pattern", default="dirac9", choices=["dirac9", "smiley", "custom"])
    p.add_argument("--bitmap", help="PBM bitmap for --pattern custom")
    p.add_argument("--out", required=True, help="output path base (.pbm/.holo.txt added)")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="generate twin photodetection frame stacks")
    _add_common(p)
    p.add_argument("--hologram", help="hologram path base from `design`")
    p.add_argument("--manifest", help="reproduce the configuration of an existing manifest")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--resume", action="store_true", help="continue partially written stacks")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="accumulate the coincidence correlation map")
    _add_common(p)
    p.add_argument("--signal", required=True, help="signal BFS1 stack")
    p.add_argument("--idler", required=True, help="idler BFS1 stack")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--shuffle", action="store_true", help="correlate frames from different pulses")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("oracle", help="compute the analytic coincidence map")
    _add_common(p)
    p.add_argument("--hologram", help="hologram path base; omit for no hologram")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--compare", help="analysis map (.fpl) to compare against the oracle")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="summarize stats CSVs under a run directory")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
