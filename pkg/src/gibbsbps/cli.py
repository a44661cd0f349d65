"""Command-line front end.

Subcommands::

    gibbsbps phantom      --kind shepp-logan --d 64 --out runs/sl64
    gibbsbps sinogram     --phantom runs/sl64/phantom.f64 --n-angles 32 --seed 1 --out runs/sl64
    gibbsbps reconstruct  --sinogram runs/sl64/sinogram.f64 --truth runs/sl64/phantom.f64 --out runs/sl64/bps
    gibbsbps metrics      runs/sl64/phantom.f64 runs/sl64/bps/mean.f64
    gibbsbps trace        (same inputs as reconstruct; writes only trace.csv)

Every subcommand accepts ``--config FILE`` (``key = value`` lines) and any
config key as a ``--flag``. Exit codes: 0 success, 2 configuration error,
3 capacity error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import io
from .config import ExperimentConfig, load_config, parse_config_text
from .ct import build_radon, phantom_grains, phantom_shepp_logan, simulate_measurement
from .distributions import make_rng, spawn_streams
from .errors import CapacityError, DataFormatError, ParameterDomainError, ShapeError
from .gaussian_exact import MAX_DENSE_N
from .metrics import psnr, ssim
from .samplers import MomentAccumulator, convergence_trace, finalize_moments, gibbs_bps_run, gibbs_run

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY, EXIT_IO = 0, 2, 3, 4
SSIM_MIN_SIDE = 11


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _config_flags(parser):
    for f in fields(ExperimentConfig):
        parser.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None, metavar="VALUE")
    parser.add_argument("--config", dest="config_file", default=None, metavar="FILE",
                        help="key = value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="gibbsbps", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)
    for name, help_ in [
        ("phantom", "rasterize a phantom"),
        ("sinogram", "simulate noisy projections of a phantom"),
        ("reconstruct", "sample the posterior and write mean/std images"),
        ("trace", "run a sampler and write only the convergence trace"),
    ]:
        _config_flags(sub.add_parser(name, help=help_))
    metrics = sub.add_parser("metrics", help="PSNR and SSIM of an estimate against a truth image")
    metrics.add_argument("truth_path")
    metrics.add_argument("estimate_path")
    return parser


def _resolve(args) -> ExperimentConfig:
    overrides = {f.name: getattr(args, f.name) for f in fields(ExperimentConfig)}
    return load_config(args.config_file, overrides).validate()


def _geometry_path(stem) -> Path:
    return io._stem(stem).with_suffix(".geom")


# ---------------------------------------------------------------------------
# subcommands


def cmd_phantom(cfg: ExperimentConfig) -> list[Path]:
    if cfg.kind == "shepp-logan":
        img = phantom_shepp_logan(cfg.d)
    else:
        img = phantom_grains(cfg.d, cfg.n_grains, cfg.phantom_seed)
    out = io.ensure_dir(cfg.out)
    written = [io.write_f64(out / "phantom", img), io.write_pgm(out / "phantom", img)]
    io.write_text(out / "config.txt", cfg.to_text())
    return written


def cmd_sinogram(cfg: ExperimentConfig) -> list[Path]:
    if cfg.phantom is None:
        raise ParameterDomainError("sinogram needs --phantom PATH")
    truth = io.read_f64(cfg.phantom)
    if truth.shape[0] != truth.shape[1]:
        raise ShapeError(f"phantom must be square, got {truth.shape}")
    d = truth.shape[0]
    n_angles = cfg.n_angles if cfg.n_angles is not None else max(1, d // 2)
    model = build_radon(d, n_angles)
    sino, _ = simulate_measurement(model, truth, cfg.noise_mode, cfg.noise_level, make_rng(cfg.seed))
    out = io.ensure_dir(cfg.out)
    written = [io.write_f64(out / "sinogram", sino.as_image()), io.write_pgm(out / "sinogram", sino.as_image())]
    geom = (f"d = {d}\nn_angles = {sino.n_angles}\nn_detectors = {sino.n_detectors}\n"
            f"sigma_obs = {sino.sigma_obs!r}\nnoise_mode = {cfg.noise_mode}\nnoise_level = {cfg.noise_level!r}\n")
    written.append(io.write_text(_geometry_path(out / "sinogram"), geom))
    # record the grid and angle count actually used, not the defaults
    io.write_text(out / "config.txt", replace(cfg, d=d, n_angles=n_angles).to_text())
    return written


def _load_problem(cfg: ExperimentConfig):
    if cfg.sinogram is None:
        raise ParameterDomainError("reconstruct needs --sinogram PATH")
    y = io.read_f64(cfg.sinogram)
    gpath = _geometry_path(cfg.sinogram)
    try:
        geom = parse_config_text(gpath.read_text())
        d, n_angles, n_det = int(geom["d"]), int(geom["n_angles"]), int(geom["n_detectors"])
        sigma = float(geom["sigma_obs"])
    except (KeyError, ValueError, ParameterDomainError) as exc:
        raise DataFormatError(f"{gpath}: malformed geometry record ({exc})") from exc
    if y.shape != (n_angles, n_det):
        raise DataFormatError(f"{cfg.sinogram}: shape {y.shape} disagrees with geometry {n_angles}x{n_det}")
    model = build_radon(d, n_angles, n_det).with_data(y.ravel(), sigma)
    truth = None
    if cfg.truth is not None:
        truth = io.read_f64(cfg.truth)
        if truth.shape != (d, d):
            raise ShapeError(f"truth shape {truth.shape} does not match reconstruction grid {(d, d)}")
    return model, truth


def _run_chain(job):
    """One independent chain; module-level so worker processes can pickle it."""
    cfg, model, truth, rng, with_trace = job
    t0 = time.perf_counter()
    probe = cfg.probe_interval if with_trace else None
    if cfg.sampler == "gibbs":
        rec = gibbs_run(model, cfg.hyper(), cfg.iters, rng, burn_in=cfg.burn_in,
                        truth=truth if with_trace else None, probe_interval=probe)
        counts = {"iterations": rec.iterations}
        extra = {"iterations": rec.iterations, "burn_in": rec.burn_in}
        acc, trace = rec.accumulator, rec.trace
    else:
        res = gibbs_bps_run(model, cfg.hyper(), rng, T=cfg.traj_time, max_events=cfg.events,
                            lambda_ref=cfg.lambda_ref, eta=cfg.eta, burn_in_frac=cfg.burn_in_frac,
                            truth=truth if with_trace else None, probe_interval=probe)
        counts = {k.value: c for k, c in res.counts.items()}
        extra = {"events": res.n_events, "trajectory_time": res.trajectory_time,
                 "context_rebuilds": res.context_rebuilds}
        acc, trace = res.accumulator, res.trace
    return {"accumulator": acc, "counts": counts, "extra": extra,
            "trace": convergence_trace(trace), "wall_s": time.perf_counter() - t0}


def _sample(cfg: ExperimentConfig, model, truth):
    if cfg.sampler == "gibbs" and model.n > MAX_DENSE_N:
        raise CapacityError(
            f"the gibbs sampler factorizes an n x n matrix and is limited to n <= {MAX_DENSE_N} "
            f"(got n={model.n}); use --sampler gibbs-bps"
        )
    streams = spawn_streams(cfg.seed, cfg.chains)
    # the first chain carries the convergence trace
    jobs = [(cfg, model, truth, rng, k == 0 and truth is not None) for k, rng in enumerate(streams)]
    if cfg.chains == 1:
        results = [_run_chain(jobs[0])]
    else:
        workers = min(cfg.chains, os.cpu_count() or 1)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chain, jobs))
    acc = results[0]["accumulator"]
    if len(results) > 1:
        acc = MomentAccumulator.zeros(model.n)
        for r in results:
            acc = acc.merge(r["accumulator"])
    return acc, results


def _trace_csv(points) -> str:
    lines = ["time_s,psnr_db,ssim"]
    lines += [f"{t:.6f},{p:.6f},{s:.6f}" for t, p, s in points]
    return "\n".join(lines) + "\n"


def _quality(truth, est):
    if truth is None:
        return None, None
    s = ssim(truth, est) if min(truth.shape) >= SSIM_MIN_SIDE else None
    return psnr(truth, est), s


def cmd_reconstruct(cfg: ExperimentConfig, trace_only: bool = False) -> list[Path]:
    model, truth = _load_problem(cfg)
    t0 = time.perf_counter()
    acc, results = _sample(cfg, model, truth)
    wall = time.perf_counter() - t0
    mean, std = finalize_moments(acc)
    d = model.d
    mean_img, std_img = mean.reshape(d, d), std.reshape(d, d)
    out = io.ensure_dir(cfg.out)
    points = list(results[0]["trace"])
    written = [io.write_text(out / "trace.csv", _trace_csv(points))]
    io.write_text(out / "config.txt", cfg.to_text())
    if trace_only:
        return written
    written += [io.write_f64(out / "mean", mean_img), io.write_pgm(out / "mean", mean_img),
                io.write_f64(out / "std", std_img), io.write_pgm(out / "std", std_img)]
    p, s = _quality(truth, mean_img)
    counts = {}
    for r in results:
        for key, value in r["counts"].items():
            counts[key] = counts.get(key, 0) + value
    summary = {
        "sampler": cfg.sampler,
        "d": d,
        "n_angles": model.n_angles,
        "sigma_obs": model.sigma_obs,
        "chains": cfg.chains,
        "psnr_db": p,
        "ssim": s,
        "event_counts": counts,
        "per_chain": [r["extra"] for r in results],
        "effective_time": acc.effective_time,
        "wall_clock_s": wall,
    }
    written.append(io.write_text(out / "summary.json", json.dumps(summary, indent=2) + "\n"))
    return written


def cmd_metrics(truth_path, estimate_path) -> str:
    truth = io.read_f64(truth_path)
    est = io.read_f64(estimate_path)
    if truth.shape != est.shape:
        raise ShapeError(f"shape mismatch: truth {truth.shape} vs estimate {est.shape}")
    p, s = _quality(truth, est)
    s_text = "nan" if s is None or math.isnan(s) else f"{s:.4f}"
    return f"PSNR {p:.4f}  SSIM {s_text}"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "metrics":
            print(cmd_metrics(args.truth_path, args.estimate_path))
            return EXIT_OK
        cfg = _resolve(args)
        if args.command == "phantom":
            written = cmd_phantom(cfg)
        elif args.command == "sinogram":
            written = cmd_sinogram(cfg)
        else:
            written = cmd_reconstruct(cfg, trace_only=args.command == "trace")
        for path in written:
            print(path)
        return EXIT_OK
    except CapacityError as exc:
        print(f"gibbsbps: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except OSError as exc:
        print(f"gibbsbps: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ParameterDomainError, ShapeError) as exc:
        print(f"gibbsbps: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
