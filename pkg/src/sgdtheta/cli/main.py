"""Command line entry point: ``sgdtheta run|check|phantom|project|denoise-tv``."""

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..exceptions import ConfigError
from ..operators import build_parallel_tomo, radon_row_apply
from ..penalty import PdhgConfig, tv_denoise_pdhg
from ..sampling import piecewise_constant_inclusions, read_image, shepp_logan, write_image, write_pgm
from .config import load_config
from .experiment import ExperimentFailed, admissibility_reports, run_experiment

__all__ = ["main", "cmd_run", "cmd_check", "cmd_phantom", "cmd_project", "cmd_denoise_tv", "OUTPUT_ENV"]

OUTPUT_ENV = "SGDTHETA_OUT"

EXIT_CONFIG = 2
EXIT_ADMISSIBILITY = 3
EXIT_FAILURE = 4


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _resolve_out(flag, cfg_dir, fallback):
    return Path(flag or os.environ.get(OUTPUT_ENV) or cfg_dir or fallback)


def cmd_run(config, out=None, seed=None, stride=None, force=False):
    """Run the experiment in ``config``; returns a process exit code."""
    try:
        cfg = load_config(config)
        if seed is not None or stride is not None:
            methods = []
            for k, (name, scfg) in enumerate(cfg.methods):
                changes = {}
                if seed is not None:
                    changes["seed"] = seed + k
                if stride is not None:
                    changes["telemetry_stride"] = stride
                methods.append((name, replace(scfg, **changes)))
            cfg.methods = methods
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG

    reports = admissibility_reports(cfg)
    refused = False
    for name, rep in reports.items():
        print(f"[{name}] admissibility: " + ", ".join(rep.lines()[1:]))
        if rep.applicable and not rep.passed:
            refused = True
    if refused and not force:
        _err("step-size parameters fail the admissibility condition; rerun with --force to override")
        return EXIT_ADMISSIBILITY

    out_dir = _resolve_out(out, cfg.output_dir, "sgdtheta_out")
    try:
        run_experiment(cfg, out_dir)
    except ExperimentFailed as exc:
        _err(f"solver failure ({exc}); partial artifacts kept in {out_dir}")
        return EXIT_FAILURE
    except OSError as exc:
        _err(f"cannot write artifacts: {exc}")
        return EXIT_FAILURE
    print(f"artifacts written to {out_dir}")
    return 0


def cmd_check():
    from .checks import run_all

    results = run_all()
    for res in results:
        print(res.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def cmd_phantom(n, out, kind="shepp_logan", pgm=False):
    if kind == "shepp_logan":
        img = shepp_logan(n)
    elif kind == "shepp_logan_modified":
        img = shepp_logan(n, modified=True)
    elif kind == "inclusions":
        img = piecewise_constant_inclusions(n)
    else:
        raise ValueError(f"unknown phantom kind {kind!r}")
    write_image(out, img, phantom=kind)
    if pgm:
        write_pgm(str(out) + ".pgm", img, 0.0, 1.0)
    return img


def cmd_project(image, out, n_angles=None, lines=None, angles=None):
    """Sinogram ``(angles, lines)`` of a square image file."""
    img, _ = read_image(image)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise ValueError("projection needs a square 2D image")
    n = img.shape[0]
    if angles is None:
        angles = np.linspace(1.0, 180.0, n_angles or n)
    angles = np.asarray(angles, dtype=float)
    lines = lines or n
    block = build_parallel_tomo(n, angles, lines)
    sino = radon_row_apply(block, slice(None), img.ravel()).reshape(angles.size, lines)
    write_image(out, sino, angles=angles, lines=lines)
    return sino


def cmd_denoise_tv(image, out, beta, max_iters=200, gap_tol=1e-3):
    img, _ = read_image(image)
    z = tv_denoise_pdhg(img, beta, PdhgConfig(max_iters=max_iters, gap_tol=gap_tol))
    write_image(out, z, beta=float(beta))
    return z


def _parser():
    ap = argparse.ArgumentParser(prog="sgdtheta", description="Stochastic mirror descent for ill-posed systems.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("--out", help=f"output directory (overrides ${OUTPUT_ENV} and the config)")
    p.add_argument("--seed", type=int, help="base seed; method k uses seed + k")
    p.add_argument("--stride", type=int, help="full-residual telemetry stride")
    p.add_argument("--force", action="store_true", help="run even if admissibility fails")

    sub.add_parser("check", help="run the self-check battery")

    p = sub.add_parser("phantom", help="write a test image")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--kind", default="shepp_logan", choices=["shepp_logan", "shepp_logan_modified", "inclusions"])
    p.add_argument("--pgm", action="store_true", help="also write an 8-bit preview")
    p.add_argument("--out", required=True)

    p = sub.add_parser("project", help="parallel-beam sinogram of an image")
    p.add_argument("image")
    p.add_argument("--angles", type=int, help="number of angles in [1, 180] degrees (default n)")
    p.add_argument("--lines", type=int, help="rays per angle (default n)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("denoise-tv", help="TV denoising of an image")
    p.add_argument("image")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--gap-tol", type=float, default=1e-3)
    p.add_argument("--out", required=True)
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config, args.out, args.seed, args.stride, args.force)
        if args.command == "check":
            return cmd_check()
        if args.command == "phantom":
            cmd_phantom(args.n, args.out, args.kind, args.pgm)
        elif args.command == "project":
            cmd_project(args.image, args.out, args.angles, args.lines)
        elif args.command == "denoise-tv":
            cmd_denoise_tv(args.image, args.out, args.beta, args.max_iters, args.gap_tol)
    except (OSError, ValueError, KeyError) as exc:
        _err(str(exc))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
