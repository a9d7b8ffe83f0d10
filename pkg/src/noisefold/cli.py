"""Command-line interface: verify | sweep | recover | image.

Every lambda exposed on this surface is the regularization parameter in
the convention of the recovery-vs-lambda study (the solver's data-fit
weight is its reciprocal; see noisefold.experiments).

Exit codes: 0 success, 1 verification/check failure, 2 usage, config or
I/O errors. Environment variables NOISEFOLD_SEED, NOISEFOLD_JOBS and
NOISEFOLD_FORMAT supply defaults for the matching flags.
"""

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import (image_experiment, rows_to_csv, rows_to_json,
                          sweep, synthetic_image)
from .matio import (load_matrix, load_vector, read_pgm, save_matrix, write_pgm)
from .metrics import rel_error
from .runconfig import (ConfigError, config_hash, parse_config,
                        to_experiment_config, write_sidecar)
from .sensing import (NoiseSpec, bernoulli_ensemble, gaussian_ensemble,
                      map_from_matrix, row_orthonormal_ensemble)
from .solver import SolverConfig, admm_recover
from .verify import SUITE_NAMES, run_suites
from .whitening import whiten

USAGE_EXIT = 2


def _env_default(name, cast, fallback):
    raw = os.environ.get(name)
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        return fallback


def _options_hash(options):
    blob = "\n".join(f"{k} = {v}" for k, v in sorted(options.items())).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="noisefold",
        description="Low-rank recovery under pre-measurement noise: "
                    "whitening, verification, sweeps, image study.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run numerical verification suites")
    p_verify.add_argument("--suite", default="all",
                          choices=("all",) + SUITE_NAMES)
    p_verify.add_argument("--seed", type=int,
                          default=_env_default("NOISEFOLD_SEED", int, 0))
    p_verify.add_argument("--out", default=None, help="also write the JSON report here")

    p_sweep = sub.add_parser("sweep", help="run a (swept) recovery experiment")
    p_sweep.add_argument("--config", default=None, help="config file path")
    p_sweep.add_argument("--set", dest="overrides", action="append", default=[],
                         metavar="SECTION.KEY=VALUE", help="override a config key")
    p_sweep.add_argument("--n-trials", type=int, default=None)
    p_sweep.add_argument("--seed", type=int,
                         default=_env_default("NOISEFOLD_SEED", int, None))
    p_sweep.add_argument("--jobs", type=int,
                         default=_env_default("NOISEFOLD_JOBS", int, 1))
    p_sweep.add_argument("--format", choices=("csv", "json"),
                         default=_env_default("NOISEFOLD_FORMAT", str, "csv"))
    p_sweep.add_argument("--out", required=True, help="output file path")

    p_rec = sub.add_parser("recover", help="recover one matrix from stored data")
    p_rec.add_argument("--input-a", default=None, help="measurement map matrix file")
    p_rec.add_argument("--ensemble", default=None,
                       choices=("gaussian", "bernoulli", "row_orthonormal"),
                       help="generate the map instead of reading it")
    p_rec.add_argument("--m", type=int, default=None)
    p_rec.add_argument("--n", type=int, default=None)
    p_rec.add_argument("--measurements", type=int, default=None)
    p_rec.add_argument("--input-y", required=True, help="measurement vector file")
    p_rec.add_argument("--sigma", type=float, default=0.0)
    p_rec.add_argument("--sigma0", type=float, default=0.0)
    p_rec.add_argument("--lambda", dest="reg_lambda", type=float, default=1e-3)
    p_rec.add_argument("--tol", type=float, default=1e-8)
    p_rec.add_argument("--max-iter", type=int, default=500)
    p_rec.add_argument("--seed", type=int,
                       default=_env_default("NOISEFOLD_SEED", int, 0))
    p_rec.add_argument("--truth", default=None,
                       help="ground-truth matrix file; adds rel_err to the summary")
    p_rec.add_argument("--out", required=True, help="output prefix")

    p_img = sub.add_parser("image", help="grayscale image recovery study")
    src = p_img.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", default=None, help="PGM (P2/P5) image path")
    src.add_argument("--synthetic", action="store_true",
                     help="use the built-in 256x256 synthetic target")
    p_img.add_argument("--sigma0", default="0.05,0.10,0.15,0.20",
                       help="comma-separated sigma0 grid")
    p_img.add_argument("--sigma", type=float, default=0.01)
    p_img.add_argument("--lambda", dest="reg_lambda", type=float, default=0.5)
    p_img.add_argument("--trials", type=int, default=5)
    p_img.add_argument("--truncate", action="store_true",
                       help="measure the rank-6 truncation of the downscaled image")
    p_img.add_argument("--seed", type=int,
                       default=_env_default("NOISEFOLD_SEED", int, 0))
    p_img.add_argument("--jobs", type=int,
                       default=_env_default("NOISEFOLD_JOBS", int, 1))
    p_img.add_argument("--format", choices=("csv", "json"),
                       default=_env_default("NOISEFOLD_FORMAT", str, "csv"))
    p_img.add_argument("--out", required=True, help="output prefix")
    return parser


def cmd_verify(args):
    report = run_suites([args.suite], args.seed)
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0 if report["pass"] else 1


def cmd_sweep(args):
    overrides = list(args.overrides)
    if args.n_trials is not None:
        overrides.append(f"experiment.n_trials={args.n_trials}")
    if args.seed is not None:
        overrides.append(f"experiment.base_seed={args.seed}")
    resolved = parse_config(args.config, overrides)
    config = to_experiment_config(resolved)
    rows = sweep(config, jobs=args.jobs)
    chash = config_hash(resolved)
    meta = {"config_hash": chash, "generator": f"noisefold {__version__}"}
    out = Path(args.out)
    if args.format == "csv":
        out.write_text(rows_to_csv(rows, header_lines=[f"config_hash: {chash}",
                                                       f"generator: noisefold {__version__}"]))
    else:
        out.write_text(rows_to_json(rows, metadata=meta))
    write_sidecar(str(out) + ".resolved.cfg", resolved)
    print(f"wrote {out} ({len(rows)} row(s); config {chash})")
    return 0


def _load_map(args):
    if args.input_a:
        a, _ = load_matrix(args.input_a)
        if args.m and args.n:
            m, n = args.m, args.n
        else:
            side = int(round(a.shape[1] ** 0.5))
            if side * side != a.shape[1]:
                raise ConfigError(
                    f"map width {a.shape[1]} is not square; pass --m and --n"
                )
            m = n = side
        if m * n != a.shape[1]:
            raise ConfigError(
                f"map width {a.shape[1]} does not match m*n = {m * n}"
            )
        return map_from_matrix(a, m, n)
    if not args.ensemble:
        raise ConfigError("pass --input-a or --ensemble")
    if not (args.m and args.n and args.measurements):
        raise ConfigError("--ensemble needs --m, --n and --measurements")
    builders = {"gaussian": gaussian_ensemble, "bernoulli": bernoulli_ensemble,
                "row_orthonormal": row_orthonormal_ensemble}
    return builders[args.ensemble](args.m, args.n, args.measurements, args.seed)


def cmd_recover(args):
    amap = _load_map(args)
    y, _ = load_vector(args.input_y)
    if y.size != amap.M:
        raise ConfigError(
            f"data length {y.size} does not match map measurement count {amap.M}"
        )
    noise = NoiseSpec(sigma=args.sigma, sigma0=args.sigma0)
    system = whiten(amap, y, noise)
    lam_data = 1.0 / args.reg_lambda
    res = admm_recover(system, SolverConfig(lam=lam_data, tol=args.tol,
                                            max_iter=args.max_iter))
    options = {
        "input_y": args.input_y, "sigma": args.sigma, "sigma0": args.sigma0,
        "lambda": args.reg_lambda, "tol": args.tol, "max_iter": args.max_iter,
        "ensemble": args.ensemble or "file", "seed": args.seed,
    }
    ohash = _options_hash(options)
    summary = {
        "config_hash": ohash,
        "lambda": args.reg_lambda,
        "data_weight": lam_data,
        "theta": system.theta,
        "delta": system.delta,
        "delta_eff": system.delta_eff,
        "delta1": system.delta1 if system.delta1_finite else None,
        "iterations": res.iterations,
        "converged": res.converged,
        "objective": res.objective,
        "residuals": res.final_residuals,
    }
    if args.truth:
        truth, _ = load_matrix(args.truth)
        if truth.shape != res.x_star.shape:
            raise ConfigError(
                f"truth shape {truth.shape} does not match recovery {res.x_star.shape}"
            )
        summary["rel_err"] = rel_error(truth, res.x_star)
    save_matrix(f"{args.out}.xstar.txt", res.x_star,
                header={"config_hash": ohash, "generator": f"noisefold {__version__}"})
    Path(f"{args.out}.summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return 0


def cmd_image(args):
    if args.synthetic:
        image = synthetic_image()
    else:
        image = read_pgm(args.input)
    grid = tuple(float(t) for t in args.sigma0.replace(",", " ").split())
    if not grid:
        raise ConfigError("empty sigma0 grid")
    rows, recovered = image_experiment(
        image, grid, sigma=args.sigma, reg_lambda=args.reg_lambda,
        n_trials=args.trials, base_seed=args.seed, truncate=args.truncate,
        jobs=args.jobs,
    )
    options = {
        "source": args.input or "synthetic", "sigma": args.sigma,
        "sigma0": args.sigma0, "lambda": args.reg_lambda,
        "trials": args.trials, "truncate": args.truncate, "seed": args.seed,
    }
    ohash = _options_hash(options)
    out = Path(args.out)
    if args.format == "csv":
        Path(f"{out}.table.csv").write_text(
            rows_to_csv(rows, header_lines=[f"config_hash: {ohash}",
                                            f"generator: noisefold {__version__}"]))
    else:
        Path(f"{out}.table.json").write_text(
            rows_to_json(rows, metadata={"config_hash": ohash}))
    for s0, img in recovered.items():
        write_pgm(f"{out}.recovered_sigma0_{s0:g}.pgm", np.clip(img, 0.0, 1.0),
                  comment=f"config_hash: {ohash}")
    print(f"wrote {out}.table.{args.format} and {len(recovered)} PGM file(s)")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"verify": cmd_verify, "sweep": cmd_sweep,
                "recover": cmd_recover, "image": cmd_image}
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
