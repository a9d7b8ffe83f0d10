"""Batch recovery studies: single trials, paired-seed sweeps, image study.

A trial is the full pipeline

    gen_low_rank -> ensemble -> synthesize -> whiten -> admm_recover -> metrics

with three per-trial Philox streams derived from (base_seed, trial_index,
tag): tag 0 draws X, tag 1 the map, tag 2 the noise. Sweeps reuse the same
base_seed at every grid point, so changing only sigma0 changes only the
noise scale of otherwise identical draws (paired design).

The lambda knob here and in all outputs is the regularization parameter in
the convention of the recovery-vs-lambda study (a weight on the nuclear
term relative to a unit data term); the solver's data-fit weight is its
reciprocal. See SolverConfig for the solver-side convention.
"""

import csv
import io
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .metrics import bilinear_resize, psnr, rel_error, snr_db, ssim
from .sensing import (NoiseSpec, bernoulli_ensemble, gaussian_ensemble,
                      gen_low_rank, row_orthonormal_ensemble, synthesize)
from .solver import SolverConfig, SolverError, admm_recover
from .theory import sample_count
from .whitening import whiten

SWEEP_AXES = ("lambda", "rank", "measurements", "sigma0")

ENSEMBLE_BUILDERS = {
    "gaussian": gaussian_ensemble,
    "bernoulli": bernoulli_ensemble,
    "row_orthonormal": row_orthonormal_ensemble,
}

CSV_COLUMNS = [
    "ensemble", "m", "n", "r", "M", "sigma", "sigma0", "lambda", "n_trials",
    "mean_snr_db", "std_snr_db", "mean_rel_err", "std_rel_err",
    "mean_psnr_db", "mean_ssim", "mean_iters", "mean_runtime_ms",
]


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    grid: tuple

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"sweep axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if len(self.grid) == 0:
            raise ValueError("sweep grid must be non-empty")


@dataclass(frozen=True)
class ExperimentConfig:
    ensemble: str = "gaussian"
    m: int = 30
    n: int = 30
    r: int = 6
    M: int = 750
    noise: NoiseSpec = field(default_factory=lambda: NoiseSpec(sigma=0.01, sigma0=0.05))
    reg_lambda: float = 1e-3
    n_trials: int = 100
    base_seed: int = 0
    sweep: SweepSpec | None = None
    solver_tol: float = 1e-8
    solver_max_iter: int = 500

    def __post_init__(self):
        if self.ensemble not in ENSEMBLE_BUILDERS:
            raise ValueError(f"unknown ensemble {self.ensemble!r}")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.reg_lambda <= 0:
            raise ValueError("reg_lambda must be positive")


@dataclass(frozen=True)
class TrialResult:
    ensemble: str
    m: int
    n: int
    r: int
    M: int
    sigma: float
    sigma0: float
    reg_lambda: float
    seed: int
    snr_db: float
    rel_err: float
    psnr_db: float | None
    ssim: float | None
    iterations: int
    runtime_ms: float
    converged: bool
    resid_l2: float
    solver_error: str | None = None


def data_weight(reg_lambda):
    """Solver data-fit weight for a given regularization parameter."""
    return 1.0 / reg_lambda


def _solver_config(config):
    return SolverConfig(lam=data_weight(config.reg_lambda),
                        tol=config.solver_tol, max_iter=config.solver_max_iter)


def run_trial(config, trial_index, ground_truth=None, reference=None):
    """Run one pipeline trial.

    ground_truth overrides the generated low-rank matrix (used by the image
    study); reference, when given, is the clean image PSNR/SSIM are scored
    against.
    """
    t0 = time.perf_counter()
    key = (config.base_seed, trial_index)
    if ground_truth is None:
        x = gen_low_rank(config.m, config.n, config.r, key + (0,))
    else:
        x = np.asarray(ground_truth, dtype=np.float64)
    amap = ENSEMBLE_BUILDERS[config.ensemble](config.m, config.n, config.M, key + (1,))
    obs = synthesize(amap, x, config.noise, key + (2,))
    ws = whiten(amap, obs.y, config.noise)

    iterations = 0
    converged = False
    resid_l2 = float("nan")
    err_msg = None
    try:
        res = admm_recover(ws, _solver_config(config))
        x_hat = res.x_star
        iterations = res.iterations
        converged = res.converged
        resid_l2 = res.final_residuals["data_l2"]
        rel = rel_error(x, x_hat)
    except SolverError as exc:  # recorded in the row, sweep continues
        err_msg = str(exc)
        x_hat = None
        rel = float("nan")
    runtime_ms = (time.perf_counter() - t0) * 1e3

    psnr_val = ssim_val = None
    if reference is not None and x_hat is not None:
        psnr_val = psnr(reference, x_hat)
        ssim_val = ssim(reference, x_hat)
    return TrialResult(
        ensemble=config.ensemble, m=config.m, n=config.n, r=config.r, M=config.M,
        sigma=config.noise.sigma, sigma0=config.noise.sigma0,
        reg_lambda=config.reg_lambda, seed=trial_index,
        snr_db=snr_db(rel) if np.isfinite(rel) else float("nan"),
        rel_err=rel, psnr_db=psnr_val, ssim=ssim_val,
        iterations=iterations, runtime_ms=runtime_ms,
        converged=converged, resid_l2=resid_l2, solver_error=err_msg,
    )


def _worker_init():
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(1)
    except ImportError:
        pass


def _run_one(args):
    config, index, ground_truth, reference = args
    return run_trial(config, index, ground_truth=ground_truth, reference=reference)


def run_trials(config, jobs=1, ground_truth=None, reference=None):
    """All trials of one configuration, ordered by trial index.

    jobs > 1 fans trials out to worker processes; results are collected in
    index order, so the output is identical to a serial run.
    """
    tasks = [(config, i, ground_truth, reference) for i in range(config.n_trials)]
    if jobs <= 1 or config.n_trials == 1:
        return [_run_one(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=jobs, initializer=_worker_init) as pool:
        return list(pool.map(_run_one, tasks))


class _Welford:
    """Numerically stable single-pass mean/std."""

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add(self, x):
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)

    def std(self):
        if self.n < 2:
            return 0.0
        return (self.m2 / (self.n - 1)) ** 0.5


def aggregate(config, results):
    """Mean/std aggregate of a trial list as one CSV row dict."""
    accs = {k: _Welford() for k in ("snr", "rel", "psnr", "ssim", "iters", "ms")}
    have_image = all(r.psnr_db is not None for r in results)
    for r in results:
        accs["snr"].add(r.snr_db)
        accs["rel"].add(r.rel_err)
        accs["iters"].add(float(r.iterations))
        accs["ms"].add(r.runtime_ms)
        if have_image:
            accs["psnr"].add(r.psnr_db)
            accs["ssim"].add(r.ssim)
    return {
        "ensemble": config.ensemble, "m": config.m, "n": config.n,
        "r": config.r, "M": config.M,
        "sigma": config.noise.sigma, "sigma0": config.noise.sigma0,
        "lambda": config.reg_lambda, "n_trials": len(results),
        "mean_snr_db": accs["snr"].mean, "std_snr_db": accs["snr"].std(),
        "mean_rel_err": accs["rel"].mean, "std_rel_err": accs["rel"].std(),
        "mean_psnr_db": accs["psnr"].mean if have_image else None,
        "mean_ssim": accs["ssim"].mean if have_image else None,
        "mean_iters": accs["iters"].mean, "mean_runtime_ms": accs["ms"].mean,
    }


def _apply_axis(config, axis, value):
    if axis == "lambda":
        return replace(config, reg_lambda=float(value))
    if axis == "rank":
        return replace(config, r=int(value))
    if axis == "measurements":
        return replace(config, M=int(value))
    if axis == "sigma0":
        noise = replace(config.noise, sigma0=float(value))
        return replace(config, noise=noise)
    raise ValueError(f"unknown sweep axis {axis!r}")


def sweep(config, jobs=1):
    """Aggregated rows over the sweep grid (one row per grid point).

    Per-trial seeds are shared across grid points, pairing the design. A
    config without a sweep produces the single aggregate of its trials.
    """
    if config.sweep is None:
        return [aggregate(config, run_trials(config, jobs=jobs))]
    rows = []
    for value in config.sweep.grid:
        point = _apply_axis(config, config.sweep.axis, value)
        point = replace(point, sweep=None)
        rows.append(aggregate(point, run_trials(point, jobs=jobs)))
    return rows


def sweep_trials(config, jobs=1):
    """Like sweep() but returning the raw per-trial results per grid point."""
    if config.sweep is None:
        return {None: run_trials(config, jobs=jobs)}
    out = {}
    for value in config.sweep.grid:
        point = replace(_apply_axis(config, config.sweep.axis, value), sweep=None)
        out[value] = run_trials(point, jobs=jobs)
    return out


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def rows_to_csv(rows, header_lines=()):
    """Render aggregate rows as CSV text with optional '#' metadata lines."""
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_to_json(rows, metadata=None):
    """JSON mirror of the CSV output (same fields, null for absent)."""
    doc = {"metadata": dict(metadata or {}), "rows": [dict(r) for r in rows]}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def synthetic_image(size=256):
    """Deterministic smooth grayscale target in [0, 1], approximately low
    rank (a superposition of a few separable gradients and bumps)."""
    t = np.linspace(0.0, 1.0, size)
    xg, yg = np.meshgrid(t, t, indexing="ij")
    img = (0.45
           + 0.20 * np.sin(2.0 * np.pi * xg) * np.cos(np.pi * yg)
           + 0.15 * np.outer(np.exp(-8.0 * (t - 0.3) ** 2),
                             np.exp(-6.0 * (t - 0.7) ** 2))
           + 0.12 * np.outer(t, 1.0 - t)
           + 0.06 * np.sin(3.0 * np.pi * xg) * np.sin(2.0 * np.pi * yg))
    return np.clip(img, 0.02, 0.98)


def image_experiment(image, sigma0_grid, *, sigma=0.01, reg_lambda=0.5,
                     n_trials=5, base_seed=0, ensemble="gaussian",
                     truncate=False, jobs=1):
    """Grayscale image study: downscale to 30x30, measure, recover, score.

    The rank budget is r = 0.2 * 30 = 6 and the measurement count follows
    the empirical rule M = ceil(2.5 r (m + n - r)) + 1 = 811. PSNR/SSIM are
    computed against the clean downscaled image. The measured matrix is the
    downscaled image as-is; truncate=True measures its best rank-6
    approximation instead (the near-noiseless oracle mode).

    Returns (rows, recovered) where rows are aggregates (one per sigma0)
    and recovered maps sigma0 to the first-trial recovered image.
    """
    image = np.asarray(image, dtype=np.float64)
    side = 30
    reference = bilinear_resize(image, (side, side)) if image.shape != (side, side) \
        else image.copy()
    r = round(0.2 * side)
    m_count = sample_count(r, side, side, rule="empirical")
    target = reference
    if truncate:
        from .linalg import best_rank_r
        target, _ = best_rank_r(reference, r)
    rows = []
    recovered = {}
    for s0 in sigma0_grid:
        config = ExperimentConfig(
            ensemble=ensemble, m=side, n=side, r=r, M=m_count,
            noise=NoiseSpec(sigma=sigma, sigma0=float(s0)),
            reg_lambda=reg_lambda, n_trials=n_trials, base_seed=base_seed,
        )
        results = run_trials(config, jobs=jobs, ground_truth=target,
                             reference=reference)
        rows.append(aggregate(config, results))
        recovered[float(s0)] = _recover_image(config, target)
    return rows, recovered


def _recover_image(config, target):
    key = (config.base_seed, 0)
    amap = ENSEMBLE_BUILDERS[config.ensemble](config.m, config.n, config.M, key + (1,))
    obs = synthesize(amap, target, config.noise, key + (2,))
    ws = whiten(amap, obs.y, config.noise)
    res = admm_recover(ws, _solver_config(config))
    return res.x_star
