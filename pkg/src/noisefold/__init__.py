"""Low-rank matrix recovery when the matrix is corrupted before measurement.

The library builds compressive measurement ensembles, whitens the folded
noise model y = A(vec(X + Z)) + w into an equivalent white-noise model,
solves the nuclear-norm recovery problem with ADMM, and numerically checks
the bounds and identities that justify the whitening step.
"""

from .linalg import (
    SvdFactors,
    best_rank_r,
    frobenius_norm,
    lp_norm,
    nuclear_norm,
    spectral_norm,
    svd_factors,
    svt,
    sym_inv_sqrt,
)
from .sensing import (
    MeasurementMap,
    MixtureSpec,
    NoiseSpec,
    Observation,
    adjoint_map,
    apply_map,
    bernoulli_ensemble,
    gaussian_ensemble,
    gen_low_rank,
    map_from_matrix,
    row_orthonormal_ensemble,
    synthesize,
    unvec,
    vec,
)
from .whitening import (
    WhitenedSystem,
    covariance,
    deviation_from_isometry,
    mixture_moment_p,
    mixture_theta,
    noise_level_l2,
    noise_level_lp,
    theta,
    whiten,
)
from .solver import (
    RecoveryResult,
    SolverConfig,
    admm_recover,
    objective,
    solve_normal_equations,
)
from .theory import (
    NspConstants,
    RipEstimate,
    SandwichReport,
    check_sandwich,
    estimate_rip_mc,
    estimate_ssp,
    frob_nsp_bound,
    lp_bounds,
    null_space_basis,
    sample_count,
    stable_nsp_bound,
    stechkin_check,
    sv_perturbation_check,
)
from .metrics import bilinear_resize, psnr, rel_error, snr_db, ssim
from .experiments import (
    ExperimentConfig,
    SweepSpec,
    TrialResult,
    image_experiment,
    run_trial,
    run_trials,
    sweep,
    synthetic_image,
)

__version__ = "0.1.0"
