"""Numerical verification and bound evaluation for the recovery theory.

Monte-Carlo RIP estimates, the whitening sandwich check, null-space and
spherical-section probes, the null-space-property error-bound calculators,
and the auxiliary singular-value inequalities. Estimates are labeled for
what they are: RIP estimates are inner bounds (sampling cannot certify an
extremum), the SSP estimate is an upper bound on the true constant, and
NSP constants are user-supplied inputs, never certified.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import lp_norm, singular_values
from .sensing import MeasurementMap, gen_low_rank, rng_from_seed, unvec, vec
from .whitening import WhitenedSystem

NSP_KINDS = ("frobenius_robust", "stable")


@dataclass(frozen=True)
class RipEstimate:
    """Sampled restricted-isometry bounds over rank-r matrices.

    mu_hat/nu_hat are the min/max of ||A(X)||^2 / ||X||_F^2 over the sampled
    rank-r matrices, hence inner bounds: mu_hat >= true mu_r and
    nu_hat <= true nu_r.
    """

    r: int
    mu_hat: float
    nu_hat: float
    trials: int


@dataclass(frozen=True)
class NspConstants:
    """User-supplied rank null space property constants (never certified)."""

    rho: float
    tau: float
    r: int
    kind: str

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must be in (0, 1), got {self.rho}")
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.kind not in NSP_KINDS:
            raise ValueError(f"kind must be one of {NSP_KINDS}, got {self.kind!r}")
        if self.r < 1:
            raise ValueError("r must be >= 1")


@dataclass(frozen=True)
class SandwichReport:
    """Outcome of the whitening sandwich check.

    The delta1'-sandwich (1 -+ delta_eff/(1-delta_eff)) is only valid
    when delta_eff < 1; outside that regime the check is inconclusive and
    only the sharp eigenvalue sandwich (always valid) is asserted.
    """

    trials: int
    delta_eff: float
    delta1_prime: float | None
    conclusive: bool
    max_violation: float
    sharp_max_violation: float
    ratio_lo: float
    ratio_hi: float


def _measurement_norms_sq(obj, xs):
    """||map(X)||_2^2 for a batch of vec'd matrices (columns of xs)."""
    if isinstance(obj, WhitenedSystem):
        prod = obj.rotated_map() @ xs
    elif isinstance(obj, MeasurementMap):
        prod = obj.matrix @ xs
    else:
        raise TypeError("expected MeasurementMap or WhitenedSystem")
    return np.sum(prod * prod, axis=0)


def estimate_rip_mc(amap, r, trials, seed):
    """Monte-Carlo inner bounds on the RIP constants of order r.

    Trial i uses its own derived seed (seed, i), so estimates over a prefix
    of trials are nested: mu_hat can only decrease and nu_hat only increase
    as trials grow.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 1 <= r <= min(amap.m, amap.n):
        raise ValueError(f"r must be in [1, {min(amap.m, amap.n)}]")
    base = seed if isinstance(seed, tuple) else (int(seed),)
    mu_hat = math.inf
    nu_hat = -math.inf
    chunk = 256
    for start in range(0, trials, chunk):
        stop = min(start + chunk, trials)
        xs = np.empty((amap.m * amap.n, stop - start))
        for i in range(start, stop):
            x = gen_low_rank(amap.m, amap.n, r, base + (i,))
            xs[:, i - start] = vec(x)
        ratios = _measurement_norms_sq(amap, xs) / np.sum(xs * xs, axis=0)
        mu_hat = min(mu_hat, float(ratios.min()))
        nu_hat = max(nu_hat, float(ratios.max()))
    return RipEstimate(r=r, mu_hat=mu_hat, nu_hat=nu_hat, trials=trials)


def check_sandwich(amap, system, trials, seed):
    """Check the whitening sandwich on random matrices of arbitrary rank.

    For each sampled X (standard normal entries, full rank almost surely)
    the ratio ||B(X)||^2 / ||A(X)||^2 is tested against
    [1 - d1', 1 + d1'] with d1' = delta_eff/(1 - delta_eff) when
    delta_eff < 1, and always against the sharp eigenvalue interval
    [1/max eig Sigma_1, 1/min eig Sigma_1]. Violations are relative.
    """
    rng = rng_from_seed(seed)
    mn = amap.m * amap.n
    delta_eff = system.delta_eff
    conclusive = delta_eff < 1.0
    d1p = delta_eff / (1.0 - delta_eff) if conclusive else None
    sig1 = np.asarray(system.sig1_eigs, dtype=np.float64)
    ratio_lo = float(1.0 / sig1.max())
    ratio_hi = float(1.0 / sig1.min()) if sig1.min() > 0 else math.inf
    max_viol = 0.0 if conclusive else math.nan
    sharp_viol = 0.0
    chunk = 256
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        xs = rng.standard_normal((mn, k))
        a2 = _measurement_norms_sq(amap, xs)
        b2 = _measurement_norms_sq(system, xs)
        if conclusive:
            lo, hi = (1.0 - d1p) * a2, (1.0 + d1p) * a2
            v = np.maximum(lo - b2, b2 - hi) / a2
            max_viol = max(max_viol, float(v.max()))
        vs = np.maximum(ratio_lo * a2 - b2, b2 - ratio_hi * a2) / a2
        sharp_viol = max(sharp_viol, float(vs.max()))
        done += k
    return SandwichReport(
        trials=trials,
        delta_eff=delta_eff,
        delta1_prime=d1p,
        conclusive=conclusive,
        max_violation=max(max_viol, 0.0) if conclusive else math.nan,
        sharp_max_violation=max(sharp_viol, 0.0),
        ratio_lo=ratio_lo,
        ratio_hi=ratio_hi,
    )


def null_space_basis(amap, tol=1e-10):
    """Orthonormal matrices spanning the null space of the map.

    Taken from the right singular vectors whose singular values fall below
    tol * sigma_max (plus the dimension gap mn - M). Empty when M >= mn and
    the map has full column rank.
    """
    mn = amap.m * amap.n
    _, s, vt_full = np.linalg.svd(amap.matrix, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > tol * smax)) if smax > 0 else 0
    return [unvec(vt_full[i], amap.m, amap.n) for i in range(rank, mn)]


def estimate_ssp(amap, trials, seed, basis=None):
    """Sampled upper bound on the spherical section constant.

    Minimizes ||V||_*^2 / ||V||_F^2 over random combinations of a null-space
    basis; since the true constant is the minimum over the whole null space,
    the sampled value can only overestimate it.
    """
    if basis is None:
        basis = null_space_basis(amap)
    if not basis:
        warnings.warn("estimate_ssp: map has an empty null space; returning NaN",
                      RuntimeWarning, stacklevel=2)
        return math.nan
    rng = rng_from_seed(seed)
    stack = np.stack([vec(b) for b in basis], axis=1)  # (mn, k)
    best = math.inf
    for _ in range(trials):
        coeffs = rng.standard_normal(stack.shape[1])
        v = unvec(stack @ coeffs, amap.m, amap.n)
        s = singular_values(v)
        ratio = float(np.sum(s) ** 2 / np.sum(s * s))
        best = min(best, ratio)
    return best


def frob_nsp_bound(constants, delta1, tail_nuclear, epsilon):
    """Recovery error bound under the Frobenius-robust rank NSP:
    C1 * tail/sqrt(r) + C2 * eps with C1 = 2(1+rho)^2/(1-rho) and
    C2 = 2(3+rho)tau / ((1-rho) sqrt(1-delta1))."""
    c = constants
    if c.kind != "frobenius_robust":
        raise ValueError("constants must have kind 'frobenius_robust'")
    if not 0.0 <= delta1 < 1.0:
        raise ValueError(f"delta1 must be in [0, 1), got {delta1}")
    c1 = 2.0 * (1.0 + c.rho) ** 2 / (1.0 - c.rho)
    c2 = 2.0 * (3.0 + c.rho) * c.tau / ((1.0 - c.rho) * math.sqrt(1.0 - delta1))
    return c1 * tail_nuclear / math.sqrt(c.r) + c2 * epsilon


def stable_nsp_bound(constants, delta1, tail_nuclear, epsilon, r=None):
    """Recovery error bound under the stable rank NSP:
    D1 * tail/sqrt(r) + D2 * eps with D1 = 2(1+rho)(rho sqrt(r)+1)/(1-rho)
    and D2 = 2[(1+rho) sqrt(r) + 2] tau / ((1-rho) sqrt(r (1-delta1)))."""
    c = constants
    if c.kind != "stable":
        raise ValueError("constants must have kind 'stable'")
    if not 0.0 <= delta1 < 1.0:
        raise ValueError(f"delta1 must be in [0, 1), got {delta1}")
    r = c.r if r is None else r
    sq = math.sqrt(r)
    d1 = 2.0 * (1.0 + c.rho) * (c.rho * sq + 1.0) / (1.0 - c.rho)
    d2 = (2.0 * ((1.0 + c.rho) * sq + 2.0) * c.tau
          / ((1.0 - c.rho) * math.sqrt(r * (1.0 - delta1))))
    return d1 * tail_nuclear / sq + d2 * epsilon


def lp_bounds(constants, delta1, tail_nuclear, epsilon, r, M, p):
    """Frobenius and Schatten-p error bounds for l_p-constrained recovery,
    1 <= p < 2. Returns (frobenius_bound, schatten_p_bound)."""
    c = constants
    if not 1.0 <= p < 2.0:
        raise ValueError(f"p must be in [1, 2), got {p}")
    if not 0.0 <= delta1 < 1.0:
        raise ValueError(f"delta1 must be in [0, 1), got {delta1}")
    mfac = M ** (0.5 - 1.0 / p)
    root = math.sqrt(1.0 - delta1)
    c1 = 2.0 * (1.0 + c.rho) ** 2 / (1.0 - c.rho)
    frob = (c1 * tail_nuclear / math.sqrt(r)
            + 2.0 * c.tau * (3.0 + c.rho) / ((1.0 - c.rho) * mfac * root) * epsilon)
    schatten = (c1 / r ** (1.0 - 1.0 / p) * tail_nuclear
                + 2.0 * c.tau * (3.0 + c.rho) * r ** (1.0 / p - 0.5)
                / ((1.0 - c.rho) * mfac * root) * epsilon)
    return frob, schatten


def nsp_defn_slack(obj, x, constants):
    """Slack of the rank-NSP defining inequality for one matrix.

    Returns rhs - lhs; a non-negative value means the inequality holds for
    this matrix with the supplied constants. obj may be a raw map or a
    whitened system (the measured norm then uses B).
    """
    c = constants
    s = singular_values(x)
    tail = float(np.sum(s[c.r:]))
    meas = math.sqrt(float(_measurement_norms_sq(obj, vec(x)[:, None])[0]))
    if c.kind == "frobenius_robust":
        lhs = float(np.sqrt(np.sum(s[: c.r] ** 2)))
        rhs = c.rho / math.sqrt(c.r) * tail + c.tau * meas
    else:
        lhs = float(np.sum(s[: c.r]))
        rhs = c.rho * tail + c.tau * meas
    return rhs - lhs


def stechkin_check(x, r, p, slack=1e-9):
    """Schatten-p norm of the rank-r tail against r^(1/p-1) ||X||_*."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    s = singular_values(x)
    if not 1 <= r <= s.size:
        raise ValueError(f"r must be in [1, {s.size}]")
    lhs = lp_norm(s[r:], p) if s.size > r else 0.0
    rhs = r ** (1.0 / p - 1.0) * float(np.sum(s))
    return lhs <= rhs + slack * max(1.0, rhs)


def sv_perturbation_check(x, y, slack=1e-9):
    """||X - Y||_* >= sum_i |sigma_i(X) - sigma_i(Y)|."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("matrices must have the same shape")
    lhs = float(np.sum(singular_values(x - y)))
    rhs = float(np.sum(np.abs(singular_values(x) - singular_values(y))))
    return lhs + slack * max(1.0, lhs) >= rhs


def sample_count(r, m, n, rule="empirical", c1=5.0):
    """Measurement budgets: rule "nsp" gives ceil(c1 * r * (m+n)) (c1 is a
    user-supplied order-of-magnitude constant, echoed, never estimated);
    rule "empirical" gives ceil(2.5 * r * (m+n-r)) + 1. r <= 0 degenerates
    to 1."""
    if rule not in ("nsp", "empirical"):
        raise ValueError(f"rule must be 'nsp' or 'empirical', got {rule!r}")
    if r <= 0:
        return 1
    if rule == "nsp":
        return math.ceil(c1 * r * (m + n))
    return math.ceil(2.5 * r * (m + n - r)) + 1
