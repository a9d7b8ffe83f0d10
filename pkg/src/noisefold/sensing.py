"""Measurement ensembles, the linear map and its adjoint, and noisy synthesis.

Conventions fixed here and shared by every module:

* vec() stacks columns (Fortran order), so row i of the map matrix equals
  vec(A_i)^T for the i-th measurement matrix A_i.
* All randomness comes from the counter-based Philox generator keyed by a
  seed (an int or a tuple of ints), so draws are reproducible across runs,
  platforms and thread counts.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import _as_matrix, singular_values

ENSEMBLES = ("gaussian", "bernoulli", "row_orthonormal", "row_orthonormal_scaled",
             "user_supplied")


def rng_from_seed(seed):
    """Philox generator from an int seed or a tuple of ints."""
    if isinstance(seed, (int, np.integer)):
        entropy = (int(seed),)
    else:
        entropy = tuple(int(s) for s in seed)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def vec(x):
    """Column-stacking vectorization."""
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, m, n):
    """Inverse of vec()."""
    v = np.asarray(v)
    if v.size != m * n:
        raise ValueError(f"cannot reshape length-{v.size} vector to {m}x{n}")
    return v.reshape((m, n), order="F")


@dataclass(frozen=True)
class MixtureSpec:
    """Two-term Gaussian mixture contamination.

    A fraction xi of measurement-noise entries has variance kappa*sigma^2;
    a fraction eta of matrix-noise entries has variance gamma_mix*sigma0^2.
    """

    xi: float = 0.0
    kappa: float = 1.0
    eta: float = 0.0
    gamma_mix: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.xi < 1.0:
            raise ValueError(f"xi must be in [0, 1), got {self.xi}")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"eta must be in [0, 1), got {self.eta}")
        if self.kappa < 1.0:
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")
        if self.gamma_mix < 1.0:
            raise ValueError(f"gamma_mix must be >= 1, got {self.gamma_mix}")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise levels: sigma for the measurement noise w, sigma0 for the
    entrywise matrix noise Z, plus an optional mixture contamination."""

    sigma: float = 0.0
    sigma0: float = 0.0
    mixture: MixtureSpec | None = None

    def __post_init__(self):
        if self.sigma < 0 or self.sigma0 < 0:
            raise ValueError("sigma and sigma0 must be non-negative")


@dataclass(frozen=True)
class MeasurementMap:
    """An M x (m*n) matrix realizing a linear map on m x n matrices."""

    matrix: np.ndarray
    m: int
    n: int
    M: int
    ensemble: str
    seed: int = 0

    def __post_init__(self):
        if self.ensemble not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.ensemble!r}")
        if self.matrix.shape != (self.M, self.m * self.n):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match "
                f"M={self.M}, m*n={self.m * self.n}"
            )


def map_from_matrix(matrix, m, n, ensemble="user_supplied", seed=0):
    a = _as_matrix(matrix, "matrix")
    return MeasurementMap(matrix=a, m=m, n=n, M=a.shape[0], ensemble=ensemble,
                          seed=seed)


def gaussian_ensemble(m, n, M, seed):
    """Entries i.i.d. Normal(0, 1/M)."""
    rng = rng_from_seed(seed)
    a = rng.standard_normal((M, m * n)) / np.sqrt(M)
    return MeasurementMap(matrix=a, m=m, n=n, M=M, ensemble="gaussian", seed=_seed_tag(seed))


def bernoulli_ensemble(m, n, M, seed):
    """Entries +-1/sqrt(M) with probability 1/2 each."""
    rng = rng_from_seed(seed)
    signs = rng.integers(0, 2, size=(M, m * n)).astype(np.float64) * 2.0 - 1.0
    return MeasurementMap(matrix=signs / np.sqrt(M), m=m, n=n, M=M,
                          ensemble="bernoulli", seed=_seed_tag(seed))


def row_orthonormal_ensemble(m, n, M, seed, row_norm="unit"):
    """Map whose rows are mutually orthogonal.

    row_norm="unit" gives orthonormal rows (A A^T = I); row_norm="scaled"
    rescales every row to squared norm m*n/M (A A^T = (mn/M) I), which is
    the normalization under which the map is an exact scaled isometry.
    Rows come from a QR factorization of M i.i.d. Gaussian rows.
    """
    mn = m * n
    if M > mn:
        raise ValueError(f"row_orthonormal ensemble needs M <= m*n, got M={M} > {mn}")
    if row_norm not in ("unit", "scaled"):
        raise ValueError(f"row_norm must be 'unit' or 'scaled', got {row_norm!r}")
    rng = rng_from_seed(seed)
    g = rng.standard_normal((mn, M))
    q, r = np.linalg.qr(g)
    # fix QR signs so the factorization is unique given the draw
    q = q * np.sign(np.diag(r))
    a = q.T
    ensemble = "row_orthonormal"
    if row_norm == "scaled":
        a = a * np.sqrt(mn / M)
        ensemble = "row_orthonormal_scaled"
    return MeasurementMap(matrix=np.ascontiguousarray(a), m=m, n=n, M=M,
                          ensemble=ensemble, seed=_seed_tag(seed))


def _seed_tag(seed):
    # keep a representative int for dataclass storage when seeds are tuples
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    ss = np.random.SeedSequence(tuple(int(s) for s in seed))
    return int(ss.generate_state(1, np.uint64)[0])


def apply_map(amap, x):
    """A vec(X): the measurement vector of X."""
    a = _as_matrix(x)
    if a.shape != (amap.m, amap.n):
        raise ValueError(f"expected {amap.m}x{amap.n} matrix, got {a.shape}")
    return amap.matrix @ vec(a)


def adjoint_map(amap, v):
    """unvec(A^T v); adjoint of apply_map under the trace inner product."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size != amap.M:
        raise ValueError(f"expected length-{amap.M} vector, got {v.size}")
    return unvec(amap.matrix.T @ v, amap.m, amap.n)


@dataclass(frozen=True)
class Observation:
    """One synthesized measurement y = A vec(X + Z) + w with its parts."""

    y: np.ndarray
    ground_truth: np.ndarray
    noise_matrix: np.ndarray
    meas_noise: np.ndarray


def _mixture_normal(rng, shape, base_sd, frac, strength):
    """Per-entry two-term Gaussian mixture draw.

    Each entry independently has standard deviation sqrt(strength)*base_sd
    with probability frac, else base_sd. Consumes the same stream length
    regardless of parameter values, so draws stay paired across settings.
    """
    outlier = rng.random(shape) < frac
    sd = np.where(outlier, np.sqrt(strength) * base_sd, base_sd)
    return sd * rng.standard_normal(shape)


def synthesize(amap, x, noise, seed):
    """Draw Z and w and assemble y = A vec(X + Z) + w.

    Z is drawn before w from a single Philox stream; both are plain white
    Gaussian unless the noise spec carries a mixture.
    """
    a = _as_matrix(x)
    if a.shape != (amap.m, amap.n):
        raise ValueError(f"expected {amap.m}x{amap.n} matrix, got {a.shape}")
    rng = rng_from_seed(seed)
    if noise.mixture is None:
        z = noise.sigma0 * rng.standard_normal(a.shape)
        w = noise.sigma * rng.standard_normal(amap.M)
    else:
        mix = noise.mixture
        z = _mixture_normal(rng, a.shape, noise.sigma0, mix.eta, mix.gamma_mix)
        w = _mixture_normal(rng, (amap.M,), noise.sigma, mix.xi, mix.kappa)
    y = amap.matrix @ vec(a + z) + w
    return Observation(y=y, ground_truth=a, noise_matrix=z, meas_noise=w)


def gen_low_rank(m, n, r, seed):
    """Rank-r matrix X = XL @ XR with i.i.d. standard normal factors."""
    if not 1 <= r <= min(m, n):
        raise ValueError(f"r must be in [1, {min(m, n)}], got {r}")
    rng = rng_from_seed(seed)
    xl = rng.standard_normal((m, r))
    xr = rng.standard_normal((r, n))
    x = xl @ xr
    s = singular_values(x)
    if s[r - 1] <= 1e-8 or (r < min(m, n) and s[r] >= 1e-8 * s[0]):
        raise RuntimeError(f"generated matrix is not numerically rank {r}")
    return x
