"""Whitening of the folded-noise measurement model.

With pre-measurement noise Z, the observation y = A vec(X + Z) + w equals
A vec(X) + v where v has covariance Sigma = sigma^2 I + sigma0^2 A A^T.
Multiplying by Sigma_1^{-1/2}, Sigma_1 = Sigma / theta, restores a white
model y~ = B vec(X) + u with Cov(u) = theta I and

    theta = sigma^2 + (m*n/M) * sigma0^2,

exposing the m*n/M noise-folding factor. The quality of A A^T as a scaled
identity is measured by delta = ||I - (M/mn) A A^T||; the operative
deviation of the whitening transform itself is delta_eff = ||Sigma_1 - I||,
which equals (sigma0^2 mn / (theta M)) * delta and is never larger than
delta.
"""

import math
import warnings

import numpy as np

from .linalg import RANK_TOL
from .sensing import MeasurementMap


class WhiteningError(RuntimeError):
    pass


def theta(noise, m, n, M):
    """Folded noise variance sigma^2 + m*n*sigma0^2 / M."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return noise.sigma**2 + m * n * noise.sigma0**2 / M


def mixture_theta(noise, m, n, M):
    """Folded variance under two-term Gaussian mixture contamination:
    [(1-xi) + kappa*xi] sigma^2 + mn [(1-eta) + gamma*eta] sigma0^2 / M."""
    if noise.mixture is None:
        raise ValueError("noise spec has no mixture component")
    a, b = _noise_coefficients(noise)
    return a + m * n * b / M


def _noise_coefficients(noise):
    """Effective (measurement, matrix) noise variances, mixture-scaled."""
    a = noise.sigma**2
    b = noise.sigma0**2
    if noise.mixture is not None:
        mix = noise.mixture
        a *= (1.0 - mix.xi) + mix.kappa * mix.xi
        b *= (1.0 - mix.eta) + mix.gamma_mix * mix.eta
    return a, b


def covariance(amap, noise):
    """Covariance of the folded noise vector v = A vec(Z) + w.

    Equals sigma^2 I + sigma0^2 A A^T for white noise; under mixture
    contamination the variances carry the mixture scale factors.
    """
    a, b = _noise_coefficients(noise)
    g = amap.matrix @ amap.matrix.T
    sig = b * g
    sig[np.diag_indices_from(sig)] += a
    return sig


def deviation_from_isometry(amap):
    """delta = ||I - (M/mn) A A^T|| together with the deviation matrix."""
    mn = amap.m * amap.n
    dev = -(amap.M / mn) * (amap.matrix @ amap.matrix.T)
    dev[np.diag_indices_from(dev)] += 1.0
    dev = 0.5 * (dev + dev.T)
    delta = float(np.max(np.abs(np.linalg.eigvalsh(dev))))
    return delta, dev


def noise_level_l2(theta_val, M):
    """High-probability l2 bound sqrt(theta (M + 2 sqrt(M log M))).

    log is the natural logarithm (Gaussian tail bounds).
    """
    if M < 2:
        raise ValueError("M must be >= 2")
    return math.sqrt(theta_val * (M + 2.0 * math.sqrt(M * math.log(M))))


def noise_level_lp(theta_val, M, p):
    """High-probability l_p bound: M^(1/p) sqrt(theta (1 + 2 sqrt(log(M)/M)))
    for 1 <= p < 2, and the l2 level for p >= 2."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if p >= 2:
        return noise_level_l2(theta_val, M)
    return M ** (1.0 / p) * math.sqrt(
        theta_val * (1.0 + 2.0 * math.sqrt(math.log(M) / M))
    )


def mixture_moment_p(theta_prime, M, p):
    """p-th moment E||u||_p^p of u ~ N(0, theta' I_M):
    M 2^(p/2) theta'^(p/2) Gamma((p+1)/2) / sqrt(pi)."""
    if p <= 0:
        raise ValueError(f"p must be > 0, got {p}")
    return (
        M * 2.0 ** (p / 2.0) * theta_prime ** (p / 2.0)
        * math.gamma((p + 1.0) / 2.0) / math.sqrt(math.pi)
    )


class WhitenedSystem:
    """Equivalent white-noise model y~ = B vec(X) + u, Cov(u) = theta I.

    Carries the whitened map B, the whitened data y_tilde, the folded
    variance theta, the isometry deviations delta (of the raw map),
    delta_eff = ||Sigma_1 - I|| and delta1 = delta/(1-delta), plus the
    eigendecomposition of A A^T from which everything is derived. B and
    the explicit whitener Sigma_1^{-1/2} are formed on first access.
    """

    def __init__(self, amap, y, noise, *, theta_val, q, gram_eigs, sig1_eigs,
                 sig1_eigs_clamped, y_tilde):
        self.map = amap
        self.y = np.asarray(y, dtype=np.float64)
        self.noise = noise
        self.theta = float(theta_val)
        self.m, self.n, self.M = amap.m, amap.n, amap.M
        self._q = q
        self._gram_eigs = gram_eigs            # eigenvalues of A A^T
        self.sig1_eigs = sig1_eigs             # eigenvalues of Sigma_1 (raw)
        self._sig1_clamped = sig1_eigs_clamped
        self._inv_sqrt = 1.0 / np.sqrt(sig1_eigs_clamped)
        self.y_tilde = y_tilde
        mn = self.m * self.n
        scale = self.M / mn
        self.delta = float(np.max(np.abs(1.0 - scale * gram_eigs)))
        self.delta_eff = float(np.max(np.abs(sig1_eigs - 1.0)))
        self.delta1_finite = self.delta < 1.0
        self.delta1 = self.delta / (1.0 - self.delta) if self.delta1_finite else math.inf
        self._b = None
        self._b_rot = None
        self._whitener = None

    @property
    def b(self):
        """Whitened map B = Sigma_1^{-1/2} A."""
        if self._b is None:
            if self._is_identity_whitener():
                self._b = self.map.matrix
            else:
                self._b = self._q @ self.rotated_map()
        return self._b

    @property
    def whitener(self):
        """Explicit symmetric Sigma_1^{-1/2}."""
        if self._whitener is None:
            w = (self._q * self._inv_sqrt) @ self._q.T
            self._whitener = 0.5 * (w + w.T)
        return self._whitener

    def _is_identity_whitener(self):
        return bool(np.all(self.sig1_eigs == 1.0))

    # --- rotated representation -------------------------------------------
    # In the eigenbasis of A A^T the whitened system is (Q^T B, Q^T y~);
    # norms of residuals are preserved, and B B^T becomes diagonal, which is
    # what the solver's normal-equation updates exploit.

    def rotated_map(self):
        """Q^T B, with rows scaled by the inverse-sqrt whitening eigenvalues."""
        if self._b_rot is None:
            self._b_rot = self._inv_sqrt[:, None] * (self._q.T @ self.map.matrix)
        return self._b_rot

    def rotated_data(self):
        """Q^T y_tilde."""
        return self._inv_sqrt * (self._q.T @ self.y)

    def gram_eigs_whitened(self):
        """Eigenvalues of B B^T (same eigenvectors Q as A A^T)."""
        return self._gram_eigs / self._sig1_clamped

    def unrotate(self, v):
        """Map a vector from the eigenbasis back to measurement coordinates."""
        return self._q @ v


def whiten(amap, y, noise, eig_floor=None):
    """Whiten a measurement vector against its map and noise spec.

    Builds Sigma_1 = (a I + b A A^T)/theta from one eigendecomposition of
    A A^T and returns the equivalent model. With sigma0 = 0 the whitener
    is exactly the identity (B = A, y~ = y). When sigma = 0 and Sigma_1 is
    numerically singular the transform is refused unless an explicit
    eig_floor is supplied, in which case eigenvalues are clamped.
    """
    if not isinstance(amap, MeasurementMap):
        raise TypeError("amap must be a MeasurementMap")
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != amap.M:
        raise ValueError(f"expected length-{amap.M} data vector, got {y.size}")
    a_coef, b_coef = _noise_coefficients(noise)
    mn = amap.m * amap.n
    th = a_coef + mn * b_coef / amap.M

    gram = amap.matrix @ amap.matrix.T
    gram_eigs, q = np.linalg.eigh(gram)

    if b_coef == 0.0:
        # no matrix noise: Sigma_1 = I exactly, nothing to whiten
        sig1 = np.ones(amap.M)
        sig1_clamped = sig1
        y_tilde = y.copy()
    else:
        sig1 = (a_coef + b_coef * gram_eigs) / th
        floor = eig_floor if eig_floor is not None else RANK_TOL * float(sig1[-1])
        n_bad = int(np.count_nonzero(sig1 < floor))
        if n_bad and a_coef == 0.0 and eig_floor is None:
            raise WhiteningError(
                f"Sigma_1 has {n_bad} eigenvalue(s) below {floor:.3e} and "
                "sigma = 0; pass eig_floor to clamp and proceed"
            )
        if n_bad:
            warnings.warn(
                f"whiten: clamped {n_bad} Sigma_1 eigenvalue(s) to {floor:.3e}",
                RuntimeWarning,
                stacklevel=2,
            )
        sig1_clamped = np.maximum(sig1, floor)
        y_tilde = q @ ((q.T @ y) / np.sqrt(sig1_clamped))

    return WhitenedSystem(
        amap, y, noise,
        theta_val=th, q=q, gram_eigs=gram_eigs, sig1_eigs=sig1,
        sig1_eigs_clamped=sig1_clamped, y_tilde=y_tilde,
    )
